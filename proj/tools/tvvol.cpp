#include "tvvol/data_io.hpp"

int main(int argc, char** argv) { return tvvol::cli_dispatch(argc, argv); }
