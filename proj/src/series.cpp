#include "tvvol/series.hpp"

#include <cmath>
#include <stdexcept>

namespace tvvol {

std::string to_string(SeriesSource source) {
    switch (source) {
        case SeriesSource::RawPrices: return "raw_prices";
        case SeriesSource::Returns: return "returns";
        case SeriesSource::Simulated: return "simulated";
    }
    return "unknown";
}

SeriesData::SeriesData(std::vector<double> values, SeriesSource source, double scale,
                       std::map<std::string, std::string> meta)
    : values_(std::move(values)), source_(source), scale_(scale), meta_(std::move(meta)) {
    if (values_.size() < kMinLength) {
        throw std::invalid_argument("series needs at least " + std::to_string(kMinLength) +
                                    " observations, got " + std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw std::invalid_argument("non-finite value at position " + std::to_string(i + 1));
        }
    }
    if (!(scale_ > 0.0)) throw std::invalid_argument("series scale must be positive");
}

SeriesData SeriesData::last(std::size_t count) const {
    if (count >= values_.size()) return *this;
    auto meta = meta_;
    meta["last_n"] = std::to_string(count);
    return SeriesData({values_.end() - static_cast<std::ptrdiff_t>(count), values_.end()}, source_,
                      scale_, std::move(meta));
}

SeriesData SeriesData::prefix(std::size_t count) const {
    if (count >= values_.size()) return *this;
    auto meta = meta_;
    meta["prefix"] = std::to_string(count);
    return SeriesData({values_.begin(), values_.begin() + static_cast<std::ptrdiff_t>(count)},
                      source_, scale_, std::move(meta));
}

}  // namespace tvvol
