#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace tvvol {

enum class SeriesSource { RawPrices, Returns, Simulated };

[[nodiscard]] std::string to_string(SeriesSource source);

/// A return series with provenance. Invariants: at least 20 values, all
/// finite, positive scale.
class SeriesData {
public:
    static constexpr std::size_t kMinLength = 20;

    SeriesData(std::vector<double> values, SeriesSource source, double scale = 1.0,
               std::map<std::string, std::string> meta = {});

    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] SeriesSource source() const noexcept { return source_; }
    [[nodiscard]] double scale() const noexcept { return scale_; }
    [[nodiscard]] const std::map<std::string, std::string>& meta() const noexcept { return meta_; }

    /// The most recent `count` values (the whole series if count >= size()).
    [[nodiscard]] SeriesData last(std::size_t count) const;
    /// The first `count` values.
    [[nodiscard]] SeriesData prefix(std::size_t count) const;

private:
    std::vector<double> values_;
    SeriesSource source_;
    double scale_;
    std::map<std::string, std::string> meta_;
};

}  // namespace tvvol
