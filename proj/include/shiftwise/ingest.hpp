#pragma once

// Parsing of raw consumption and price files onto the hourly grid.
// Consumption CSV follows the REFIT layout:
//   Time,Unix,Aggregate,Appliance1,...,ApplianceN
// Irregular wattage samples are converted to hourly Wh by time-weighted
// integration of the piecewise-constant power signal. Price CSV is
// `timestamp,price` with ISO-8601 hour starts.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shiftwise/core.hpp"

namespace shiftwise {

struct EmptyFileError : InputError {
    using InputError::InputError;
};
struct ChannelMismatchError : InputError {
    using InputError::InputError;
};
struct NonMonotonicTimestampsError : InputError {
    using InputError::InputError;
};
struct NanPriceError : InputError {
    using InputError::InputError;
};

// Which CSV column belongs to which device plus its detection parameters.
struct ChannelConfig {
    int channel = 1;  // 1-based appliance channel number
    DeviceSpec spec;
};

struct HouseholdConfig {
    std::string household;
    std::filesystem::path consumption_file;
    std::filesystem::path price_file;
    std::vector<ChannelConfig> devices;

    void validate() const;

    static HouseholdConfig load(const std::filesystem::path& path);
    std::string to_json_string() const;
};

struct ParseStats {
    std::size_t rows_total = 0;
    std::size_t rows_skipped = 0;  // malformed rows
};

// One hourly series per configured device. Hours without any raw sample are
// left missing. Offsets in seconds are taken from the Unix column.
std::map<std::string, HourlyLoadSeries> parse_consumption(
    const std::filesystem::path& path, const HouseholdConfig& config,
    ParseStats* stats = nullptr);

// Strictly increasing hourly curve. Duplicate hours collapse to the first
// occurrence; interior gaps are filled by linear interpolation of the
// neighboring prices.
PriceCurve parse_prices(const std::filesystem::path& path);

// Fills gaps of at most max_gap_hours with zero Wh; longer gaps stay
// missing so the enclosing days drop out of training and evaluation.
HourlyLoadSeries fill_gaps(const HourlyLoadSeries& series, int max_gap_hours);

// duration_k default when the config leaves it unset: median observed run
// length in hours minus one, and at least zero.
int infer_duration_k(const HourlyLoadSeries& series, const DeviceSpec& spec);

}  // namespace shiftwise
