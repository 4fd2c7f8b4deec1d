#pragma once

// Core domain types shared by every module: calendar/hour arithmetic,
// device descriptions, hourly load series, targets, prices, recommendations.
// All types are immutable value types after construction and safe to share
// across threads.

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shiftwise {

// Generic failure; subclasses distinguish user/input problems (CLI exit 2)
// from internal ones (exit 1).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InputError : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};

// Calendar date on the proleptic Gregorian calendar, stored as a day number
// relative to 1970-01-01. All timestamps in the system are naive local time
// on a uniform hourly grid.
class Date {
public:
    Date() = default;
    constexpr explicit Date(std::int32_t day_number) : days_(day_number) {}

    static Date from_ymd(int year, unsigned month, unsigned day);
    // Parses "YYYY-MM-DD". Returns nullopt on malformed input.
    static std::optional<Date> parse(std::string_view iso);

    std::int32_t day_number() const { return days_; }

    struct Ymd {
        int year;
        unsigned month;
        unsigned day;
    };
    Ymd ymd() const;

    // 0 = Monday ... 6 = Sunday.
    int weekday() const;

    std::string to_string() const;

    Date operator+(std::int32_t d) const { return Date(days_ + d); }
    Date operator-(std::int32_t d) const { return Date(days_ - d); }
    std::int32_t operator-(Date other) const { return days_ - other.days_; }
    Date& operator++() {
        ++days_;
        return *this;
    }
    auto operator<=>(const Date&) const = default;

private:
    std::int32_t days_ = 0;
};

// One hour of one day. Total order agrees with chronological order.
struct HourStamp {
    Date date;
    int hour = 0;  // in [0, 23]

    std::int64_t index() const {
        return static_cast<std::int64_t>(date.day_number()) * 24 + hour;
    }
    static HourStamp from_index(std::int64_t idx);

    HourStamp plus_hours(std::int64_t h) const { return from_index(index() + h); }

    bool operator==(const HourStamp& o) const { return index() == o.index(); }
    auto operator<=>(const HourStamp& o) const { return index() <=> o.index(); }
};

enum class DeviceRole { Shiftable, Availability, Both };

inline bool is_shiftable(DeviceRole r) {
    return r == DeviceRole::Shiftable || r == DeviceRole::Both;
}
inline bool signals_availability(DeviceRole r) {
    return r == DeviceRole::Availability || r == DeviceRole::Both;
}

std::string to_string(DeviceRole r);
std::optional<DeviceRole> role_from_string(std::string_view s);

struct DeviceSpec {
    std::string id;
    std::string household;
    DeviceRole role = DeviceRole::Shiftable;
    double on_threshold_watts = 0.0;
    // Hours a run lasts beyond its start hour. Must be resolved for
    // shiftable devices before run extraction.
    std::optional<int> duration_k;

    // Throws InputError when an invariant is violated.
    void validate() const;
};

// Per-device hourly energy series in Wh, keyed by hour index. Hours absent
// from the map are missing (sensor gap), not zero.
class HourlyLoadSeries {
public:
    HourlyLoadSeries() = default;
    explicit HourlyLoadSeries(std::string device) : device_(std::move(device)) {}

    const std::string& device() const { return device_; }

    void set(HourStamp at, double wh);
    bool has(HourStamp at) const { return energy_wh_.count(at.index()) > 0; }
    // Missing hours read as 0 through energy_or_zero; at() throws.
    double at(HourStamp at) const;
    double energy_or_zero(HourStamp at) const;

    bool empty() const { return energy_wh_.empty(); }
    std::size_t size() const { return energy_wh_.size(); }
    HourStamp first() const;
    HourStamp last() const;

    const std::map<std::int64_t, double>& samples() const { return energy_wh_; }

private:
    std::string device_;
    std::map<std::int64_t, double> energy_wh_;
};

// Binary availability target per (date, hour). Covered dates always carry
// all 24 hours.
class ActivityMatrix {
public:
    void set(Date d, int hour, bool available);
    void cover(Date d);  // marks a date covered with all-zero hours
    bool covers(Date d) const { return days_.count(d.day_number()) > 0; }
    // Returns 0/1; throws InputError for uncovered dates.
    int at(Date d, int hour) const;

    bool empty() const { return days_.empty(); }
    Date first_date() const;
    Date last_date() const;
    // Fraction of available hours on d; throws for uncovered dates.
    double daily_fraction(Date d) const;

    const std::map<std::int32_t, std::array<std::uint8_t, 24>>& days() const {
        return days_;
    }

private:
    std::map<std::int32_t, std::array<std::uint8_t, 24>> days_;
};

// Binary per-day usage target per shiftable device.
class DailyUsageTargets {
public:
    void set(const std::string& device, Date d, bool used);
    bool covers(const std::string& device, Date d) const;
    int at(const std::string& device, Date d) const;

    const std::map<std::string, std::map<std::int32_t, std::uint8_t>>& entries() const {
        return entries_;
    }

private:
    std::map<std::string, std::map<std::int32_t, std::uint8_t>> entries_;
};

// One detected device operation. load[0] is the energy of the start hour;
// the vector has exactly duration_k + 1 entries (zero-padded/truncated at
// extraction time).
struct UsageRun {
    std::string device;
    HourStamp start;
    std::vector<double> load;
    int run_index_within_day = 0;
};

// Elementwise mean of historical run load vectors.
struct TypicalLoadProfile {
    std::string device;
    std::vector<double> values;
    std::int64_t run_count = 0;
};

// Hourly day-ahead prices as ingested (price-units per MWh), keyed by hour
// index. Costs downstream are raw dot products price x Wh; relative metrics
// are unit-free.
class PriceCurve {
public:
    void set(HourStamp at, double price);
    bool has(HourStamp at) const { return by_hour_.count(at.index()) > 0; }
    double at(HourStamp at) const;

    bool empty() const { return by_hour_.empty(); }
    const std::map<std::int64_t, double>& samples() const { return by_hour_; }

    std::string source_unit = "price/MWh";

private:
    std::map<std::int64_t, double> by_hour_;
};

struct Thresholds {
    double availability = 0.5;  // t_U
    double usage = 0.5;         // t_S

    void validate() const;
};

// One row of the daily output table. final_hour is present iff both flags
// are 0, and then equals best_hour.
struct Recommendation {
    Date date;
    std::string device;
    std::optional<int> best_hour;
    bool availability_flag = false;  // 1: no hour passed t_U
    bool usage_flag = false;         // 1: usage probability <= t_S
    std::optional<int> final_hour;
    std::optional<double> estimated_cost;
};

// Hours 0..23 of `date` followed by hours 0..extra_k-1 of the next day.
std::vector<HourStamp> hour_range(Date date, int extra_k);

}  // namespace shiftwise
