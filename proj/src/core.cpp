#include "shiftwise/core.hpp"

#include <chrono>
#include <cstdio>

namespace shiftwise {

namespace {
namespace chr = std::chrono;

chr::sys_days to_sys_days(std::int32_t day_number) {
    return chr::sys_days(chr::days(day_number));
}
}  // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
    chr::year_month_day ymd{chr::year(year), chr::month(month), chr::day(day)};
    if (!ymd.ok()) {
        throw InputError("invalid calendar date");
    }
    return Date(static_cast<std::int32_t>(
        chr::sys_days(ymd).time_since_epoch().count()));
}

std::optional<Date> Date::parse(std::string_view iso) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    std::string s(iso);
    if (std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) {
        return std::nullopt;
    }
    chr::year_month_day ymd{chr::year(y), chr::month(m), chr::day(d)};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return Date(static_cast<std::int32_t>(
        chr::sys_days(ymd).time_since_epoch().count()));
}

Date::Ymd Date::ymd() const {
    chr::year_month_day ymd(to_sys_days(days_));
    return Ymd{int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day())};
}

int Date::weekday() const {
    // 1970-01-01 was a Thursday (ISO weekday 3 when Monday = 0).
    std::int32_t w = (days_ + 3) % 7;
    return w < 0 ? w + 7 : w;
}

std::string Date::to_string() const {
    auto [y, m, d] = ymd();
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
    return buf;
}

HourStamp HourStamp::from_index(std::int64_t idx) {
    std::int64_t day = idx >= 0 ? idx / 24 : (idx - 23) / 24;
    return HourStamp{Date(static_cast<std::int32_t>(day)),
                     static_cast<int>(idx - day * 24)};
}

std::string to_string(DeviceRole r) {
    switch (r) {
        case DeviceRole::Shiftable: return "shiftable";
        case DeviceRole::Availability: return "availability";
        case DeviceRole::Both: return "both";
    }
    return "shiftable";
}

std::optional<DeviceRole> role_from_string(std::string_view s) {
    if (s == "shiftable") return DeviceRole::Shiftable;
    if (s == "availability") return DeviceRole::Availability;
    if (s == "both") return DeviceRole::Both;
    return std::nullopt;
}

void DeviceSpec::validate() const {
    if (id.empty()) {
        throw InputError("device id must be non-empty");
    }
    if (!(on_threshold_watts > 0.0)) {
        throw InputError("device '" + id + "': on_threshold_watts must be > 0");
    }
    if (duration_k && *duration_k < 0) {
        throw InputError("device '" + id + "': duration_k must be >= 0");
    }
    if (is_shiftable(role) && !duration_k) {
        throw InputError("device '" + id +
                         "': shiftable devices need duration_k resolved");
    }
}

void HourlyLoadSeries::set(HourStamp at, double wh) {
    if (wh < 0.0) {
        throw InputError("negative energy sample for device '" + device_ + "'");
    }
    energy_wh_[at.index()] = wh;
}

double HourlyLoadSeries::at(HourStamp at) const {
    auto it = energy_wh_.find(at.index());
    if (it == energy_wh_.end()) {
        throw Error("missing hour in load series of '" + device_ + "'");
    }
    return it->second;
}

double HourlyLoadSeries::energy_or_zero(HourStamp at) const {
    auto it = energy_wh_.find(at.index());
    return it == energy_wh_.end() ? 0.0 : it->second;
}

HourStamp HourlyLoadSeries::first() const {
    if (energy_wh_.empty()) throw Error("empty load series");
    return HourStamp::from_index(energy_wh_.begin()->first);
}

HourStamp HourlyLoadSeries::last() const {
    if (energy_wh_.empty()) throw Error("empty load series");
    return HourStamp::from_index(energy_wh_.rbegin()->first);
}

void ActivityMatrix::set(Date d, int hour, bool available) {
    if (hour < 0 || hour > 23) throw InputError("hour out of range");
    days_[d.day_number()][hour] = available ? 1 : 0;
}

void ActivityMatrix::cover(Date d) {
    days_.try_emplace(d.day_number());
}

int ActivityMatrix::at(Date d, int hour) const {
    if (hour < 0 || hour > 23) throw InputError("hour out of range");
    auto it = days_.find(d.day_number());
    if (it == days_.end()) {
        throw InputError("date " + d.to_string() + " not covered by activity matrix");
    }
    return it->second[hour];
}

Date ActivityMatrix::first_date() const {
    if (days_.empty()) throw Error("empty activity matrix");
    return Date(days_.begin()->first);
}

Date ActivityMatrix::last_date() const {
    if (days_.empty()) throw Error("empty activity matrix");
    return Date(days_.rbegin()->first);
}

double ActivityMatrix::daily_fraction(Date d) const {
    auto it = days_.find(d.day_number());
    if (it == days_.end()) {
        throw InputError("date " + d.to_string() + " not covered by activity matrix");
    }
    int n = 0;
    for (auto v : it->second) n += v;
    return n / 24.0;
}

void DailyUsageTargets::set(const std::string& device, Date d, bool used) {
    entries_[device][d.day_number()] = used ? 1 : 0;
}

bool DailyUsageTargets::covers(const std::string& device, Date d) const {
    auto it = entries_.find(device);
    return it != entries_.end() && it->second.count(d.day_number()) > 0;
}

int DailyUsageTargets::at(const std::string& device, Date d) const {
    auto it = entries_.find(device);
    if (it == entries_.end()) {
        throw InputError("no usage targets for device '" + device + "'");
    }
    auto jt = it->second.find(d.day_number());
    if (jt == it->second.end()) {
        throw InputError("usage target missing for " + d.to_string());
    }
    return jt->second;
}

void PriceCurve::set(HourStamp at, double price) {
    by_hour_[at.index()] = price;
}

double PriceCurve::at(HourStamp at) const {
    auto it = by_hour_.find(at.index());
    if (it == by_hour_.end()) {
        throw Error("price missing for hour " + at.date.to_string());
    }
    return it->second;
}

void Thresholds::validate() const {
    if (!(availability >= 0.0 && availability <= 1.0)) {
        throw InputError("availability threshold must be in [0,1]");
    }
    if (!(usage >= 0.0 && usage <= 1.0)) {
        throw InputError("usage threshold must be in [0,1]");
    }
}

std::vector<HourStamp> hour_range(Date date, int extra_k) {
    if (extra_k < 0) throw InputError("extra_k must be >= 0");
    std::vector<HourStamp> out;
    out.reserve(24 + extra_k);
    for (int h = 0; h < 24; ++h) out.push_back(HourStamp{date, h});
    for (int h = 0; h < extra_k; ++h) out.push_back(HourStamp{date + 1, h});
    return out;
}

}  // namespace shiftwise
