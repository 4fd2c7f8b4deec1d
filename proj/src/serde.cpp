#include "shiftwise/serde.hpp"

namespace shiftwise {

void to_json(json& j, const Date& d) {
    j = d.day_number();
}

void from_json(const json& j, Date& d) {
    d = Date(j.get<std::int32_t>());
}

void to_json(json& j, const HourStamp& h) {
    j = h.index();
}

void from_json(const json& j, HourStamp& h) {
    h = HourStamp::from_index(j.get<std::int64_t>());
}

void to_json(json& j, const DeviceSpec& s) {
    j = json{{"id", s.id},
             {"household", s.household},
             {"role", to_string(s.role)},
             {"on_threshold_watts", s.on_threshold_watts}};
    if (s.duration_k) j["duration_k"] = *s.duration_k;
}

void from_json(const json& j, DeviceSpec& s) {
    s.id = j.at("id").get<std::string>();
    s.household = j.value("household", std::string{});
    auto role = role_from_string(j.at("role").get<std::string>());
    if (!role) throw InputError("unknown device role in JSON");
    s.role = *role;
    s.on_threshold_watts = j.at("on_threshold_watts").get<double>();
    if (j.contains("duration_k") && !j.at("duration_k").is_null()) {
        s.duration_k = j.at("duration_k").get<int>();
    } else {
        s.duration_k.reset();
    }
}

void to_json(json& j, const HourlyLoadSeries& s) {
    json samples = json::array();
    for (const auto& [idx, wh] : s.samples()) {
        samples.push_back(json::array({idx, wh}));
    }
    j = json{{"device", s.device()}, {"samples", std::move(samples)}};
}

void from_json(const json& j, HourlyLoadSeries& s) {
    s = HourlyLoadSeries(j.at("device").get<std::string>());
    for (const auto& pair : j.at("samples")) {
        s.set(HourStamp::from_index(pair.at(0).get<std::int64_t>()),
              pair.at(1).get<double>());
    }
}

void to_json(json& j, const ActivityMatrix& m) {
    json days = json::array();
    for (const auto& [day, hours] : m.days()) {
        std::string bits(24, '0');
        for (int h = 0; h < 24; ++h) bits[h] = hours[h] ? '1' : '0';
        days.push_back(json::array({day, bits}));
    }
    j = json{{"days", std::move(days)}};
}

void from_json(const json& j, ActivityMatrix& m) {
    m = ActivityMatrix{};
    for (const auto& pair : j.at("days")) {
        Date d(pair.at(0).get<std::int32_t>());
        const auto bits = pair.at(1).get<std::string>();
        m.cover(d);
        for (int h = 0; h < 24 && h < static_cast<int>(bits.size()); ++h) {
            m.set(d, h, bits[h] == '1');
        }
    }
}

void to_json(json& j, const DailyUsageTargets& t) {
    json devices = json::object();
    for (const auto& [device, by_day] : t.entries()) {
        json rows = json::array();
        for (const auto& [day, used] : by_day) {
            rows.push_back(json::array({day, static_cast<int>(used)}));
        }
        devices[device] = std::move(rows);
    }
    j = json{{"devices", std::move(devices)}};
}

void from_json(const json& j, DailyUsageTargets& t) {
    t = DailyUsageTargets{};
    for (const auto& [device, rows] : j.at("devices").items()) {
        for (const auto& pair : rows) {
            t.set(device, Date(pair.at(0).get<std::int32_t>()),
                  pair.at(1).get<int>() != 0);
        }
    }
}

void to_json(json& j, const UsageRun& r) {
    j = json{{"device", r.device},
             {"start", r.start},
             {"load", r.load},
             {"run_index_within_day", r.run_index_within_day}};
}

void from_json(const json& j, UsageRun& r) {
    r.device = j.at("device").get<std::string>();
    r.start = j.at("start").get<HourStamp>();
    r.load = j.at("load").get<std::vector<double>>();
    r.run_index_within_day = j.at("run_index_within_day").get<int>();
}

void to_json(json& j, const TypicalLoadProfile& p) {
    j = json{{"device", p.device},
             {"values", p.values},
             {"run_count", p.run_count}};
}

void from_json(const json& j, TypicalLoadProfile& p) {
    p.device = j.at("device").get<std::string>();
    p.values = j.at("values").get<std::vector<double>>();
    p.run_count = j.at("run_count").get<std::int64_t>();
}

void to_json(json& j, const PriceCurve& c) {
    json samples = json::array();
    for (const auto& [idx, price] : c.samples()) {
        samples.push_back(json::array({idx, price}));
    }
    j = json{{"samples", std::move(samples)}, {"source_unit", c.source_unit}};
}

void from_json(const json& j, PriceCurve& c) {
    c = PriceCurve{};
    c.source_unit = j.at("source_unit").get<std::string>();
    for (const auto& pair : j.at("samples")) {
        c.set(HourStamp::from_index(pair.at(0).get<std::int64_t>()),
              pair.at(1).get<double>());
    }
}

void to_json(json& j, const Thresholds& t) {
    j = json{{"availability", t.availability}, {"usage", t.usage}};
}

void from_json(const json& j, Thresholds& t) {
    t.availability = j.at("availability").get<double>();
    t.usage = j.at("usage").get<double>();
}

void to_json(json& j, const Recommendation& r) {
    j = json{{"date", r.date},
             {"device", r.device},
             {"availability_flag", r.availability_flag},
             {"usage_flag", r.usage_flag}};
    j["best_hour"] = r.best_hour ? json(*r.best_hour) : json(nullptr);
    j["final_hour"] = r.final_hour ? json(*r.final_hour) : json(nullptr);
    j["estimated_cost"] = r.estimated_cost ? json(*r.estimated_cost) : json(nullptr);
}

void from_json(const json& j, Recommendation& r) {
    r.date = j.at("date").get<Date>();
    r.device = j.at("device").get<std::string>();
    r.availability_flag = j.at("availability_flag").get<bool>();
    r.usage_flag = j.at("usage_flag").get<bool>();
    r.best_hour = j.at("best_hour").is_null()
                      ? std::nullopt
                      : std::optional<int>(j.at("best_hour").get<int>());
    r.final_hour = j.at("final_hour").is_null()
                       ? std::nullopt
                       : std::optional<int>(j.at("final_hour").get<int>());
    r.estimated_cost =
        j.at("estimated_cost").is_null()
            ? std::nullopt
            : std::optional<double>(j.at("estimated_cost").get<double>());
}

}  // namespace shiftwise
