#include "shiftwise/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "shiftwise/serde.hpp"

namespace shiftwise {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double* out) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\r' || *end == '\t') ++end;
    if (*end != '\0') return false;
    *out = v;
    return true;
}

bool parse_int64(const std::string& s, std::int64_t* out) {
    const char* begin = s.c_str();
    char* end = nullptr;
    long long v = std::strtoll(begin, &end, 10);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\r' || *end == '\t') ++end;
    if (*end != '\0') return false;
    *out = v;
    return true;
}

std::int64_t hour_index_of_unix(std::int64_t unix_seconds) {
    std::int64_t h = unix_seconds / 3600;
    if (unix_seconds < 0 && unix_seconds % 3600 != 0) --h;
    return h;
}

// "YYYY-MM-DD HH:..." or "YYYY-MM-DDTHH:...": hour-start timestamps only.
std::optional<HourStamp> parse_iso_hour(const std::string& s) {
    int y = 0, hh = 0;
    unsigned m = 0, d = 0;
    if (std::sscanf(s.c_str(), "%d-%u-%u%*1[T ]%d", &y, &m, &d, &hh) != 4) {
        return std::nullopt;
    }
    if (hh < 0 || hh > 23) return std::nullopt;
    try {
        return HourStamp{Date::from_ymd(y, m, d), hh};
    } catch (const InputError&) {
        return std::nullopt;
    }
}

}  // namespace

void HouseholdConfig::validate() const {
    if (devices.empty()) {
        throw InputError("household config lists no devices");
    }
    bool any_avail = false, any_shift = false;
    for (const auto& c : devices) {
        if (c.channel < 1) {
            throw InputError("device '" + c.spec.id + "': channel must be >= 1");
        }
        if (!(c.spec.on_threshold_watts > 0.0)) {
            throw InputError("device '" + c.spec.id +
                             "': on_threshold_watts must be > 0");
        }
        any_avail = any_avail || signals_availability(c.spec.role);
        any_shift = any_shift || is_shiftable(c.spec.role);
    }
    if (!any_avail) {
        throw InputError("household config needs at least one availability device");
    }
    if (!any_shift) {
        throw InputError("household config needs at least one shiftable device");
    }
}

HouseholdConfig HouseholdConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open household config: " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError("invalid household config JSON (" + path.string() +
                         "): " + e.what());
    }
    HouseholdConfig cfg;
    try {
        cfg.household = j.at("household").get<std::string>();
        cfg.consumption_file = j.at("consumption_file").get<std::string>();
        cfg.price_file = j.at("price_file").get<std::string>();
        for (const auto& d : j.at("devices")) {
            ChannelConfig c;
            c.channel = d.at("channel").get<int>();
            c.spec.id = d.at("name").get<std::string>();
            c.spec.household = cfg.household;
            auto role = role_from_string(d.at("role").get<std::string>());
            if (!role) {
                throw InputError("device '" + c.spec.id + "': unknown role");
            }
            c.spec.role = *role;
            c.spec.on_threshold_watts = d.at("on_threshold_watts").get<double>();
            if (d.contains("duration_k") && !d.at("duration_k").is_null()) {
                c.spec.duration_k = d.at("duration_k").get<int>();
            }
            cfg.devices.push_back(std::move(c));
        }
    } catch (const json::exception& e) {
        throw InputError("household config " + path.string() +
                         " missing fields: " + e.what());
    }
    // Relative data paths resolve against the config file's directory.
    auto base = path.parent_path();
    if (cfg.consumption_file.is_relative()) {
        cfg.consumption_file = base / cfg.consumption_file;
    }
    if (cfg.price_file.is_relative()) {
        cfg.price_file = base / cfg.price_file;
    }
    cfg.validate();
    return cfg;
}

std::string HouseholdConfig::to_json_string() const {
    json devs = json::array();
    for (const auto& c : devices) {
        json d{{"channel", c.channel},
               {"name", c.spec.id},
               {"role", to_string(c.spec.role)},
               {"on_threshold_watts", c.spec.on_threshold_watts}};
        d["duration_k"] = c.spec.duration_k ? json(*c.spec.duration_k) : json(nullptr);
        devs.push_back(std::move(d));
    }
    json j{{"household", household},
           {"consumption_file", consumption_file.string()},
           {"price_file", price_file.string()},
           {"devices", std::move(devs)}};
    return j.dump();
}

std::map<std::string, HourlyLoadSeries> parse_consumption(
    const std::filesystem::path& path, const HouseholdConfig& config,
    ParseStats* stats) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open consumption file: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw EmptyFileError("consumption file is empty: " + path.string());
    }
    const auto header = split_csv(line);
    if (header.size() < 4) {
        throw ChannelMismatchError("consumption header needs at least "
                                   "Time,Unix,Aggregate,Appliance1");
    }
    const int n_channels = static_cast<int>(header.size()) - 3;
    for (const auto& c : config.devices) {
        if (c.channel > n_channels) {
            throw ChannelMismatchError(
                "device '" + c.spec.id + "' wants channel " +
                std::to_string(c.channel) + " but file has " +
                std::to_string(n_channels));
        }
    }

    struct Sample {
        std::int64_t t;
        std::vector<double> watts;  // one per configured device
    };
    std::vector<Sample> samples;
    ParseStats local;
    std::int64_t prev_t = std::numeric_limits<std::int64_t>::min();
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++local.rows_total;
        const auto fields = split_csv(line);
        std::int64_t t = 0;
        if (fields.size() != header.size() || !parse_int64(fields[1], &t) ||
            t < prev_t) {
            ++local.rows_skipped;
            continue;
        }
        Sample s;
        s.t = t;
        s.watts.reserve(config.devices.size());
        bool ok = true;
        for (const auto& c : config.devices) {
            double w = 0.0;
            if (!parse_double(fields[2 + c.channel], &w) || std::isnan(w)) {
                ok = false;
                break;
            }
            s.watts.push_back(std::max(0.0, w));
        }
        if (!ok) {
            ++local.rows_skipped;
            continue;
        }
        prev_t = t;
        samples.push_back(std::move(s));
    }
    if (samples.empty()) {
        throw EmptyFileError("consumption file has no data rows: " + path.string());
    }
    if (stats) *stats = local;

    // Hours holding at least one raw sample; all other hours stay missing.
    std::map<std::int64_t, std::size_t> sampled_hours;
    for (const auto& s : samples) {
        sampled_hours.try_emplace(hour_index_of_unix(s.t));
    }

    // Time-weighted integration: each sample's power holds until the next
    // sample. Energy mass lands in the hour buckets the segment overlaps.
    std::vector<std::map<std::int64_t, double>> wh_per_device(config.devices.size());
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        std::int64_t t0 = samples[i].t;
        std::int64_t t1 = samples[i + 1].t;
        if (t1 <= t0) continue;
        std::int64_t h = hour_index_of_unix(t0);
        while (t0 < t1) {
            std::int64_t hour_end = (h + 1) * 3600;
            std::int64_t seg_end = std::min(t1, hour_end);
            double hours = static_cast<double>(seg_end - t0) / 3600.0;
            for (std::size_t d = 0; d < config.devices.size(); ++d) {
                wh_per_device[d][h] += samples[i].watts[d] * hours;
            }
            t0 = seg_end;
            ++h;
        }
    }

    std::map<std::string, HourlyLoadSeries> out;
    for (std::size_t d = 0; d < config.devices.size(); ++d) {
        HourlyLoadSeries series(config.devices[d].spec.id);
        for (const auto& [h, _] : sampled_hours) {
            auto it = wh_per_device[d].find(h);
            series.set(HourStamp::from_index(h),
                       it == wh_per_device[d].end() ? 0.0 : it->second);
        }
        out.emplace(config.devices[d].spec.id, std::move(series));
    }
    return out;
}

PriceCurve parse_prices(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open price file: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw EmptyFileError("price file is empty: " + path.string());
    }
    std::vector<std::pair<std::int64_t, double>> rows;
    auto consume = [&](const std::string& l, std::size_t lineno) {
        if (l.empty() || l == "\r") return;
        const auto fields = split_csv(l);
        if (fields.size() < 2) {
            throw InputError("price file row " + std::to_string(lineno) +
                             ": expected `timestamp,price`");
        }
        auto stamp = parse_iso_hour(fields[0]);
        if (!stamp) {
            throw InputError("price file row " + std::to_string(lineno) +
                             ": bad timestamp '" + fields[0] + "'");
        }
        double price = 0.0;
        if (!parse_double(fields[1], &price) || std::isnan(price)) {
            throw NanPriceError("price file row " + std::to_string(lineno) +
                                ": price is not a number");
        }
        rows.emplace_back(stamp->index(), price);
    };
    std::size_t lineno = 1;
    // First line may be a header.
    if (!line.empty() && (std::isdigit(static_cast<unsigned char>(line[0])))) {
        consume(line, lineno);
    }
    while (std::getline(in, line)) {
        consume(line, ++lineno);
    }
    if (rows.empty()) {
        throw EmptyFileError("price file has no data rows: " + path.string());
    }

    PriceCurve curve;
    std::int64_t prev = std::numeric_limits<std::int64_t>::min();
    for (const auto& [idx, price] : rows) {
        if (idx == prev) continue;  // DST fall-back duplicate: first wins
        if (idx < prev) {
            throw NonMonotonicTimestampsError(
                "price timestamps go backwards at " +
                HourStamp::from_index(idx).date.to_string());
        }
        curve.set(HourStamp::from_index(idx), price);
        prev = idx;
    }

    // Fill interior gaps (e.g. DST spring-forward) by linear interpolation.
    PriceCurve filled;
    filled.source_unit = curve.source_unit;
    const auto& s = curve.samples();
    for (auto it = s.begin(); it != s.end(); ++it) {
        filled.set(HourStamp::from_index(it->first), it->second);
        auto next = std::next(it);
        if (next == s.end()) break;
        std::int64_t gap = next->first - it->first;
        for (std::int64_t g = 1; g < gap; ++g) {
            double frac = static_cast<double>(g) / static_cast<double>(gap);
            filled.set(HourStamp::from_index(it->first + g),
                       it->second + frac * (next->second - it->second));
        }
    }
    return filled;
}

HourlyLoadSeries fill_gaps(const HourlyLoadSeries& series, int max_gap_hours) {
    if (max_gap_hours < 0) throw InputError("max_gap_hours must be >= 0");
    if (series.empty()) return series;
    HourlyLoadSeries out(series.device());
    const auto& s = series.samples();
    for (auto it = s.begin(); it != s.end(); ++it) {
        out.set(HourStamp::from_index(it->first), it->second);
        auto next = std::next(it);
        if (next == s.end()) break;
        std::int64_t gap = next->first - it->first - 1;
        if (gap >= 1 && gap <= max_gap_hours) {
            for (std::int64_t g = 1; g <= gap; ++g) {
                out.set(HourStamp::from_index(it->first + g), 0.0);
            }
        }
    }
    return out;
}

int infer_duration_k(const HourlyLoadSeries& series, const DeviceSpec& spec) {
    // Maximal blocks of consecutive hours with energy above the on-threshold.
    std::vector<std::int64_t> active;
    for (const auto& [h, wh] : series.samples()) {
        if (wh > spec.on_threshold_watts) active.push_back(h);
    }
    std::vector<int> lengths;
    for (std::size_t i = 0; i < active.size();) {
        std::size_t j = i + 1;
        while (j < active.size() && active[j] == active[j - 1] + 1) ++j;
        lengths.push_back(static_cast<int>(j - i));
        i = j;
    }
    if (lengths.empty()) return 0;
    std::sort(lengths.begin(), lengths.end());
    int median = lengths[(lengths.size() - 1) / 2];  // lower median
    return std::max(0, median - 1);
}

}  // namespace shiftwise
