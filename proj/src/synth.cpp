#include "shiftwise/synth.hpp"

#include <algorithm>
#include <limits>

namespace shiftwise {
namespace synth {

namespace {

struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

double planted_price(int hour_of_day, const SynthConfig& config) {
    return hour_of_day == config.dip_hour ? config.dip_price : config.base_price;
}

}  // namespace

void SynthConfig::validate() const {
    if (days < 1) throw InputError("synth: days must be >= 1");
    if (devices.empty()) throw InputError("synth: need at least one device");
    if (dip_hour < 0 || dip_hour > 23) throw InputError("synth: dip_hour out of range");
    if (availability_noise < 0.0 || availability_noise > 1.0) {
        throw InputError("synth: availability_noise must be in [0,1]");
    }
    for (int h : available_hours) {
        if (h < 0 || h > 23) throw InputError("synth: available hour out of range");
    }
    for (const auto& d : devices) {
        if (d.duration_k < 0) throw InputError("synth: duration_k must be >= 0");
        if (d.load.size() != static_cast<std::size_t>(d.duration_k) + 1) {
            throw InputError("synth: load vector must have duration_k + 1 entries");
        }
        for (double wh : d.load) {
            if (!(wh > d.on_threshold_watts)) {
                throw InputError("synth: every load entry must exceed the "
                                 "on-threshold so one run forms one block");
            }
        }
        if (d.actual_start_hour < 0 || d.actual_start_hour + d.duration_k > 23) {
            throw InputError("synth: actual run must fit within one day");
        }
        for (int w : d.usage_weekdays) {
            if (w < 0 || w > 6) throw InputError("synth: weekday out of range");
        }
    }
}

SynthDataset generate_synthetic(const SynthConfig& config) {
    config.validate();
    SplitMix64 rng(config.seed * 0x9e3779b97f4a7c15ULL + 1);

    HouseholdConfig household;
    household.household = "synthetic";

    // Availability device: active during the planted hours, optionally with
    // noise flips.
    ChannelConfig presence;
    presence.channel = 1;
    presence.spec.id = "presence";
    presence.spec.household = household.household;
    presence.spec.role = DeviceRole::Availability;
    presence.spec.on_threshold_watts = 10.0;
    household.devices.push_back(presence);

    std::map<std::string, HourlyLoadSeries> series;
    HourlyLoadSeries presence_series(presence.spec.id);
    for (int day = 0; day < config.days; ++day) {
        Date d = config.start_date + day;
        for (int h = 0; h < 24; ++h) {
            bool available = config.available_hours.empty() ||
                             std::find(config.available_hours.begin(),
                                       config.available_hours.end(),
                                       h) != config.available_hours.end();
            if (config.availability_noise > 0.0 &&
                rng.uniform() < config.availability_noise) {
                available = !available;
            }
            presence_series.set(HourStamp{d, h}, available ? 500.0 : 0.0);
        }
    }
    series.emplace(presence.spec.id, std::move(presence_series));

    int channel = 2;
    for (const auto& dev : config.devices) {
        ChannelConfig c;
        c.channel = channel++;
        c.spec.id = dev.id;
        c.spec.household = household.household;
        c.spec.role = DeviceRole::Shiftable;
        c.spec.on_threshold_watts = dev.on_threshold_watts;
        c.spec.duration_k = dev.duration_k;
        household.devices.push_back(c);

        HourlyLoadSeries device_series(dev.id);
        for (int day = 0; day < config.days; ++day) {
            Date d = config.start_date + day;
            bool used = dev.usage_weekdays.empty() ||
                        std::find(dev.usage_weekdays.begin(),
                                  dev.usage_weekdays.end(),
                                  d.weekday()) != dev.usage_weekdays.end();
            for (int h = 0; h < 24; ++h) {
                device_series.set(HourStamp{d, h}, 0.0);
            }
            if (used) {
                for (int j = 0; j <= dev.duration_k; ++j) {
                    device_series.set(HourStamp{d, dev.actual_start_hour + j},
                                      dev.load[static_cast<std::size_t>(j)]);
                }
            }
        }
        series.emplace(dev.id, std::move(device_series));
    }

    PriceCurve prices;
    for (int day = 0; day <= config.days; ++day) {  // one spare day for k tails
        Date d = config.start_date + day;
        for (int h = 0; h < 24; ++h) {
            prices.set(HourStamp{d, h}, planted_price(h, config));
        }
    }

    SynthDataset out;
    out.prepared = prepare_household(household, series, prices);

    // Closed-form expectations by direct window-cost arithmetic over the
    // planted candidate hours.
    for (const auto& dev : config.devices) {
        auto window_cost = [&](int start_hour) {
            double cost = 0.0;
            for (int j = 0; j <= dev.duration_k; ++j) {
                cost += planted_price((start_hour + j) % 24, config) *
                        dev.load[static_cast<std::size_t>(j)];
            }
            return cost;
        };
        int best_hour = -1;
        double best_cost = std::numeric_limits<double>::infinity();
        for (int h = 0; h < 24; ++h) {
            bool candidate = config.available_hours.empty() ||
                             std::find(config.available_hours.begin(),
                                       config.available_hours.end(),
                                       h) != config.available_hours.end();
            if (!candidate) continue;
            double cost = window_cost(h);
            if (cost < best_cost) {  // earliest hour wins ties
                best_cost = cost;
                best_hour = h;
            }
        }
        out.expected.best_hour.push_back(best_hour);
        double baseline = window_cost(dev.actual_start_hour);
        out.expected.relative_savings.push_back(
            baseline > 0.0 && best_hour >= 0 ? 1.0 - best_cost / baseline : 0.0);
    }
    return out;
}

}  // namespace synth
}  // namespace shiftwise
