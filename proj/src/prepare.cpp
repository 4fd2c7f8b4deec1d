#include "shiftwise/prepare.hpp"

#include <algorithm>
#include <limits>

namespace shiftwise {

std::vector<std::pair<HourStamp, bool>> detect_active_hours(
    const HourlyLoadSeries& series, const DeviceSpec& spec) {
    if (!(spec.on_threshold_watts > 0.0)) {
        throw InputError("on_threshold_watts must be > 0");
    }
    std::vector<std::pair<HourStamp, bool>> out;
    if (series.empty()) return out;
    // One Wh-threshold per hour-slot; strict inequality, missing hours
    // count as inactive.
    const double threshold_wh = spec.on_threshold_watts;
    std::int64_t first = series.first().index();
    std::int64_t last = series.last().index();
    out.reserve(static_cast<std::size_t>(last - first + 1));
    for (std::int64_t h = first; h <= last; ++h) {
        HourStamp at = HourStamp::from_index(h);
        bool active = series.has(at) && series.at(at) > threshold_wh;
        out.emplace_back(at, active);
    }
    return out;
}

ActivityMatrix build_availability_targets(
    const std::vector<std::vector<std::pair<HourStamp, bool>>>& active_per_device) {
    if (active_per_device.empty()) {
        throw InputError("need at least one availability device");
    }
    ActivityMatrix matrix;
    Date first_date(std::numeric_limits<std::int32_t>::max());
    Date last_date(std::numeric_limits<std::int32_t>::min());
    bool any = false;
    for (const auto& device : active_per_device) {
        for (const auto& [stamp, active] : device) {
            any = true;
            first_date = std::min(first_date, stamp.date);
            last_date = std::max(last_date, stamp.date);
            if (active) matrix.set(stamp.date, stamp.hour, true);
        }
    }
    if (!any) return matrix;
    for (Date d = first_date; d <= last_date; ++d) {
        matrix.cover(d);
    }
    return matrix;
}

std::vector<UsageRun> extract_runs(
    const std::vector<std::pair<HourStamp, bool>>& active,
    const HourlyLoadSeries& series, const DeviceSpec& spec) {
    if (!spec.duration_k) {
        throw InputError("device '" + spec.id + "': duration_k not resolved");
    }
    const int k = *spec.duration_k;
    std::vector<UsageRun> runs;
    std::map<std::int32_t, int> per_day_count;
    for (std::size_t i = 0; i < active.size();) {
        if (!active[i].second) {
            ++i;
            continue;
        }
        // Maximal block of consecutive active hours.
        std::size_t j = i + 1;
        while (j < active.size() && active[j].second &&
               active[j].first.index() == active[j - 1].first.index() + 1) {
            ++j;
        }
        const std::size_t block_len = j - i;
        UsageRun run;
        run.device = series.device();
        run.start = active[i].first;
        run.load.resize(static_cast<std::size_t>(k) + 1, 0.0);
        for (int off = 0; off <= k; ++off) {
            if (static_cast<std::size_t>(off) < block_len) {
                run.load[off] = series.energy_or_zero(run.start.plus_hours(off));
            }
        }
        run.run_index_within_day = per_day_count[run.start.date.day_number()]++;
        runs.push_back(std::move(run));
        i = j;
    }
    return runs;
}

DailyUsageTargets build_usage_targets(
    const std::map<std::string, std::vector<UsageRun>>& runs_per_device,
    Date first_date, Date last_date) {
    DailyUsageTargets targets;
    for (const auto& [device, runs] : runs_per_device) {
        for (Date d = first_date; d <= last_date; ++d) {
            targets.set(device, d, false);
        }
        for (const auto& run : runs) {
            if (run.start.date >= first_date && run.start.date <= last_date) {
                targets.set(device, run.start.date, true);
            }
        }
    }
    return targets;
}

std::optional<FeatureRow> availability_features(const ActivityMatrix& matrix,
                                                Date target_date,
                                                int target_hour) {
    if (target_hour < 0 || target_hour > 23) {
        throw InputError("target_hour out of range");
    }
    for (int lag = 1; lag <= kLagDays; ++lag) {
        if (!matrix.covers(target_date - lag)) return std::nullopt;
    }
    // The 3 hourly lags end at the same clock hour on day d-1 and may reach
    // into d-2 for early hours; d-2 is covered whenever kLagDays >= 2.
    FeatureRow row;
    row.date = target_date;
    row.hour = target_hour;
    row.features.assign(kAvailabilityFeatureDim, 0.0);
    row.features[target_hour] = 1.0;
    row.features[24 + target_date.weekday()] = 1.0;
    for (int lag = 1; lag <= kLagDays; ++lag) {
        row.features[31 + (lag - 1)] = matrix.at(target_date - lag, target_hour);
    }
    HourStamp anchor{target_date - 1, target_hour};
    for (int back = 0; back < kRecentHourLags; ++back) {
        HourStamp at = anchor.plus_hours(-back);
        row.features[31 + kLagDays + back] = matrix.at(at.date, at.hour);
    }
    row.label = matrix.covers(target_date) ? matrix.at(target_date, target_hour) : 0;
    return row;
}

std::optional<FeatureRow> usage_features(const DailyUsageTargets& targets,
                                         const ActivityMatrix& matrix,
                                         const std::string& device,
                                         Date target_date) {
    for (int lag = 1; lag <= kLagDays; ++lag) {
        if (!targets.covers(device, target_date - lag) ||
            !matrix.covers(target_date - lag)) {
            return std::nullopt;
        }
    }
    FeatureRow row;
    row.date = target_date;
    row.features.assign(kUsageFeatureDim, 0.0);
    row.features[target_date.weekday()] = 1.0;
    for (int lag = 1; lag <= kLagDays; ++lag) {
        row.features[7 + (lag - 1)] = targets.at(device, target_date - lag);
        row.features[7 + kLagDays + (lag - 1)] =
            matrix.daily_fraction(target_date - lag);
    }
    row.label = targets.covers(device, target_date)
                    ? targets.at(device, target_date)
                    : 0;
    return row;
}

std::vector<FeatureRow> all_availability_rows(const ActivityMatrix& matrix) {
    std::vector<FeatureRow> rows;
    if (matrix.empty()) return rows;
    for (Date d = matrix.first_date(); d <= matrix.last_date(); ++d) {
        if (!matrix.covers(d)) continue;
        for (int h = 0; h < 24; ++h) {
            if (auto row = availability_features(matrix, d, h)) {
                rows.push_back(std::move(*row));
            }
        }
    }
    return rows;
}

std::vector<FeatureRow> all_usage_rows(const DailyUsageTargets& targets,
                                       const ActivityMatrix& matrix,
                                       const std::string& device) {
    std::vector<FeatureRow> rows;
    auto it = targets.entries().find(device);
    if (it == targets.entries().end() || it->second.empty()) return rows;
    Date first(it->second.begin()->first);
    Date last(it->second.rbegin()->first);
    for (Date d = first; d <= last; ++d) {
        if (!targets.covers(device, d)) continue;
        if (auto row = usage_features(targets, matrix, device, d)) {
            rows.push_back(std::move(*row));
        }
    }
    return rows;
}

}  // namespace shiftwise
