#pragma once

// Preparation Agent: turns hourly load series into availability targets,
// usage targets, usage runs and model feature rows. Everything here is pure
// and deterministic; lag features only ever look strictly before the target
// day, so rows are leakage-free by construction.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shiftwise/core.hpp"

namespace shiftwise {

// Feature vector plus binary label. `date` (and `hour` for availability
// rows) identify the prediction target the row belongs to.
struct FeatureRow {
    std::vector<double> features;
    int label = 0;
    Date date;
    std::optional<int> hour;  // set for availability rows only
};

inline constexpr int kLagDays = 7;
inline constexpr int kRecentHourLags = 3;
// one-hot hour (24) + one-hot weekday (7) + daily lags + recent hourly lags
inline constexpr int kAvailabilityFeatureDim = 24 + 7 + kLagDays + kRecentHourLags;
// one-hot weekday (7) + usage lags (7) + availability-fraction lags (7)
inline constexpr int kUsageFeatureDim = 7 + kLagDays + kLagDays;

// Hour marked active iff its energy strictly exceeds the Wh-equivalent of
// the power threshold. Missing hours are inactive.
std::vector<std::pair<HourStamp, bool>> detect_active_hours(
    const HourlyLoadSeries& series, const DeviceSpec& spec);

// Logical OR across all availability-role devices, defined for every hour
// of every date any series covers.
ActivityMatrix build_availability_targets(
    const std::vector<std::vector<std::pair<HourStamp, bool>>>& active_per_device);

// Maximal blocks of consecutive active hours. A run's load vector covers
// hours start..start+k, zero-padded past the block end and truncated at
// k+1 entries. Blocks are separated by at least one inactive hour.
std::vector<UsageRun> extract_runs(
    const std::vector<std::pair<HourStamp, bool>>& active,
    const HourlyLoadSeries& series, const DeviceSpec& spec);

// (device, date) -> 1 iff at least one run of that device starts that date.
DailyUsageTargets build_usage_targets(
    const std::map<std::string, std::vector<UsageRun>>& runs_per_device,
    Date first_date, Date last_date);

// Feature row for predicting availability at (target_date, target_hour).
// Returns nullopt when fewer than kLagDays days of history exist.
std::optional<FeatureRow> availability_features(const ActivityMatrix& matrix,
                                                Date target_date,
                                                int target_hour);

// Feature row for predicting whether `device` is used on target_date.
std::optional<FeatureRow> usage_features(const DailyUsageTargets& targets,
                                         const ActivityMatrix& matrix,
                                         const std::string& device,
                                         Date target_date);

// All rows that can be built for the covered date span, in (date, hour)
// order. Rows carry the target's label, so training for day d filters to
// rows with date < d.
std::vector<FeatureRow> all_availability_rows(const ActivityMatrix& matrix);
std::vector<FeatureRow> all_usage_rows(const DailyUsageTargets& targets,
                                       const ActivityMatrix& matrix,
                                       const std::string& device);

}  // namespace shiftwise
