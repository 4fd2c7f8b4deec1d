#pragma once

// Runtime agents: price window extraction, typical load profiles, the two
// logistic forecasters and the recommendation step that combines them.

#include <map>
#include <string>
#include <vector>

#include "shiftwise/core.hpp"
#include "shiftwise/learn.hpp"
#include "shiftwise/prepare.hpp"

namespace shiftwise {

struct IncompleteCoverageError : Error {
    using Error::Error;
};
struct NoHistoryError : Error {
    using Error::Error;
};

struct AvailabilityForecast {
    Date date;
    std::vector<double> probabilities;  // 24 entries, hour 0..23
    bool fallback = false;              // base-rate fallback, no trained model
};

struct UsageForecast {
    Date date;
    std::string device;
    double probability = 0.0;
    bool fallback = false;
};

// p_d = (p_0, ..., p_{23+k}): hours 0..23 of `date` plus the first k hours
// of the next day. Throws IncompleteCoverageError naming the first missing
// hour.
std::vector<double> price_vector(const PriceCurve& curve, Date date, int k);

// Elementwise mean over all runs starting strictly before cutoff_date.
// Throws NoHistoryError when no such run exists.
TypicalLoadProfile typical_profile(const std::vector<UsageRun>& runs,
                                   Date cutoff_date, int k);

// Streaming mean with the same result as batch recomputation.
class RunningProfile {
public:
    RunningProfile(std::string device, int k);
    void add(const UsageRun& run);
    bool has_history() const { return count_ > 0; }
    TypicalLoadProfile profile() const;

private:
    std::string device_;
    std::vector<double> mean_;
    std::int64_t count_ = 0;
};

// Trains on all availability rows with date < d and predicts the 24 hours
// of d. Falls back to per-hour empirical base rates (flagged) when history
// is too short for features or training.
AvailabilityForecast forecast_availability(const ActivityMatrix& matrix, Date d,
                                           const TrainOptions& options = {});

// Same, with the training rows already filtered to keys < d by the caller.
AvailabilityForecast forecast_availability_from_rows(
    const std::vector<FeatureRow>& training_rows, const ActivityMatrix& matrix,
    Date d, const TrainOptions& options = {});

UsageForecast forecast_usage(const DailyUsageTargets& targets,
                             const ActivityMatrix& matrix,
                             const std::string& device, Date d,
                             const TrainOptions& options = {});

UsageForecast forecast_usage_from_rows(const std::vector<FeatureRow>& training_rows,
                                       const DailyUsageTargets& targets,
                                       const ActivityMatrix& matrix,
                                       const std::string& device, Date d,
                                       const TrainOptions& options = {});

// One recommendation per shiftable device. Candidate hours are those with
// availability probability strictly above t_U whose full price window is
// covered; best hour minimizes the window dot product, ties going to the
// earliest hour. Devices without a profile are skipped and reported via
// `skipped` when given.
std::vector<Recommendation> recommend(
    Date d, const std::vector<DeviceSpec>& devices, const Thresholds& thresholds,
    const std::map<std::string, TypicalLoadProfile>& profiles,
    const PriceCurve& prices, const AvailabilityForecast& availability,
    const std::map<std::string, UsageForecast>& usage,
    std::vector<std::string>* skipped = nullptr);

}  // namespace shiftwise
