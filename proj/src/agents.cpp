#include "shiftwise/agents.hpp"

#include <algorithm>
#include <limits>

namespace shiftwise {

std::vector<double> price_vector(const PriceCurve& curve, Date date, int k) {
    if (k < 0) throw InputError("k must be >= 0");
    std::vector<double> prices;
    prices.reserve(24 + static_cast<std::size_t>(k));
    for (const auto& stamp : hour_range(date, k)) {
        if (!curve.has(stamp)) {
            throw IncompleteCoverageError("price missing for " +
                                          stamp.date.to_string() + " hour " +
                                          std::to_string(stamp.hour));
        }
        prices.push_back(curve.at(stamp));
    }
    return prices;
}

TypicalLoadProfile typical_profile(const std::vector<UsageRun>& runs,
                                   Date cutoff_date, int k) {
    RunningProfile running(runs.empty() ? std::string{} : runs.front().device, k);
    for (const auto& run : runs) {
        if (run.start.date < cutoff_date) running.add(run);
    }
    if (!running.has_history()) {
        throw NoHistoryError("no runs before " + cutoff_date.to_string());
    }
    return running.profile();
}

RunningProfile::RunningProfile(std::string device, int k)
    : device_(std::move(device)) {
    if (k < 0) throw InputError("k must be >= 0");
    mean_.assign(static_cast<std::size_t>(k) + 1, 0.0);
}

void RunningProfile::add(const UsageRun& run) {
    if (run.load.size() != mean_.size()) {
        throw DimensionMismatch("run length does not match profile length");
    }
    ++count_;
    const double inv = 1.0 / static_cast<double>(count_);
    for (std::size_t i = 0; i < mean_.size(); ++i) {
        mean_[i] += (run.load[i] - mean_[i]) * inv;
    }
}

TypicalLoadProfile RunningProfile::profile() const {
    if (count_ == 0) throw NoHistoryError("profile has no runs");
    return TypicalLoadProfile{device_, mean_, count_};
}

namespace {

// Per-hour empirical availability rate over covered days strictly before d.
std::vector<double> base_rate_by_hour(const ActivityMatrix& matrix, Date d) {
    std::vector<double> rate(24, 0.5);
    std::vector<int> count(24, 0), total(24, 0);
    for (const auto& [day, hours] : matrix.days()) {
        if (Date(day) >= d) break;
        for (int h = 0; h < 24; ++h) {
            count[h] += hours[h];
            ++total[h];
        }
    }
    for (int h = 0; h < 24; ++h) {
        if (total[h] > 0) rate[h] = static_cast<double>(count[h]) / total[h];
    }
    return rate;
}

}  // namespace

AvailabilityForecast forecast_availability_from_rows(
    const std::vector<FeatureRow>& training_rows, const ActivityMatrix& matrix,
    Date d, const TrainOptions& options) {
    AvailabilityForecast fc;
    fc.date = d;

    // Prediction features must exist for every hour of d.
    std::vector<FeatureRow> predict_rows;
    predict_rows.reserve(24);
    bool features_ok = true;
    for (int h = 0; h < 24 && features_ok; ++h) {
        auto row = availability_features(matrix, d, h);
        if (!row) {
            features_ok = false;
            break;
        }
        predict_rows.push_back(std::move(*row));
    }

    if (!features_ok || training_rows.empty()) {
        fc.fallback = true;
        fc.probabilities = base_rate_by_hour(matrix, d);
        return fc;
    }
    GlmModel model = train_logistic(training_rows, options);
    fc.probabilities.reserve(24);
    for (const auto& row : predict_rows) {
        fc.probabilities.push_back(predict_proba(model, row.features));
    }
    return fc;
}

AvailabilityForecast forecast_availability(const ActivityMatrix& matrix, Date d,
                                           const TrainOptions& options) {
    std::vector<FeatureRow> rows;
    for (auto& row : all_availability_rows(matrix)) {
        if (row.date < d) rows.push_back(std::move(row));
    }
    return forecast_availability_from_rows(rows, matrix, d, options);
}

UsageForecast forecast_usage_from_rows(const std::vector<FeatureRow>& training_rows,
                                       const DailyUsageTargets& targets,
                                       const ActivityMatrix& matrix,
                                       const std::string& device, Date d,
                                       const TrainOptions& options) {
    UsageForecast fc;
    fc.date = d;
    fc.device = device;

    auto predict_row = usage_features(targets, matrix, device, d);
    if (!predict_row || training_rows.empty()) {
        fc.fallback = true;
        // Daily base rate over history strictly before d.
        auto it = targets.entries().find(device);
        int used = 0, total = 0;
        if (it != targets.entries().end()) {
            for (const auto& [day, flag] : it->second) {
                if (Date(day) >= d) break;
                used += flag;
                ++total;
            }
        }
        fc.probability = total > 0 ? static_cast<double>(used) / total : 0.5;
        return fc;
    }
    GlmModel model = train_logistic(training_rows, options);
    fc.probability = predict_proba(model, predict_row->features);
    return fc;
}

UsageForecast forecast_usage(const DailyUsageTargets& targets,
                             const ActivityMatrix& matrix,
                             const std::string& device, Date d,
                             const TrainOptions& options) {
    std::vector<FeatureRow> rows;
    for (auto& row : all_usage_rows(targets, matrix, device)) {
        if (row.date < d) rows.push_back(std::move(row));
    }
    return forecast_usage_from_rows(rows, targets, matrix, device, d, options);
}

std::vector<Recommendation> recommend(
    Date d, const std::vector<DeviceSpec>& devices, const Thresholds& thresholds,
    const std::map<std::string, TypicalLoadProfile>& profiles,
    const PriceCurve& prices, const AvailabilityForecast& availability,
    const std::map<std::string, UsageForecast>& usage,
    std::vector<std::string>* skipped) {
    thresholds.validate();
    if (availability.probabilities.size() != 24) {
        throw DimensionMismatch("availability forecast must have 24 entries");
    }
    std::vector<Recommendation> out;
    for (const auto& spec : devices) {
        if (!is_shiftable(spec.role)) continue;
        auto profile_it = profiles.find(spec.id);
        auto usage_it = usage.find(spec.id);
        if (profile_it == profiles.end() || usage_it == usage.end()) {
            if (skipped) skipped->push_back(spec.id);
            continue;
        }
        const auto& profile = profile_it->second.values;
        const int k = static_cast<int>(profile.size()) - 1;

        Recommendation rec;
        rec.date = d;
        rec.device = spec.id;
        rec.usage_flag = !(usage_it->second.probability > thresholds.usage);

        double best_cost = std::numeric_limits<double>::infinity();
        for (int h = 0; h < 24; ++h) {
            if (!(availability.probabilities[h] > thresholds.availability)) {
                continue;
            }
            // Hours whose price window runs past coverage are dropped
            // rather than wrapped.
            double cost = 0.0;
            bool covered = true;
            for (int j = 0; j <= k; ++j) {
                HourStamp at = HourStamp{d, h}.plus_hours(j);
                if (!prices.has(at)) {
                    covered = false;
                    break;
                }
                cost += prices.at(at) * profile[static_cast<std::size_t>(j)];
            }
            if (!covered) continue;
            if (cost < best_cost) {  // ties keep the earliest hour
                best_cost = cost;
                rec.best_hour = h;
            }
        }
        rec.availability_flag = !rec.best_hour.has_value();
        if (rec.best_hour) rec.estimated_cost = best_cost;
        if (!rec.availability_flag && !rec.usage_flag) {
            rec.final_hour = rec.best_hour;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace shiftwise
