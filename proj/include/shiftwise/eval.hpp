#pragma once

// Evaluation harness: the day-by-day pipeline sweep, pooled per-agent
// scoring, acceptability and savings accounting, cold-start analysis and
// the threshold grid search.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shiftwise/agents.hpp"
#include "shiftwise/core.hpp"
#include "shiftwise/ingest.hpp"
#include "shiftwise/learn.hpp"
#include "shiftwise/prepare.hpp"

namespace shiftwise {

// Fully prepared household dataset: everything the pipeline needs.
struct PreparedHousehold {
    std::string household;
    std::vector<DeviceSpec> devices;  // duration_k resolved for shiftable ones
    ActivityMatrix matrix;
    DailyUsageTargets targets;
    std::map<std::string, std::vector<UsageRun>> runs;  // per shiftable device
    PriceCurve prices;

    std::vector<DeviceSpec> shiftable() const;

    std::string to_json_string() const;
    static PreparedHousehold from_json_string(const std::string& s);
};

// Builds targets, runs and the activity matrix from parsed series. Gaps up
// to max_gap_hours are zero-filled first; unset duration_k values are
// inferred from the data.
PreparedHousehold prepare_household(
    const HouseholdConfig& config,
    const std::map<std::string, HourlyLoadSeries>& series,
    const PriceCurve& prices, int max_gap_hours = 3);

struct PipelineOptions {
    TrainOptions train;
    MseVariant mse_variant = MseVariant::PerLength;
    // Restrict savings sums to acceptable recommendations.
    bool savings_acceptable_only = false;
};

struct DayTrace {
    Date date;
    AvailabilityForecast availability;
    std::vector<int> availability_targets;  // 24 entries; -1 = uncovered
    std::map<std::string, UsageForecast> usage;
    std::map<std::string, int> usage_targets;  // -1 = uncovered
    std::map<std::string, TypicalLoadProfile> profiles;
    std::vector<Recommendation> recommendations;
    // Latest key any model consulted for this day was trained on (= d-1);
    // kept for the leakage audit.
    Date last_training_date;
};

struct PipelineTrace {
    Thresholds thresholds;
    std::vector<DayTrace> days;
};

// Runs the daily train/forecast/recommend loop over [from, to]. Agent
// fallbacks are recorded as flagged entries; the sweep never aborts.
PipelineTrace run_pipeline(const PreparedHousehold& data,
                           const Thresholds& thresholds, Date from, Date to,
                           const PipelineOptions& options = {});

// Widest date range the pipeline can evaluate: lag history before the
// first day, everything covered by the activity matrix after it.
std::pair<Date, Date> evaluation_range(const PreparedHousehold& data);

struct AgentScores {
    std::optional<double> availability_auc;
    std::map<std::string, std::optional<double>> usage_auc;
    std::map<std::string, std::optional<double>> load_mse;
};

// Pools predictions across the whole trace into one AUC per agent family
// and computes the load MSE over all runs in the trace's range.
AgentScores score_agents(const PipelineTrace& trace, const PreparedHousehold& data,
                         MseVariant variant = MseVariant::PerLength);

// True iff the user was available at the final hour and the device was
// actually used that day. Requires rec.final_hour.
bool acceptability(const Recommendation& rec, const ActivityMatrix& matrix,
                   const DailyUsageTargets& targets);

struct SavingsRecord {
    double baseline_cost = 0.0;
    double recommended_cost = 0.0;
};

// Costs of the first actual run of the day at its true start versus shifted
// to the recommended hour, both using the true load vector. nullopt when
// there is no actual run or a price window is not covered.
std::optional<SavingsRecord> savings(const Recommendation& rec,
                                     const std::vector<UsageRun>& runs_on_date,
                                     const PriceCurve& prices);

struct HouseholdReport {
    std::string household;
    Thresholds thresholds;
    std::optional<double> availability_auc;
    std::map<std::string, std::optional<double>> usage_auc;
    std::map<std::string, std::optional<double>> load_mse;
    int n_recommendations = 0;  // rows with a final recommendation
    std::optional<double> acceptable_rate;
    int savings_eligible = 0;  // final recommendations with an actual run
    double total_savings = 0.0;
    std::optional<double> relative_savings;

    std::string to_json_string() const;
    std::string to_csv() const;
};

HouseholdReport aggregate_report(const PipelineTrace& trace,
                                 const PreparedHousehold& data,
                                 const PipelineOptions& options = {});

// Recommendations for one traced day under different thresholds, reusing
// the stored forecasts and profiles. Grid search is built on this.
std::vector<Recommendation> recommendations_for(const DayTrace& day,
                                                const PreparedHousehold& data,
                                                const Thresholds& thresholds);

enum class AgentFamily { Availability, Usage, Load };

struct ColdStartCurve {
    AgentFamily family;
    std::string device;  // empty for availability
    // scores[L-1] is the score with the first L days of training data;
    // nullopt where the score is undefined at that length.
    std::vector<std::optional<double>> scores;
    int test_window_days = 0;
};

// Expanding-window scores against a fixed test window of the last
// test_window_days days (0 = auto: 20% of days, at least 30, capped so at
// least one training day remains).
ColdStartCurve cold_start_curve(const PreparedHousehold& data, AgentFamily family,
                                const std::string& device, int test_window_days = 0,
                                const TrainOptions& options = {}, int jobs = 1);

// Smallest L whose whole suffix satisfies the stability condition.
// AUC families: |score - best| <= tolerance; Load: score <= tolerance.
// Undefined entries are skipped. nullopt = never stable.
std::optional<int> cold_start_days(const std::vector<std::optional<double>>& scores,
                                   double tolerance, AgentFamily family);

struct ColdStartResult {
    double tolerance = 0.15;
    int test_window_days = 0;
    std::optional<int> availability_days;
    std::map<std::string, std::optional<int>> usage_days;
    std::map<std::string, std::optional<int>> load_days;
    std::optional<int> framework_days;  // max over agents; nullopt if any unsolved

    std::string to_json_string() const;
    std::string to_csv() const;
};

ColdStartResult cold_start_analysis(const PreparedHousehold& data,
                                    double tolerance = 0.15,
                                    int test_window_days = 0,
                                    const TrainOptions& options = {},
                                    int jobs = 1);

struct GridCell {
    Thresholds thresholds;
    int n_recommendations = 0;
    std::optional<double> acceptable_rate;
    double total_savings = 0.0;
    std::optional<double> relative_savings;
};

struct GridSearchResult {
    Thresholds best;
    std::vector<GridCell> table;  // availability-major, then usage

    std::string sensitivity_csv() const;
};

// Default grid for both thresholds: 0.125 * i for i = 1..7.
std::vector<double> default_threshold_grid();

// Runs the pipeline once, then evaluates every threshold combination on
// the shared trace. Best cell maximizes total savings; ties go to the
// larger availability threshold, then the larger usage threshold.
GridSearchResult grid_search(const PreparedHousehold& data, Date from, Date to,
                             const std::vector<double>& availability_grid,
                             const std::vector<double>& usage_grid,
                             const PipelineOptions& options = {}, int jobs = 1);

}  // namespace shiftwise
