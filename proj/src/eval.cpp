#include "shiftwise/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "shiftwise/serde.hpp"

namespace shiftwise {

namespace {

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<std::size_t>(jobs, n);
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

std::string fmt_opt(const std::optional<double>& v) {
    if (!v) return "undefined";
    std::ostringstream os;
    os << *v;
    return os.str();
}

json opt_to_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

json opt_to_json(const std::optional<int>& v) {
    return v ? json(*v) : json(nullptr);
}

}  // namespace

std::vector<DeviceSpec> PreparedHousehold::shiftable() const {
    std::vector<DeviceSpec> out;
    for (const auto& d : devices) {
        if (is_shiftable(d.role)) out.push_back(d);
    }
    return out;
}

std::string PreparedHousehold::to_json_string() const {
    json runs_json = json::object();
    for (const auto& [device, device_runs] : runs) {
        runs_json[device] = device_runs;
    }
    json j{{"household", household},
           {"devices", devices},
           {"matrix", matrix},
           {"targets", targets},
           {"runs", std::move(runs_json)},
           {"prices", prices}};
    return j.dump();
}

PreparedHousehold PreparedHousehold::from_json_string(const std::string& s) {
    auto j = json::parse(s);
    PreparedHousehold d;
    d.household = j.at("household").get<std::string>();
    d.devices = j.at("devices").get<std::vector<DeviceSpec>>();
    d.matrix = j.at("matrix").get<ActivityMatrix>();
    d.targets = j.at("targets").get<DailyUsageTargets>();
    for (const auto& [device, device_runs] : j.at("runs").items()) {
        d.runs[device] = device_runs.get<std::vector<UsageRun>>();
    }
    d.prices = j.at("prices").get<PriceCurve>();
    return d;
}

PreparedHousehold prepare_household(
    const HouseholdConfig& config,
    const std::map<std::string, HourlyLoadSeries>& series,
    const PriceCurve& prices, int max_gap_hours) {
    config.validate();
    PreparedHousehold data;
    data.household = config.household;
    data.prices = prices;

    std::map<std::string, HourlyLoadSeries> filled;
    for (const auto& c : config.devices) {
        auto it = series.find(c.spec.id);
        if (it == series.end()) {
            throw InputError("no parsed series for device '" + c.spec.id + "'");
        }
        filled.emplace(c.spec.id, fill_gaps(it->second, max_gap_hours));
    }

    std::vector<std::vector<std::pair<HourStamp, bool>>> availability_active;
    for (const auto& c : config.devices) {
        DeviceSpec spec = c.spec;
        const auto& device_series = filled.at(spec.id);
        if (is_shiftable(spec.role) && !spec.duration_k) {
            spec.duration_k = infer_duration_k(device_series, spec);
        }
        auto active = detect_active_hours(device_series, spec);
        if (signals_availability(spec.role)) {
            availability_active.push_back(active);
        }
        if (is_shiftable(spec.role)) {
            data.runs[spec.id] = extract_runs(active, device_series, spec);
        }
        data.devices.push_back(std::move(spec));
    }
    data.matrix = build_availability_targets(availability_active);
    if (!data.matrix.empty()) {
        data.targets = build_usage_targets(data.runs, data.matrix.first_date(),
                                           data.matrix.last_date());
    }
    return data;
}

std::pair<Date, Date> evaluation_range(const PreparedHousehold& data) {
    if (data.matrix.empty()) {
        throw InputError("household has no covered days");
    }
    return {data.matrix.first_date() + kLagDays, data.matrix.last_date()};
}

PipelineTrace run_pipeline(const PreparedHousehold& data,
                           const Thresholds& thresholds, Date from, Date to,
                           const PipelineOptions& options) {
    thresholds.validate();
    PipelineTrace trace;
    trace.thresholds = thresholds;
    if (to < from) return trace;

    const auto shiftable = data.shiftable();
    auto avail_rows = all_availability_rows(data.matrix);
    std::map<std::string, std::vector<FeatureRow>> usage_rows;
    std::map<std::string, std::vector<UsageRun>> runs_sorted;
    for (const auto& spec : shiftable) {
        usage_rows[spec.id] = all_usage_rows(data.targets, data.matrix, spec.id);
        auto runs = data.runs.count(spec.id) ? data.runs.at(spec.id)
                                             : std::vector<UsageRun>{};
        std::sort(runs.begin(), runs.end(), [](const UsageRun& a, const UsageRun& b) {
            return a.start < b.start;
        });
        runs_sorted[spec.id] = std::move(runs);
    }

    std::size_t avail_cursor = 0;
    std::map<std::string, std::size_t> usage_cursor, run_cursor;
    std::map<std::string, RunningProfile> running;
    for (const auto& spec : shiftable) {
        usage_cursor[spec.id] = 0;
        run_cursor[spec.id] = 0;
        running.emplace(spec.id, RunningProfile(spec.id, *spec.duration_k));
    }

    for (Date d = from; d <= to; ++d) {
        DayTrace day;
        day.date = d;
        day.last_training_date = d - 1;

        while (avail_cursor < avail_rows.size() && avail_rows[avail_cursor].date < d) {
            ++avail_cursor;
        }
        std::vector<FeatureRow> avail_train(avail_rows.begin(),
                                            avail_rows.begin() + avail_cursor);
        day.availability =
            forecast_availability_from_rows(avail_train, data.matrix, d, options.train);

        day.availability_targets.assign(24, -1);
        if (data.matrix.covers(d)) {
            for (int h = 0; h < 24; ++h) {
                day.availability_targets[h] = data.matrix.at(d, h);
            }
        }

        for (const auto& spec : shiftable) {
            auto& rows = usage_rows[spec.id];
            auto& cursor = usage_cursor[spec.id];
            while (cursor < rows.size() && rows[cursor].date < d) ++cursor;
            std::vector<FeatureRow> train(rows.begin(), rows.begin() + cursor);
            day.usage[spec.id] = forecast_usage_from_rows(
                train, data.targets, data.matrix, spec.id, d, options.train);
            day.usage_targets[spec.id] =
                data.targets.covers(spec.id, d) ? data.targets.at(spec.id, d) : -1;

            auto& runs = runs_sorted[spec.id];
            auto& rc = run_cursor[spec.id];
            auto& profile = running.at(spec.id);
            while (rc < runs.size() && runs[rc].start.date < d) {
                profile.add(runs[rc]);
                ++rc;
            }
            if (profile.has_history()) {
                day.profiles[spec.id] = profile.profile();
            }
        }

        day.recommendations = recommend(d, shiftable, thresholds, day.profiles,
                                        data.prices, day.availability, day.usage);
        trace.days.push_back(std::move(day));
    }
    return trace;
}

AgentScores score_agents(const PipelineTrace& trace, const PreparedHousehold& data,
                         MseVariant variant) {
    AgentScores scores;
    std::vector<double> avail_scores;
    std::vector<int> avail_labels;
    std::map<std::string, std::vector<double>> usage_scores;
    std::map<std::string, std::vector<int>> usage_labels;
    std::map<std::string, std::map<std::int32_t, TypicalLoadProfile>> profiles_by_date;

    for (const auto& day : trace.days) {
        for (int h = 0; h < 24; ++h) {
            if (day.availability_targets[h] < 0) continue;
            avail_scores.push_back(day.availability.probabilities[h]);
            avail_labels.push_back(day.availability_targets[h]);
        }
        for (const auto& [device, fc] : day.usage) {
            auto it = day.usage_targets.find(device);
            if (it == day.usage_targets.end() || it->second < 0) continue;
            usage_scores[device].push_back(fc.probability);
            usage_labels[device].push_back(it->second);
        }
        for (const auto& [device, profile] : day.profiles) {
            profiles_by_date[device].emplace(day.date.day_number(), profile);
        }
    }

    scores.availability_auc = avail_scores.empty()
                                  ? std::nullopt
                                  : auc(avail_scores, avail_labels);
    for (const auto& [device, s] : usage_scores) {
        scores.usage_auc[device] = auc(s, usage_labels[device]);
    }
    for (const auto& [device, by_date] : profiles_by_date) {
        auto it = data.runs.find(device);
        scores.load_mse[device] =
            it == data.runs.end() ? std::nullopt
                                  : load_mse(it->second, by_date, variant);
    }
    return scores;
}

bool acceptability(const Recommendation& rec, const ActivityMatrix& matrix,
                   const DailyUsageTargets& targets) {
    if (!rec.final_hour) {
        throw InputError("acceptability needs a final recommendation");
    }
    if (!matrix.covers(rec.date) || !targets.covers(rec.device, rec.date)) {
        return false;
    }
    return matrix.at(rec.date, *rec.final_hour) == 1 &&
           targets.at(rec.device, rec.date) == 1;
}

std::optional<SavingsRecord> savings(const Recommendation& rec,
                                     const std::vector<UsageRun>& runs_on_date,
                                     const PriceCurve& prices) {
    if (!rec.final_hour) return std::nullopt;
    const UsageRun* first_run = nullptr;
    for (const auto& run : runs_on_date) {
        if (run.device != rec.device || run.start.date != rec.date) continue;
        if (!first_run || run.start < first_run->start) first_run = &run;
    }
    if (!first_run) return std::nullopt;

    auto window_cost = [&](HourStamp start) -> std::optional<double> {
        double cost = 0.0;
        for (std::size_t j = 0; j < first_run->load.size(); ++j) {
            HourStamp at = start.plus_hours(static_cast<std::int64_t>(j));
            if (!prices.has(at)) return std::nullopt;
            cost += prices.at(at) * first_run->load[j];
        }
        return cost;
    };
    auto baseline = window_cost(first_run->start);
    auto recommended = window_cost(HourStamp{rec.date, *rec.final_hour});
    if (!baseline || !recommended) return std::nullopt;
    return SavingsRecord{*baseline, *recommended};
}

namespace {

struct RecMetrics {
    int n_recommendations = 0;
    int acceptable = 0;
    int savings_eligible = 0;
    double baseline_total = 0.0;
    double recommended_total = 0.0;
};

RecMetrics metrics_over_trace(
    const PipelineTrace& trace, const PreparedHousehold& data,
    const Thresholds& thresholds, bool use_stored_recommendations,
    bool savings_acceptable_only) {
    RecMetrics m;
    for (const auto& day : trace.days) {
        const auto recs = use_stored_recommendations
                              ? day.recommendations
                              : recommendations_for(day, data, thresholds);
        for (const auto& rec : recs) {
            if (!rec.final_hour) continue;
            ++m.n_recommendations;
            const bool acceptable = acceptability(rec, data.matrix, data.targets);
            m.acceptable += acceptable;
            if (savings_acceptable_only && !acceptable) continue;
            auto it = data.runs.find(rec.device);
            if (it == data.runs.end()) continue;
            if (auto s = savings(rec, it->second, data.prices)) {
                ++m.savings_eligible;
                m.baseline_total += s->baseline_cost;
                m.recommended_total += s->recommended_cost;
            }
        }
    }
    return m;
}

}  // namespace

HouseholdReport aggregate_report(const PipelineTrace& trace,
                                 const PreparedHousehold& data,
                                 const PipelineOptions& options) {
    HouseholdReport report;
    report.household = data.household;
    report.thresholds = trace.thresholds;

    auto scores = score_agents(trace, data, options.mse_variant);
    report.availability_auc = scores.availability_auc;
    report.usage_auc = scores.usage_auc;
    report.load_mse = scores.load_mse;

    auto m = metrics_over_trace(trace, data, trace.thresholds, true,
                                options.savings_acceptable_only);
    report.n_recommendations = m.n_recommendations;
    if (m.n_recommendations > 0) {
        report.acceptable_rate =
            static_cast<double>(m.acceptable) / m.n_recommendations;
    }
    report.savings_eligible = m.savings_eligible;
    report.total_savings = m.baseline_total - m.recommended_total;
    if (m.baseline_total > 0.0) {
        report.relative_savings = 1.0 - m.recommended_total / m.baseline_total;
    }
    return report;
}

std::vector<Recommendation> recommendations_for(const DayTrace& day,
                                                const PreparedHousehold& data,
                                                const Thresholds& thresholds) {
    return recommend(day.date, data.shiftable(), thresholds, day.profiles,
                     data.prices, day.availability, day.usage);
}

std::string HouseholdReport::to_json_string() const {
    json usage = json::object(), mse = json::object();
    for (const auto& [device, v] : usage_auc) usage[device] = opt_to_json(v);
    for (const auto& [device, v] : load_mse) mse[device] = opt_to_json(v);
    json j{{"household", household},
           {"availability_threshold", thresholds.availability},
           {"usage_threshold", thresholds.usage},
           {"availability_auc", opt_to_json(availability_auc)},
           {"usage_auc", std::move(usage)},
           {"load_mse", std::move(mse)},
           {"n_recommendations", n_recommendations},
           {"acceptable_rate", opt_to_json(acceptable_rate)},
           {"savings_eligible", savings_eligible},
           {"total_savings", total_savings},
           {"relative_savings", opt_to_json(relative_savings)}};
    return j.dump(2);
}

std::string HouseholdReport::to_csv() const {
    std::ostringstream os;
    os << "household,metric,device,value\n";
    os << household << ",availability_auc,," << fmt_opt(availability_auc) << "\n";
    for (const auto& [device, v] : usage_auc) {
        os << household << ",usage_auc," << device << "," << fmt_opt(v) << "\n";
    }
    for (const auto& [device, v] : load_mse) {
        os << household << ",load_mse," << device << "," << fmt_opt(v) << "\n";
    }
    os << household << ",availability_threshold,," << thresholds.availability << "\n";
    os << household << ",usage_threshold,," << thresholds.usage << "\n";
    os << household << ",n_recommendations,," << n_recommendations << "\n";
    os << household << ",acceptable_rate,," << fmt_opt(acceptable_rate) << "\n";
    os << household << ",savings_eligible,," << savings_eligible << "\n";
    os << household << ",total_savings,," << total_savings << "\n";
    os << household << ",relative_savings,," << fmt_opt(relative_savings) << "\n";
    return os.str();
}

ColdStartCurve cold_start_curve(const PreparedHousehold& data, AgentFamily family,
                                const std::string& device, int test_window_days,
                                const TrainOptions& options, int jobs) {
    if (data.matrix.empty()) throw InputError("household has no covered days");
    const Date first = data.matrix.first_date();
    const Date last = data.matrix.last_date();
    const int n_days = last - first + 1;
    int t = test_window_days;
    if (t <= 0) {
        t = std::max(30, static_cast<int>(std::lround(0.2 * n_days)));
    }
    t = std::clamp(t, 1, std::max(1, n_days - 1));
    const Date test_start = last - (t - 1);
    const int max_len = n_days - t;
    if (max_len < 1) throw InputError("not enough days for a cold-start curve");

    ColdStartCurve curve;
    curve.family = family;
    curve.device = device;
    curve.test_window_days = t;
    curve.scores.assign(static_cast<std::size_t>(max_len), std::nullopt);

    if (family == AgentFamily::Load) {
        auto it = data.runs.find(device);
        if (it == data.runs.end()) {
            throw InputError("no runs for device '" + device + "'");
        }
        auto runs = it->second;
        std::sort(runs.begin(), runs.end(), [](const UsageRun& a, const UsageRun& b) {
            return a.start < b.start;
        });
        if (runs.empty()) return curve;
        const int k = static_cast<int>(runs.front().load.size()) - 1;
        TypicalLoadProfile star;
        try {
            star = typical_profile(runs, last + 1, k);
        } catch (const NoHistoryError&) {
            return curve;
        }
        RunningProfile running(device, k);
        std::size_t cursor = 0;
        for (int len = 1; len <= max_len; ++len) {
            const Date cutoff = first + len;  // first `len` days are training
            while (cursor < runs.size() && runs[cursor].start.date < cutoff) {
                running.add(runs[cursor]);
                ++cursor;
            }
            if (running.has_history()) {
                curve.scores[static_cast<std::size_t>(len - 1)] =
                    normalized_distance(running.profile(), star);
            }
        }
        return curve;
    }

    // AUC families: fixed test rows, expanding training prefix.
    std::vector<FeatureRow> rows =
        family == AgentFamily::Availability
            ? all_availability_rows(data.matrix)
            : all_usage_rows(data.targets, data.matrix, device);
    std::vector<FeatureRow> test_rows;
    for (const auto& row : rows) {
        if (row.date >= test_start) test_rows.push_back(row);
    }
    std::vector<int> test_labels;
    test_labels.reserve(test_rows.size());
    for (const auto& row : test_rows) test_labels.push_back(row.label);

    parallel_for(static_cast<std::size_t>(max_len), jobs, [&](std::size_t idx) {
        const int len = static_cast<int>(idx) + 1;
        const Date cutoff = first + len;
        std::vector<FeatureRow> train;
        for (const auto& row : rows) {
            if (row.date >= cutoff) break;
            train.push_back(row);
        }
        if (train.empty() || test_rows.empty()) return;
        GlmModel model = train_logistic(train, options);
        std::vector<double> predictions;
        predictions.reserve(test_rows.size());
        for (const auto& row : test_rows) {
            predictions.push_back(predict_proba(model, row.features));
        }
        curve.scores[idx] = auc(predictions, test_labels);
    });
    return curve;
}

std::optional<int> cold_start_days(const std::vector<std::optional<double>>& scores,
                                   double tolerance, AgentFamily family) {
    if (scores.empty()) return std::nullopt;
    std::optional<double> best;
    if (family != AgentFamily::Load) {
        for (const auto& s : scores) {
            if (s && (!best || *s > *best)) best = *s;
        }
        if (!best) return std::nullopt;
    }
    auto satisfied = [&](const std::optional<double>& s) {
        if (!s) return true;  // undefined entries are skipped
        return family == AgentFamily::Load ? *s <= tolerance
                                           : std::abs(*s - *best) <= tolerance;
    };
    std::optional<int> answer;
    bool suffix_ok = true;
    bool any_defined = false;
    for (std::size_t i = scores.size(); i-- > 0;) {
        any_defined = any_defined || scores[i].has_value();
        suffix_ok = suffix_ok && satisfied(scores[i]);
        if (suffix_ok && any_defined) answer = static_cast<int>(i) + 1;
    }
    return answer;
}

ColdStartResult cold_start_analysis(const PreparedHousehold& data,
                                    double tolerance, int test_window_days,
                                    const TrainOptions& options, int jobs) {
    ColdStartResult result;
    result.tolerance = tolerance;

    auto availability = cold_start_curve(data, AgentFamily::Availability, {},
                                         test_window_days, options, jobs);
    result.test_window_days = availability.test_window_days;
    result.availability_days =
        cold_start_days(availability.scores, tolerance, AgentFamily::Availability);

    bool all_solved = result.availability_days.has_value();
    std::optional<int> framework = result.availability_days;
    for (const auto& spec : data.shiftable()) {
        auto usage = cold_start_curve(data, AgentFamily::Usage, spec.id,
                                      test_window_days, options, jobs);
        auto load = cold_start_curve(data, AgentFamily::Load, spec.id,
                                     test_window_days, options, jobs);
        auto usage_days = cold_start_days(usage.scores, tolerance, AgentFamily::Usage);
        auto load_days = cold_start_days(load.scores, tolerance, AgentFamily::Load);
        result.usage_days[spec.id] = usage_days;
        result.load_days[spec.id] = load_days;
        for (const auto& days : {usage_days, load_days}) {
            if (!days) {
                all_solved = false;
            } else if (!framework || *days > *framework) {
                framework = days;
            }
        }
    }
    result.framework_days = all_solved ? framework : std::nullopt;
    return result;
}

std::string ColdStartResult::to_json_string() const {
    json usage = json::object(), load = json::object();
    for (const auto& [device, v] : usage_days) usage[device] = opt_to_json(v);
    for (const auto& [device, v] : load_days) load[device] = opt_to_json(v);
    json j{{"tolerance", tolerance},
           {"test_window_days", test_window_days},
           {"availability_days", opt_to_json(availability_days)},
           {"usage_days", std::move(usage)},
           {"load_days", std::move(load)},
           {"framework_days", opt_to_json(framework_days)}};
    return j.dump(2);
}

std::string ColdStartResult::to_csv() const {
    auto fmt = [](const std::optional<int>& v) {
        return v ? std::to_string(*v) : std::string("unsolved");
    };
    std::ostringstream os;
    os << "agent,device,cold_start_days\n";
    os << "availability,," << fmt(availability_days) << "\n";
    for (const auto& [device, v] : usage_days) {
        os << "usage," << device << "," << fmt(v) << "\n";
    }
    for (const auto& [device, v] : load_days) {
        os << "load," << device << "," << fmt(v) << "\n";
    }
    os << "framework,," << fmt(framework_days) << "\n";
    return os.str();
}

std::vector<double> default_threshold_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 7; ++i) grid.push_back(0.125 * i);
    return grid;
}

GridSearchResult grid_search(const PreparedHousehold& data, Date from, Date to,
                             const std::vector<double>& availability_grid,
                             const std::vector<double>& usage_grid,
                             const PipelineOptions& options, int jobs) {
    if (availability_grid.empty() || usage_grid.empty()) {
        throw InputError("threshold grids must be non-empty");
    }
    // Forecasts do not depend on the thresholds, so one pipeline run feeds
    // every grid cell.
    Thresholds seed{availability_grid.front(), usage_grid.front()};
    PipelineTrace trace = run_pipeline(data, seed, from, to, options);

    GridSearchResult result;
    result.table.resize(availability_grid.size() * usage_grid.size());
    parallel_for(result.table.size(), jobs, [&](std::size_t idx) {
        const std::size_t ai = idx / usage_grid.size();
        const std::size_t ui = idx % usage_grid.size();
        Thresholds cell_thresholds{availability_grid[ai], usage_grid[ui]};
        auto m = metrics_over_trace(trace, data, cell_thresholds, false,
                                    options.savings_acceptable_only);
        GridCell cell;
        cell.thresholds = cell_thresholds;
        cell.n_recommendations = m.n_recommendations;
        if (m.n_recommendations > 0) {
            cell.acceptable_rate =
                static_cast<double>(m.acceptable) / m.n_recommendations;
        }
        cell.total_savings = m.baseline_total - m.recommended_total;
        if (m.baseline_total > 0.0) {
            cell.relative_savings = 1.0 - m.recommended_total / m.baseline_total;
        }
        result.table[idx] = std::move(cell);
    });

    const GridCell* best = nullptr;
    for (const auto& cell : result.table) {
        if (!best || cell.total_savings > best->total_savings ||
            (cell.total_savings == best->total_savings &&
             (cell.thresholds.availability > best->thresholds.availability ||
              (cell.thresholds.availability == best->thresholds.availability &&
               cell.thresholds.usage > best->thresholds.usage)))) {
            best = &cell;
        }
    }
    result.best = best->thresholds;
    return result;
}

std::string GridSearchResult::sensitivity_csv() const {
    std::ostringstream os;
    os << "availability_th,usage_th,n_recs,acceptable_rate,total_savings,"
          "relative_savings\n";
    for (const auto& cell : table) {
        os << cell.thresholds.availability << "," << cell.thresholds.usage << ","
           << cell.n_recommendations << "," << fmt_opt(cell.acceptable_rate) << ","
           << cell.total_savings << "," << fmt_opt(cell.relative_savings) << "\n";
    }
    return os.str();
}

}  // namespace shiftwise
