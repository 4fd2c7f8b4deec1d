// shiftwise: load-shifting recommendation engine CLI.
//
// Subcommands: ingest, recommend, evaluate, coldstart, gridsearch, synth.
// Prepared datasets are cached under a content hash of the config and raw
// input files; SHIFTWISE_CACHE_DIR overrides the cache location.
// Exit codes: 0 success, 1 internal error, 2 user/input error.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "shiftwise/eval.hpp"
#include "shiftwise/ingest.hpp"
#include "shiftwise/synth.hpp"

using namespace shiftwise;
namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(std::uint64_t h, const std::string& bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot read file: " + p.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

fs::path cache_dir(const fs::path& config_path) {
    if (const char* env = std::getenv("SHIFTWISE_CACHE_DIR")) return fs::path(env);
    return config_path.parent_path() / ".shiftwise-cache";
}

fs::path cache_path(const HouseholdConfig& cfg, const fs::path& config_path) {
    std::uint64_t h = 14695981039346656037ULL;
    h = fnv1a(h, cfg.to_json_string());
    h = fnv1a(h, slurp(cfg.consumption_file));
    h = fnv1a(h, slurp(cfg.price_file));
    char name[64];
    std::snprintf(name, sizeof(name), "prepared_%016llx.json",
                  static_cast<unsigned long long>(h));
    return cache_dir(config_path) / name;
}

struct IngestSummary {
    ParseStats stats;
    bool from_cache = false;
};

PreparedHousehold load_prepared(const fs::path& config_path,
                                IngestSummary* summary = nullptr) {
    auto cfg = HouseholdConfig::load(config_path);
    auto cached = cache_path(cfg, config_path);
    if (fs::exists(cached)) {
        if (summary) summary->from_cache = true;
        return PreparedHousehold::from_json_string(slurp(cached));
    }
    ParseStats stats;
    auto series = parse_consumption(cfg.consumption_file, cfg, &stats);
    auto prices = parse_prices(cfg.price_file);
    auto prepared = prepare_household(cfg, series, prices);
    if (summary) summary->stats = stats;
    fs::create_directories(cached.parent_path());
    std::ofstream(cached, std::ios::binary) << prepared.to_json_string();
    return prepared;
}

void write_file(const fs::path& dir, const std::string& name,
                const std::string& content) {
    fs::create_directories(dir);
    std::ofstream(dir / name, std::ios::binary) << content;
    std::cout << "wrote " << (dir / name).string() << "\n";
}

std::string recommendations_csv(const std::vector<Recommendation>& recs) {
    std::ostringstream out;
    out << "date,device,best_hour,availability_flag,usage_flag,final_hour,"
           "estimated_cost\n";
    for (const auto& r : recs) {
        out << r.date.to_string() << ',' << r.device << ',';
        if (r.best_hour) out << *r.best_hour;
        else out << "no";
        out << ',' << (r.availability_flag ? 1 : 0) << ','
            << (r.usage_flag ? 1 : 0) << ',';
        if (r.final_hour) out << *r.final_hour;
        else out << "no";
        out << ',';
        if (r.estimated_cost) out << *r.estimated_cost;
        else out << "undefined";
        out << '\n';
    }
    return out.str();
}

Date parse_date_or_throw(const std::string& s, const char* flag) {
    auto d = Date::parse(s);
    if (!d) throw InputError(std::string("invalid date for ") + flag + ": " + s);
    return *d;
}

struct CommonArgs {
    std::string config;
    std::string from, to;
    double availability_th = 0.5;
    double usage_th = 0.5;
    double tolerance = 0.15;
    std::string out = "out";
    std::uint64_t seed = 0;
    int jobs = 1;
    bool mse_literal = false;
    bool savings_acceptable_only = false;
};

std::pair<Date, Date> resolve_range(const PreparedHousehold& data,
                                    const CommonArgs& args) {
    auto [from, to] = evaluation_range(data);
    if (!args.from.empty()) from = parse_date_or_throw(args.from, "--from");
    if (!args.to.empty()) to = parse_date_or_throw(args.to, "--to");
    if (from > to) throw InputError("--from is after --to");
    return {from, to};
}

PipelineOptions pipeline_options(const CommonArgs& args) {
    PipelineOptions opt;
    opt.mse_variant = args.mse_literal ? MseVariant::PerDuration
                                       : MseVariant::PerLength;
    opt.savings_acceptable_only = args.savings_acceptable_only;
    return opt;
}

int cmd_ingest(const CommonArgs& args) {
    IngestSummary summary;
    auto prepared = load_prepared(args.config, &summary);
    std::cout << "household: " << prepared.household << "\n";
    std::cout << "devices: " << prepared.devices.size() << " ("
              << prepared.shiftable().size() << " shiftable)\n";
    for (const auto& d : prepared.devices) {
        std::cout << "  " << d.id << " role=" << to_string(d.role);
        if (d.duration_k) std::cout << " k=" << *d.duration_k;
        std::cout << "\n";
    }
    if (!prepared.matrix.empty()) {
        std::cout << "activity coverage: " << prepared.matrix.first_date().to_string()
                  << " .. " << prepared.matrix.last_date().to_string() << " ("
                  << prepared.matrix.days().size() << " days)\n";
    }
    for (const auto& [device, runs] : prepared.runs) {
        std::cout << "runs[" << device << "]: " << runs.size() << "\n";
    }
    std::cout << "price hours: " << prepared.prices.samples().size() << "\n";
    if (summary.from_cache) {
        std::cout << "loaded from cache\n";
    } else {
        std::cout << "rows parsed: " << summary.stats.rows_total << ", skipped: "
                  << summary.stats.rows_skipped << "\n";
    }
    return 0;
}

int cmd_recommend(const CommonArgs& args, const std::string& date_str) {
    auto prepared = load_prepared(args.config);
    Date date = parse_date_or_throw(date_str, "--date");
    auto [from, to] = evaluation_range(prepared);
    if (date < from || date > to) {
        throw InputError("date " + date.to_string() + " outside evaluable range " +
                         from.to_string() + " .. " + to.to_string());
    }
    Thresholds th{args.availability_th, args.usage_th};
    th.validate();
    auto trace = run_pipeline(prepared, th, date, date);
    auto csv = recommendations_csv(trace.days.at(0).recommendations);
    std::cout << csv;
    write_file(args.out, "recommendations_" + date.to_string() + ".csv", csv);
    return 0;
}

int cmd_evaluate(const CommonArgs& args) {
    auto prepared = load_prepared(args.config);
    auto [from, to] = resolve_range(prepared, args);
    Thresholds th{args.availability_th, args.usage_th};
    th.validate();
    auto opt = pipeline_options(args);
    auto trace = run_pipeline(prepared, th, from, to, opt);
    auto report = aggregate_report(trace, prepared, opt);
    std::cout << report.to_json_string() << "\n";
    write_file(args.out, "report.json", report.to_json_string());
    write_file(args.out, "report.csv", report.to_csv());
    return 0;
}

int cmd_coldstart(const CommonArgs& args) {
    auto prepared = load_prepared(args.config);
    auto result = cold_start_analysis(prepared, args.tolerance, 0, {}, args.jobs);
    std::cout << result.to_csv();
    write_file(args.out, "coldstart.json", result.to_json_string());
    write_file(args.out, "coldstart.csv", result.to_csv());
    return 0;
}

int cmd_gridsearch(const CommonArgs& args) {
    auto prepared = load_prepared(args.config);
    auto [from, to] = resolve_range(prepared, args);
    auto grid = default_threshold_grid();
    auto result = grid_search(prepared, from, to, grid, grid,
                              pipeline_options(args), args.jobs);
    std::cout << "best availability_th=" << result.best.availability
              << " usage_th=" << result.best.usage << "\n";
    write_file(args.out, "sensitivity.csv", result.sensitivity_csv());
    return 0;
}

int cmd_synth(const CommonArgs& args, int days) {
    synth::SynthConfig cfg;
    cfg.seed = args.seed;
    cfg.days = days;
    synth::SynthDevice dev;
    dev.id = "machine";
    dev.duration_k = 1;
    dev.actual_start_hour = 18;
    dev.load = {1500.0, 800.0};
    cfg.devices.push_back(dev);
    auto data = synth::generate_synthetic(cfg);

    auto [from, to] = evaluation_range(data.prepared);
    Thresholds th{args.availability_th, args.usage_th};
    th.validate();
    auto opt = pipeline_options(args);
    auto trace = run_pipeline(data.prepared, th, from, to, opt);
    auto report = aggregate_report(trace, data.prepared, opt);

    std::cout << "planted best hour: " << data.expected.best_hour.at(0) << "\n";
    std::cout << "planted relative savings: "
              << data.expected.relative_savings.at(0) << "\n";
    std::cout << report.to_json_string() << "\n";
    write_file(args.out, "synth_prepared.json", data.prepared.to_json_string());
    write_file(args.out, "synth_report.json", report.to_json_string());
    write_file(args.out, "synth_report.csv", report.to_csv());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Residential load-shifting recommendation engine"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string date_str;
    int synth_days = 120;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", args.config, "household config JSON");
        if (needs_config) opt->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", args.out, "output directory");
        cmd->add_option("--jobs", args.jobs, "worker thread cap")
            ->check(CLI::PositiveNumber);
    };
    auto add_thresholds = [&](CLI::App* cmd) {
        cmd->add_option("--availability-th", args.availability_th, "t_U in [0,1]");
        cmd->add_option("--usage-th", args.usage_th, "t_S in [0,1]");
    };
    auto add_range = [&](CLI::App* cmd) {
        cmd->add_option("--from", args.from, "first date YYYY-MM-DD");
        cmd->add_option("--to", args.to, "last date YYYY-MM-DD");
    };
    auto add_switches = [&](CLI::App* cmd) {
        cmd->add_flag("--mse-literal", args.mse_literal,
                      "divide load MSE by k instead of k+1");
        cmd->add_flag("--savings-acceptable-only", args.savings_acceptable_only,
                      "restrict savings sums to acceptable recommendations");
    };

    auto* ingest = app.add_subcommand("ingest", "parse raw data and cache it");
    add_common(ingest, true);

    auto* recommend_cmd =
        app.add_subcommand("recommend", "print recommendations for one day");
    add_common(recommend_cmd, true);
    add_thresholds(recommend_cmd);
    recommend_cmd->add_option("--date", date_str, "day to recommend for")
        ->required();

    auto* evaluate = app.add_subcommand("evaluate", "pipeline sweep and report");
    add_common(evaluate, true);
    add_thresholds(evaluate);
    add_range(evaluate);
    add_switches(evaluate);

    auto* coldstart = app.add_subcommand("coldstart", "expanding-window analysis");
    add_common(coldstart, true);
    coldstart->add_option("--tolerance", args.tolerance, "stability tolerance");

    auto* gridsearch = app.add_subcommand("gridsearch", "7x7 threshold sweep");
    add_common(gridsearch, true);
    add_range(gridsearch);
    add_switches(gridsearch);

    auto* synth_cmd =
        app.add_subcommand("synth", "synthetic scenario with planted optimum");
    add_common(synth_cmd, false);
    add_thresholds(synth_cmd);
    synth_cmd->add_option("--seed", args.seed, "generator seed");
    synth_cmd->add_option("--days", synth_days, "number of synthetic days")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
        if (ingest->parsed()) return cmd_ingest(args);
        if (recommend_cmd->parsed()) return cmd_recommend(args, date_str);
        if (evaluate->parsed()) return cmd_evaluate(args);
        if (coldstart->parsed()) return cmd_coldstart(args);
        if (gridsearch->parsed()) return cmd_gridsearch(args);
        if (synth_cmd->parsed()) return cmd_synth(args, synth_days);
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
