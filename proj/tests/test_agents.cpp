#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "shiftwise/agents.hpp"
#include "test_util.hpp"

using namespace shiftwise;

namespace {

const Date kDay0 = Date::from_ymd(2015, 2, 1);

PriceCurve flat_prices(Date from, int days, double value) {
    PriceCurve curve;
    for (int day = 0; day < days; ++day) {
        for (int h = 0; h < 24; ++h) curve.set(HourStamp{from + day, h}, value);
    }
    return curve;
}

}  // namespace

TEST_CASE("price vector covers the day plus k tail hours") {
    auto curve = flat_prices(kDay0, 2, 40.0);
    curve.set(HourStamp{kDay0 + 1, 0}, 11.0);
    curve.set(HourStamp{kDay0 + 1, 1}, 12.0);

    auto p0 = price_vector(curve, kDay0, 0);
    CHECK(p0.size() == 24);

    auto p2 = price_vector(curve, kDay0, 2);
    REQUIRE(p2.size() == 26);
    CHECK(p2[24] == 11.0);
    CHECK(p2[25] == 12.0);
}

TEST_CASE("price vector fails loudly when the tail is missing") {
    auto curve = flat_prices(kDay0, 1, 40.0);
    CHECK_THROWS_AS(price_vector(curve, kDay0, 2), IncompleteCoverageError);
}

TEST_CASE("typical profile of a single run is that run") {
    std::vector<UsageRun> runs{{"wm", HourStamp{kDay0, 8}, {500.0, 300.0}, 0}};
    auto profile = typical_profile(runs, kDay0 + 1, 1);
    CHECK(profile.values == std::vector<double>{500.0, 300.0});
    CHECK(profile.run_count == 1);
}

TEST_CASE("typical profile is the elementwise mean") {
    std::vector<UsageRun> runs{{"wm", HourStamp{kDay0, 8}, {2.0, 4.0}, 0},
                               {"wm", HourStamp{kDay0 + 1, 9}, {4.0, 6.0}, 0}};
    auto profile = typical_profile(runs, kDay0 + 2, 1);
    CHECK(profile.values[0] == doctest::Approx(3.0));
    CHECK(profile.values[1] == doctest::Approx(5.0));
}

TEST_CASE("typical profile respects the cutoff and signals no history") {
    std::vector<UsageRun> runs{{"wm", HourStamp{kDay0 + 5, 8}, {1.0}, 0}};
    CHECK_THROWS_AS(typical_profile(runs, kDay0 + 5, 0), NoHistoryError);
}

TEST_CASE("incremental profile equals batch mean over 50 random runs") {
    testutil::Rng rng(9);
    const int k = 2;
    RunningProfile running("wm", k);
    std::vector<UsageRun> runs;
    for (int i = 0; i < 50; ++i) {
        UsageRun run{"wm", HourStamp{kDay0 + i, 8}, {}, 0};
        for (int j = 0; j <= k; ++j) run.load.push_back(rng.uniform(0.0, 2500.0));
        running.add(run);
        runs.push_back(std::move(run));

        auto batch = typical_profile(runs, kDay0 + i + 1, k);
        auto incremental = running.profile();
        REQUIRE(incremental.values.size() == batch.values.size());
        for (std::size_t j = 0; j < batch.values.size(); ++j) {
            double mean = 0.0;
            for (const auto& r : runs) mean += r.load[j];
            mean /= static_cast<double>(runs.size());
            CHECK(std::abs(incremental.values[j] - mean) < 1e-9);
            CHECK(std::abs(batch.values[j] - mean) < 1e-9);
        }
    }
}

namespace {

ActivityMatrix pattern_matrix(int days, const std::vector<int>& on_hours) {
    ActivityMatrix m;
    for (int day = 0; day < days; ++day) {
        m.cover(kDay0 + day);
        for (int h : on_hours) m.set(kDay0 + day, h, true);
    }
    return m;
}

}  // namespace

TEST_CASE("always-available history forecasts high everywhere") {
    std::vector<int> all_hours;
    for (int h = 0; h < 24; ++h) all_hours.push_back(h);
    auto m = pattern_matrix(30, all_hours);
    auto fc = forecast_availability(m, kDay0 + 30);
    REQUIRE(fc.probabilities.size() == 24);
    for (double p : fc.probabilities) CHECK(p >= 0.5);
}

TEST_CASE("never-available history forecasts near zero") {
    auto m = pattern_matrix(30, {});
    auto fc = forecast_availability(m, kDay0 + 30);
    for (double p : fc.probabilities) CHECK(p <= 1e-6);
}

TEST_CASE("planted evening availability pattern is learned") {
    auto m = pattern_matrix(60, {18, 19, 20, 21, 22});
    auto fc = forecast_availability(m, kDay0 + 60);
    CHECK_FALSE(fc.fallback);
    double on_mean = 0.0, off_mean = 0.0;
    for (int h = 0; h < 24; ++h) {
        if (h >= 18 && h <= 22) on_mean += fc.probabilities[h] / 5.0;
        else off_mean += fc.probabilities[h] / 19.0;
    }
    CHECK(on_mean > off_mean);
}

TEST_CASE("short history falls back to base rates, flagged") {
    auto m = pattern_matrix(3, {8});
    auto fc = forecast_availability(m, kDay0 + 3);
    CHECK(fc.fallback);
    CHECK(fc.probabilities[8] == doctest::Approx(1.0));
    CHECK(fc.probabilities[9] == doctest::Approx(0.0));
}

TEST_CASE("daily usage history forecasts high probability") {
    testutil::Rng rng(3);
    auto m = pattern_matrix(30, {8, 9});
    DailyUsageTargets t;
    for (int day = 0; day < 30; ++day) t.set("wm", kDay0 + day, true);
    auto fc = forecast_usage(t, m, "wm", kDay0 + 30);
    CHECK(fc.probability >= 0.5);

    DailyUsageTargets never;
    for (int day = 0; day < 30; ++day) never.set("wm", kDay0 + day, false);
    CHECK(forecast_usage(never, m, "wm", kDay0 + 30).probability <= 1e-6);
}

TEST_CASE("planted Saturday-only usage beats weekdays after 20 weeks") {
    auto m = pattern_matrix(141, {8});
    DailyUsageTargets t;
    for (int day = 0; day < 140; ++day) {
        t.set("wm", kDay0 + day, (kDay0 + day).weekday() == 5);
    }
    // Probe one full week after the history.
    double saturday = -1.0;
    double best_weekday = -1.0;
    for (int day = 140 - 7; day < 140; ++day) {
        Date d = kDay0 + day;
        auto fc = forecast_usage(t, m, "wm", d);
        if (d.weekday() == 5) saturday = fc.probability;
        else best_weekday = std::max(best_weekday, fc.probability);
    }
    REQUIRE(saturday >= 0.0);
    CHECK(saturday > best_weekday);
}

namespace {

struct RecScenario {
    std::vector<DeviceSpec> devices{
        DeviceSpec{"wm", "h1", DeviceRole::Shiftable, 20.0, 1}};
    std::map<std::string, TypicalLoadProfile> profiles{
        {"wm", TypicalLoadProfile{"wm", {1000.0, 500.0}, 4}}};
    std::map<std::string, UsageForecast> usage{
        {"wm", UsageForecast{kDay0, "wm", 0.9, false}}};
    AvailabilityForecast availability{kDay0, std::vector<double>(24, 0.9), false};
    PriceCurve prices = flat_prices(kDay0, 2, 40.0);
    Thresholds thresholds{0.5, 0.5};
};

}  // namespace

TEST_CASE("recommend picks the exhaustive cheapest window") {
    testutil::Rng rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        RecScenario s;
        const int k = rng.uniform_int(0, 3);
        std::vector<double> profile;
        for (int j = 0; j <= k; ++j) profile.push_back(rng.uniform(0.0, 2000.0));
        s.devices[0].duration_k = k;
        s.profiles["wm"] = TypicalLoadProfile{"wm", profile, 1};
        PriceCurve prices;
        for (int h = 0; h < 24 + k; ++h) {
            prices.set(HourStamp{kDay0, 0}.plus_hours(h), rng.uniform(5.0, 80.0));
        }
        s.prices = prices;
        for (int h = 0; h < 24; ++h) {
            s.availability.probabilities[h] = rng.uniform();
        }
        auto recs = recommend(kDay0, s.devices, s.thresholds, s.profiles, s.prices,
                              s.availability, s.usage);
        REQUIRE(recs.size() == 1);

        // Brute-force oracle over all windows.
        int best_hour = -1;
        double best_cost = 0.0;
        for (int h = 0; h < 24; ++h) {
            if (!(s.availability.probabilities[h] > s.thresholds.availability)) {
                continue;
            }
            double cost = 0.0;
            for (int j = 0; j <= k; ++j) {
                cost += prices.at(HourStamp{kDay0, 0}.plus_hours(h + j)) * profile[j];
            }
            if (best_hour < 0 || cost < best_cost) {
                best_hour = h;
                best_cost = cost;
            }
        }
        if (best_hour < 0) {
            CHECK(recs[0].availability_flag);
            CHECK_FALSE(recs[0].best_hour.has_value());
        } else {
            REQUIRE(recs[0].best_hour.has_value());
            CHECK(*recs[0].best_hour == best_hour);
            CHECK(*recs[0].estimated_cost == doctest::Approx(best_cost));
        }
    }
}

TEST_CASE("flag semantics and final hour") {
    RecScenario s;
    auto recs = recommend(kDay0, s.devices, s.thresholds, s.profiles, s.prices,
                          s.availability, s.usage);
    REQUIRE(recs.size() == 1);
    CHECK_FALSE(recs[0].availability_flag);
    CHECK_FALSE(recs[0].usage_flag);
    REQUIRE(recs[0].final_hour.has_value());
    CHECK(*recs[0].final_hour == *recs[0].best_hour);

    s.usage["wm"].probability = 0.4;  // below t_S -> flag, no final
    recs = recommend(kDay0, s.devices, s.thresholds, s.profiles, s.prices,
                     s.availability, s.usage);
    CHECK(recs[0].usage_flag);
    CHECK(recs[0].best_hour.has_value());  // best hour still reported
    CHECK_FALSE(recs[0].final_hour.has_value());

    s.usage["wm"].probability = 0.9;
    for (double& p : s.availability.probabilities) p = 0.2;  // nothing passes t_U
    recs = recommend(kDay0, s.devices, s.thresholds, s.profiles, s.prices,
                     s.availability, s.usage);
    CHECK(recs[0].availability_flag);
    CHECK_FALSE(recs[0].best_hour.has_value());
    CHECK_FALSE(recs[0].final_hour.has_value());
}

TEST_CASE("equal window costs break ties to the earliest hour") {
    RecScenario s;
    s.devices[0].duration_k = 0;
    s.profiles["wm"] = TypicalLoadProfile{"wm", {1000.0}, 1};
    // Flat prices: every hour ties; earliest available hour must win.
    auto recs = recommend(kDay0, s.devices, s.thresholds, s.profiles, s.prices,
                          s.availability, s.usage);
    CHECK(*recs[0].best_hour == 0);
}

TEST_CASE("late hours lacking next-day prices drop out instead of wrapping") {
    RecScenario s;
    s.prices = flat_prices(kDay0, 1, 40.0);  // no next-day coverage
    s.prices.set(HourStamp{kDay0, 23}, 1.0);
    // k=1: the cheap hour 23 needs next-day hour 0 and must be dropped.
    auto recs = recommend(kDay0, s.devices, s.thresholds, s.profiles, s.prices,
                          s.availability, s.usage);
    REQUIRE(recs[0].best_hour.has_value());
    CHECK(*recs[0].best_hour != 23);
}

TEST_CASE("missing profile skips the device with a diagnostic") {
    RecScenario s;
    s.profiles.clear();
    std::vector<std::string> skipped;
    auto recs = recommend(kDay0, s.devices, s.thresholds, s.profiles, s.prices,
                          s.availability, s.usage, &skipped);
    CHECK(recs.empty());
    REQUIRE(skipped.size() == 1);
    CHECK(skipped[0] == "wm");
}

TEST_CASE("threshold monotonicity") {
    testutil::Rng rng(55);
    for (int trial = 0; trial < 100; ++trial) {
        RecScenario s;
        for (int h = 0; h < 24; ++h) s.availability.probabilities[h] = rng.uniform();
        s.usage["wm"].probability = rng.uniform();
        double low = rng.uniform(0.0, 0.5), high = rng.uniform(0.5, 1.0);

        auto count_candidates = [&](double t_u) {
            int n = 0;
            for (double p : s.availability.probabilities) n += p > t_u;
            return n;
        };
        CHECK(count_candidates(high) <= count_candidates(low));

        Thresholds lo{0.5, low}, hi{0.5, high};
        auto rec_lo = recommend(kDay0, s.devices, lo, s.profiles, s.prices,
                                s.availability, s.usage);
        auto rec_hi = recommend(kDay0, s.devices, hi, s.profiles, s.prices,
                                s.availability, s.usage);
        if (rec_lo[0].usage_flag) CHECK(rec_hi[0].usage_flag);
    }
}

TEST_CASE("scaling all prices leaves the best hour unchanged") {
    testutil::Rng rng(61);
    for (int trial = 0; trial < 100; ++trial) {
        RecScenario s;
        PriceCurve scaled;
        double c = rng.uniform(0.1, 9.0);
        for (int h = 0; h < 48; ++h) {
            double p = rng.uniform(5.0, 90.0);
            s.prices.set(HourStamp{kDay0, 0}.plus_hours(h), p);
            scaled.set(HourStamp{kDay0, 0}.plus_hours(h), c * p);
        }
        for (int h = 0; h < 24; ++h) s.availability.probabilities[h] = rng.uniform();
        auto base = recommend(kDay0, s.devices, s.thresholds, s.profiles, s.prices,
                              s.availability, s.usage);
        auto mult = recommend(kDay0, s.devices, s.thresholds, s.profiles, scaled,
                              s.availability, s.usage);
        CHECK(base[0].best_hour == mult[0].best_hour);
    }
}
