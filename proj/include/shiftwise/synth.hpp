#pragma once

// Deterministic synthetic household generator for desk-scale verification.
// Targets, cheapest hours and relative savings of the planted scenario are
// known in closed form and emitted alongside the data.

#include <cstdint>
#include <string>
#include <vector>

#include "shiftwise/eval.hpp"

namespace shiftwise {
namespace synth {

struct SynthDevice {
    std::string id = "machine";
    int duration_k = 1;
    int actual_start_hour = 18;       // where the user really starts it
    std::vector<double> load;         // planted per-run Wh, length k+1
    std::vector<int> usage_weekdays;  // 0=Mon..6=Sun; empty = used daily
    double on_threshold_watts = 10.0;
};

struct SynthConfig {
    std::uint64_t seed = 0;
    int days = 120;
    Date start_date = Date::from_ymd(2015, 1, 1);
    std::vector<int> available_hours;  // empty = available every hour
    double availability_noise = 0.0;   // per-hour flip probability
    std::vector<SynthDevice> devices;
    double base_price = 50.0;
    int dip_hour = 3;
    double dip_price = 10.0;

    void validate() const;
};

struct SynthExpected {
    // Per device, in config order.
    std::vector<int> best_hour;
    std::vector<double> relative_savings;
};

struct SynthDataset {
    PreparedHousehold prepared;
    SynthExpected expected;
};

// Expected values are computed by direct window-cost arithmetic on the
// planted prices and loads, independent of the recommendation path. Noise
// must be zero for the closed-form expectations to be exact.
SynthDataset generate_synthetic(const SynthConfig& config);

}  // namespace synth
}  // namespace shiftwise
