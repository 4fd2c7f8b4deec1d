#pragma once

// Logistic-regression trainer/predictor plus the scoring primitives:
// AUC (Mann-Whitney with midranks), load MSE and the normalized Euclidean
// distance between load profiles. Training is deterministic full-batch
// gradient descent with backtracking line search, initialized at zero.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shiftwise/core.hpp"
#include "shiftwise/prepare.hpp"

namespace shiftwise {

struct GlmModel {
    std::vector<double> weights;
    double bias = 0.0;
    // Training metadata.
    int iterations = 0;
    double l2 = 0.0;
    int feature_dim = 0;
    // Single-class training data: the model is a constant equal to the
    // class prior and weights/bias are unused.
    bool degenerate = false;
    double prior = 0.5;

    std::string to_json_string() const;
    static GlmModel from_json_string(const std::string& s);
};

struct TrainOptions {
    double l2 = 1.0;
    int max_iters = 500;
    double tol = 1e-6;
};

// Minimizes the per-sample-averaged L2-regularized negative log-likelihood.
// The bias is not regularized. Rows must share one feature dimension and
// contain both classes; a single-class set yields a degenerate
// constant-prior model.
GlmModel train_logistic(const std::vector<FeatureRow>& rows,
                        const TrainOptions& options = {});

// Objective value and gradient (d/dw, d/db) at (weights, bias); exposed so
// tests can finite-difference the exact objective the trainer descends.
double logistic_objective(const std::vector<FeatureRow>& rows,
                          const std::vector<double>& weights, double bias,
                          double l2, std::vector<double>* grad_w = nullptr,
                          double* grad_b = nullptr);

// sigmoid(w . x + b); throws DimensionMismatch.
double predict_proba(const GlmModel& model, const std::vector<double>& features);

// Probability that a random positive outranks a random negative, ties at
// one half. nullopt when only one class is present.
std::optional<double> auc(const std::vector<double>& scores,
                          const std::vector<int>& labels);

enum class MseVariant {
    PerLength,   // divide each run's squared residual by k+1 (vector length)
    PerDuration  // literal 1/k; k = length-1, clamped to 1 for k = 0
};

// Mean over runs of the per-run normalized squared residual against that
// date's typical profile. nullopt when no run has a profile for its date.
std::optional<double> load_mse(
    const std::vector<UsageRun>& runs,
    const std::map<std::int32_t, TypicalLoadProfile>& profiles_at_date,
    MseVariant variant = MseVariant::PerLength);

// ||profile_d - profile_star|| / ||profile_star||; nullopt for a zero
// reference profile.
std::optional<double> normalized_distance(const TypicalLoadProfile& profile_d,
                                          const TypicalLoadProfile& profile_star);

}  // namespace shiftwise
