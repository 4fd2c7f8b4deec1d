#include "shiftwise/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <json.hpp>

namespace shiftwise {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double log1pexp(double z) {
    if (z > 35.0) return z;
    return std::log1p(std::exp(z));
}

struct Design {
    Eigen::MatrixXd x;  // n x d
    Eigen::VectorXd y;  // n
};

Design build_design(const std::vector<FeatureRow>& rows) {
    if (rows.empty()) throw InputError("no training rows");
    const auto d = rows.front().features.size();
    Design design;
    design.x.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(d));
    design.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].features.size() != d) {
            throw DimensionMismatch("feature rows disagree on dimension");
        }
        for (std::size_t j = 0; j < d; ++j) {
            design.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i].features[j];
        }
        design.y(static_cast<Eigen::Index>(i)) = rows[i].label;
    }
    return design;
}

// f(w, b) = (1/n) sum nll_i + (l2 / (2n)) ||w||^2
double objective(const Design& d, const Eigen::VectorXd& w, double b, double l2,
                 Eigen::VectorXd* grad_w, double* grad_b) {
    const auto n = static_cast<double>(d.x.rows());
    Eigen::VectorXd z = d.x * w;
    z.array() += b;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        // -y z + log(1 + exp(z))
        nll += log1pexp(z(i)) - d.y(i) * z(i);
    }
    double f = nll / n + (l2 / (2.0 * n)) * w.squaredNorm();
    if (grad_w || grad_b) {
        Eigen::VectorXd p(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) p(i) = sigmoid(z(i));
        Eigen::VectorXd resid = p - d.y;
        if (grad_w) *grad_w = (d.x.transpose() * resid + l2 * w) / n;
        if (grad_b) *grad_b = resid.sum() / n;
    }
    return f;
}

}  // namespace

std::string GlmModel::to_json_string() const {
    nlohmann::json j{{"weights", weights},
                     {"bias", bias},
                     {"iterations", iterations},
                     {"l2", l2},
                     {"feature_dim", feature_dim},
                     {"degenerate", degenerate},
                     {"prior", prior}};
    return j.dump();
}

GlmModel GlmModel::from_json_string(const std::string& s) {
    auto j = nlohmann::json::parse(s);
    GlmModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.iterations = j.at("iterations").get<int>();
    m.l2 = j.at("l2").get<double>();
    m.feature_dim = j.at("feature_dim").get<int>();
    m.degenerate = j.at("degenerate").get<bool>();
    m.prior = j.at("prior").get<double>();
    return m;
}

double logistic_objective(const std::vector<FeatureRow>& rows,
                          const std::vector<double>& weights, double bias,
                          double l2, std::vector<double>* grad_w,
                          double* grad_b) {
    Design d = build_design(rows);
    if (static_cast<std::size_t>(d.x.cols()) != weights.size()) {
        throw DimensionMismatch("weight vector does not match feature dimension");
    }
    Eigen::Map<const Eigen::VectorXd> w(weights.data(),
                                        static_cast<Eigen::Index>(weights.size()));
    Eigen::VectorXd gw;
    double gb = 0.0;
    double f = objective(d, w, bias, l2, grad_w ? &gw : nullptr,
                         grad_b ? &gb : nullptr);
    if (grad_w) grad_w->assign(gw.data(), gw.data() + gw.size());
    if (grad_b) *grad_b = gb;
    return f;
}

GlmModel train_logistic(const std::vector<FeatureRow>& rows,
                        const TrainOptions& options) {
    if (rows.empty()) throw InputError("no training rows");
    if (options.l2 < 0.0) throw InputError("l2 must be >= 0");

    const auto n = rows.size();
    std::size_t positives = 0;
    for (const auto& r : rows) positives += r.label != 0;

    GlmModel model;
    model.l2 = options.l2;
    model.feature_dim = static_cast<int>(rows.front().features.size());
    if (positives == 0 || positives == n) {
        model.degenerate = true;
        model.prior = static_cast<double>(positives) / static_cast<double>(n);
        return model;
    }

    Design d = build_design(rows);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d.x.cols());
    double b = 0.0;
    Eigen::VectorXd gw;
    double gb = 0.0;
    double f = objective(d, w, b, options.l2, &gw, &gb);
    double step = 1.0;
    int iter = 0;
    for (; iter < options.max_iters; ++iter) {
        double grad_norm = std::sqrt(gw.squaredNorm() + gb * gb);
        if (grad_norm < options.tol) break;
        // Backtracking line search (Armijo), with gentle step growth.
        step = std::min(step * 2.0, 1e4);
        double descent = gw.squaredNorm() + gb * gb;
        bool moved = false;
        for (int back = 0; back < 60; ++back) {
            Eigen::VectorXd w_try = w - step * gw;
            double b_try = b - step * gb;
            double f_try = objective(d, w_try, b_try, options.l2, nullptr, nullptr);
            if (f_try <= f - 1e-4 * step * descent) {
                w = std::move(w_try);
                b = b_try;
                f = objective(d, w, b, options.l2, &gw, &gb);
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) break;
    }
    model.iterations = iter;
    model.bias = b;
    model.weights.assign(w.data(), w.data() + w.size());
    for (double v : model.weights) {
        if (!std::isfinite(v)) throw Error("non-finite weight after training");
    }
    return model;
}

double predict_proba(const GlmModel& model, const std::vector<double>& features) {
    if (model.degenerate) return model.prior;
    if (features.size() != model.weights.size()) {
        throw DimensionMismatch("feature vector does not match model dimension");
    }
    double z = model.bias;
    for (std::size_t i = 0; i < features.size(); ++i) {
        z += model.weights[i] * features[i];
    }
    return sigmoid(z);
}

std::optional<double> auc(const std::vector<double>& scores,
                          const std::vector<int>& labels) {
    if (scores.size() != labels.size()) {
        throw DimensionMismatch("scores and labels differ in length");
    }
    const auto n = scores.size();
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += y != 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });
    // Midranks over tie groups; U = sum of positive ranks - n_pos(n_pos+1)/2.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) {
            if (labels[order[t]] != 0) rank_sum_pos += midrank;
        }
        i = j + 1;
    }
    double u = rank_sum_pos - static_cast<double>(n_pos) *
                                  (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

std::optional<double> load_mse(
    const std::vector<UsageRun>& runs,
    const std::map<std::int32_t, TypicalLoadProfile>& profiles_at_date,
    MseVariant variant) {
    double total = 0.0;
    std::size_t counted = 0;
    for (const auto& run : runs) {
        auto it = profiles_at_date.find(run.start.date.day_number());
        if (it == profiles_at_date.end()) continue;
        const auto& profile = it->second.values;
        if (profile.size() != run.load.size()) {
            throw DimensionMismatch("run and profile lengths differ");
        }
        double sq = 0.0;
        for (std::size_t j = 0; j < profile.size(); ++j) {
            double diff = run.load[j] - profile[j];
            sq += diff * diff;
        }
        double divisor = variant == MseVariant::PerLength
                             ? static_cast<double>(run.load.size())
                             : std::max<double>(1.0, static_cast<double>(run.load.size()) - 1.0);
        total += sq / divisor;
        ++counted;
    }
    if (counted == 0) return std::nullopt;
    return total / static_cast<double>(counted);
}

std::optional<double> normalized_distance(const TypicalLoadProfile& profile_d,
                                          const TypicalLoadProfile& profile_star) {
    if (profile_d.values.size() != profile_star.values.size()) {
        throw DimensionMismatch("profiles differ in length");
    }
    double ref = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < profile_star.values.size(); ++i) {
        ref += profile_star.values[i] * profile_star.values[i];
        double r = profile_d.values[i] - profile_star.values[i];
        diff += r * r;
    }
    if (ref == 0.0) return std::nullopt;
    return std::sqrt(diff) / std::sqrt(ref);
}

}  // namespace shiftwise
