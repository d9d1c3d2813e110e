#include "romerr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "romerr/errors.hpp"

namespace romerr {

double BoundParams::hbar() const {
    return std::fabs(scheme.alphas[0]) - std::fabs(scheme.betas[0]) * kappa * dt;
}

Vector BoundParams::gammas() const {
    const int k = scheme.steps();
    const double h = hbar();
    Vector g(k);
    for (int j = 1; j <= k; ++j)
        g[j - 1] = (std::fabs(scheme.alphas[j]) + std::fabs(scheme.betas[j]) * kappa * dt) / h;
    return g;
}

void BoundParams::validate() const {
    if (kappa < 0.0) throw validation_error("Lipschitz constant must be nonnegative");
    if (dt <= 0.0) throw validation_error("bound requires dt > 0");
    const double limit = std::fabs(scheme.betas[0]) * kappa;
    if (limit > 0.0 && dt >= std::fabs(scheme.alphas[0]) / limit)
        throw numeric_error("time-step restriction dt < |alpha_0|/(|beta_0| kappa) violated");
    if (hbar() <= 0.0) throw numeric_error("bound constant hbar must be positive");
}

double fvu(const std::vector<double>& truth, const std::vector<double>& predictions) {
    if (truth.size() != predictions.size())
        throw shape_error("fvu needs truth and prediction sequences of equal length");
    if (truth.size() < 2) throw validation_error("fvu needs at least two samples");

    double mean = 0.0;
    for (double y : truth) mean += y;
    mean /= static_cast<double>(truth.size());

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ss_res += (predictions[i] - truth[i]) * (predictions[i] - truth[i]);
        ss_tot += (truth[i] - mean) * (truth[i] - mean);
    }
    if (ss_tot == 0.0) throw numeric_error("fvu undefined: test responses have zero variance");
    return ss_res / ss_tot;
}

std::vector<double> error_bound_sequence(const std::vector<double>& residual_norms,
                                         const std::vector<double>& initial_errors,
                                         const BoundParams& params) {
    params.validate();
    if (initial_errors.empty()) throw validation_error("bound recursion needs the initial error");

    const int k = params.scheme.steps();
    const double h = params.hbar();
    const Vector gamma = params.gammas();

    std::vector<double> bound(residual_norms.size() + 1);
    bound[0] = initial_errors[0];
    for (std::size_t n = 1; n < bound.size(); ++n) {
        double value = residual_norms[n - 1] / h;
        const int kn = std::min<int>(static_cast<int>(n), k);
        for (int j = 1; j <= kn; ++j) value += gamma[j - 1] * bound[n - j];
        bound[n] = value;
    }
    return bound;
}

double spectral_norm(const SpMat& a, double tol, int max_iter) {
    if (a.rows() != a.cols() && a.rows() < 1)
        throw validation_error("spectral norm needs a nonempty matrix");
    Vector v = Vector::Ones(a.cols()).normalized();
    double lambda = 0.0;
    const SpMat at = SpMat(a.transpose());
    for (int it = 0; it < max_iter; ++it) {
        Vector w = at * (a * v);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        w /= norm;
        const double next = norm; // Rayleigh quotient of A^T A at unit v
        if (it > 0 && std::fabs(next - lambda) <= tol * std::max(1.0, next)) {
            return std::sqrt(next);
        }
        lambda = next;
        v = w;
    }
    return std::sqrt(lambda);
}

ReportTable report_grid(const std::map<ReportKey, double>& results) {
    if (results.empty()) throw validation_error("report grid needs at least one result");

    ReportTable table;
    table.rows.assign(results.begin(), results.end());

    // group cells by case = (feature kind, train size)
    std::map<std::pair<std::string, int>, std::vector<std::pair<std::string, double>>> cases;
    std::map<std::string, std::vector<double>> per_family_feature_sums; // keyed family|feature
    for (const auto& [key, value] : results) {
        cases[{key.feature_kind, key.train_size}].emplace_back(key.family, value);
        per_family_feature_sums[key.family + "|" + key.feature_kind].push_back(value);
    }

    std::map<std::string, double> credit;
    for (const auto& [key, value] : results) credit.emplace(key.family, 0.0);
    for (const auto& [case_key, entries] : cases) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [family, value] : entries) best = std::min(best, value);
        std::vector<std::string> winners;
        for (const auto& [family, value] : entries)
            if (value == best) winners.push_back(family);
        for (const auto& family : winners)
            credit[family] += 1.0 / static_cast<double>(winners.size());
    }
    const double n_cases = static_cast<double>(cases.size());
    for (auto& [family, value] : credit)
        table.lowest_fvu_percentage[family] = 100.0 * value / n_cases;

    // best feature per family by mean FVU over train sizes
    std::map<std::string, std::pair<std::string, double>> best;
    for (const auto& [key, values] : per_family_feature_sums) {
        const auto bar = key.find('|');
        const std::string family = key.substr(0, bar);
        const std::string feature = key.substr(bar + 1);
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        auto it = best.find(family);
        if (it == best.end() || mean < it->second.second) best[family] = {feature, mean};
    }
    for (const auto& [family, entry] : best) table.best_feature[family] = entry.first;
    return table;
}

} // namespace romerr
