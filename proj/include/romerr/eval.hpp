#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "romerr/integrator.hpp"

namespace romerr {

// Constants of the a-posteriori normed state error bound: hbar = |alpha_0| -
// |beta_0| kappa dt and gamma_j = (|alpha_j| + |beta_j| kappa dt) / hbar,
// valid under the time-step restriction dt < |alpha_0| / (|beta_0| kappa).
struct BoundParams {
    double kappa = 0.0;
    MultistepScheme scheme;
    double dt = 0.0;

    double hbar() const;
    Vector gammas() const;
    void validate() const; // throws when the time-step restriction fails
};

// fraction of variance unexplained, 1 - r^2
double fvu(const std::vector<double>& truth, const std::vector<double>& predictions);

// bound^n = (1/hbar) ||r^n|| + sum_{j=1..k(n)} gamma_j bound^{n-j}, seeded by
// the exact initial errors; residual_norms[i] is ||r^{i+1}||. Returns bounds
// for n = 0..N_t (entry 0 is the seed).
std::vector<double> error_bound_sequence(const std::vector<double>& residual_norms,
                                         const std::vector<double>& initial_errors,
                                         const BoundParams& params);

// spectral norm by power iteration on A^T A
double spectral_norm(const SpMat& a, double tol = 1e-8, int max_iter = 10000);

struct ReportKey {
    std::string family;
    std::string feature_kind;
    int train_size = 0;

    bool operator<(const ReportKey& o) const {
        return std::tie(feature_kind, train_size, family) <
               std::tie(o.feature_kind, o.train_size, o.family);
    }
};

struct ReportTable {
    std::vector<std::pair<ReportKey, double>> rows;      // sorted, fvu per cell
    std::map<std::string, double> lowest_fvu_percentage; // per family; ties share credit
    std::map<std::string, std::string> best_feature;     // per family, by mean fvu
};

// Builds the machine-readable grid plus the lowest-FVU tally used in the
// summary tables. A "case" is one (feature kind, train size) pair; ties get
// fractional shared credit so the percentages sum to 100.
ReportTable report_grid(const std::map<ReportKey, double>& results);

} // namespace romerr
