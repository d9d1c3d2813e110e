#pragma once

#include <string>
#include <vector>

namespace romerr {

enum class NoiseKind { Gaussian, Laplacian, AR1 };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

// Stochastic model of the regression error: stationary Gaussian(sigma2),
// stationary Laplacian(b), or AR1(c, sigma2) with the variance recursion
// Var_1 = sigma2, Var_n = c^2 Var_{n-1} + sigma2.
struct NoiseModel {
    NoiseKind kind = NoiseKind::Gaussian;
    double sigma2 = 0.0; // Gaussian and AR1
    double b = 0.0;      // Laplacian diversity
    double c = 0.0;      // AR1 coefficient
    bool degenerate = false;
};

// MLE fits. Degenerate all-zero fits are floored at 1e-30 instead of
// rejected so pipelines on perfect surrogates still complete.
NoiseModel fit_gaussian(const std::vector<double>& regression_errors);
NoiseModel fit_laplacian(const std::vector<double>& regression_errors);

// Conditional MLE over error sequences, one per parameter instance, with the
// convention e^{tau(0)} = 0 for the first lag term.
NoiseModel fit_ar1(const std::vector<std::vector<double>>& error_sequences);

// Per-coarse-index scale (standard deviation, or Laplace scale b).
std::vector<double> noise_scale_sequence(const NoiseModel& model, int horizon);

// Fraction of test errors inside the central probability-C interval of the
// fitted per-index distribution.
double validation_frequency(const NoiseModel& model,
                            const std::vector<std::vector<double>>& test_error_sequences,
                            double coverage);

enum class ReferenceCdf { StandardNormal, StandardLaplace };

// Two-sided Kolmogorov-Smirnov statistic of the standardized errors against
// the reference CDF.
double ks_statistic(std::vector<double> standardized_errors, ReferenceCdf ref);

// Divides each error by its per-index scale (AR1) or the constant scale.
std::vector<double> standardize_errors(const NoiseModel& model,
                                       const std::vector<std::vector<double>>& error_sequences);

// Density of an error pooled uniformly over the first `horizon` coarse
// indices (a mixture over the per-index scales for AR1, the stationary
// density otherwise).
double pooled_density(const NoiseModel& model, double x, int horizon);

double normal_cdf(double x);
double normal_quantile(double p);
double laplace_cdf(double x);

} // namespace romerr
