#include "romerr/noise.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "romerr/errors.hpp"

namespace romerr {

namespace {
constexpr double kDegenerateFloor = 1e-30;
}

std::string to_string(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::Gaussian: return "gaussian";
        case NoiseKind::Laplacian: return "laplacian";
        case NoiseKind::AR1: return "ar1";
    }
    throw validation_error("unknown noise kind");
}

NoiseKind noise_kind_from_string(const std::string& name) {
    if (name == "gaussian") return NoiseKind::Gaussian;
    if (name == "laplacian") return NoiseKind::Laplacian;
    if (name == "ar1") return NoiseKind::AR1;
    throw validation_error("unknown noise kind '" + name + "'");
}

NoiseModel fit_gaussian(const std::vector<double>& regression_errors) {
    if (regression_errors.empty()) throw validation_error("gaussian fit on an empty error set");
    double sum = 0.0;
    for (double e : regression_errors) sum += e * e;
    NoiseModel m;
    m.kind = NoiseKind::Gaussian;
    m.sigma2 = sum / static_cast<double>(regression_errors.size());
    if (m.sigma2 <= 0.0) {
        m.sigma2 = kDegenerateFloor;
        m.degenerate = true;
    }
    return m;
}

NoiseModel fit_laplacian(const std::vector<double>& regression_errors) {
    if (regression_errors.empty()) throw validation_error("laplacian fit on an empty error set");
    double sum = 0.0;
    for (double e : regression_errors) sum += std::fabs(e);
    NoiseModel m;
    m.kind = NoiseKind::Laplacian;
    m.b = sum / static_cast<double>(regression_errors.size());
    if (m.b <= 0.0) {
        m.b = kDegenerateFloor;
        m.degenerate = true;
    }
    return m;
}

NoiseModel fit_ar1(const std::vector<std::vector<double>>& error_sequences) {
    double num = 0.0, den = 0.0;
    std::size_t count = 0;
    for (const auto& seq : error_sequences) {
        double prev = 0.0; // e^{tau(0)} = 0 by the framework's seeding
        for (double e : seq) {
            num += prev * e;
            den += prev * prev;
            prev = e;
            ++count;
        }
    }
    if (count == 0) throw validation_error("AR1 fit on an empty error set");
    if (den == 0.0) throw numeric_error("AR1 coefficient undefined: all lag terms are zero");

    NoiseModel m;
    m.kind = NoiseKind::AR1;
    m.c = num / den;
    if (std::fabs(m.c) >= 1.0)
        std::cerr << "warning: fitted AR1 coefficient |c| = " << std::fabs(m.c)
                  << " >= 1; the long-horizon noise scale is unbounded\n";

    double sq = 0.0;
    for (const auto& seq : error_sequences) {
        double prev = 0.0;
        for (double e : seq) {
            const double innovation = m.c * prev - e;
            sq += innovation * innovation;
            prev = e;
        }
    }
    m.sigma2 = sq / static_cast<double>(count);
    if (m.sigma2 <= 0.0) {
        m.sigma2 = kDegenerateFloor;
        m.degenerate = true;
    }
    return m;
}

std::vector<double> noise_scale_sequence(const NoiseModel& model, int horizon) {
    if (horizon < 0) throw validation_error("noise scale horizon must be nonnegative");
    std::vector<double> scale(horizon);
    switch (model.kind) {
        case NoiseKind::Gaussian: {
            const double s = std::sqrt(model.sigma2);
            std::fill(scale.begin(), scale.end(), s);
            break;
        }
        case NoiseKind::Laplacian:
            std::fill(scale.begin(), scale.end(), model.b);
            break;
        case NoiseKind::AR1: {
            double var = 0.0;
            for (int n = 0; n < horizon; ++n) {
                var = model.c * model.c * var + model.sigma2;
                scale[n] = std::sqrt(var);
            }
            break;
        }
    }
    return scale;
}

double validation_frequency(const NoiseModel& model,
                            const std::vector<std::vector<double>>& test_error_sequences,
                            double coverage) {
    if (coverage <= 0.0 || coverage >= 1.0)
        throw validation_error("coverage level must lie in (0, 1)");
    std::size_t total = 0;
    for (const auto& seq : test_error_sequences) total += seq.size();
    if (total == 0) throw validation_error("validation frequency on an empty test set");

    std::size_t inside = 0;
    const double z = normal_quantile(0.5 * (1.0 + coverage));
    for (const auto& seq : test_error_sequences) {
        const auto scales = noise_scale_sequence(model, static_cast<int>(seq.size()));
        for (std::size_t n = 0; n < seq.size(); ++n) {
            double half_width = 0.0;
            switch (model.kind) {
                case NoiseKind::Gaussian:
                case NoiseKind::AR1:
                    half_width = z * scales[n];
                    break;
                case NoiseKind::Laplacian:
                    half_width = model.b * std::log(1.0 / (1.0 - coverage));
                    break;
            }
            if (std::fabs(seq[n]) <= half_width) ++inside;
        }
    }
    return static_cast<double>(inside) / static_cast<double>(total);
}

std::vector<double> standardize_errors(const NoiseModel& model,
                                       const std::vector<std::vector<double>>& error_sequences) {
    std::vector<double> out;
    for (const auto& seq : error_sequences) {
        const auto scales = noise_scale_sequence(model, static_cast<int>(seq.size()));
        for (std::size_t n = 0; n < seq.size(); ++n) out.push_back(seq[n] / scales[n]);
    }
    return out;
}

double pooled_density(const NoiseModel& model, double x, int horizon) {
    if (horizon < 1) throw validation_error("density horizon must be >= 1");
    switch (model.kind) {
        case NoiseKind::Gaussian: {
            const double s2 = model.sigma2;
            return std::exp(-0.5 * x * x / s2) / std::sqrt(2.0 * M_PI * s2);
        }
        case NoiseKind::Laplacian:
            return std::exp(-std::fabs(x) / model.b) / (2.0 * model.b);
        case NoiseKind::AR1: {
            const auto scales = noise_scale_sequence(model, horizon);
            double density = 0.0;
            for (double s : scales)
                density += std::exp(-0.5 * x * x / (s * s)) / std::sqrt(2.0 * M_PI * s * s);
            return density / static_cast<double>(horizon);
        }
    }
    throw validation_error("unknown noise kind");
}

double ks_statistic(std::vector<double> standardized_errors, ReferenceCdf ref) {
    if (standardized_errors.empty()) throw validation_error("K-S statistic on an empty sample");
    std::sort(standardized_errors.begin(), standardized_errors.end());
    const double n = static_cast<double>(standardized_errors.size());
    double d = 0.0;
    for (std::size_t i = 0; i < standardized_errors.size(); ++i) {
        const double x = standardized_errors[i];
        const double cdf = ref == ReferenceCdf::StandardNormal ? normal_cdf(x) : laplace_cdf(x);
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - cdf);
        d = std::max(d, cdf - static_cast<double>(i) / n);
    }
    return d;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Acklam's rational approximation refined by one Halley step.
double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0) throw validation_error("normal quantile needs p in (0, 1)");

    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};

    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

double laplace_cdf(double x) {
    return x < 0.0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x);
}

} // namespace romerr
