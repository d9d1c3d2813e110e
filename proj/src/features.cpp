#include "romerr/features.hpp"

#include <array>
#include <cmath>

#include "romerr/errors.hpp"

namespace romerr {

namespace {

struct KindInfo {
    FeatureKind kind;
    const char* name;
};

constexpr std::array<KindInfo, 13> kKinds = {{
    {FeatureKind::Params, "params"},
    {FeatureKind::ParamsTime, "params+time"},
    {FeatureKind::ResNorm, "resnorm"},
    {FeatureKind::ParamsResNorm, "params+resnorm"},
    {FeatureKind::ParamsResNormTime, "params+resnorm+time"},
    {FeatureKind::ParamsResidual, "params+residual"},
    {FeatureKind::ParamsResidualTime, "params+residual+time"},
    {FeatureKind::ParamsResPca, "params+res-PCA"},
    {FeatureKind::ParamsResPcaTime, "params+res-PCA+time"},
    {FeatureKind::ParamsGappyPca, "params+gappy-PCA"},
    {FeatureKind::ParamsGappyPcaTime, "params+gappy-PCA+time"},
    {FeatureKind::ParamsSampledRes, "params+sampled-res"},
    {FeatureKind::ParamsSampledResTime, "params+sampled-res+time"},
}};

} // namespace

std::string to_string(FeatureKind kind) {
    for (const auto& info : kKinds)
        if (info.kind == kind) return info.name;
    throw validation_error("unknown feature kind");
}

FeatureKind feature_kind_from_string(const std::string& name) {
    for (const auto& info : kKinds)
        if (name == info.name) return info.kind;
    throw validation_error("unknown feature kind '" + name + "'");
}

std::vector<FeatureKind> all_feature_kinds() {
    std::vector<FeatureKind> kinds;
    for (const auto& info : kKinds) kinds.push_back(info.kind);
    return kinds;
}

bool includes_time(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::ParamsTime:
        case FeatureKind::ParamsResNormTime:
        case FeatureKind::ParamsResidualTime:
        case FeatureKind::ParamsResPcaTime:
        case FeatureKind::ParamsGappyPcaTime:
        case FeatureKind::ParamsSampledResTime:
            return true;
        default:
            return false;
    }
}

bool needs_full_residual(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::ResNorm:
        case FeatureKind::ParamsResNorm:
        case FeatureKind::ParamsResNormTime:
        case FeatureKind::ParamsResidual:
        case FeatureKind::ParamsResidualTime:
        case FeatureKind::ParamsResPca:
        case FeatureKind::ParamsResPcaTime:
            return true;
        default:
            return false;
    }
}

bool needs_sampled_residual(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::ParamsGappyPca:
        case FeatureKind::ParamsGappyPcaTime:
        case FeatureKind::ParamsSampledRes:
        case FeatureKind::ParamsSampledResTime:
            return true;
        default:
            return false;
    }
}

bool needs_residual(FeatureKind kind) {
    return needs_full_residual(kind) || needs_sampled_residual(kind);
}

bool needs_pca(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::ParamsResPca:
        case FeatureKind::ParamsResPcaTime:
        case FeatureKind::ParamsGappyPca:
        case FeatureKind::ParamsGappyPcaTime:
            return true;
        default:
            return false;
    }
}

bool needs_sampling(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::ParamsGappyPca:
        case FeatureKind::ParamsGappyPcaTime:
        case FeatureKind::ParamsSampledRes:
        case FeatureKind::ParamsSampledResTime:
            return true;
        default:
            return false;
    }
}

void FeatureSpec::validate() const {
    if (n_params < 1) throw validation_error("feature spec needs n_params >= 1");
    if (needs_pca(kind) && !pca)
        throw validation_error("feature kind " + to_string(kind) + " requires a residual PCA");
    if (!needs_pca(kind) && pca)
        throw validation_error("feature kind " + to_string(kind) + " must not carry a residual PCA");
    if (needs_sampling(kind) && !sampling)
        throw validation_error("feature kind " + to_string(kind) + " requires a sampling matrix");
    if (!needs_sampling(kind) && sampling)
        throw validation_error("feature kind " + to_string(kind) + " must not carry a sampling matrix");
    if (needs_full_residual(kind) && state_dim < 1)
        throw validation_error("feature kind " + to_string(kind) + " requires the state dimension");
    if (needs_pca(kind) && needs_sampling(kind) && sampling->n_s() < pca->n_r())
        throw validation_error("gappy features need n_s >= n_r");
}

int FeatureSpec::dimension() const {
    const int time = includes_time(kind) ? 1 : 0;
    switch (kind) {
        case FeatureKind::Params:
        case FeatureKind::ParamsTime:
            return n_params + time;
        case FeatureKind::ResNorm:
            return 1;
        case FeatureKind::ParamsResNorm:
        case FeatureKind::ParamsResNormTime:
            return n_params + 1 + time;
        case FeatureKind::ParamsResidual:
        case FeatureKind::ParamsResidualTime:
            return n_params + state_dim + time;
        case FeatureKind::ParamsResPca:
        case FeatureKind::ParamsResPcaTime:
            return n_params + pca->n_r() + time;
        case FeatureKind::ParamsGappyPca:
        case FeatureKind::ParamsGappyPcaTime:
            return n_params + pca->n_r() + time;
        case FeatureKind::ParamsSampledRes:
        case FeatureKind::ParamsSampledResTime:
            return n_params + sampling->n_s() + time;
    }
    throw validation_error("unknown feature kind");
}

Vector extract_features(const FeatureSpec& spec, const ParamVector& mu, double t,
                        const Vector* residual, const Vector* sampled_residual) {
    spec.validate();
    if (mu.size() != spec.n_params) throw shape_error("parameter count mismatch in features");
    if (needs_full_residual(spec.kind) && residual == nullptr)
        throw validation_error("feature kind " + to_string(spec.kind) + " requires the full residual");
    if (needs_sampled_residual(spec.kind) && sampled_residual == nullptr)
        throw validation_error("feature kind " + to_string(spec.kind) +
                               " requires the sampled residual entries");
    if (residual && needs_full_residual(spec.kind) && residual->size() != spec.state_dim)
        throw shape_error("residual length mismatch in features");

    Vector out(spec.dimension());
    int at = 0;
    if (spec.kind != FeatureKind::ResNorm) {
        out.head(mu.size()) = mu;
        at = static_cast<int>(mu.size());
    }

    switch (spec.kind) {
        case FeatureKind::Params:
        case FeatureKind::ParamsTime:
            break;
        case FeatureKind::ResNorm:
        case FeatureKind::ParamsResNorm:
        case FeatureKind::ParamsResNormTime:
            out[at++] = residual->norm();
            break;
        case FeatureKind::ParamsResidual:
        case FeatureKind::ParamsResidualTime:
            out.segment(at, residual->size()) = *residual;
            at += static_cast<int>(residual->size());
            break;
        case FeatureKind::ParamsResPca:
        case FeatureKind::ParamsResPcaTime: {
            const Vector coeffs = pca_project(*spec.pca, *residual);
            out.segment(at, coeffs.size()) = coeffs;
            at += static_cast<int>(coeffs.size());
            break;
        }
        case FeatureKind::ParamsGappyPca:
        case FeatureKind::ParamsGappyPcaTime: {
            const Vector sampled_mean = sample_entries(spec.pca->mean, *spec.sampling);
            const Vector coeffs =
                gappy_reconstruct(*spec.pca, *spec.sampling, *sampled_residual, sampled_mean);
            out.segment(at, coeffs.size()) = coeffs;
            at += static_cast<int>(coeffs.size());
            break;
        }
        case FeatureKind::ParamsSampledRes:
        case FeatureKind::ParamsSampledResTime:
            if (sampled_residual->size() != spec.sampling->n_s())
                throw shape_error("sampled residual length mismatch in features");
            out.segment(at, sampled_residual->size()) = *sampled_residual;
            at += static_cast<int>(sampled_residual->size());
            break;
    }

    if (includes_time(spec.kind)) out[at++] = t;
    if (at != out.size()) throw shape_error("internal feature assembly length error");
    if (!out.allFinite()) throw numeric_error("non-finite feature entries");
    return out;
}

Standardizer fit_standardizer(const std::vector<Vector>& training_features,
                              const std::vector<Vector>& training_responses) {
    if (training_features.empty() || training_responses.empty())
        throw validation_error("standardizer requires a nonempty training set");

    auto fit = [](const std::vector<Vector>& values, Vector& mean, Vector& stddev) {
        const int dim = static_cast<int>(values.front().size());
        mean = Vector::Zero(dim);
        for (const auto& v : values) {
            if (v.size() != dim) throw shape_error("inconsistent dimensions in standardizer fit");
            mean += v;
        }
        mean /= static_cast<double>(values.size());
        Vector var = Vector::Zero(dim);
        for (const auto& v : values) var += (v - mean).cwiseAbs2();
        var /= static_cast<double>(values.size());
        stddev = var.cwiseSqrt();
        for (int i = 0; i < dim; ++i)
            if (stddev[i] == 0.0) stddev[i] = 1.0;
    };

    Standardizer s;
    fit(training_features, s.feature_mean, s.feature_std);
    fit(training_responses, s.response_mean, s.response_std);
    return s;
}

Vector standardize(const Standardizer& s, const Vector& v, Direction dir, Side side) {
    const Vector& mean = side == Side::Feature ? s.feature_mean : s.response_mean;
    const Vector& stddev = side == Side::Feature ? s.feature_std : s.response_std;
    if (v.size() != mean.size()) throw shape_error("standardizer dimension mismatch");
    if (dir == Direction::Forward) return (v - mean).cwiseQuotient(stddev);
    return v.cwiseProduct(stddev) + mean;
}

double standardize_response(const Standardizer& s, double y, Direction dir) {
    Vector v(1);
    v[0] = y;
    return standardize(s, v, dir, Side::Response)[0];
}

} // namespace romerr
