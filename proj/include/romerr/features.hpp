#pragma once

#include <memory>
#include <string>
#include <vector>

#include "romerr/reduction.hpp"

namespace romerr {

// The 13 feature-engineering methods. The names are stable identifiers used
// in config files and dataset manifests.
enum class FeatureKind {
    Params,
    ParamsTime,
    ResNorm,
    ParamsResNorm,
    ParamsResNormTime,
    ParamsResidual,
    ParamsResidualTime,
    ParamsResPca,
    ParamsResPcaTime,
    ParamsGappyPca,
    ParamsGappyPcaTime,
    ParamsSampledRes,
    ParamsSampledResTime,
};

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);
std::vector<FeatureKind> all_feature_kinds();

bool includes_time(FeatureKind kind);
bool needs_residual(FeatureKind kind);      // any residual information at all
bool needs_full_residual(FeatureKind kind); // all N entries
bool needs_sampled_residual(FeatureKind kind);
bool needs_pca(FeatureKind kind);
bool needs_sampling(FeatureKind kind);

struct FeatureSpec {
    FeatureKind kind = FeatureKind::Params;
    int n_params = 0;
    int state_dim = 0; // N, for the full-residual kinds
    std::shared_ptr<const ResidualPCA> pca;
    std::shared_ptr<const SamplingMatrix> sampling;

    int dimension() const;
    void validate() const;
};

// Assembles the feature vector for one coarse time instance. Full-residual
// kinds read `residual` (length N); sampled kinds read only the n_s entries
// in `sampled_residual`, in sampling order.
Vector extract_features(const FeatureSpec& spec, const ParamVector& mu, double t,
                        const Vector* residual = nullptr,
                        const Vector* sampled_residual = nullptr);

// Componentwise statistics fitted on the training split. Population (1/N)
// variance; zero-variance components are stored with std 1 so they pass
// through unchanged.
struct Standardizer {
    Vector feature_mean;
    Vector feature_std;
    Vector response_mean; // length 1 for the scalar responses used here
    Vector response_std;
};

enum class Side { Feature, Response };
enum class Direction { Forward, Inverse };

Standardizer fit_standardizer(const std::vector<Vector>& training_features,
                              const std::vector<Vector>& training_responses);

Vector standardize(const Standardizer& s, const Vector& v, Direction dir, Side side);

double standardize_response(const Standardizer& s, double y, Direction dir);

} // namespace romerr
