#pragma once

#include <vector>

#include "romerr/dynsys.hpp"
#include "romerr/integrator.hpp"

namespace romerr {

enum class ReferenceRule { InitialState, Zero };

// Orthonormal trial basis Phi plus the affine reference state.
struct PODBasis {
    Matrix columns;   // N x K
    Vector reference; // x_ref
    int K = 0;
};

// Principal components of the (mean-centered) residual training set.
struct ResidualPCA {
    Matrix basis;          // N x n_r, orthonormal
    Vector mean;           // training-set mean residual
    Vector singular_values; // nonincreasing, of the centered snapshot matrix

    int n_r() const { return static_cast<int>(basis.cols()); }
};

// Ordered row indices (zero-based) selected by q-sampling.
struct SamplingMatrix {
    std::vector<int> rows;

    int n_s() const { return static_cast<int>(rows.size()); }
};

// Collects snapshots x^{j*skip} - x_ref from each trajectory, takes the thin
// SVD and keeps the first K left singular vectors.
PODBasis compute_pod(const std::vector<Trajectory>& snapshot_trajectories,
                     ReferenceRule x_ref_rule, int skip, int K);

// smallest n with sum_{i<=n} sigma_i^2 / sum sigma_i^2 >= energy
int energy_truncate(const Vector& singular_values, double energy);

// Galerkin projection onto the affine subspace x_ref + range(Phi); the
// reduced system evolves the generalized coordinates.
SystemSpec galerkin_reduce(const SystemSpec& system, const PODBasis& basis);

// Mean-centers the residual snapshot columns, takes the SVD and truncates to
// the given statistical energy fraction.
ResidualPCA build_residual_pca(const Matrix& residual_snapshots, double energy);

// Column-pivoted QR of basis^T; returns the first n_s pivot indices in pivot
// order.
SamplingMatrix qsample_select(const ResidualPCA& pca, int n_s);

// basis^T (r - mean)
Vector pca_project(const ResidualPCA& pca, const Vector& r);

// Least-squares gappy reconstruction [P Phi_r]^+ (sampled - sampled_mean).
Vector gappy_reconstruct(const ResidualPCA& pca, const SamplingMatrix& P,
                         const Vector& sampled, const Vector& sampled_mean);

Vector sample_entries(const Vector& full, const SamplingMatrix& P);

} // namespace romerr
