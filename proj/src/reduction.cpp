#include "romerr/reduction.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include "romerr/errors.hpp"

namespace romerr {

PODBasis compute_pod(const std::vector<Trajectory>& snapshot_trajectories,
                     ReferenceRule x_ref_rule, int skip, int K) {
    if (snapshot_trajectories.empty())
        throw validation_error("POD requires at least one snapshot trajectory");
    if (skip < 1) throw validation_error("POD snapshot skip must be >= 1");

    const int n = static_cast<int>(snapshot_trajectories.front().states.front().size());
    int total = 0;
    for (const auto& traj : snapshot_trajectories) total += traj.grid.n_steps / skip;
    if (K < 1 || K > total)
        throw validation_error("POD basis dimension must lie in [1, snapshot count]");

    Matrix snapshots(n, total);
    Vector reference;
    int col = 0;
    for (const auto& traj : snapshot_trajectories) {
        Vector x_ref = x_ref_rule == ReferenceRule::InitialState
                           ? traj.states.front()
                           : Vector::Zero(n).eval();
        if (reference.size() == 0) reference = x_ref;
        for (int j = 1; j * skip <= traj.grid.n_steps; ++j)
            snapshots.col(col++) = traj.states[j * skip] - x_ref;
    }

    Eigen::BDCSVD<Matrix> svd(snapshots, Eigen::ComputeThinU);
    const Vector& sigma = svd.singularValues();
    if (sigma[0] <= 0.0 || sigma[K - 1] / sigma[0] < 1e-12)
        throw numeric_error("requested POD dimension exceeds the numerical rank of the snapshots");

    PODBasis basis;
    basis.columns = svd.matrixU().leftCols(K);
    basis.reference = reference;
    basis.K = K;
    return basis;
}

int energy_truncate(const Vector& singular_values, double energy) {
    if (energy <= 0.0 || energy > 1.0)
        throw validation_error("energy fraction must lie in (0, 1]");
    for (int i = 0; i < singular_values.size(); ++i) {
        if (singular_values[i] < 0.0 ||
            (i > 0 && singular_values[i] > singular_values[i - 1]))
            throw validation_error("singular values must be nonincreasing and nonnegative");
    }
    const double total = singular_values.squaredNorm();
    if (total == 0.0) throw numeric_error("all-zero singular value spectrum");

    double partial = 0.0;
    for (int i = 0; i < singular_values.size(); ++i) {
        partial += singular_values[i] * singular_values[i];
        if (partial / total >= energy) return i + 1;
    }
    return static_cast<int>(singular_values.size());
}

SystemSpec galerkin_reduce(const SystemSpec& system, const PODBasis& basis) {
    if (basis.columns.rows() != system.dim || basis.reference.size() != system.dim)
        throw shape_error("POD basis dimension does not match the system");

    const Matrix phi = basis.columns;
    const Vector x_ref = basis.reference;
    const int K = basis.K;

    SystemSpec rom;
    rom.dim = K;
    rom.domain = system.domain;
    rom.name = system.name + "-galerkin-rom";

    auto lift = [phi, x_ref](const Vector& xhat) { return (x_ref + phi * xhat).eval(); };

    const auto full_velocity = system.velocity;
    rom.velocity = [phi, lift, full_velocity](const Vector& xhat, double t, const ParamVector& mu) {
        return (phi.transpose() * full_velocity(lift(xhat), t, mu)).eval();
    };

    const auto full_jacobian = system.jacobian;
    rom.jacobian = [phi, lift, full_jacobian, K](const Vector& xhat, double t, const ParamVector& mu) {
        const Matrix reduced = phi.transpose() * (full_jacobian(lift(xhat), t, mu) * phi);
        return SpMat(reduced.sparseView());
    };

    const auto full_ic = system.initial_condition;
    rom.initial_condition = [phi, x_ref, full_ic](const ParamVector& mu) {
        return (phi.transpose() * (full_ic(mu) - x_ref)).eval();
    };

    const auto full_qoi = system.qoi;
    rom.qoi = [lift, full_qoi](const Vector& xhat, double t, const ParamVector& mu) {
        return full_qoi(lift(xhat), t, mu);
    };
    return rom;
}

ResidualPCA build_residual_pca(const Matrix& residual_snapshots, double energy) {
    if (residual_snapshots.cols() < 1)
        throw validation_error("residual PCA requires at least one snapshot");

    ResidualPCA pca;
    pca.mean = residual_snapshots.rowwise().mean();
    Matrix centered = residual_snapshots.colwise() - pca.mean;
    Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU);
    pca.singular_values = svd.singularValues();
    const int n_r = energy_truncate(pca.singular_values, energy);
    pca.basis = svd.matrixU().leftCols(n_r);
    return pca;
}

SamplingMatrix qsample_select(const ResidualPCA& pca, int n_s) {
    const int n = static_cast<int>(pca.basis.rows());
    if (n_s < pca.n_r())
        throw validation_error("q-sampling needs n_s >= n_r");
    if (n_s > n) throw validation_error("q-sampling needs n_s <= N");

    Eigen::ColPivHouseholderQR<Matrix> qr(pca.basis.transpose());
    const auto& perm = qr.colsPermutation().indices();

    SamplingMatrix P;
    P.rows.assign(perm.data(), perm.data() + n_s);
    return P;
}

Vector pca_project(const ResidualPCA& pca, const Vector& r) {
    if (r.size() != pca.basis.rows()) throw shape_error("residual length mismatch in pca_project");
    return pca.basis.transpose() * (r - pca.mean);
}

Vector gappy_reconstruct(const ResidualPCA& pca, const SamplingMatrix& P,
                         const Vector& sampled, const Vector& sampled_mean) {
    const int n_s = P.n_s();
    if (sampled.size() != n_s || sampled_mean.size() != n_s)
        throw shape_error("sampled residual length does not match the sampling matrix");

    Matrix sampled_basis(n_s, pca.n_r());
    for (int i = 0; i < n_s; ++i) sampled_basis.row(i) = pca.basis.row(P.rows[i]);

    Eigen::JacobiSVD<Matrix> svd(sampled_basis);
    const Vector& sigma = svd.singularValues();
    if (sigma[0] <= 0.0 || sigma[sigma.size() - 1] < 1e-10 * sigma[0])
        throw numeric_error("sampled basis P*Phi_r is rank deficient");

    return sampled_basis.colPivHouseholderQr().solve(sampled - sampled_mean);
}

Vector sample_entries(const Vector& full, const SamplingMatrix& P) {
    Vector out(P.n_s());
    for (int i = 0; i < P.n_s(); ++i) {
        if (P.rows[i] < 0 || P.rows[i] >= full.size())
            throw shape_error("sampling index out of range");
        out[i] = full[P.rows[i]];
    }
    return out;
}

} // namespace romerr
