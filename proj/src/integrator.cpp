#include "romerr/integrator.hpp"

#include <Eigen/SparseLU>

#include "romerr/errors.hpp"

namespace romerr {

MultistepScheme MultistepScheme::implicit_euler() {
    MultistepScheme s;
    s.alphas = Vector(2);
    s.betas = Vector(2);
    s.alphas << 1.0, -1.0;
    s.betas << 1.0, 0.0;
    return s;
}

MultistepScheme MultistepScheme::crank_nicolson() {
    MultistepScheme s;
    s.alphas = Vector(2);
    s.betas = Vector(2);
    s.alphas << 1.0, -1.0;
    s.betas << 0.5, 0.5;
    return s;
}

MultistepScheme MultistepScheme::from_name(const std::string& name) {
    if (name == "implicit-euler") return implicit_euler();
    if (name == "crank-nicolson") return crank_nicolson();
    throw validation_error("unknown multistep scheme '" + name +
                           "' (known: implicit-euler, crank-nicolson)");
}

std::string MultistepScheme::name() const {
    if (steps() == 1) {
        if (betas[0] == 1.0 && betas[1] == 0.0) return "implicit-euler";
        if (betas[0] == 0.5 && betas[1] == 0.5) return "crank-nicolson";
    }
    return "custom";
}

static void check_scheme(const MultistepScheme& scheme) {
    if (scheme.alphas.size() != scheme.betas.size() || scheme.alphas.size() < 2)
        throw validation_error("multistep scheme needs matching alpha/beta of length k+1 >= 2");
    if (scheme.alphas[0] == 0.0)
        throw validation_error("multistep scheme requires alpha_0 != 0");
}

Vector discrete_residual(const SystemSpec& system, const MultistepScheme& scheme,
                         const Vector& w, std::span<const Vector> history, int n,
                         const ParamVector& mu, double dt) {
    check_scheme(scheme);
    if (w.size() != system.dim) throw shape_error("trial state length does not match system dim");
    const int kn = std::min<int>(n, scheme.steps());
    if (n >= 1 && history.empty())
        throw validation_error("discrete residual at n >= 1 requires past states");
    if (static_cast<int>(history.size()) < kn)
        throw validation_error("history shorter than the truncated stencil");

    const double tn = n * dt;
    Vector r = scheme.alphas[0] * w - dt * scheme.betas[0] * system.velocity(w, tn, mu);
    for (int i = 1; i <= kn; ++i) {
        const Vector& past = history[i - 1];
        if (past.size() != system.dim) throw shape_error("history state length mismatch");
        r += scheme.alphas[i] * past;
        if (scheme.betas[i] != 0.0)
            r -= dt * scheme.betas[i] * system.velocity(past, (n - i) * dt, mu);
    }
    return r;
}

NewtonResult newton_step_solve(const SystemSpec& system, const MultistepScheme& scheme,
                               std::span<const Vector> history, int n, const ParamVector& mu,
                               double dt, const NewtonOptions& opts) {
    if (opts.tol <= 0.0) throw validation_error("newton tolerance must be positive");
    if (history.empty()) throw validation_error("newton step requires at least the previous state");

    const double tn = n * dt;
    SpMat eye(system.dim, system.dim);
    eye.setIdentity();

    NewtonResult res;
    res.state = history[0];
    Vector r = discrete_residual(system, scheme, res.state, history, n, mu, dt);
    res.residual_norm = r.norm();
    for (int it = 0; it < opts.max_iter; ++it) {
        if (res.residual_norm <= opts.tol) return res;
        SpMat jac = scheme.alphas[0] * eye -
                    dt * scheme.betas[0] * system.jacobian(res.state, tn, mu);
        Eigen::SparseLU<SpMat> lu(jac);
        if (lu.info() != Eigen::Success)
            throw solver_error("newton linear solve failed at time index " + std::to_string(n),
                               res.residual_norm);
        res.state -= lu.solve(r);
        ++res.iterations;
        r = discrete_residual(system, scheme, res.state, history, n, mu, dt);
        res.residual_norm = r.norm();
    }
    if (res.residual_norm <= opts.tol) return res;
    throw solver_error("newton failed to converge at time index " + std::to_string(n) +
                           " (residual " + std::to_string(res.residual_norm) + ")",
                       res.residual_norm);
}

Trajectory integrate(const SystemSpec& system, const MultistepScheme& scheme,
                     const TimeGrid& grid, const ParamVector& mu, const NewtonOptions& opts) {
    check_scheme(scheme);
    if (grid.dt <= 0.0 || grid.n_steps < 1)
        throw validation_error("time grid needs dt > 0 and n_steps >= 1");

    Trajectory traj;
    traj.grid = grid;
    traj.mu = mu;
    traj.states.reserve(grid.n_steps + 1);
    traj.states.push_back(system.initial_condition(mu));

    const int k = scheme.steps();
    std::vector<Vector> history;
    for (int n = 1; n <= grid.n_steps; ++n) {
        const int kn = std::min(n, k);
        history.assign(kn, Vector());
        for (int i = 1; i <= kn; ++i) history[i - 1] = traj.states[n - i];
        traj.states.push_back(
            newton_step_solve(system, scheme, history, n, mu, grid.dt, opts).state);
    }
    return traj;
}

} // namespace romerr
