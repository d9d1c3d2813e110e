#pragma once

#include <span>
#include <vector>

#include "romerr/dynsys.hpp"

namespace romerr {

// Linear multistep coefficients alpha_0..alpha_k, beta_0..beta_k.
struct MultistepScheme {
    Vector alphas;
    Vector betas;

    int steps() const { return static_cast<int>(alphas.size()) - 1; }

    static MultistepScheme implicit_euler();
    static MultistepScheme crank_nicolson();
    static MultistepScheme from_name(const std::string& name);
    std::string name() const;
};

struct TimeGrid {
    double dt = 0.0;
    int n_steps = 0;
};

struct Trajectory {
    std::vector<Vector> states; // n_steps + 1 entries
    TimeGrid grid;
    ParamVector mu;
};

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 25;
};

struct NewtonResult {
    Vector state;
    int iterations = 0;
    double residual_norm = 0.0;
};

// Discrete residual of the multistep O-Delta-E at time index n, with the
// stencil truncated to min(n, k) near the initial time. history[0] is the
// most recent past state x^{n-1}.
Vector discrete_residual(const SystemSpec& system, const MultistepScheme& scheme,
                         const Vector& w, std::span<const Vector> history, int n,
                         const ParamVector& mu, double dt);

// Newton iteration with the analytic Jacobian alpha_0*I - dt*beta_0*df/dx and
// a sparse direct solve; initial guess is the previous state.
NewtonResult newton_step_solve(const SystemSpec& system, const MultistepScheme& scheme,
                               std::span<const Vector> history, int n, const ParamVector& mu,
                               double dt, const NewtonOptions& opts = {});

Trajectory integrate(const SystemSpec& system, const MultistepScheme& scheme,
                     const TimeGrid& grid, const ParamVector& mu,
                     const NewtonOptions& opts = {});

} // namespace romerr
