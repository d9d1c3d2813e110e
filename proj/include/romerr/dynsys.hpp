#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <string>

namespace romerr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;

// Dimensionless model parameters mu.
using ParamVector = Eigen::VectorXd;

// Axis-aligned box in parameter space.
struct Box {
    Vector lo;
    Vector hi;

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const ParamVector& mu, double tol = 0.0) const {
        if (mu.size() != lo.size()) return false;
        for (int i = 0; i < mu.size(); ++i)
            if (mu[i] < lo[i] - tol || mu[i] > hi[i] + tol) return false;
        return true;
    }
};

// A parameterized dynamical system dx/dt = f(x, t; mu) with initial condition
// x0(mu) and a scalar quantity of interest g(x, t; mu). Immutable after
// construction; velocity/jacobian evaluation is reentrant.
struct SystemSpec {
    int dim = 0;
    Box domain;
    std::function<Vector(const Vector&, double, const ParamVector&)> velocity;
    std::function<SpMat(const Vector&, double, const ParamVector&)> jacobian;
    std::function<Vector(const ParamVector&)> initial_condition;
    std::function<double(const Vector&, double, const ParamVector&)> qoi;
    std::string name;
};

// Sparse interpolation from a coarse state space into the full space.
// Every row sums to one so constants are reproduced exactly.
struct ProlongationOp {
    int coarse_dim = 0;
    int fine_dim = 0;
    SpMat weights; // fine_dim x coarse_dim
};

// Upwind/central finite-difference discretization of the 1D
// advection-diffusion equation on [0,2] with zero Dirichlet boundaries.
// N = n_cells - 1 interior unknowns; QoI is the domain-midpoint value.
SystemSpec build_advection_diffusion(int n_cells);

// Finite-volume discretization of 1D inviscid Burgers on [0,100] with an
// exponential source, upwind flux, inflow value mu3 at the left face and
// zero-gradient extrapolation at the right face. Uniform initial state mu4.
SystemSpec build_burgers_fom(double cell_width);

// Linear interpolation of coarse finite-volume cell centers onto the fine
// grid; endpoints extrapolate from the two nearest coarse cells so affine
// data is reproduced exactly.
ProlongationOp build_linear_prolongation(double fine_width, double coarse_width, double domain_length);

Vector prolong(const ProlongationOp& op, const Vector& coarse_state, const ParamVector& mu);

double qoi_eval(const SystemSpec& system, const Vector& state, double t, const ParamVector& mu);

// The constant system matrix of a linear system (jacobian at any state).
SpMat linear_system_matrix(const SystemSpec& system, const ParamVector& mu);

} // namespace romerr
