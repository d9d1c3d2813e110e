#include "romerr/dynsys.hpp"

#include <cmath>
#include <vector>

#include "romerr/errors.hpp"

namespace romerr {

SystemSpec build_advection_diffusion(int n_cells) {
    if (n_cells < 3)
        throw validation_error("advection-diffusion needs at least 3 cells, got " +
                               std::to_string(n_cells));

    const int n = n_cells - 1;          // interior unknowns
    const double dx = 2.0 / n_cells;    // grid point k sits at 2k/n_cells

    SystemSpec sys;
    sys.dim = n;
    sys.name = "advection-diffusion";
    sys.domain.lo = Vector(2);
    sys.domain.hi = Vector(2);
    sys.domain.lo << -2.0, 0.1;
    sys.domain.hi << -0.1, 1.0;

    sys.velocity = [n, dx](const Vector& x, double, const ParamVector& mu) {
        if (x.size() != n) throw shape_error("state size mismatch in velocity");
        Vector f(n);
        for (int k = 0; k < n; ++k) {
            const double xm = k > 0 ? x[k - 1] : 0.0;       // ghost value 0
            const double xp = k < n - 1 ? x[k + 1] : 0.0;
            f[k] = -mu[0] * (xp - x[k]) / dx + mu[1] * (xp - 2.0 * x[k] + xm) / (dx * dx);
        }
        return f;
    };

    sys.jacobian = [n, dx](const Vector&, double, const ParamVector& mu) {
        const double a = -mu[0] / dx;
        const double d = mu[1] / (dx * dx);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(3 * n);
        for (int k = 0; k < n; ++k) {
            trip.emplace_back(k, k, -a - 2.0 * d);
            if (k > 0) trip.emplace_back(k, k - 1, d);
            if (k < n - 1) trip.emplace_back(k, k + 1, a + d);
        }
        SpMat jac(n, n);
        jac.setFromTriplets(trip.begin(), trip.end());
        return jac;
    };

    sys.initial_condition = [n, dx](const ParamVector&) {
        Vector x0(n);
        for (int k = 0; k < n; ++k) {
            const double xk = dx * (k + 1);
            x0[k] = xk * (2.0 - xk) * std::exp(2.0 * xk);
        }
        return x0;
    };

    const int qoi_index = (n + 2) / 2 - 1; // ceil((N+1)/2), zero-based
    sys.qoi = [n, qoi_index](const Vector& x, double, const ParamVector&) {
        if (x.size() != n) throw shape_error("state size mismatch in qoi");
        return x[qoi_index];
    };
    return sys;
}

SystemSpec build_burgers_fom(double cell_width) {
    if (cell_width <= 0.0)
        throw validation_error("burgers cell width must be positive");
    const double cells = 100.0 / cell_width;
    const int n = static_cast<int>(std::lround(cells));
    if (n < 1 || std::fabs(cells - n) > 1e-9)
        throw validation_error("burgers cell width must divide the domain length 100 evenly");

    const double dx = cell_width;

    SystemSpec sys;
    sys.dim = n;
    sys.name = "burgers";
    sys.domain.lo = Vector(4);
    sys.domain.hi = Vector(4);
    sys.domain.lo << 0.005, 0.005, 3.0, 0.5;
    sys.domain.hi << 0.05, 0.05, 5.0, 2.5;

    // Upwind flux u_i^2/2 at interface i+1/2; inflow flux mu3^2/2 at the left
    // face, zero-gradient extrapolation at the right face. Valid while states
    // stay positive, which holds on the declared parameter domain.
    sys.velocity = [n, dx](const Vector& u, double, const ParamVector& mu) {
        if (u.size() != n) throw shape_error("state size mismatch in velocity");
        Vector f(n);
        double flux_left = 0.5 * mu[2] * mu[2];
        for (int i = 0; i < n; ++i) {
            const double flux_right = 0.5 * u[i] * u[i];
            const double xc = dx * (i + 0.5);
            f[i] = -(flux_right - flux_left) / dx + mu[0] * std::exp(mu[1] * xc);
            flux_left = flux_right;
        }
        return f;
    };

    sys.jacobian = [n, dx](const Vector& u, double, const ParamVector&) {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(2 * n);
        for (int i = 0; i < n; ++i) {
            trip.emplace_back(i, i, -u[i] / dx);
            if (i > 0) trip.emplace_back(i, i - 1, u[i - 1] / dx);
        }
        SpMat jac(n, n);
        jac.setFromTriplets(trip.begin(), trip.end());
        return jac;
    };

    sys.initial_condition = [n](const ParamVector& mu) {
        return Vector::Constant(n, mu[3]);
    };

    // cell containing position 50
    int qoi_index = static_cast<int>(std::floor(50.0 / dx));
    if (qoi_index >= n) qoi_index = n - 1;
    sys.qoi = [n, qoi_index](const Vector& u, double, const ParamVector&) {
        if (u.size() != n) throw shape_error("state size mismatch in qoi");
        return u[qoi_index];
    };
    return sys;
}

ProlongationOp build_linear_prolongation(double fine_width, double coarse_width, double domain_length) {
    const int n_fine = static_cast<int>(std::lround(domain_length / fine_width));
    const int n_coarse = static_cast<int>(std::lround(domain_length / coarse_width));
    if (n_fine < n_coarse || n_coarse < 2)
        throw validation_error("prolongation needs fine_dim >= coarse_dim >= 2");

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * n_fine);
    for (int i = 0; i < n_fine; ++i) {
        const double x = fine_width * (i + 0.5);
        // coarse cell centers at coarse_width*(j+0.5); clamp the interval so
        // endpoints extrapolate linearly from the two nearest coarse cells
        int j = static_cast<int>(std::floor(x / coarse_width - 0.5));
        if (j < 0) j = 0;
        if (j > n_coarse - 2) j = n_coarse - 2;
        const double xl = coarse_width * (j + 0.5);
        const double theta = (x - xl) / coarse_width;
        trip.emplace_back(i, j, 1.0 - theta);
        trip.emplace_back(i, j + 1, theta);
    }

    ProlongationOp op;
    op.coarse_dim = n_coarse;
    op.fine_dim = n_fine;
    op.weights.resize(n_fine, n_coarse);
    op.weights.setFromTriplets(trip.begin(), trip.end());
    return op;
}

Vector prolong(const ProlongationOp& op, const Vector& coarse_state, const ParamVector&) {
    if (coarse_state.size() != op.coarse_dim)
        throw shape_error("coarse state length does not match prolongation operator");
    return op.weights * coarse_state;
}

double qoi_eval(const SystemSpec& system, const Vector& state, double t, const ParamVector& mu) {
    if (state.size() != system.dim) throw shape_error("state length does not match system dim");
    return system.qoi(state, t, mu);
}

SpMat linear_system_matrix(const SystemSpec& system, const ParamVector& mu) {
    return system.jacobian(Vector::Zero(system.dim), 0.0, mu);
}

} // namespace romerr
