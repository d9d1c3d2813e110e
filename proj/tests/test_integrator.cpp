#include <doctest.h>

#include <cmath>

#include "romerr/dynsys.hpp"
#include "romerr/errors.hpp"
#include "romerr/integrator.hpp"
#include "romerr/rng.hpp"

using namespace romerr;

namespace {

ParamVector make_mu(std::initializer_list<double> values) {
    ParamVector mu(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double v : values) mu[i++] = v;
    return mu;
}

// scalar ODE dx/dt = lambda x with analytic jacobian
SystemSpec scalar_decay(double lambda) {
    SystemSpec sys;
    sys.dim = 1;
    sys.domain.lo = Vector::Zero(1);
    sys.domain.hi = Vector::Zero(1);
    sys.velocity = [lambda](const Vector& x, double, const ParamVector&) {
        return (lambda * x).eval();
    };
    sys.jacobian = [lambda](const Vector&, double, const ParamVector&) {
        SpMat j(1, 1);
        j.insert(0, 0) = lambda;
        return j;
    };
    sys.initial_condition = [](const ParamVector&) { return Vector::Ones(1); };
    sys.qoi = [](const Vector& x, double, const ParamVector&) { return x[0]; };
    return sys;
}

} // namespace

TEST_CASE("discrete residual") {
    const auto mu = make_mu({0.0});

    SUBCASE("crank-nicolson amplification factor zeroes the residual") {
        const SystemSpec sys = scalar_decay(-1.0);
        const auto cn = MultistepScheme::crank_nicolson();
        const double dt = 0.1;
        Vector prev = Vector::Ones(1);
        Vector w(1);
        w << (1.0 - 0.05) / (1.0 + 0.05);
        const std::vector<Vector> history = {prev};
        const Vector r = discrete_residual(sys, cn, w, history, 1, mu, dt);
        CHECK(std::fabs(r[0]) <= 1e-14);
    }

    SUBCASE("implicit euler with zero velocity: alpha terms only") {
        SystemSpec sys = scalar_decay(0.0);
        const auto ie = MultistepScheme::implicit_euler();
        Vector prev(1), w(1);
        prev << 2.0;
        w << 5.0;
        const std::vector<Vector> history = {prev};
        const Vector r = discrete_residual(sys, ie, w, history, 3, mu, 0.1);
        CHECK(r[0] == doctest::Approx(3.0)); // 1*5 - 1*2
    }

    SUBCASE("missing history at n >= 1 is an error") {
        const SystemSpec sys = scalar_decay(-1.0);
        CHECK_THROWS_AS(discrete_residual(sys, MultistepScheme::implicit_euler(), Vector::Ones(1),
                                          {}, 1, mu, 0.1),
                        validation_error);
    }
}

TEST_CASE("newton step") {
    const auto mu_ad = make_mu({-1.0, 0.5});

    SUBCASE("linear system converges in one iteration") {
        const SystemSpec sys = build_advection_diffusion(21);
        const auto cn = MultistepScheme::crank_nicolson();
        const std::vector<Vector> history = {sys.initial_condition(mu_ad)};
        const NewtonResult res = newton_step_solve(sys, cn, history, 1, mu_ad, 1e-3);
        CHECK(res.iterations == 1);
        CHECK(res.residual_norm <= 1e-10);
    }

    SUBCASE("burgers N=3 against a sequential bisection oracle") {
        const SystemSpec sys = build_burgers_fom(100.0 / 3.0);
        const auto ie = MultistepScheme::implicit_euler();
        const auto mu = make_mu({0.02, 0.02, 4.0, 1.5});
        const double dt = 0.5;
        const Vector prev = sys.initial_condition(mu);
        const std::vector<Vector> history = {prev};
        const NewtonResult res = newton_step_solve(sys, ie, history, 1, mu, dt);

        // the upwind residual is lower triangular: solve cell by cell by bisection
        Vector oracle(3);
        auto cell_residual = [&](int i, double ui) {
            Vector w = prev;
            for (int j = 0; j < i; ++j) w[j] = oracle[j];
            w[i] = ui;
            return discrete_residual(sys, ie, w, history, 1, mu, dt)[i];
        };
        for (int i = 0; i < 3; ++i) {
            double lo = 0.0, hi = 10.0;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (cell_residual(i, lo) * cell_residual(i, mid) <= 0.0)
                    hi = mid;
                else
                    lo = mid;
            }
            oracle[i] = 0.5 * (lo + hi);
        }
        CHECK((res.state - oracle).cwiseAbs().maxCoeff() <= 1e-9);
    }

    SUBCASE("zero iteration budget on a nonzero residual diverges") {
        const SystemSpec sys = scalar_decay(-1.0);
        NewtonOptions opts;
        opts.max_iter = 0;
        const std::vector<Vector> history = {Vector::Ones(1)};
        CHECK_THROWS_AS(newton_step_solve(sys, MultistepScheme::implicit_euler(), history, 1,
                                          make_mu({0.0}), 0.1, opts),
                        solver_error);
    }
}

TEST_CASE("integrate") {
    const auto mu = make_mu({0.0});

    SUBCASE("crank-nicolson matches the analytic amplification recursion") {
        const SystemSpec sys = scalar_decay(-1.0);
        const Trajectory traj =
            integrate(sys, MultistepScheme::crank_nicolson(), {0.1, 10}, mu);
        const double expected = std::pow(0.95 / 1.05, 10);
        CHECK(std::fabs(traj.states[10][0] - expected) <= 1e-12);
    }

    SUBCASE("zero velocity keeps the trajectory constant") {
        const SystemSpec sys = scalar_decay(0.0);
        const Trajectory traj = integrate(sys, MultistepScheme::implicit_euler(), {0.5, 20}, mu);
        for (const auto& state : traj.states) CHECK(state[0] == 1.0);
    }

    SUBCASE("AD benchmark runs with bounded QoI trace") {
        const SystemSpec sys = build_advection_diffusion(101);
        const auto mu_ad = make_mu({-1.0, 0.5});
        const Trajectory traj =
            integrate(sys, MultistepScheme::crank_nicolson(), {3e-4, 1000}, mu_ad);
        CHECK(traj.states.size() == 1001);
        for (int n = 0; n <= 1000; ++n) {
            const double q = qoi_eval(sys, traj.states[n], n * 3e-4, mu_ad);
            CHECK(std::isfinite(q));
            CHECK(std::fabs(q) <= 20.0);
        }
    }

    SUBCASE("post-hoc residual of every accepted step is below tolerance") {
        const SystemSpec sys = build_burgers_fom(2.0);
        const auto mu_b = make_mu({0.03, 0.04, 3.5, 1.0});
        const auto ie = MultistepScheme::implicit_euler();
        const Trajectory traj = integrate(sys, ie, {0.05, 50}, mu_b);
        for (int n = 1; n <= 50; ++n) {
            const std::vector<Vector> history = {traj.states[n - 1]};
            const Vector r = discrete_residual(sys, ie, traj.states[n], history, n, mu_b, 0.05);
            CHECK(r.norm() <= 1e-10);
        }
    }

    SUBCASE("burgers states stay positive over the benchmark horizon") {
        const SystemSpec sys = build_burgers_fom(2.0);
        Rng rng(21);
        for (int s = 0; s < 3; ++s) {
            ParamVector mu_b(4);
            for (int d = 0; d < 4; ++d)
                mu_b[d] = rng.uniform(sys.domain.lo[d], sys.domain.hi[d]);
            const Trajectory traj = integrate(sys, MultistepScheme::implicit_euler(), {0.05, 800}, mu_b);
            for (const auto& state : traj.states) CHECK(state.minCoeff() > 0.0);
        }
    }

    SUBCASE("linear integration commutes with initial-state scaling") {
        SystemSpec sys = build_advection_diffusion(31);
        const auto mu_ad = make_mu({-0.5, 0.3});
        const Trajectory base = integrate(sys, MultistepScheme::crank_nicolson(), {1e-3, 50}, mu_ad);
        SystemSpec scaled = sys;
        const auto base_ic = sys.initial_condition;
        scaled.initial_condition = [base_ic](const ParamVector& m) {
            return (3.0 * base_ic(m)).eval();
        };
        const Trajectory tripled =
            integrate(scaled, MultistepScheme::crank_nicolson(), {1e-3, 50}, mu_ad);
        for (int n = 0; n <= 50; ++n)
            CHECK((tripled.states[n] - 3.0 * base.states[n]).norm() <=
                  1e-8 * std::max(1.0, base.states[n].norm()));
    }

    SUBCASE("two-step scheme at n=1 equals its one-step truncation") {
        // BDF2-style coefficients
        MultistepScheme bdf2;
        bdf2.alphas = Vector(3);
        bdf2.betas = Vector(3);
        bdf2.alphas << 1.5, -2.0, 0.5;
        bdf2.betas << 1.0, 0.0, 0.0;
        MultistepScheme truncated;
        truncated.alphas = Vector(2);
        truncated.betas = Vector(2);
        truncated.alphas << 1.5, -2.0;
        truncated.betas << 1.0, 0.0;

        const SystemSpec sys = scalar_decay(-0.7);
        const std::vector<Vector> history = {Vector::Ones(1)};
        const Vector w = 0.9 * Vector::Ones(1);
        const Vector r_full = discrete_residual(sys, bdf2, w, history, 1, mu, 0.1);
        const Vector r_trunc = discrete_residual(sys, truncated, w, history, 1, mu, 0.1);
        CHECK(r_full[0] == doctest::Approx(r_trunc[0]).epsilon(1e-14));
    }
}
