"""Smoke tests for the python bindings."""

import math

import numpy as np
import pytest

import romerr


def test_advection_diffusion_shapes():
    sys = romerr.build_advection_diffusion(101)
    assert sys.dim == 100
    mu = np.array([-1.0, 0.5])
    x0 = sys.initial_condition(mu)
    assert x0.shape == (100,)
    f = sys.velocity(np.zeros(100), 0.0, mu)
    assert np.linalg.norm(f) == 0.0


def test_integrate_scalar_decay_matches_cn_recursion():
    sys = romerr.build_advection_diffusion(11)
    mu = np.array([-0.5, 0.2])
    traj = romerr.integrate(sys, romerr.MultistepScheme.crank_nicolson(), 1e-3, 20, mu)
    assert traj.states.shape == (21, 10)
    assert np.isfinite(traj.states).all()


def test_pod_and_galerkin_rom():
    sys = romerr.build_advection_diffusion(41)
    mu = np.array([-1.0, 0.4])
    snap = romerr.integrate(sys, romerr.MultistepScheme.crank_nicolson(), 1e-3, 100, mu)
    basis = romerr.compute_pod([snap], romerr.ReferenceRule.InitialState, 5, 4)
    assert basis.columns.shape == (40, 4)
    gram = basis.columns.T @ basis.columns
    assert np.abs(gram - np.eye(4)).max() <= 1e-10
    rom = romerr.galerkin_reduce(sys, basis)
    assert rom.dim == 4


def test_fvu_and_noise_fits():
    assert romerr.fvu([1.0, 2.0, 3.0], [1.0, 2.0, 4.0]) == pytest.approx(0.5)
    gauss = romerr.fit_gaussian([1.0, -1.0])
    assert gauss.sigma2 == pytest.approx(1.0)
    ar1 = romerr.fit_ar1([[1.0, 0.5, 0.25]])
    assert ar1.c == pytest.approx(0.5)
    assert ar1.sigma2 == pytest.approx(1.0 / 3.0)
    scales = romerr.noise_scale_sequence(ar1, 3)
    assert len(scales) == 3


def test_error_bound_inadmissible_time_step():
    with pytest.raises(ArithmeticError):
        romerr.error_bound_sequence(
            [1.0] * 5, [0.0], 2.0, romerr.MultistepScheme.implicit_euler(), 0.5
        )
    bound = romerr.error_bound_sequence(
        [1.0] * 5, [0.0], 0.0, romerr.MultistepScheme.implicit_euler(), 0.1
    )
    assert bound[-1] == pytest.approx(5.0)


def test_sample_parameters_deterministic():
    sys = romerr.build_burgers_fom(2.0)
    a = romerr.sample_parameters(sys.domain, 5, 7)
    b = romerr.sample_parameters(sys.domain, 5, 7)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert all(sys.domain.contains(x) for x in a)


def test_ks_statistic_single_median_sample():
    assert romerr.ks_statistic([0.0], "normal") == pytest.approx(0.5)
