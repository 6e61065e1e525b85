import math

import numpy as np
import pytest

import rbldp


def test_version():
    assert rbldp.__version__


def test_gauss_identity():
    alpha = -0.25
    value = rbldp.hyp2f1(1.0, -alpha, 2.0 + alpha, 1.0)
    assert value == pytest.approx((1 + alpha) / (1 + 2 * alpha), abs=1e-10)


def test_diagonal_covariance():
    p = rbldp.ModelParams(alpha=-0.25, eta=1.0)
    assert rbldp.cov_zz(1.0, 1.0, p) == pytest.approx(1.0, abs=1e-15)
    assert p.beta == pytest.approx(0.5)


def test_invalid_params_raise_value_error():
    with pytest.raises(ValueError):
        rbldp.ModelParams(alpha=0.3)
    with pytest.raises(rbldp.DomainError):
        rbldp.cov_zz(-0.5, 1.0, rbldp.ModelParams())


def test_simulate_shapes_and_determinism():
    p = rbldp.ModelParams(rho=-0.7)
    a = rbldp.simulate(p, n=16, n_paths=5, seed=3)
    b = rbldp.simulate(p, n=16, n_paths=5, seed=3, threads=4)
    assert a["Z"].shape == (5, 17)
    assert np.array_equal(a["X"], b["X"])
    assert np.all(a["Z"][:, 0] == 0.0)
    assert np.allclose(a["B"], -0.7 * a["W"] + math.sqrt(1 - 0.49) * a["Wperp"])


def test_rate_endpoint_single_step_closed_form():
    p = rbldp.ModelParams(rho=-0.7)
    r = rbldp.rate_endpoint(p, u=0.1, n=1)
    assert r["value"] == pytest.approx(0.01 / (2 * 0.04 * 0.49), rel=1e-8)
    assert rbldp.rate_endpoint(p, u=0.0)["value"] == 0.0


def test_uncorrelated_rate_is_even():
    p = rbldp.ModelParams(rho=0.0)
    plus = rbldp.rate_endpoint(p, u=0.1, n=16)["value"]
    minus = rbldp.rate_endpoint(p, u=-0.1, n=16)["value"]
    assert plus == pytest.approx(minus, abs=1e-10)


def test_rate_path_inverts_forward_map():
    p = rbldp.ModelParams(rho=-0.7)
    f = np.linspace(0.5, -0.5, 8)
    target = rbldp.forward_path(p, f)
    r = rbldp.rate_path(p, target)
    assert np.allclose(rbldp.forward_path(p, r["control"]), target, atol=1e-8)


def test_mc_tail_requires_enough_paths():
    with pytest.raises(ValueError):
        rbldp.mc_tail(0.1, 0.5, rbldp.ModelParams(rho=-0.7), n_paths=100)
