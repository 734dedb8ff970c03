import math

import numpy as np
import pytest

import midnight


def small():
    return midnight.ModelParams.from_mean_los(18, 3.03, 5.3)


def test_params_and_diffusion():
    p = small()
    assert p.n_servers == 18
    assert p.load == pytest.approx(0.892, abs=5e-4)
    d = midnight.derive_diffusion_params(p)
    assert d.tail_rate == pytest.approx(0.13346, rel=1e-4)
    with pytest.raises(ValueError, match="daily_service_prob"):
        midnight.ModelParams(18, 3.03, 1.5)


def test_stationary_pmf_flow_balance():
    p = small()
    pmf, residual = midnight.stationary_pmf(p)
    assert residual <= 1e-12
    assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
    busy = np.minimum(np.arange(pmf.size), 18) @ pmf
    assert p.daily_arrival_rate == pytest.approx(p.daily_service_prob * busy, abs=1e-8)


def test_proxy_density_vectorized():
    f = midnight.proxy_density(small())
    xs = np.array([-1e-12, 0.0, 5.0])
    ys = f.pdf(xs)
    assert ys.shape == (3,)
    assert ys[0] == pytest.approx(ys[1], rel=1e-10)
    with pytest.raises(ValueError, match="γ ≤ 0"):
        midnight.proxy_density(midnight.ModelParams(40, 8.0, 0.2))


def test_projection_and_compare():
    proj = midnight.project(small(), elements=64)
    diag = proj.diagnostics
    assert diag["norm_sq"] > 0
    assert 0.98 <= diag["mass_before_renormalization"] <= 1.02
    pmf = proj.lattice_pmf(18, 120)
    assert pmf.sum() == pytest.approx(1.0)
    report = midnight.compare(small())
    assert report["tv"]["projection_vs_exact"] < 0.05
    assert report["tv"]["formula_vs_exact"] < 0.05
    assert [m["name"] for m in report["methods"]] == ["exact", "formula", "projection"]


def test_simulation_is_seeded():
    p = small()
    a = midnight.simulate_path(p, 1000, 5)
    b = midnight.simulate_path(p, 1000, 5)
    assert np.array_equal(a, b)
    assert a[0] == 18
    x = midnight.simulate_diffusion(p, 100, 5)
    assert x.shape == (101,)
    assert np.array_equal(x, midnight.simulate_diffusion(p, 100, 5))


def test_limit_check_zero_horizon():
    report = midnight.limit_check([25, 100], horizon=0, replications=1000)
    assert all(e["ks_distance"] == 0.0 for e in report["entries"])
    assert not math.isnan(report["limit_sd"])


def test_error_mapping():
    balanced = midnight.ModelParams(40, 8.0, 0.2)
    with pytest.raises(ValueError, match="not normalizable"):
        midnight.project(balanced)
    with pytest.raises(midnight.SolverError):
        midnight.stationary_pmf(small(), tol=1e-30)
    assert issubclass(midnight.SolverError, RuntimeError)
