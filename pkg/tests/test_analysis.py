"""Green kernels, survival estimator, KS machinery, martingale and ergodic
checks at desk scale."""

import numpy as np
import pytest

from heisenpaths.analysis import (
    MCEstimate,
    doob_semigroup_check,
    doob_semigroup_check_N,
    ergodic_expected,
    ergodic_experiment,
    green_constant,
    green_H_pole,
    green_H_two,
    green_relation_ratio,
    green_S_pole,
    ks_critical,
    ks_two_sample,
    martingale_residual,
    survival_eigenfactor,
    survival_T,
    tdist_experiment,
)
from heisenpaths.geometry import HPoint, cayley1_chart
from heisenpaths.operators import heis_basket, sphere_basket
from heisenpaths.sde import sim_full_h, sim_radial_s

from conftest import small_cfg


# ---------------------------------------------------------------------------
# green kernels


def test_green_constant_frozen():
    # Gamma(1/2)^2 / (8 pi^2) = 1/(8 pi)
    assert green_constant(1) == pytest.approx(1.0 / (8 * np.pi), rel=1e-14)


def test_green_pole_frozen():
    assert green_H_pole((1.0, 0.0), 1) == pytest.approx(1.0 / (8 * np.pi), rel=1e-14)


def test_green_two_point_invariance(rng):
    n = 2
    for _ in range(20):
        z1, z2, g = (rng.standard_normal(n) + 1j * rng.standard_normal(n) for _ in range(3))
        p = HPoint(z=z1, t=rng.standard_normal())
        q = HPoint(z=z2, t=rng.standard_normal())
        gg = HPoint(z=g, t=rng.standard_normal())
        from heisenpaths.geometry import group_mul

        a = green_H_two(p, q, n)
        b = green_H_two(group_mul(gg, p), group_mul(gg, q), n)
        assert b == pytest.approx(a, rel=1e-9)
        assert green_H_two(q, p, n) == pytest.approx(a, rel=1e-12)


def test_green_relation_constant():
    vals = [
        green_relation_ratio((rs, th), 1)
        for rs in (0.3, 0.7, 1.1)
        for th in (0.5, 2.0, 4.0)
    ]
    assert np.std(vals) / np.mean(vals) < 1e-10
    assert np.mean(vals) == pytest.approx(2.0, rel=1e-10)
    assert green_relation_ratio((0.5, 1.0), 2) == pytest.approx(4.0, rel=1e-10)


def test_green_sphere_blows_up_at_pole():
    # pole sits at the chart centre, where the companion factor vanishes
    assert green_S_pole((0.05, 0.01), 1) > 10 * green_S_pole((0.5, 1.0), 1)


# ---------------------------------------------------------------------------
# KS machinery


def test_ks_frozen_example():
    a = np.repeat([1.0, 2.0, 3.0], 10)
    b = np.repeat([1.5, 2.5, 3.5], 10)
    stat, p = ks_two_sample(a, b)
    assert stat == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert 0 < p <= 1


def test_ks_rejects_tiny_samples():
    with pytest.raises(ValueError):
        ks_two_sample(np.arange(5), np.arange(20))


def test_ks_critical_monotone():
    assert ks_critical(0.01, 100, 100) > ks_critical(0.01, 10_000, 10_000)
    assert ks_critical(0.05, 1000, 1000) < ks_critical(0.01, 1000, 1000)


def test_mcestimate_agrees():
    a = MCEstimate(1.0, 0.01, 100)
    b = MCEstimate(1.02, 0.01, 100)
    assert a.agrees(b) and b.agrees(a)
    assert not a.agrees(MCEstimate(2.0, 0.01, 100))


# ---------------------------------------------------------------------------
# survival


def test_survival_eigenfactor_halfrate():
    # half-generator convention: the ground-state eigenvalue enters as
    # exp(-n^2 t / 2)
    assert survival_eigenfactor(1, 2.0) == pytest.approx(np.exp(-1.0))


def test_survival_curve_shape():
    cfg = small_cfg(paths=4096, step=2e-3, horizon=1.0)
    ts = np.array([0.0, 0.25, 0.5, 1.0])
    curve = survival_T((0.0, 0.0), ts, cfg)
    assert curve.s_hat[0] == 1.0 and curve.se[0] == 0.0
    # nonincreasing within statistical slack
    for a, b, sa, sb in zip(curve.s_hat, curve.s_hat[1:], curve.se, curve.se[1:]):
        assert b <= a + 2 * (sa + sb) + 1e-12
    assert 0 <= curve.capped_mass < 0.05


def test_tdist_small():
    cfg = small_cfg(paths=4096, step=2e-3, horizon=1.0)
    rep = tdist_experiment((0.0, 0.5, 1.0), cfg)
    assert rep["sup_gap"] < 0.05
    assert rep["ecdf"][0] == 0.0


# ---------------------------------------------------------------------------
# martingale property of the generators


def test_martingale_residual_sphere():
    cfg = small_cfg(paths=8192, step=2e-3, horizon=0.5)
    ens = sim_radial_s(cfg, x0=(0.6, 1.0), record_times=tuple(np.linspace(0, 0.5, 26)))
    f = sphere_basket()[0]
    res = martingale_residual(f, ens, side="sphere", n=cfg.n)
    assert abs(res.value) < 4 * res.std_error + 2e-3


def test_martingale_residual_heis_quadratic():
    cfg = small_cfg(paths=8192, step=2e-3, horizon=0.5, n=1)
    from heisenpaths.sde import project_radial

    ens = project_radial(sim_full_h(cfg, record_times=tuple(np.linspace(0, 0.5, 26))))
    r2 = [f for f in heis_basket() if f.name == "r2"][0]
    drift = martingale_residual(r2, ens, side="heis", n=1, compensate=False)
    # E[r_T^2 - r_0^2] = 2 n T under the half generator
    assert drift.value == pytest.approx(2 * 1 * 0.5, abs=4 * drift.std_error)
    res = martingale_residual(r2, ens, side="heis", n=1)
    assert abs(res.value) < 4 * res.std_error + 2e-3


# ---------------------------------------------------------------------------
# semigroup comparison


@pytest.mark.parametrize("idx", [0, 4])
def test_semigroup_sphere_small(idx):
    cfg = small_cfg(paths=4096, step=2e-3)
    f = sphere_basket()[idx]
    out = doob_semigroup_check(f, (0.0, 0.0), 0.25, cfg)
    assert out["pass"], (f.name, out["gap"], out["tol"])


def test_semigroup_gauge_side_small():
    from heisenpaths.operators import TestFunction as Fn
    from heisenpaths.operators import exp_jet, gauge_jet

    cfg = small_cfg(paths=4096, step=2e-3)
    F = Fn("expN", lambda u, v: exp_jet(gauge_jet(u, v), -1.0))
    out = doob_semigroup_check_N(F, (1.0, 0.0), 0.5, cfg)
    assert out["pass"], (out["gap"], out["tol"])


# ---------------------------------------------------------------------------
# pushforward experiments (desk scale; acceptance runs the stated sizes)


def test_cayley_pushforward_small():
    from heisenpaths.analysis import pushforward_experiment_cayley

    cfg = small_cfg(paths=3000, step=2e-3, horizon=1.0)
    rep = pushforward_experiment_cayley((0.0, 0.0), (0.3,), cfg, horizon_a=25.0)
    rec = rep[0.3]
    for name in ("r", "th", "gauge"):
        assert rec[f"ks_{name}"] <= rec[f"crit_{name}"] + 0.02
    assert rec["drop_gap"] <= rec["drop_tol"]
    # the chart image of the start shows up as the u -> 0 concentration point
    q0 = cayley1_chart(0.0, 0.0)
    assert q0[0] == 0.0


def test_kelvin_pushforward_orientations_small():
    from heisenpaths.analysis import pushforward_experiment_kelvin

    cfg = small_cfg(paths=3000, step=2e-3, horizon=1.0)
    img = pushforward_experiment_kelvin((1.0, 0.0), (0.2,), cfg, orientation="image", horizon_a=25.0)
    assert img[0.2]["ks_r"] <= img[0.2]["crit_r"] + 0.02
    pre = pushforward_experiment_kelvin((1.0, 0.0), (0.2,), cfg, orientation="preimage", horizon_a=25.0)
    assert pre[0.2]["ks_r"] > 0.1  # wrong clock: the laws must split


# ---------------------------------------------------------------------------
# ergodic average


def test_ergodic_expected_values():
    assert ergodic_expected(1) == 0.5
    assert ergodic_expected(2) == pytest.approx(1.0 / 3.0)


def test_ergodic_average_converges():
    cfg = small_cfg(n=1, paths=256, step=2e-3, horizon=50.0)
    est = ergodic_experiment(cfg)
    assert est.value == pytest.approx(0.5, abs=0.02)


def test_angle_equidistributes():
    cfg = small_cfg(n=1, paths=256, step=2e-3, horizon=50.0)
    ens = sim_radial_s(
        cfg,
        x0=(0.4, 0.0),
        averages={
            "c": lambda r, th: np.cos(th),
            "s": lambda r, th: np.sin(th),
        },
    )
    assert abs(np.mean(ens.averages["c"])) < 0.05
    assert abs(np.mean(ens.averages["s"])) < 0.05
