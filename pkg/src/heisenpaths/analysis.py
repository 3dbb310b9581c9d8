"""Monte Carlo estimators and law comparisons built on the simulators.

Conventions that matter for every estimator here:

* the simulators run the *half*-generator diffusions, so the conditioned
  sphere process carries the survival eigenfactor ``exp(-n^2 t / 2)`` — the
  conditioning weight is an eigenfunction of half the generator with
  eigenvalue ``n^2/2``;
* the conditioned Heisenberg process has *no* eigenfactor (its weight is
  annihilated by the generator);
* dead or dropped paths contribute zero to plain means (sub-probability
  convention): an estimate of ``E[f(X_t); t < lifetime]`` never renormalizes
  by the survivors.

Singular weights are controlled in two documented ways: the survival
estimator caps the weight at its absorption-boundary value and reports the
capped mass; the two-sided semigroup comparison multiplies the observable by
a smoothstep that vanishes where the conditioning factor is below 0.1 and is
1 above 0.2, applied identically to both estimates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import gamma as gamma_fn
from typing import Sequence

import numpy as np
from scipy import special

from .geometry import (
    HPoint,
    cayley1_chart,
    cayley1_chart_inv,
    group_inv,
    group_mul,
    h_fun,
    h_tilde,
    kelvin_radial,
    koranyi_N,
)
from .operators import TestFunction, apply_LH, apply_LS
from .rng import PURPOSE_COMPARE, PURPOSE_MAIN
from .sde import (
    PathEnsemble,
    SimConfig,
    sim_hproc,
    sim_Nproc,
    sim_radial_h,
    sim_radial_s,
)

__all__ = [
    "MCEstimate",
    "SurvivalCurve",
    "green_constant",
    "green_H_pole",
    "green_H_two",
    "green_S_pole",
    "green_relation_ratio",
    "survival_eigenfactor",
    "survival_T",
    "doob_semigroup_check",
    "doob_semigroup_check_N",
    "ks_two_sample",
    "ks_critical",
    "martingale_residual",
    "pushforward_experiment_cayley",
    "pushforward_experiment_kelvin",
    "tdist_experiment",
    "ergodic_expected",
    "ergodic_experiment",
]


@dataclass(frozen=True)
class MCEstimate:
    """A Monte Carlo mean with its standard error and sample size."""

    value: float
    std_error: float
    paths: int

    def agrees(self, other: "MCEstimate", slack: float = 0.0, sigmas: float = 3.0) -> bool:
        tol = sigmas * np.hypot(self.std_error, other.std_error) + slack
        return abs(self.value - other.value) <= tol


@dataclass(frozen=True)
class SurvivalCurve:
    """Sub-probability survival estimates on a time grid.

    ``capped_mass`` is the largest fraction of paths (over the grid times)
    whose conditioning weight was clamped at the absorption-boundary value;
    it bounds the truncation bias of ``s_hat`` from singular weights.
    """

    ts: np.ndarray
    s_hat: np.ndarray
    se: np.ndarray
    capped_mass: float = 0.0

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=float)
        s = np.asarray(self.s_hat, dtype=float)
        se = np.asarray(self.se, dtype=float)
        if not (ts.shape == s.shape == se.shape) or ts.ndim != 1:
            raise ValueError("ts, s_hat, se must be 1-D arrays of equal length")
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "s_hat", s)
        object.__setattr__(self, "se", se)


def _mean_se(samples: np.ndarray) -> MCEstimate:
    samples = np.asarray(samples, dtype=float)
    P = samples.size
    se = float(samples.std(ddof=1) / np.sqrt(P)) if P > 1 else np.inf
    return MCEstimate(float(samples.mean()), se, P)


# ---------------------------------------------------------------------------
# Green functions


def green_constant(n: int) -> float:
    """Normalization ``Gamma(n/2)^2 / (8 pi^(n+1))`` shared by both kernels."""
    return gamma_fn(n / 2.0) ** 2 / (8.0 * np.pi ** (n + 1))


def green_H_pole(p, n: int):
    """Group-side Green kernel with pole at the identity: ``c_n N^(-n/2)``
    at ``p = (r, t)``."""
    r, t = p
    return green_constant(n) * koranyi_N(r, t) ** (-0.5 * n)


def green_H_two(p: HPoint, q: HPoint, n: int) -> float:
    """Two-point kernel ``c_n N(q^(-1) p)^(-n/2)``; left-invariant and
    symmetric because the gauge is inverse-invariant."""
    d = group_mul(group_inv(q), p)
    rad = d.radial()
    return float(green_H_pole((rad.r_h, rad.t), n))


def green_S_pole(q, n: int):
    """Sphere-side Green kernel with pole at the chart center:
    ``c_n h_tilde^(-n/2)`` at ``q = (rs, th)``."""
    rs, th = q
    return green_constant(n) * h_tilde(rs, th) ** (-0.5 * n)


def green_relation_ratio(q, n: int):
    """Ratio of the sphere kernel to the chart-transported group kernel,

        G_S(center, q) / [ G_H(0, chart_inv(q)) * h(center)^(-n/2) * h(q)^(-n/2) ]

    Constant in ``q``, equal to ``2^n``: with the conformal factor rescaled
    by its chart-center value 4 the constant would be 1; the kernels here
    keep the unnormalized factor, and the leftover is exactly ``4^(n/2)``.
    """
    rs, th = q
    r, t = cayley1_chart_inv(rs, th)
    num = green_S_pole(q, n)
    den = (
        green_H_pole((r, t), n)
        * h_fun(0.0, 0.0) ** (-0.5 * n)
        * h_fun(rs, th) ** (-0.5 * n)
    )
    return num / den


# ---------------------------------------------------------------------------
# survival of the conditioned sphere process


def survival_eigenfactor(n: int, t) -> np.ndarray:
    """Decay factor ``exp(-n^2 t / 2)`` of the conditioning weight under the
    half-generator semigroup."""
    return np.exp(-0.5 * n**2 * np.asarray(t, dtype=float))


def survival_T(
    x0: tuple[float, float],
    ts: Sequence[float],
    cfg: SimConfig,
    purpose: int = PURPOSE_COMPARE,
) -> SurvivalCurve:
    """Survival function of the conditioned sphere process started at ``x0``,
    estimated from the *unconditioned* sphere motion:

        S(t) = exp(-n^2 t/2) * E[ w(q_t) ] / w(x0),   w = h^(-n/2)

    with the weight capped at its absorption-boundary value
    ``absorb_floor_h^(-n/2)`` (the capped fraction is reported).  ``S(0)`` is
    1 by definition.
    """
    ts = np.asarray(sorted(float(t) for t in ts), dtype=float)
    if ts[0] < 0:
        raise ValueError("times must be nonnegative")
    n = cfg.n
    run = replace(cfg, horizon=float(ts[-1]))
    ens = sim_radial_s(run, x0=x0, record_times=ts, purpose=purpose)
    w0 = h_fun(*x0) ** (-0.5 * n)
    cap = run.absorb_floor_h ** (-0.5 * n)
    h_vals = h_fun(ens.states["r"], ens.states["th"])
    w = np.minimum(h_vals ** (-0.5 * n), cap)
    capped = float(np.max(np.mean(h_vals < run.absorb_floor_h, axis=1)))
    fac = survival_eigenfactor(n, ts)[:, None]
    samples = fac * w / w0
    s_hat = samples.mean(axis=1)
    se = samples.std(axis=1, ddof=1) / np.sqrt(ens.paths)
    at_zero = ts == 0.0
    s_hat[at_zero], se[at_zero] = 1.0, 0.0
    return SurvivalCurve(ts, s_hat, se, capped_mass=capped)


def tdist_experiment(
    ts: Sequence[float],
    cfg: SimConfig,
    x0: tuple[float, float] = (0.0, 0.0),
) -> dict:
    """Law of the absorption time of the conditioned sphere process versus
    the survival curve: at each grid time compares the absorption ECDF with
    ``1 - S(t)``.  Returns the curve, the ECDF, and the sup gap over the
    positive grid times."""
    ts = np.asarray(sorted(float(t) for t in ts), dtype=float)
    curve = survival_T(x0, ts, cfg, purpose=PURPOSE_COMPARE)
    run = replace(cfg, horizon=float(ts[-1]))
    ens = sim_hproc(run, x0=x0, record_times=(), purpose=PURPOSE_MAIN)
    ecdf = np.array([np.mean(ens.death_time <= t) for t in ts])
    pos = ts > 0
    gap = float(np.max(np.abs(ecdf[pos] - (1.0 - curve.s_hat[pos])))) if np.any(pos) else 0.0
    return {
        "ts": ts,
        "curve": curve,
        "ecdf": ecdf,
        "sup_gap": gap,
        "paths": ens.paths,
    }


# ---------------------------------------------------------------------------
# two-sided semigroup comparison


def _smoothstep(v, lo: float = 0.1, hi: float = 0.2):
    s = np.clip((np.asarray(v, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def doob_semigroup_check(
    f: TestFunction,
    x: tuple[float, float],
    t: float,
    cfg: SimConfig,
) -> dict:
    """Compare two estimates of the conditioned sphere semigroup at time
    ``t`` applied to ``f`` (times a pole cutoff), started at ``x``:

    1. plain mean of the observable along the conditioned process, dead
       paths contributing zero;
    2. weighted mean along the unconditioned process,
       ``exp(-n^2 t/2) E[w * obs]/w(x)`` with ``w = h^(-n/2)``.

    The observable is ``f`` multiplied by a smoothstep vanishing where the
    conformal factor is below 0.1 (1 above 0.2) — identically in both
    estimates, so they target the same functional.
    """
    n = cfg.n
    run = replace(cfg, horizon=float(t))

    def obs(r, th):
        return f.eval(r, th) * _smoothstep(h_fun(r, th))

    cond = sim_hproc(run, x0=x, record_times=(t,), purpose=PURPOSE_MAIN)
    vals = obs(cond.states["r"][-1], cond.states["th"][-1])
    est1 = _mean_se(np.where(cond.alive[-1], vals, 0.0))

    free = sim_radial_s(run, x0=x, record_times=(t,), purpose=PURPOSE_COMPARE)
    r, th = free.states["r"][-1], free.states["th"][-1]
    w = h_fun(r, th) ** (-0.5 * n)
    w0 = h_fun(*x) ** (-0.5 * n)
    fac = float(survival_eigenfactor(n, t))
    est2 = _mean_se(fac * w * obs(r, th) / w0)

    gap = abs(est1.value - est2.value)
    se = float(np.hypot(est1.std_error, est2.std_error))
    return {
        "conditioned": est1,
        "weighted": est2,
        "gap": gap,
        "se": se,
        "tol": 3.0 * se + 0.02,
        "pass": gap <= 3.0 * se + 0.02,
    }


def doob_semigroup_check_N(
    F: TestFunction,
    x: tuple[float, float],
    t: float,
    cfg: SimConfig,
) -> dict:
    """Group-side analogue of :func:`doob_semigroup_check`: the conditioned
    Heisenberg process against the ``N^(-n/2)``-weighted free motion.  The
    weight is harmonic (no eigenfactor); the cutoff smoothstep is taken in
    the gauge."""
    n = cfg.n
    run = replace(cfg, horizon=float(t))

    def obs(r, tt):
        return F.eval(r, tt) * _smoothstep(koranyi_N(r, tt))

    cond = sim_Nproc(run, x0=x, record_times=(t,), purpose=PURPOSE_MAIN)
    vals = obs(cond.states["r"][-1], cond.states["t"][-1])
    est1 = _mean_se(np.where(cond.alive[-1], vals, 0.0))

    free = sim_radial_h(run, x0=x, record_times=(t,), purpose=PURPOSE_COMPARE)
    r, tt = free.states["r"][-1], free.states["t"][-1]
    w = koranyi_N(r, tt) ** (-0.5 * n)
    w0 = koranyi_N(*x) ** (-0.5 * n)
    est2 = _mean_se(w * obs(r, tt) / w0)

    gap = abs(est1.value - est2.value)
    se = float(np.hypot(est1.std_error, est2.std_error))
    return {
        "conditioned": est1,
        "weighted": est2,
        "gap": gap,
        "se": se,
        "tol": 3.0 * se + 0.02,
        "pass": gap <= 3.0 * se + 0.02,
    }


# ---------------------------------------------------------------------------
# two-sample distribution distance


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    m, k = a.size, b.size
    if m < 10 or k < 10:
        raise ValueError("need at least 10 samples on each side")
    allv = np.concatenate([a, b])
    fa = np.searchsorted(a, allv, side="right") / m
    fb = np.searchsorted(b, allv, side="right") / k
    stat = float(np.max(np.abs(fa - fb)))
    en = np.sqrt(m * k / (m + k))
    pvalue = float(special.kolmogorov(en * stat))
    return stat, pvalue


def ks_critical(alpha: float, m: int, k: int) -> float:
    """Two-sample KS acceptance threshold at level ``alpha``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return float(special.kolmogi(alpha) * np.sqrt((m + k) / (m * k)))


# ---------------------------------------------------------------------------
# pathwise generator check


def martingale_residual(
    f: TestFunction,
    ens: PathEnsemble,
    side: str,
    n: int,
    compensate: bool = True,
) -> MCEstimate:
    """Mean terminal value of ``f(X_T) - f(X_0) - (1/2) int L f(X_s) ds``
    along a densely recorded ensemble (trapezoid in time); zero in law for
    the matching generator.  With ``compensate=False`` the integral term is
    dropped, which turns the residual into a drift meter.
    """
    if side == "sphere":
        u, v, op = ens.states["r"], ens.states["th"], apply_LS
    elif side == "heis":
        u, v, op = ens.states["r"], ens.states["t"], apply_LH
    else:
        raise ValueError(f"unknown side {side!r}")
    vals = f.eval(u, v)
    res = vals[-1] - vals[0]
    if compensate:
        lf = 0.5 * op(f, (u, v), n)
        dt = np.diff(ens.times)[:, None]
        res = res - np.sum(0.5 * dt * (lf[:-1] + lf[1:]), axis=0)
    return _mean_se(res)


# ---------------------------------------------------------------------------
# law-transport experiments


def _marginal_stats(samA: dict, samB: dict, names, alpha: float = 0.01) -> dict:
    out = {}
    for name in names:
        a, b = samA[name], samB[name]
        stat, pvalue = ks_two_sample(a, b)
        out[f"ks_{name}"] = stat
        out[f"p_{name}"] = pvalue
        out[f"crit_{name}"] = ks_critical(alpha, a.size, b.size)
    return out


def _drop_stats(dropA: float, dropB: float, P: int) -> dict:
    se = float(
        np.sqrt(dropA * (1 - dropA) / P + dropB * (1 - dropB) / P)
    )
    return {
        "dropA": dropA,
        "dropB": dropB,
        "drop_gap": abs(dropA - dropB),
        "drop_se": se,
        "drop_tol": 3.0 * se + 0.02,
    }


def pushforward_experiment_cayley(
    x0: tuple[float, float],
    u_grid: Sequence[float],
    cfg: SimConfig,
    horizon_a: float = 25.0,
) -> dict:
    """Law comparison across the chart at clock levels ``u_grid``.

    Route A runs the free Heisenberg radial motion from ``x0``, reads the
    state at the first crossing of each clock level (running integral of the
    Heisenberg-side conformal factor) and maps it through the chart; route B
    runs the conditioned sphere process from the chart image of ``x0`` for
    intrinsic time ``u``.  Per level, the two samples are compared per
    marginal (radial, angle, and the companion-factor scalar) and in their
    dropped-path fractions (route A: level never reached within the time
    budget; route B: absorbed).
    """
    u_grid = sorted(float(u) for u in u_grid)
    runA = replace(cfg, horizon=float(horizon_a))
    ensA = sim_radial_h(
        runA, x0=x0, clock="cayley", levels=u_grid, purpose=PURPOSE_MAIN
    )
    q0 = cayley1_chart(*x0)
    runB = replace(cfg, horizon=float(max(u_grid)))
    ensB = sim_hproc(runB, x0=(float(q0[0]), float(q0[1])), record_times=u_grid, purpose=PURPOSE_COMPARE)

    out: dict = {"u_grid": u_grid, "paths": ensA.paths}
    for j, u in enumerate(u_grid):
        cross = ensA.crossings[u]
        hitA = cross["hit"]
        rsA, thA = cayley1_chart(cross["r"][hitA], cross["t"][hitA])
        aliveB = ensB.alive[j]
        rsB, thB = ensB.states["r"][j][aliveB], ensB.states["th"][j][aliveB]
        samA = {"r": rsA, "th": thA, "gauge": h_tilde(rsA, thA)}
        samB = {"r": rsB, "th": thB, "gauge": h_tilde(rsB, thB)}
        rec = _marginal_stats(samA, samB, ("r", "th", "gauge"))
        rec.update(
            _drop_stats(1.0 - float(np.mean(hitA)), 1.0 - float(np.mean(aliveB)), ensA.paths)
        )
        rec["samples"] = {"A": samA, "B": samB}
        out[u] = rec
    return out


def pushforward_experiment_kelvin(
    x0: tuple[float, float],
    u_grid: Sequence[float],
    cfg: SimConfig,
    orientation: str = "image",
    horizon_a: float = 50.0,
) -> dict:
    """Law comparison across the gauge inversion at clock levels ``u_grid``.

    Route A runs the free Heisenberg radial motion from ``x0``, reads the
    state at the first crossing of each clock level and maps it through the
    radial gauge inversion; route B runs the conditioned Heisenberg process
    from the inverted start for intrinsic time ``u``.  With
    ``orientation="image"`` the clock integrates the reciprocal gauge (the
    correct pairing); ``"preimage"`` integrates the gauge itself — the
    negative control whose law comparison is expected to fail.
    """
    if orientation not in ("image", "preimage"):
        raise ValueError(f"unknown orientation {orientation!r}")
    u_grid = sorted(float(u) for u in u_grid)
    clock = "kelvin_image" if orientation == "image" else "kelvin_preimage"
    runA = replace(cfg, horizon=float(horizon_a))
    ensA = sim_radial_h(
        runA, x0=x0, clock=clock, levels=u_grid, purpose=PURPOSE_MAIN
    )
    y0 = kelvin_radial(*x0)
    runB = replace(cfg, horizon=float(max(u_grid)))
    ensB = sim_Nproc(runB, x0=(float(y0[0]), float(y0[1])), record_times=u_grid, purpose=PURPOSE_COMPARE)

    out: dict = {"u_grid": u_grid, "orientation": orientation, "paths": ensA.paths}
    for j, u in enumerate(u_grid):
        cross = ensA.crossings[u]
        hitA = cross["hit"]
        rA, tA = kelvin_radial(cross["r"][hitA], cross["t"][hitA])
        aliveB = ensB.alive[j]
        rB, tB = ensB.states["r"][j][aliveB], ensB.states["t"][j][aliveB]
        samA = {"r": rA, "t": tA, "gauge": koranyi_N(rA, tA)}
        samB = {"r": rB, "t": tB, "gauge": koranyi_N(rB, tB)}
        rec = _marginal_stats(samA, samB, ("r", "t", "gauge"))
        rec.update(
            _drop_stats(1.0 - float(np.mean(hitA)), 1.0 - float(np.mean(aliveB)), ensA.paths)
        )
        rec["samples"] = {"A": samA, "B": samB}
        out[u] = rec
    return out


# ---------------------------------------------------------------------------
# long-run sphere average


def ergodic_expected(n: int) -> float:
    """Stationary mean of ``cos(rs)^2``: the invariant radial density is
    proportional to ``sin^(2n-1) cos``, and the beta integrals give
    ``1/(n+1)`` (one half in the lowest dimension)."""
    return 1.0 / (n + 1)


def ergodic_experiment(cfg: SimConfig, x0: tuple[float, float] = (0.4, 0.0), burn: float = 0.0) -> MCEstimate:
    """Time average of ``cos(rs)^2`` along the free sphere motion; compare
    with :func:`ergodic_expected`."""
    ens = sim_radial_s(
        cfg,
        x0=x0,
        averages={"c2": lambda r, th: np.cos(r) ** 2},
        burn=burn,
        purpose=PURPOSE_MAIN,
    )
    return _mean_se(ens.averages["c2"])
