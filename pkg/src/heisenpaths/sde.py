"""Tamed Euler simulators for the radial diffusions and their conditioned
variants.

All schemes simulate the half-generator convention: increments are Gaussian
with variance ``step`` per unit diffusion coefficient and the drift is half
the first-order coefficient of the generator.  Two discrete moments pin the
convention down exactly: the full simulator satisfies ``E|z(T)|^2 = 2nT`` and
``E t(T)^2 = n T^2 - n T step`` in expectation, step by step.

Stability guards (all in units of ``sqrt(step)``):

* singular drift coefficients are evaluated at a radial coordinate clipped
  away from the axis (and, on the sphere, away from the equator) by
  ``0.5*sqrt(step)``;
* the total drift displacement per step is capped at ``tame*sqrt(step)``;
* the radial coordinate reflects at 0 with a floor of ``r_floor``; the
  sphere radial coordinate is clamped below ``pi/2 - r_floor``.

Absorption thresholds of the conditioned processes:

* the conditioned sphere process absorbs when the conformal factor falls
  below ``4 * pole_eps^2`` (the factor is comparable to the fourth power of
  the distance to its zero, so this is a gauge ball of radius ~pole_eps);
* the conditioned Heisenberg process absorbs when the quartic gauge falls
  below ``max(pole_eps^4, (4*n*step)^2)``.  The second term keeps the
  trigger reachable by the discrete chain: one step near the origin moves
  the gauge by O(n*step), so a much smaller threshold would be overshot
  forever and no path would ever register as absorbed.

Absorbed paths freeze at the triggering state.  Every ensemble is built from
fixed-width path blocks with per-block Philox streams
(:mod:`heisenpaths.rng`), so outputs are bitwise identical for any worker
count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .geometry import TWO_PI, H_fun, h_fun, koranyi_N
from .operators import drift_hproc, drift_Nproc, sphere_radial_drift
from .rng import BLOCK_PATHS, PURPOSE_MAIN, block_plan, stream

__all__ = [
    "SimConfig",
    "PathEnsemble",
    "CLOCKS",
    "sim_full_h",
    "sim_radial_h",
    "sim_radial_s",
    "sim_hproc",
    "sim_Nproc",
    "project_radial",
]


@dataclass(frozen=True)
class SimConfig:
    """Shared simulation parameters.

    ``pole_eps`` sets the absorption thresholds of the conditioned processes
    (see module docstring); ``tame`` caps the per-step drift displacement in
    units of ``sqrt(step)``; ``r_floor`` is the reflection guard at the
    radial axis and the clamp distance from the sphere equator.
    """

    n: int = 1
    step: float = 1e-3
    horizon: float = 1.0
    paths: int = BLOCK_PATHS
    seed: int = 0
    pole_eps: float = 1e-3
    r_floor: float = 1e-6
    tame: float = 4.0
    workers: int = 1

    def __post_init__(self):
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not 0.0 < self.step <= 0.1:
            raise ValueError(f"step must lie in (0, 0.1], got {self.step!r}")
        if self.horizon < self.step:
            raise ValueError("horizon shorter than one step")
        k = round(self.horizon / self.step)
        if abs(k * self.step - self.horizon) > 1e-6 * max(1.0, self.horizon):
            raise ValueError("horizon is not a whole number of steps")
        if k > 10_000_000:
            raise ValueError("more than 1e7 steps requested")
        if self.paths < 1:
            raise ValueError("paths must be positive")
        if not 0.0 < self.pole_eps <= 0.1:
            raise ValueError(f"pole_eps must lie in (0, 0.1], got {self.pole_eps!r}")
        if not 0.0 < self.r_floor <= 1e-3:
            raise ValueError(f"r_floor must lie in (0, 1e-3], got {self.r_floor!r}")
        if self.tame <= 0:
            raise ValueError("tame must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.step))

    @property
    def absorb_floor_h(self) -> float:
        """Conformal-factor absorption threshold of the conditioned sphere
        process (gauge ball of radius ~pole_eps around the factor's zero)."""
        return 4.0 * self.pole_eps**2

    @property
    def absorb_floor_N(self) -> float:
        """Quartic-gauge absorption threshold of the conditioned Heisenberg
        process, widened to stay reachable by the discrete chain."""
        return max(self.pole_eps**4, (4.0 * self.n * self.step) ** 2)


@dataclass
class PathEnsemble:
    """Recorded output of one simulation.

    ``states`` maps coordinate names to arrays whose leading axis indexes
    ``times`` and whose trailing axis indexes paths.  Absorbing simulators
    add ``alive`` (times x paths) and ``death_time`` (``inf`` for
    survivors); frozen coordinates repeat the absorption state.  Clocked
    simulators add the running clock at the record times and one crossing
    record per requested level: interpolated state, fine time, and a hit
    mask (state entries are NaN where the clock never reached the level).
    """

    times: np.ndarray
    states: dict[str, np.ndarray]
    alive: np.ndarray | None = None
    death_time: np.ndarray | None = None
    clock: np.ndarray | None = None
    crossings: dict[float, dict[str, np.ndarray]] = field(default_factory=dict)
    averages: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def paths(self) -> int:
        first = next(iter(self.states.values()))
        return first.shape[-1]


# clock integrand, evaluated along the Heisenberg radial path
CLOCKS: dict[str, Callable] = {
    "cayley": H_fun,
    "kelvin_image": lambda r, t: 1.0 / np.maximum(koranyi_N(r, t), 1e-300),
    "kelvin_preimage": koranyi_N,
}


def _snap_slots(cfg: SimConfig, record_times: Sequence[float]) -> tuple[np.ndarray, dict[int, int]]:
    """Map record times onto step indices; they must sit on the step grid."""
    times = np.asarray(sorted(record_times), dtype=float)
    slots: dict[int, int] = {}
    for j, T in enumerate(times):
        k = int(round(T / cfg.step))
        if not 0 <= k <= cfg.steps or abs(k * cfg.step - T) > 1e-9 * max(1.0, T):
            raise ValueError(f"record time {T} not on the step grid")
        if k in slots:
            raise ValueError(f"duplicate record time {T}")
        slots[k] = j
    return times, slots


def _run_blocked(cfg: SimConfig, purpose: int, kernel: Callable) -> dict[str, np.ndarray]:
    """Run ``kernel(width, rng) -> dict[str, array]`` over the block plan.

    Kernels always simulate ``BLOCK_PATHS`` paths; the final block is
    truncated afterwards, so path ``j`` of a run does not depend on the total
    path count.  Arrays are concatenated along their last axis in block
    order, which makes the result independent of scheduling.
    """
    plan = block_plan(cfg.paths)

    def job(entry):
        b, keep = entry
        out = kernel(BLOCK_PATHS, stream(cfg.seed, purpose, b))
        return {k: v[..., :keep] for k, v in out.items()}

    if cfg.workers > 1 and len(plan) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(job, plan))
    else:
        parts = [job(entry) for entry in plan]
    return {
        k: np.concatenate([p[k] for p in parts], axis=-1) for k in parts[0]
    }


def _drift_cap(cfg: SimConfig) -> float:
    return cfg.tame * np.sqrt(cfg.step)


def _collect_crossings(flat: dict[str, np.ndarray], levels, names) -> dict[float, dict[str, np.ndarray]]:
    out: dict[float, dict[str, np.ndarray]] = {}
    for i, u in enumerate(levels):
        rec = {name: flat.pop(f"cross{i}_{name}") for name in names}
        rec["hit"] = flat.pop(f"cross{i}_hit").astype(bool)
        out[float(u)] = rec
    return out


# ---------------------------------------------------------------------------
# full-coordinate Heisenberg Brownian motion


def sim_full_h(
    cfg: SimConfig,
    x0_z: Sequence[complex] | None = None,
    x0_t: float = 0.0,
    record_times: Sequence[float] = (),
    purpose: int = PURPOSE_MAIN,
) -> PathEnsemble:
    """Brownian motion on the full group: ``z`` in C^n plus the vertical
    coordinate driven by the left-point area increment ``Im(conj(z) dz)``.

    Records ``z`` (shape ``times x n x paths``) and ``t`` at the requested
    times; :func:`project_radial` reduces the result to ``(|z|, t)``.
    """
    times, slots = _snap_slots(cfg, record_times)
    z0 = np.zeros(cfg.n, dtype=complex) if x0_z is None else np.asarray(x0_z, dtype=complex)
    if z0.shape != (cfg.n,):
        raise ValueError(f"x0_z must have shape ({cfg.n},)")
    sq = np.sqrt(cfg.step)
    n = cfg.n

    def kernel(width, rng):
        z = np.repeat(z0[:, None], width, axis=1)
        t = np.full(width, float(x0_t))
        snap_z = np.empty((len(times), n, width), dtype=complex)
        snap_t = np.empty((len(times), width))

        def record(j):
            snap_z[j] = z
            snap_t[j] = t

        if 0 in slots:
            record(slots[0])
        for k in range(cfg.steps):
            dw = rng.standard_normal((2 * n, width))
            dz = sq * (dw[:n] + 1j * dw[n:])
            t = t + np.sum(z.real * dz.imag - z.imag * dz.real, axis=0)
            z = z + dz
            if k + 1 in slots:
                record(slots[k + 1])
        return {"z": snap_z, "t": snap_t}

    flat = _run_blocked(cfg, purpose, kernel)
    return PathEnsemble(times=times, states={"z": flat["z"], "t": flat["t"]})


def project_radial(ens: PathEnsemble) -> PathEnsemble:
    """Pointwise radial projection ``(z, t) -> (|z|, t)`` of a full-group
    ensemble; all other fields are carried over unchanged."""
    if "z" not in ens.states:
        raise ValueError("ensemble has no full coordinates to project")
    r = np.sqrt(np.sum(ens.states["z"].real ** 2 + ens.states["z"].imag ** 2, axis=1))
    return PathEnsemble(
        times=ens.times,
        states={"r": r, "t": ens.states["t"]},
        alive=ens.alive,
        death_time=ens.death_time,
        clock=ens.clock,
        crossings=ens.crossings,
        averages=ens.averages,
    )


# ---------------------------------------------------------------------------
# radial Heisenberg Brownian motion, with optional additive clock


def sim_radial_h(
    cfg: SimConfig,
    x0: tuple[float, float] = (0.0, 0.0),
    record_times: Sequence[float] = (),
    clock: str | None = None,
    levels: Sequence[float] = (),
    purpose: int = PURPOSE_MAIN,
) -> PathEnsemble:
    """Radial Heisenberg diffusion ``(r, t)``.

    With ``clock`` set (one of ``CLOCKS``), integrates the clock by the
    trapezoid rule along each path and records linearly interpolated states
    at the first crossing of each requested level.
    """
    if clock is not None and clock not in CLOCKS:
        raise ValueError(f"unknown clock {clock!r}")
    if levels and clock is None:
        raise ValueError("levels need a clock")
    levels = sorted(float(u) for u in levels)
    if any(u <= 0 for u in levels):
        raise ValueError("clock levels must be positive")
    times, slots = _snap_slots(cfg, record_times)
    factor = CLOCKS[clock] if clock else None
    dt, sq = cfg.step, np.sqrt(cfg.step)
    n = cfg.n
    cap = _drift_cap(cfg)
    guard = 0.5 * sq
    r0, t0 = float(x0[0]), float(x0[1])
    if r0 < 0:
        raise ValueError("x0 radial coordinate must be nonnegative")

    def kernel(width, rng):
        r = np.full(width, r0)
        t = np.full(width, t0)
        m = len(times)
        out = {"r": np.empty((m, width)), "t": np.empty((m, width))}
        if factor is not None:
            A = np.zeros(width)
            f_old = factor(r, t) * np.ones(width)
            out["clock"] = np.empty((m, width))
            for i in range(len(levels)):
                out[f"cross{i}_r"] = np.full(width, np.nan)
                out[f"cross{i}_t"] = np.full(width, np.nan)
                out[f"cross{i}_time"] = np.full(width, np.nan)
                out[f"cross{i}_hit"] = np.zeros(width, dtype=bool)

        def record(j):
            out["r"][j] = r
            out["t"][j] = t
            if factor is not None:
                out["clock"][j] = A

        if 0 in slots:
            record(slots[0])
        for k in range(cfg.steps):
            dw = rng.standard_normal((2, width))
            re = np.maximum(r, guard)
            disp = np.clip((2 * n - 1) / (2.0 * re) * dt, -cap, cap)
            r_new = np.maximum(np.abs(r + disp + sq * dw[0]), cfg.r_floor)
            t_new = t + r * sq * dw[1]
            if factor is not None:
                f_new = factor(r_new, t_new)
                A_new = A + 0.5 * dt * (f_old + f_new)
                for i, u in enumerate(levels):
                    hit = out[f"cross{i}_hit"]
                    cross = ~hit & (A_new >= u)
                    if np.any(cross):
                        lam = (u - A[cross]) / (A_new[cross] - A[cross])
                        out[f"cross{i}_r"][cross] = r[cross] + lam * (r_new[cross] - r[cross])
                        out[f"cross{i}_t"][cross] = t[cross] + lam * (t_new[cross] - t[cross])
                        out[f"cross{i}_time"][cross] = (k + lam) * dt
                        hit[cross] = True
                A, f_old = A_new, f_new
            r, t = r_new, t_new
            if k + 1 in slots:
                record(slots[k + 1])
        return out

    flat = _run_blocked(cfg, purpose, kernel)
    ens = PathEnsemble(times=times, states={"r": flat["r"], "t": flat["t"]})
    if factor is not None:
        ens.clock = flat["clock"]
        ens.crossings = _collect_crossings(flat, levels, ("r", "t", "time"))
    return ens


# ---------------------------------------------------------------------------
# radial sphere Brownian motion


def sim_radial_s(
    cfg: SimConfig,
    x0: tuple[float, float] = (0.0, 0.0),
    record_times: Sequence[float] = (),
    averages: Mapping[str, Callable] | None = None,
    burn: float = 0.0,
    purpose: int = PURPOSE_MAIN,
) -> PathEnsemble:
    """Radial sphere diffusion ``(rs, th)``.

    ``averages`` maps names to functions ``f(rs, th)`` accumulated as
    left-point time averages over ``(burn, horizon]``.
    """
    times, slots = _snap_slots(cfg, record_times)
    burn_steps = int(round(burn / cfg.step))
    if not 0 <= burn_steps < cfg.steps:
        raise ValueError("burn must lie inside the horizon")
    averages = dict(averages or {})
    dt, sq = cfg.step, np.sqrt(cfg.step)
    n = cfg.n
    cap = _drift_cap(cfg)
    guard = 0.5 * sq
    hi = np.pi / 2 - cfg.r_floor
    r0, th0 = float(x0[0]), float(x0[1])
    if not 0 <= r0 < np.pi / 2:
        raise ValueError("x0 radial coordinate must lie in [0, pi/2)")

    def kernel(width, rng):
        r = np.full(width, r0)
        th = np.full(width, th0 % TWO_PI)
        m = len(times)
        out = {"r": np.empty((m, width)), "th": np.empty((m, width))}
        acc = {name: np.zeros(width) for name in averages}

        def record(j):
            out["r"][j] = r
            out["th"][j] = th

        if 0 in slots:
            record(slots[0])
        for k in range(cfg.steps):
            dw = rng.standard_normal((2, width))
            if k >= burn_steps:
                for name, f in averages.items():
                    acc[name] += f(r, th) * dt
            re = np.clip(r, guard, np.pi / 2 - guard)
            disp = np.clip(0.5 * sphere_radial_drift(re, n) * dt, -cap, cap)
            r = np.minimum(np.abs(r + disp + sq * dw[0]), hi)
            th = np.mod(th + np.tan(re) * sq * dw[1], TWO_PI)
            if k + 1 in slots:
                record(slots[k + 1])
        span = (cfg.steps - burn_steps) * dt
        for name in acc:
            out[f"avg_{name}"] = acc[name] / span
        return out

    flat = _run_blocked(cfg, purpose, kernel)
    ens = PathEnsemble(times=times, states={"r": flat["r"], "th": flat["th"]})
    ens.averages = {name: flat[f"avg_{name}"] for name in averages}
    return ens


# ---------------------------------------------------------------------------
# conditioned processes (absorbing)


def sim_hproc(
    cfg: SimConfig,
    x0: tuple[float, float] = (0.0, 0.0),
    record_times: Sequence[float] = (),
    purpose: int = PURPOSE_MAIN,
) -> PathEnsemble:
    """Sphere diffusion conditioned to avoid the zero of the conformal
    factor; absorbed (and frozen) once the factor falls below
    ``absorb_floor_h``.
    """
    times, slots = _snap_slots(cfg, record_times)
    dt, sq = cfg.step, np.sqrt(cfg.step)
    n = cfg.n
    cap = _drift_cap(cfg)
    guard = 0.5 * sq
    hi = np.pi / 2 - cfg.r_floor
    floor = cfg.absorb_floor_h
    r0, th0 = float(x0[0]), float(x0[1])
    if h_fun(r0, th0) <= floor:
        raise ValueError("x0 starts inside the absorption region")

    def kernel(width, rng):
        r = np.full(width, r0)
        th = np.full(width, th0 % TWO_PI)
        alive = np.ones(width, dtype=bool)
        death = np.full(width, np.inf)
        m = len(times)
        out = {
            "r": np.empty((m, width)),
            "th": np.empty((m, width)),
            "alive": np.empty((m, width), dtype=bool),
        }

        def record(j):
            out["r"][j] = r
            out["th"][j] = th
            out["alive"][j] = alive

        if 0 in slots:
            record(slots[0])
        for k in range(cfg.steps):
            dw = rng.standard_normal((2, width))
            re = np.clip(r, guard, np.pi / 2 - guard)
            br, bth = drift_hproc((re, th), n)
            r_new = np.minimum(np.abs(r + np.clip(br * dt, -cap, cap) + sq * dw[0]), hi)
            th_new = np.mod(th + np.clip(bth * dt, -cap, cap) + np.tan(re) * sq * dw[1], TWO_PI)
            r = np.where(alive, r_new, r)
            th = np.where(alive, th_new, th)
            died = alive & (h_fun(r, th) < floor)
            death[died] = (k + 1) * dt
            alive &= ~died
            if k + 1 in slots:
                record(slots[k + 1])
        out["death_time"] = death
        return out

    flat = _run_blocked(cfg, purpose, kernel)
    return PathEnsemble(
        times=times,
        states={"r": flat["r"], "th": flat["th"]},
        alive=flat["alive"].astype(bool),
        death_time=flat["death_time"],
    )


def sim_Nproc(
    cfg: SimConfig,
    x0: tuple[float, float],
    record_times: Sequence[float] = (),
    purpose: int = PURPOSE_MAIN,
) -> PathEnsemble:
    """Heisenberg radial diffusion conditioned to avoid the origin; absorbed
    (and frozen) once the quartic gauge falls below ``absorb_floor_N``."""
    times, slots = _snap_slots(cfg, record_times)
    dt, sq = cfg.step, np.sqrt(cfg.step)
    n = cfg.n
    cap = _drift_cap(cfg)
    guard = 0.5 * sq
    floor = cfg.absorb_floor_N
    r0, t0 = float(x0[0]), float(x0[1])
    if koranyi_N(r0, t0) <= floor:
        raise ValueError("x0 starts inside the absorption region")

    def kernel(width, rng):
        r = np.full(width, r0)
        t = np.full(width, t0)
        alive = np.ones(width, dtype=bool)
        death = np.full(width, np.inf)
        m = len(times)
        out = {
            "r": np.empty((m, width)),
            "t": np.empty((m, width)),
            "alive": np.empty((m, width), dtype=bool),
        }

        def record(j):
            out["r"][j] = r
            out["t"][j] = t
            out["alive"][j] = alive

        if 0 in slots:
            record(slots[0])
        for k in range(cfg.steps):
            dw = rng.standard_normal((2, width))
            re = np.maximum(r, guard)
            br, bt = drift_Nproc((re, t), n)
            r_new = np.maximum(np.abs(r + np.clip(br * dt, -cap, cap) + sq * dw[0]), cfg.r_floor)
            t_new = t + np.clip(bt * dt, -cap, cap) + r * sq * dw[1]
            r = np.where(alive, r_new, r)
            t = np.where(alive, t_new, t)
            died = alive & (koranyi_N(r, t) < floor)
            death[died] = (k + 1) * dt
            alive &= ~died
            if k + 1 in slots:
                record(slots[k + 1])
        out["death_time"] = death
        return out

    flat = _run_blocked(cfg, purpose, kernel)
    return PathEnsemble(
        times=times,
        states={"r": flat["r"], "t": flat["t"]},
        alive=flat["alive"].astype(bool),
        death_time=flat["death_time"],
    )
