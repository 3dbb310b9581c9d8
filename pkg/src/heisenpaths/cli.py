"""Command-line runner: config resolution, experiment drivers, and flat
serialization of results.

Every command resolves its parameters the same way: built-in defaults, then
a ``key = value`` config file (``--config``), then command-line overrides
(``--seed``/``--out``/``--workers`` flags and positional ``key=value``
pairs).  Unknown keys are rejected.  Each run writes into its output
directory:

* ``manifest.txt`` — flat sorted ``key = value`` lines: the resolved config
  echo (execution-only keys like the worker count excluded), tool version,
  numeric results, and one ``test.<name>.value/.tolerance/.pass`` triple per
  named check;
* data CSVs (schemas in the README): header row, fixed column order,
  17-significant-digit floats;
* ``run.log`` — timestamp and invocation echo.  The log is the only file
  with wall-clock content, so manifest and CSVs are byte-identical across
  reruns with the same config and seed, for any worker count.

Exit codes: 0 all checks passed, 1 at least one check failed, 2 usage or
config error (including an output path whose parent directory is missing),
3 I/O failure while writing results.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .analysis import (
    doob_semigroup_check,
    doob_semigroup_check_N,
    pushforward_experiment_cayley,
    pushforward_experiment_kelvin,
    tdist_experiment,
)
from .operators import TestFunction, exp_jet, gauge_jet, sphere_basket
from .sde import (
    SimConfig,
    project_radial,
    sim_full_h,
    sim_hproc,
    sim_Nproc,
    sim_radial_h,
    sim_radial_s,
)
from .verify import CheckRecord, verify_geometry, verify_operators

__all__ = ["main"]


class ConfigError(ValueError):
    """Bad key, bad value, or unusable output location (exit code 2)."""


# ---------------------------------------------------------------------------
# config schema and resolution


def _parse_float(s: str) -> float:
    return float(s)


def _parse_int(s: str) -> int:
    f = float(s)
    i = int(round(f))
    if abs(f - i) > 0:
        raise ValueError(f"expected an integer, got {s!r}")
    return i


def _parse_floats(s: str) -> tuple[float, ...]:
    items = [p for p in s.replace(",", " ").split() if p]
    if not items:
        raise ValueError("empty list")
    return tuple(float(p) for p in items)


def _parse_str(s: str) -> str:
    return s


SIM_KEYS = {
    "n": _parse_int,
    "step": _parse_float,
    "horizon": _parse_float,
    "paths": _parse_int,
    "seed": _parse_int,
    "pole_eps": _parse_float,
    "r_floor": _parse_float,
    "tame": _parse_float,
    "workers": _parse_int,
}

SIM_DEFAULTS = {
    "n": 1,
    "step": 1e-3,
    "horizon": 1.0,
    "paths": 20_000,
    "seed": 1,
    "pole_eps": 1e-3,
    "r_floor": 1e-6,
    "tame": 4.0,
    "workers": 1,
}

# keys that describe execution, not the experiment: excluded from the
# manifest's config echo so reruns compare byte-identical
ECHO_EXCLUDE = {"workers", "out"}


def _schema(extra: dict, defaults: dict, tol_overrides: bool = False):
    keys = dict(SIM_KEYS)
    keys.update(extra)
    keys["out"] = _parse_str
    dft = dict(SIM_DEFAULTS)
    dft.update(defaults)
    return {"keys": keys, "defaults": dft, "tol": tol_overrides}


COMMANDS = {
    ("verify", "geometry"): _schema({}, {"out": "verify_geometry_out"}, tol_overrides=True),
    ("verify", "operators"): _schema({}, {"out": "verify_operators_out"}, tol_overrides=True),
    ("experiment", "cayley"): _schema(
        {"x0_r": _parse_float, "x0_t": _parse_float, "u_grid": _parse_floats, "horizon_a": _parse_float},
        {"x0_r": 0.0, "x0_t": 0.0, "u_grid": (0.3,), "horizon_a": 25.0, "out": "experiment_cayley_out"},
    ),
    ("experiment", "kelvin"): _schema(
        {"x0_r": _parse_float, "x0_t": _parse_float, "u_grid": _parse_floats, "horizon_a": _parse_float},
        {"x0_r": 1.0, "x0_t": 0.0, "u_grid": (0.2,), "horizon_a": 50.0, "out": "experiment_kelvin_out"},
    ),
    ("experiment", "tdist"): _schema(
        {"x0_r": _parse_float, "x0_t": _parse_float, "ts": _parse_floats},
        {"x0_r": 0.0, "x0_t": 0.0, "ts": (0.0, 0.25, 0.5, 1.0, 2.0), "out": "experiment_tdist_out"},
    ),
    ("experiment", "semigroup"): _schema(
        {
            "x0_r": _parse_float,
            "x0_t": _parse_float,
            "t_grid": _parse_floats,
            "xn_r": _parse_float,
            "xn_t": _parse_float,
            "tn": _parse_float,
        },
        {
            "x0_r": 0.0,
            "x0_t": 0.0,
            "t_grid": (0.25, 0.5),
            "xn_r": 1.0,
            "xn_t": 0.0,
            "tn": 0.5,
            "out": "experiment_semigroup_out",
        },
    ),
    ("simulate", "full-h"): _schema(
        {"x0_t": _parse_float, "record": _parse_floats},
        {"x0_t": 0.0, "record": (), "out": "simulate_full-h_out"},
    ),
    ("simulate", "radial-h"): _schema(
        {"x0_r": _parse_float, "x0_t": _parse_float, "record": _parse_floats},
        {"x0_r": 0.0, "x0_t": 0.0, "record": (), "out": "simulate_radial-h_out"},
    ),
    ("simulate", "radial-s"): _schema(
        {"x0_r": _parse_float, "x0_t": _parse_float, "record": _parse_floats},
        {"x0_r": 0.0, "x0_t": 0.0, "record": (), "out": "simulate_radial-s_out"},
    ),
    ("simulate", "hproc"): _schema(
        {"x0_r": _parse_float, "x0_t": _parse_float, "record": _parse_floats},
        {"x0_r": 0.0, "x0_t": 0.0, "record": (), "out": "simulate_hproc_out"},
    ),
    ("simulate", "nproc"): _schema(
        {"x0_r": _parse_float, "x0_t": _parse_float, "record": _parse_floats},
        {"x0_r": 1.0, "x0_t": 0.0, "record": (), "out": "simulate_nproc_out"},
    ),
}


def _read_config_file(path: str) -> dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    out: dict[str, str] = {}
    for ln, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{ln}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def resolve_config(command: tuple[str, str], raw: dict[str, str]) -> tuple[dict, dict[str, float]]:
    """Typed config plus tolerance overrides from raw key=value strings."""
    schema = COMMANDS[command]
    cfg = dict(schema["defaults"])
    tol: dict[str, float] = {}
    for key, value in raw.items():
        if schema["tol"] and key.startswith("tol."):
            try:
                tol[key[4:]] = float(value)
            except ValueError as e:
                raise ConfigError(f"bad tolerance override {key}={value!r}") from e
            continue
        if key not in schema["keys"]:
            raise ConfigError(f"unknown config key {key!r} for {' '.join(command)}")
        try:
            cfg[key] = schema["keys"][key](value)
        except ValueError as e:
            raise ConfigError(f"bad value for {key}: {value!r} ({e})") from e
    return cfg, tol


def _sim_config(cfg: dict) -> SimConfig:
    try:
        return SimConfig(**{k: cfg[k] for k in SIM_DEFAULTS})
    except ValueError as e:
        raise ConfigError(str(e)) from e


# ---------------------------------------------------------------------------
# serialization


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _manifest_lines(command, cfg, records: list[CheckRecord], extra: dict) -> list[str]:
    rows = {
        "meta.command": " ".join(command),
        "meta.version": __version__,
    }
    for key, value in cfg.items():
        if key in ECHO_EXCLUDE:
            continue
        if isinstance(value, tuple):
            rows[f"config.{key}"] = ",".join(_fmt(x) for x in value)
        else:
            rows[f"config.{key}"] = _fmt(value)
    for key, value in extra.items():
        rows[key] = _fmt(value)
    for rec in records:
        rows[f"test.{rec.name}.value"] = _fmt(rec.value)
        rows[f"test.{rec.name}.tolerance"] = _fmt(rec.tolerance)
        rows[f"test.{rec.name}.op"] = rec.kind
        rows[f"test.{rec.name}.pass"] = _fmt(rec.passed)
    return [f"{k} = {rows[k]}\n" for k in sorted(rows)]


def _csv_lines(header: list[str], rows) -> list[str]:
    out = [",".join(header) + "\n"]
    for row in rows:
        out.append(",".join(_fmt(v) for v in row) + "\n")
    return out


class RunWriter:
    """Collects all output files, then writes them once.

    The output directory itself is created if missing, but a missing parent
    is a config error: the caller pointed the run somewhere that does not
    exist.
    """

    def __init__(self, out_dir: str):
        self.out_dir = out_dir
        self.files: dict[str, list[str]] = {}
        parent = os.path.dirname(os.path.abspath(out_dir))
        if not os.path.isdir(parent):
            raise ConfigError(f"parent of output directory does not exist: {parent}")

    def add(self, name: str, lines: list[str]):
        self.files[name] = lines

    def flush(self):
        os.makedirs(self.out_dir, exist_ok=True)
        for name, lines in sorted(self.files.items()):
            with open(os.path.join(self.out_dir, name), "w", encoding="utf-8", newline="") as fh:
                fh.writelines(lines)


def _apply_tol(records: list[CheckRecord], tol: dict[str, float]) -> list[CheckRecord]:
    known = {r.name for r in records}
    for name in tol:
        if name not in known:
            raise ConfigError(f"tolerance override for unknown check {name!r}")
    return [
        CheckRecord(r.name, r.value, tol.get(r.name, r.tolerance), r.kind) for r in records
    ]


# ---------------------------------------------------------------------------
# command drivers (each returns manifest records + data files)


def _drive_verify(sub: str, cfg: dict, tol: dict) -> tuple[list[CheckRecord], dict, dict]:
    if sub == "geometry":
        records = verify_geometry(seed=cfg["seed"])
        extra = {
            "note.green_relation": (
                "ratio is 2^n with the factor as implemented; rescaling the factor "
                "by its chart-center value 4 would normalize the constant to 1"
            )
        }
    else:
        records, meta = verify_operators(seed=cfg["seed"])
        extra = {"result.skipped_cells": meta["skipped_cells"]}
    return _apply_tol(records, tol), extra, {}


def _drive_cayley(cfg: dict) -> tuple[list[CheckRecord], dict, dict]:
    sim = _sim_config(cfg)
    rep = pushforward_experiment_cayley(
        (cfg["x0_r"], cfg["x0_t"]), cfg["u_grid"], sim, horizon_a=cfg["horizon_a"]
    )
    records: list[CheckRecord] = []
    extra: dict = {}
    rows = []
    for j, u in enumerate(rep["u_grid"]):
        rec = rep[u]
        tag = f"cayley_u{j}"
        for name in ("r", "th", "gauge"):
            records.append(
                CheckRecord(f"{tag}_ks_{name}", rec[f"ks_{name}"], rec[f"crit_{name}"] + 0.02)
            )
            extra[f"result.{tag}_p_{name}"] = rec[f"p_{name}"]
        records.append(CheckRecord(f"{tag}_drop_gap", rec["drop_gap"], rec["drop_tol"]))
        extra[f"result.{tag}_dropA"] = rec["dropA"]
        extra[f"result.{tag}_dropB"] = rec["dropB"]
        for route in ("A", "B"):
            sam = rec["samples"][route]
            for r_, th_, g_ in zip(sam["r"], sam["th"], sam["gauge"]):
                rows.append((u, route, r_, th_, g_))
    files = {"samples.csv": _csv_lines(["u", "route", "r", "theta", "gauge"], rows)}
    return records, extra, files


def _drive_kelvin(cfg: dict) -> tuple[list[CheckRecord], dict, dict]:
    sim = _sim_config(cfg)
    x0 = (cfg["x0_r"], cfg["x0_t"])
    records: list[CheckRecord] = []
    extra: dict = {}
    files: dict = {}
    for orientation in ("image", "preimage"):
        rep = pushforward_experiment_kelvin(
            x0, cfg["u_grid"], sim, orientation=orientation, horizon_a=cfg["horizon_a"]
        )
        rows = []
        for j, u in enumerate(rep["u_grid"]):
            rec = rep[u]
            tag = f"kelvin_{orientation}_u{j}"
            if orientation == "image":
                for name in ("r", "t", "gauge"):
                    records.append(
                        CheckRecord(
                            f"{tag}_ks_{name}", rec[f"ks_{name}"], rec[f"crit_{name}"] + 0.02
                        )
                    )
                    extra[f"result.{tag}_p_{name}"] = rec[f"p_{name}"]
                records.append(CheckRecord(f"{tag}_drop_gap", rec["drop_gap"], rec["drop_tol"]))
            else:
                # negative control: the mismatch must be LARGE for the run to pass
                records.append(CheckRecord(f"{tag}_separation", rec["ks_r"], 0.1, kind="ge"))
                law_ok = rec["ks_r"] <= rec["crit_r"] + 0.02
                extra[f"note.{tag}_law"] = (
                    "FAIL (expected: negative control)" if not law_ok else "PASS (unexpected)"
                )
                extra[f"result.{tag}_ks_r"] = rec["ks_r"]
            for route in ("A", "B"):
                sam = rec["samples"][route]
                for r_, t_, g_ in zip(sam["r"], sam["t"], sam["gauge"]):
                    rows.append((u, route, r_, t_, g_))
        files[f"samples_{orientation}.csv"] = _csv_lines(
            ["u", "route", "r", "t", "gauge"], rows
        )
    return records, extra, files


def _drive_tdist(cfg: dict) -> tuple[list[CheckRecord], dict, dict]:
    sim = _sim_config(cfg)
    rep = tdist_experiment(cfg["ts"], sim, x0=(cfg["x0_r"], cfg["x0_t"]))
    curve = rep["curve"]
    records = [
        CheckRecord("tdist_sup_gap", rep["sup_gap"], 0.03),
        CheckRecord("tdist_s0_exact", abs(float(curve.s_hat[curve.ts == 0.0][0]) - 1.0) if np.any(curve.ts == 0.0) else 0.0, 0.0),
    ]
    extra = {"result.capped_mass": curve.capped_mass}
    rows = [
        (t, s, se, e, abs(e - (1.0 - s)) if t > 0 else 0.0)
        for t, s, se, e in zip(curve.ts, curve.s_hat, curve.se, rep["ecdf"])
    ]
    files = {
        "survival.csv": _csv_lines(["t", "s_hat", "se", "absorb_ecdf", "gap"], rows)
    }
    return records, extra, files


def _drive_semigroup(cfg: dict) -> tuple[list[CheckRecord], dict, dict]:
    sim = _sim_config(cfg)
    records: list[CheckRecord] = []
    rows = []
    x = (cfg["x0_r"], cfg["x0_t"])
    for f in sphere_basket():
        for t in cfg["t_grid"]:
            res = doob_semigroup_check(f, x, t, sim)
            records.append(CheckRecord(f"semigroup_{f.name}_t{_fmt(t)}", res["gap"], res["tol"]))
            rows.append(
                (
                    "sphere", f.name, t,
                    res["conditioned"].value, res["conditioned"].std_error,
                    res["weighted"].value, res["weighted"].std_error,
                    res["gap"], res["tol"],
                )
            )
    expN = TestFunction("expN", lambda u, v: exp_jet(gauge_jet(u, v), -1.0))
    res = doob_semigroup_check_N(expN, (cfg["xn_r"], cfg["xn_t"]), cfg["tn"], sim)
    records.append(CheckRecord(f"semigroup_N_expN_t{_fmt(cfg['tn'])}", res["gap"], res["tol"]))
    rows.append(
        (
            "heis", "expN", cfg["tn"],
            res["conditioned"].value, res["conditioned"].std_error,
            res["weighted"].value, res["weighted"].std_error,
            res["gap"], res["tol"],
        )
    )
    files = {
        "semigroup.csv": _csv_lines(
            ["side", "func", "t", "conditioned", "conditioned_se", "weighted", "weighted_se", "gap", "tol"],
            rows,
        )
    }
    return records, {}, files


def _default_record(sim: SimConfig) -> tuple[float, ...]:
    ks = sorted({int(round(i * sim.steps / 10)) for i in range(11)})
    return tuple(k * sim.step for k in ks)


def _drive_simulate(sub: str, cfg: dict) -> tuple[list[CheckRecord], dict, dict]:
    sim = _sim_config(cfg)
    record = cfg["record"] or _default_record(sim)
    if sub == "full-h":
        ens = sim_full_h(sim, x0_t=cfg["x0_t"], record_times=record)
        z, t = ens.states["z"], ens.states["t"]
        header = ["path", "time"]
        for j in range(sim.n):
            header += [f"z{j + 1}_re", f"z{j + 1}_im"]
        header.append("t")
        rows = []
        for p in range(ens.paths):
            for i, tm in enumerate(ens.times):
                row = [p, tm]
                for j in range(sim.n):
                    row += [z[i, j, p].real, z[i, j, p].imag]
                row.append(t[i, p])
                rows.append(tuple(row))
    else:
        runner = {
            "radial-h": (sim_radial_h, ("r", "t")),
            "radial-s": (sim_radial_s, ("r", "th")),
            "hproc": (sim_hproc, ("r", "th")),
            "nproc": (sim_Nproc, ("r", "t")),
        }[sub]
        fn, names = runner
        ens = fn(sim, x0=(cfg["x0_r"], cfg["x0_t"]), record_times=record)
        pretty = {"r": "r", "t": "t", "th": "theta"}
        header = ["path", "time"] + [pretty[nm] for nm in names]
        absorbing = ens.alive is not None
        if absorbing:
            header += ["absorbed", "absorption_time"]
        rows = []
        a, b = ens.states[names[0]], ens.states[names[1]]
        for p in range(ens.paths):
            for i, tm in enumerate(ens.times):
                row = [p, tm, a[i, p], b[i, p]]
                if absorbing:
                    row += [int(not ens.alive[i, p]), ens.death_time[p]]
                rows.append(tuple(row))
    extra = {
        "result.paths": ens.paths,
        "result.record_times": len(ens.times),
    }
    if ens.alive is not None:
        extra["result.absorbed_fraction"] = float(np.mean(~ens.alive[-1]))
    return [], extra, {"paths.csv": _csv_lines(header, rows)}


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heisenpaths",
        description="Simulators and checks for conformal images of group Brownian motion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, choices in (
        ("verify", ["geometry", "operators"]),
        ("experiment", ["cayley", "kelvin", "tdist", "semigroup"]),
        ("simulate", ["full-h", "radial-h", "radial-s", "hproc", "nproc"]),
    ):
        p = sub.add_parser(name)
        p.add_argument("target", choices=choices)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--workers", type=int)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    # trailing key=value overrides are collected from the leftovers so they
    # can be interleaved with the flags
    args, overrides = parser.parse_known_args(argv)
    command = (args.command, args.target)
    try:
        raw: dict[str, str] = {}
        if args.config:
            raw.update(_read_config_file(args.config))
        for item in overrides:
            if item.startswith("-") or "=" not in item:
                parser.error(f"unrecognized argument: {item}")
            key, _, value = item.partition("=")
            raw[key.strip()] = value.strip()
        if args.seed is not None:
            raw["seed"] = str(args.seed)
        if args.out is not None:
            raw["out"] = args.out
        if args.workers is not None:
            raw["workers"] = str(args.workers)
        cfg, tol = resolve_config(command, raw)
        _sim_config(cfg)  # every command shares the simulation keys: validate up front
        writer = RunWriter(cfg["out"])

        t0 = time.time()
        if command[0] == "verify":
            records, extra, files = _drive_verify(command[1], cfg, tol)
        elif command == ("experiment", "cayley"):
            records, extra, files = _drive_cayley(cfg)
        elif command == ("experiment", "kelvin"):
            records, extra, files = _drive_kelvin(cfg)
        elif command == ("experiment", "tdist"):
            records, extra, files = _drive_tdist(cfg)
        elif command == ("experiment", "semigroup"):
            records, extra, files = _drive_semigroup(cfg)
        else:
            records, extra, files = _drive_simulate(command[1], cfg)
        elapsed = time.time() - t0
    except ValueError as e:
        # library preconditions (bad start point, bad grid, ...) are config
        # errors from the runner's point of view
        print(f"config error: {e}", file=sys.stderr)
        return 2

    writer.add("manifest.txt", _manifest_lines(command, cfg, records, extra))
    for name, lines in files.items():
        writer.add(name, lines)
    writer.add(
        "run.log",
        [
            f"started {time.strftime('%Y-%m-%dT%H:%M:%S%z')}\n",
            f"command {' '.join(command)}\n",
            f"version {__version__}\n",
            f"workers {cfg['workers']}\n",
            f"elapsed_s {elapsed:.3f}\n",
        ],
    )
    try:
        writer.flush()
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 3

    failed = [r for r in records if not r.passed]
    for rec in records:
        flag = "PASS" if rec.passed else "FAIL"
        rel = "<=" if rec.kind == "le" else ">="
        print(f"{flag} {rec.name}: {_fmt(rec.value)} {rel} {_fmt(rec.tolerance)}")
    if failed:
        print(f"{len(failed)} check(s) failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
