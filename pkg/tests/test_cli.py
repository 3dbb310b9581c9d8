"""Runner behaviour: config plumbing, exit taxonomy, file formats,
reproducibility."""

import numpy as np
import pytest

from heisenpaths.cli import main


def read_manifest(path):
    out = {}
    for line in path.read_text().splitlines():
        key, _, value = line.partition(" = ")
        out[key] = value
    return out


def read_csv(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


# ---------------------------------------------------------------------------
# exit taxonomy


def test_verify_geometry_default_passes(tmp_path, capsys):
    code = main(["verify", "geometry", "--out", str(tmp_path / "g")])
    assert code == 0
    assert "PASS kelvin_involution" in capsys.readouterr().out
    man = read_manifest(tmp_path / "g" / "manifest.txt")
    assert man["test.kelvin_involution.pass"] == "true"
    assert man["meta.command"] == "verify geometry"


def test_corrupted_tolerance_fails_named_check(tmp_path, capsys):
    code = main(
        ["verify", "geometry", "--out", str(tmp_path / "g"), "tol.chart_roundtrip_fwd=1e-30"]
    )
    assert code == 1
    assert "FAIL chart_roundtrip_fwd" in capsys.readouterr().out
    man = read_manifest(tmp_path / "g" / "manifest.txt")
    assert man["test.chart_roundtrip_fwd.pass"] == "false"
    assert man["test.chart_roundtrip_fwd.tolerance"] == "%.17g" % 1e-30


def test_unknown_key_rejected(tmp_path, capsys):
    assert main(["verify", "geometry", "--out", str(tmp_path / "g"), "bogus=1"]) == 2
    assert "unknown config key" in capsys.readouterr().err


def test_bad_n_rejected(tmp_path):
    assert main(["verify", "operators", "--out", str(tmp_path / "g"), "n=0"]) == 2


def test_missing_out_parent(tmp_path):
    target = tmp_path / "not" / "there" / "run"
    assert main(["verify", "geometry", "--out", str(target)]) == 2


def test_unknown_tolerance_name(tmp_path):
    assert main(["verify", "geometry", "--out", str(tmp_path / "g"), "tol.nope=1"]) == 2


def test_bad_subcommand_usage_error():
    with pytest.raises(SystemExit) as e:
        main(["verify", "nonsense"])
    assert e.value.code == 2


def test_bad_start_point_is_config_error(tmp_path):
    code = main(
        ["simulate", "nproc", "--out", str(tmp_path / "s"), "x0_r=0.0001", "x0_t=0",
         "paths=8", "horizon=0.01"]
    )
    assert code == 2


# ---------------------------------------------------------------------------
# config file plumbing


def test_config_file_and_precedence(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text(
        "# comment line\n"
        "\n"
        "paths = 16\n"
        "seed = 5\n"
        "horizon = 0.02\n"
        "step = 2e-3\n"
    )
    out = tmp_path / "r"
    code = main(
        ["simulate", "radial-h", "--config", str(cfgfile), "--out", str(out),
         "--seed", "9", "paths=24"]
    )
    assert code == 0
    man = read_manifest(out / "manifest.txt")
    assert man["config.seed"] == "9"  # flag beats file
    assert man["config.paths"] == "24"  # positional beats file
    assert man["config.horizon"] == "%.17g" % 0.02


def test_config_file_missing(tmp_path):
    assert main(["simulate", "radial-h", "--config", str(tmp_path / "no.cfg")]) == 2


def test_malformed_config_line(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("paths 16\n")
    assert main(["simulate", "radial-h", "--config", str(bad)]) == 2


# ---------------------------------------------------------------------------
# CSV schemas


def test_radial_h_csv_path_ids(tmp_path):
    out = tmp_path / "r"
    assert main(
        ["simulate", "radial-h", "--out", str(out), "paths=10", "horizon=0.02", "step=2e-3"]
    ) == 0
    header, rows = read_csv(out / "paths.csv")
    assert header == ["path", "time", "r", "t"]
    assert {int(float(r[0])) for r in rows} == set(range(10))


def test_full_h_n2_five_state_columns(tmp_path):
    out = tmp_path / "f"
    assert main(
        ["simulate", "full-h", "--out", str(out), "n=2", "paths=4", "horizon=0.02", "step=2e-3"]
    ) == 0
    header, rows = read_csv(out / "paths.csv")
    assert header == ["path", "time", "z1_re", "z1_im", "z2_re", "z2_im", "t"]
    assert len(header) - 2 == 5


def test_hproc_csv_absorption_columns(tmp_path):
    out = tmp_path / "h"
    assert main(
        ["simulate", "hproc", "--out", str(out), "paths=32", "horizon=1.0",
         "step=5e-3", "pole_eps=0.05", "x0_r=0.2", "x0_t=2.5"]
    ) == 0
    header, rows = read_csv(out / "paths.csv")
    assert header[-2:] == ["absorbed", "absorption_time"]
    flags = {r[-2] for r in rows}
    assert flags <= {"0", "1"}
    # an absorbed row carries a finite absorption time, a live one inf
    for r in rows:
        if r[-2] == "1":
            assert float(r[-1]) <= 1.0
    man = read_manifest(out / "manifest.txt")
    assert "result.absorbed_fraction" in man


def test_radial_s_csv(tmp_path):
    out = tmp_path / "s"
    assert main(
        ["simulate", "radial-s", "--out", str(out), "paths=6", "horizon=0.02",
         "step=2e-3", "x0_r=0.7", "x0_t=1.0"]
    ) == 0
    header, _ = read_csv(out / "paths.csv")
    assert header == ["path", "time", "r", "theta"]


def test_tdist_survival_csv_starts_at_one(tmp_path):
    out = tmp_path / "t"
    assert main(
        ["experiment", "tdist", "--out", str(out), "paths=2000", "step=2e-3",
         "ts=0,0.25,0.5"]
    ) == 0
    header, rows = read_csv(out / "survival.csv")
    assert header == ["t", "s_hat", "se", "absorb_ecdf", "gap"]
    assert float(rows[0][0]) == 0.0 and float(rows[0][1]) == 1.0


# ---------------------------------------------------------------------------
# experiments through the runner


def test_kelvin_manifest_shows_both_orientations(tmp_path):
    out = tmp_path / "k"
    code = main(
        ["experiment", "kelvin", "--out", str(out), "paths=1000", "step=2e-3",
         "horizon_a=25"]
    )
    assert code == 0  # the preimage law split is the expected outcome
    man = read_manifest(out / "manifest.txt")
    assert man["test.kelvin_image_u0_ks_r.pass"] == "true"
    assert man["test.kelvin_preimage_u0_separation.pass"] == "true"
    assert man["note.kelvin_preimage_u0_law"].startswith("FAIL")
    assert (out / "samples_image.csv").exists()
    assert (out / "samples_preimage.csv").exists()


def test_semigroup_csv(tmp_path):
    out = tmp_path / "sg"
    assert main(
        ["experiment", "semigroup", "--out", str(out), "paths=2000", "step=2e-3",
         "t_grid=0.25"]
    ) == 0
    header, rows = read_csv(out / "semigroup.csv")
    assert header[:3] == ["side", "func", "t"]
    sides = {r[0] for r in rows}
    assert sides == {"sphere", "heis"}


# ---------------------------------------------------------------------------
# reproducibility


def _run_tdist(out, workers):
    return main(
        ["experiment", "tdist", "--out", str(out), "paths=6000", "step=2e-3",
         "ts=0,0.25,0.5", "--workers", str(workers), "--seed", "42"]
    )


def test_byte_identity_across_reruns_and_workers(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert _run_tdist(a, 1) == 0
    assert _run_tdist(b, 1) == 0
    assert _run_tdist(c, 4) == 0
    for name in ("manifest.txt", "survival.csv"):
        ref = (a / name).read_bytes()
        assert (b / name).read_bytes() == ref
        assert (c / name).read_bytes() == ref
    # the log carries the wall clock and worker count and may differ
    assert (a / "run.log").exists()


def test_seed_changes_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "radial-h", "--out", str(a), "paths=16", "horizon=0.02",
                 "step=2e-3", "--seed", "1"]) == 0
    assert main(["simulate", "radial-h", "--out", str(b), "paths=16", "horizon=0.02",
                 "step=2e-3", "--seed", "2"]) == 0
    assert (a / "paths.csv").read_bytes() != (b / "paths.csv").read_bytes()


def test_manifest_floats_roundtrip(tmp_path):
    out = tmp_path / "m"
    assert main(["simulate", "radial-h", "--out", str(out), "paths=4", "horizon=0.02",
                 "step=2e-3"]) == 0
    man = read_manifest(out / "manifest.txt")
    # 17 significant digits reproduce the binary double exactly
    assert float(man["config.step"]) == 2e-3
    assert float(man["config.r_floor"]) == 1e-6
