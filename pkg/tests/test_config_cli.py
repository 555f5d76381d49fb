import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convexfreq.cli import main
from convexfreq.config import ExperimentConfig, build_domain, build_field
from convexfreq.errors import ConfigError
from convexfreq.fields import GridField
from convexfreq.presets import ORACLE_NAMES


def _run(tmp_path, command, cfg=None, extra=()):
    argv = [command, "--out", str(tmp_path / "out")]
    if cfg is not None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        argv += ["--config", str(path)]
    return main(argv + list(extra))


def _summary(capsys):
    return json.loads(capsys.readouterr().out)


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(field={"preset": "wedge_2pi/3"}, params={"radii": [0.1, 0.2]}, seed=9)
    back = ExperimentConfig.load(cfg.save(tmp_path / "c.json"))
    assert back.to_dict() == cfg.to_dict()
    assert back.to_json() == cfg.to_json()


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), threads=st.integers(1, 64),
       radii=st.lists(st.floats(0.01, 1.0), max_size=5), out=st.text("abc_/", min_size=1, max_size=8))
def test_config_round_trip_property(seed, threads, radii, out):
    cfg = ExperimentConfig(field={"preset": "poly_Im_z2"}, params={"radii": radii}, out=out,
                           seed=seed, threads=threads)
    assert ExperimentConfig.from_json(cfg.to_json()).to_dict() == cfg.to_dict()


def test_config_rejects_bad_input(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"fields": {}})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json("{not json")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"seed": -1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"threads": 0})
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"field": {"grid": "missing"}}))
    with pytest.raises(ConfigError):
        ExperimentConfig.load(path)


def test_build_field_variants(tmp_path):
    f = build_field(ExperimentConfig())
    assert f.to_dict()["kind"] == "harmonic_polynomial"
    w = build_field(ExperimentConfig(field={"kind": "wedge_eigenfunction", "alpha": np.pi / 2}))
    assert w.exponent == pytest.approx(2.0)
    g = build_field(ExperimentConfig(field={"solve": {"preset": "poly_Im_z2", "resolution": 16}}))
    assert isinstance(g, GridField)
    g.save(tmp_path / "g")
    cfg = ExperimentConfig(field={"grid": "g"})
    cfg._base = str(tmp_path)
    assert np.array_equal(build_field(cfg).values, g.values)
    assert build_domain(ExperimentConfig(domain={"halves": []}), None).dim == 2
    with pytest.raises(ConfigError):
        build_field(ExperimentConfig(field={"nothing": 1}))


def test_freq_command(tmp_path, capsys):
    assert _run(tmp_path, "freq", {"field": {"preset": "wedge_2pi/3"}}) == 0
    out = tmp_path / "out"
    rows = (out / "frequency.csv").read_text().splitlines()
    assert len(rows) == 11
    assert (out / "frequency.svg").read_text().startswith("<?xml")
    assert _summary(capsys)["status"] == 0


def test_solve_then_freq_on_grid(tmp_path, capsys):
    cfg = {"field": {"solve": {"preset": "poly_Im_z2", "resolution": 32}}}
    assert _run(tmp_path, "solve", cfg) == 0
    s = _summary(capsys)["summary"]
    assert s["N_outer"] == pytest.approx(2.0, rel=0.05)
    grid_cfg = {"field": {"grid": str(tmp_path / "out" / "field")}, "params": {"radii": [0.2, 0.4]}}
    assert _run(tmp_path, "freq", grid_cfg) == 0
    assert (tmp_path / "out" / "field.svg").exists()


def test_strata_beta_reif_blowup_commands(tmp_path, capsys):
    strata = {"field": {"preset": "poly_Im_z2"}, "params": {"region": {"center": [0, 0], "radius": 0.1},
                                                           "step": 0.025, "r": 0.03125}}
    assert _run(tmp_path, "strata", strata) == 0
    assert _run(tmp_path, "beta", {"seed": 4}) == 0
    assert _run(tmp_path, "reif", {"params": {"family": {"segment": 3}}}) == 0
    assert _run(tmp_path, "blowup") == 0
    out = tmp_path / "out"
    for name in ("strata.csv", "strata.svg", "beta.csv", "beta.svg", "reifenberg.json", "reifenberg.svg",
                 "blowup.json", "blowup.csv", "blowup.svg"):
        assert (out / name).stat().st_size > 0
    assert json.loads((out / "reifenberg.json").read_text())["satisfied"] is True
    assert len(json.loads((out / "blowup.json").read_text())) == len(ORACLE_NAMES)


def test_reif_from_sample_file(tmp_path, capsys):
    t = np.linspace(-0.9, 0.9, 100)
    lines = ["x,y,w"] + [f"{v},0,1" for v in t]
    (tmp_path / "sample.csv").write_text("\n".join(lines) + "\n")
    assert _run(tmp_path, "reif", {"params": {"sample": "sample.csv", "max_depth": 4}}) == 0
    assert _summary(capsys)["summary"]["satisfied"] is True


def test_cover_command_linear(tmp_path, capsys):
    cfg = {"field": {"preset": "half_plane_linear"}, "params": {"R": [0.125]}}
    assert _run(tmp_path, "cover", cfg) == 0
    out = tmp_path / "out"
    assert json.loads((out / "cover_R0.125.json").read_text())["count"] == 0
    assert (out / "cover_R0.125.svg").exists() and (out / "cover_summary.csv").exists()


def test_validation_exit_code(tmp_path, capsys):
    assert _run(tmp_path, "freq", {"field": {"preset": "nope"}}) == 1
    assert _run(tmp_path, "beta", {"params": {"k": 5}}) == 1
    assert _run(tmp_path, "freq", {"fields": {}}) == 1


def test_numerical_failure_exit_code(tmp_path, capsys):
    zero = {"field": {"kind": "harmonic_polynomial", "degree": 1, "coeffs": [0.0, 0.0], "dim": 2,
                      "domain": {"halves": [{"normal": [0.0, -1.0], "offset": 0.0}]}}}
    assert _run(tmp_path, "freq", zero) == 2
    rep = json.loads((tmp_path / "out" / "failure.json").read_text())
    assert rep["error"] == "DegenerateError"


def test_io_exit_code(tmp_path, capsys):
    assert main(["verify", "--config", str(tmp_path / "absent.json")]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["beta", "--out", str(blocker / "sub")]) == 3


def test_verify_command(tmp_path, capsys):
    assert _run(tmp_path, "verify", extra=["--seed", "3"]) == 0
    rep = json.loads((tmp_path / "out" / "verify.json").read_text())
    names = {c["name"] for c in rep["checks"]}
    assert {"boundary_monotonicity", "doubling", "lambda_equals_N", "beta_oracle"} <= names
    assert all(c["passed"] for c in rep["checks"])
    assert (tmp_path / "out" / "verify.csv").exists() and (tmp_path / "out" / "verify.svg").exists()


def test_same_seed_same_beta_output(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["beta", "--out", str(a), "--seed", "5"]) == 0
    assert main(["beta", "--out", str(b), "--seed", "5"]) == 0
    assert (a / "beta.csv").read_bytes() == (b / "beta.csv").read_bytes()
    assert (a / "beta.svg").read_bytes() == (b / "beta.svg").read_bytes()
