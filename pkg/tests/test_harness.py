import json
import math
import os
import subprocess
import sys

import pytest
import yaml

from magspec.cli import main
from magspec.errors import ConfigError, PreconditionError
from magspec.harness import apply_overrides, compare, dump_config, load_config, run, validate_config

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def cfg(command, field=None, potential=None, **extra):
    out = {"field": field or {"kind": "step", "b0": 1.0, "radius": 1.0},
           "potential": potential or {"kind": "indicator_disk", "radius": 1.0},
           "command": dict(command), "seed": 0}
    out.update(extra)
    return out


def test_count_zero_coupling():
    rep = run(cfg({"name": "count", "lam": 0.0}))
    assert rep.result["total"] == 0 and rep.converged


def test_scan_csv_has_ratio_column():
    rep = run(cfg({"name": "scan", "lams": [10, 20]}))
    header = rep.csv_text().splitlines()[0].split(",")
    assert header == ["lam", "m", "count", "total", "n_over_lam", "converged"]
    assert rep.result["n_over_lam"] == [n / l for n, l in zip(rep.result["totals"], rep.result["lams"])]


def test_bounds_clr_radial_norms():
    rep = run(cfg({"name": "bounds", "theorem": "clr-radial"}))
    comps = rep.result["bounds"][0]["components"]
    assert comps["L1_log_B1"] == pytest.approx(math.pi / 2, rel=1e-8)
    assert comps["L1_halfline_Linf"] == pytest.approx(0.5, rel=1e-8)
    assert json.loads(rep.json_text())["result"]["theorem"] == "clr-radial"


def test_unknown_key_rejected_with_path():
    with pytest.raises(ConfigError) as exc:
        validate_config(cfg({"name": "count", "lam": 1.0, "lamda": 2.0}))
    assert exc.value.path == "command.lamda"
    with pytest.raises(ConfigError) as exc:
        validate_config({"fields": {}})
    assert exc.value.path == "fields"


def test_wrong_type_and_missing_values():
    with pytest.raises(ConfigError) as exc:
        validate_config(cfg({"name": "count", "lam": "big"}))
    assert exc.value.path == "command.lam"
    with pytest.raises(ConfigError) as exc:
        validate_config(cfg({"name": "count"}, field={"kind": "step", "b0": 1.0}))
    assert exc.value.path == "field.radius"
    with pytest.raises(ConfigError) as exc:
        run(cfg({"name": "count"}))
    assert exc.value.path == "command.lam"


def test_overrides():
    raw = apply_overrides(cfg({"name": "count"}), ["command.lam=2.5", "grid.variable=log", "potential.radius=2"])
    assert raw["command"]["lam"] == 2.5 and raw["grid"]["variable"] == "log" and raw["potential"]["radius"] == 2
    with pytest.raises(ConfigError):
        apply_overrides({}, ["nonsense"])


def test_round_trip_reproduces_csv(tmp_path):
    rep = run(cfg({"name": "scan", "lams": [5, 10]}, output={"dir": str(tmp_path), "prefix": "a"}))
    rep.write()
    embedded = json.loads((tmp_path / "a.json").read_text())["config"]
    again = run(embedded)
    assert again.csv_text() == (tmp_path / "a.csv").read_text()
    assert run(yaml.safe_load(dump_config(rep.config))).csv_text() == rep.csv_text()


def test_grid_overrides_apply_to_every_command():
    base = cfg({"name": "count", "lam": 5.0}, grid={"variable": "log"})
    assert run(base).config["grid"]["variable"] == "log"
    with pytest.raises(ConfigError):
        run(cfg({"name": "count", "lam": 5.0}, grid={"variable": "polar"}))


def test_compare_ratios():
    counts = run(cfg({"name": "scan", "lams": [0.01, 50.0]}, field={"kind": "aharonov-bohm", "flux": 0.5}))
    bounds = run(cfg({"name": "bounds", "theorem": "clr-radial", "lams": [0.01, 50.0]},
                     field={"kind": "aharonov-bohm", "flux": 0.5}))
    rows = compare(counts, bounds)
    assert rows[0]["count"] == 0 and rows[0]["ratio"] == 0.0
    assert rows[1]["ratio"] == pytest.approx(rows[1]["count"] / rows[1]["rhs"])
    other = run(cfg({"name": "bounds", "theorem": "clr-radial", "lams": [50.0]},
                    potential={"kind": "indicator_disk", "radius": 2.0}))
    with pytest.raises(PreconditionError):
        compare(counts, other)


def test_threshold_and_hardy_and_bs_and_assumption():
    th = run(cfg({"name": "threshold", "lam_hi": 10.0, "levels": [0, 1]}, field={"kind": "aharonov-bohm", "flux": 0.5}))
    assert th.result["relative_spread"] < 2e-3
    hd = run(cfg({"name": "hardy", "weight": "inv_one_plus_r2", "domain": 10.0, "h": 0.05}))
    assert hd.result["value"] > 0
    bs = run(cfg({"name": "bs", "lam": 1.0}))
    assert bs.result["mode"] == "non-integer" and bs.result["total"] > 0
    asn = run(cfg({"name": "assumption", "eps": 0.1}))
    # Phi(r) = r^2 / 2 stays within 0.1 of 0 up to r = sqrt(0.2)
    assert asn.result["satisfied"] is True
    assert asn.result["intervals"] == [[0.0, pytest.approx(math.sqrt(0.2), rel=1e-10)]]


def test_cli_success_and_files(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump(cfg({"name": "count", "lam": 2.0})))
    code = main(["count", "--config", str(path), "--out", str(tmp_path / "o")])
    assert code == 0
    assert (tmp_path / "o" / "run.csv").exists() and (tmp_path / "o" / "run.json").exists()
    assert capsys.readouterr().out.startswith("lam,m,count,total,converged")


def test_cli_error_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("field: {kind: step, b0: 1.0, radius: 1.0, colour: red}\n")
    assert main(["count", "--config", str(path), "--out", str(tmp_path)]) == 1
    assert "field.colour" in capsys.readouterr().err


def test_cli_unconverged_exit_code(tmp_path):
    args = ["count", "--out", str(tmp_path), "--override", "command.lam=3",
            "--override", "grid.max_doublings=0", "--override", "field={kind: zero}"]
    assert main(args) == 2


def test_cli_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "magspec", "scan", "--config",
                           os.path.join(ROOT, "configs", "weyl_scan.yaml"), "--out", str(tmp_path),
                           "--override", "command.lams=[10, 20]"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "weyl_scan.csv").exists()


def test_shipped_configs_validate():
    cdir = os.path.join(ROOT, "configs")
    for name in os.listdir(cdir):
        if name.endswith(".yaml"):
            load_config(os.path.join(cdir, name))
