import csv
import json
import math

import pytest

from leakygraph.cli import PRESETS, main, parse_number


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


RING = {"experiment": "ring", "radius": 2.0, "gamma": 3.0, "count": 60}


@pytest.mark.parametrize("text,value", [("pi/3", math.pi / 3), ("0.15*pi", 0.15 * math.pi),
                                        ("-2.5e-3", -2.5e-3), ("2*(1+e)", 2 * (1 + math.e))])
def test_parse_number(text, value):
    assert parse_number(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["__import__('os')", "pi**", "x"])
def test_parse_number_rejects(text):
    with pytest.raises(ValueError):
        parse_number(text)


def test_validate_ok(tmp_path, capsys):
    assert main(["validate", write(tmp_path / "c.json", RING)]) == 0
    assert capsys.readouterr().out.strip() == "ok"


@pytest.mark.parametrize("patch,field", [
    ({"gamma": -1.0}, "gamma"),
    ({"colour": "red"}, "colour"),
    ({"spacing": 0.1}, "count/spacing"),
    ({"solver": {"energy_window": [-1.0, 0.5]}}, "solver/energy_window"),
])
def test_validate_rejects(tmp_path, capsys, patch, field):
    cfg = dict(RING, **patch)
    assert main(["validate", write(tmp_path / "c.json", cfg)]) == 2
    assert capsys.readouterr().err.startswith(f"config error: {field}")


def test_validate_star_closing_angle(tmp_path, capsys):
    cfg = {"experiment": "star-sweep", "gamma": 1.0, "angles": [3.0, 3.3],
           "arm_lengths": [5.0, 5.0, 5.0], "spacing": 0.5, "grid": [1.0, 2.0, 3.0]}
    assert main(["validate", write(tmp_path / "c.json", cfg)]) == 2
    assert "beta_N" in capsys.readouterr().err


def test_validate_missing_and_malformed(tmp_path):
    assert main(["validate", write(tmp_path / "c.json", {"experiment": "ring", "gamma": 1.0,
                                                          "count": 10})]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["validate", str(bad)]) == 2
    assert main(["validate", str(tmp_path / "missing.json")]) == 2


def test_ring_run_and_manifest_round_trip(tmp_path):
    out1 = str(tmp_path / "a")
    assert main(["ring", "--radius", "2", "--gamma", "3", "--count", "60", "--output", out1]) == 0
    rows = read_csv(out1 + ".csv")
    assert rows[0] == ["E", "multiplicity", "flag"]
    assert [r[1] for r in rows[1:]] == ["1", "2", "2"]
    man = json.loads(open(out1 + ".manifest.json").read())
    assert man["schema_version"] == "1.0" and man["experiment"] == "ring"
    assert man["outputs"] == ["a.csv"]
    out2 = str(tmp_path / "b")
    assert main(["run", out1 + ".manifest.json", "--output", out2]) == 0
    assert open(out1 + ".csv").read() == open(out2 + ".csv").read()


def test_solver_failure_exit_code(tmp_path, capsys):
    rc = main(["eigenfunction", "--radius", "2", "--gamma", "3", "--count", "60", "--state", "9",
               "--nx", "5", "--ny", "5", "--output", str(tmp_path / "e")])
    assert rc == 3
    assert "solver failure" in capsys.readouterr().err


def test_polymer_command(tmp_path):
    out = str(tmp_path / "p")
    assert main(["polymer", "--alpha", "1", "--n", "8", "--l0", "1", "--output", out]) == 0
    rows = read_csv(out + ".csv")
    assert rows[0] == ["n", "l0", "alpha", "kappa", "E", "residual"]
    assert float(rows[1][5]) < 1e-10


def test_oracle_ring_command(tmp_path):
    out = str(tmp_path / "o")
    assert main(["oracle-ring", "--radius", "10", "--gamma", "0.5", "--output", out]) == 0
    rows = read_csv(out + ".csv")
    assert [r[0] for r in rows[1:]] == ["0", "1", "2"]
    assert float(rows[1][1]) == pytest.approx(-0.06558, abs=1e-5)


def test_eigenfunction_command(tmp_path, capsys):
    out = str(tmp_path / "f")
    assert main(["eigenfunction", "--radius", "2", "--gamma", "3", "--count", "60",
                 "--state", "0", "--nx", "9", "--ny", "7", "--output", out]) == 0
    assert capsys.readouterr().out.startswith("E = ")
    rows = read_csv(out + ".csv")
    assert rows[0] == ["x", "y", "psi", "near_site"] and len(rows) == 1 + 63


def test_star_sweep_command(tmp_path):
    out = str(tmp_path / "s")
    assert main(["star-sweep", "--gamma", "1", "--angles", "pi/2", "--arm-lengths", "5,5",
                 "--spacing", "0.25", "--grid", "0.3*pi:0.9*pi:3",
                 "--kappa-range", "0.3,2", "--scan-points", "30", "--output", out]) == 0
    rows = read_csv(out + ".csv")
    assert rows[0][0] == "param" and len(rows) == 4


def test_resonance_sweep_command(tmp_path):
    out = str(tmp_path / "r")
    assert main(["resonance-sweep", "--radius", "3", "--width", "1.9", "--gamma", "1",
                 "--spacing", "0.5", "--grid", "1.5,2.0,2.5,3.0", "--kappa-range", "0.3,1",
                 "--scan-points", "20", "--output", out]) == 0
    gaps = json.loads(open(out + ".gaps.json").read())
    assert "crossings" in gaps and "plateaus" in gaps
    man = json.loads(open(out + ".manifest.json").read())
    assert set(man["outputs"]) == {"r.csv", "r.gaps.json", "r.points.csv"}


def test_dry_run_and_preset(capsys):
    assert main(["zline-sweep", "--preset", "fig17", "--dry-run"]) == 0
    cfg = json.loads(capsys.readouterr().out)
    assert cfg["bend_angle"] == pytest.approx(0.32 * math.pi)
    assert main(["ring", "--preset", "fig1", "--spacing", "0.1", "--dry-run"]) == 0
    cfg = json.loads(capsys.readouterr().out)
    assert "count" not in cfg and cfg["spacing"] == 0.1


def test_presets_and_schema(capsys):
    assert main(["presets"]) == 0
    names = capsys.readouterr().out.split()
    for fig in ("fig1", "fig2", "fig3", "fig8", "fig12", "fig15", "fig16", "fig18"):
        assert fig in names
    assert main(["schema"]) == 0
    schema = json.loads(capsys.readouterr().out)
    assert schema["additionalProperties"] is False


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_validate(name, tmp_path):
    assert main(["validate", write(tmp_path / "c.json", PRESETS[name])]) == 0
