import json
import math

import pytest

from fractal_sumsets.cli import main
from fractal_sumsets.experiments import config_hash, eps_ladder, parse_tangent
from fractal_sumsets.angles import Slope
from fractal_sumsets.errors import DomainError


def _run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.mark.parametrize("slope,line", [("1/1", "1,1,small,dim<2"), ("1/2", "1,2,big,interior-nonempty"),
                                        ("6/112", "3,2,big,interior-nonempty"), ("3/5", "3,1,small,dim<2"), ("3/8", "3,2,big,interior-nonempty")])
def test_classify_angle(slope, line, capsys):
    code, out, _ = _run(["classify-angle", slope], capsys)
    assert code == 0
    assert out.strip() == line


def test_classify_angle_bad_input(capsys):
    code, _, err = _run(["classify-angle", "x/2"], capsys)
    assert code == 2 and "error" in err


def test_mc_rerun_is_byte_identical(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("FRACTAL_SUMSETS_OUT", raising=False)
    args = ["mc-circle", "--target", "four-corner", "--depth", "3", "--trials", "3000", "--seed", "4"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(args + ["--out", str(a)], capsys)[0] == 0
    assert _run(args + ["--out", str(b)], capsys)[0] == 0
    for name in ("summary.txt", "mc.csv", "config.json"):
        if name == "config.json":
            ca, cb = json.loads((a / name).read_text()), json.loads((b / name).read_text())
            ca.pop("output_dir"), cb.pop("output_dir")
            assert ca == cb
        else:
            assert (a / name).read_bytes() == (b / name).read_bytes()


def test_env_var_overrides_output(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("FRACTAL_SUMSETS_OUT", str(tmp_path / "env"))
    assert _run(["mc-circle", "--trials", "500", "--out", str(tmp_path / "flag")], capsys)[0] == 0
    assert (tmp_path / "env" / "mc.csv").exists()
    assert not (tmp_path / "flag").exists()


def test_config_file_and_flag_precedence(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("FRACTAL_SUMSETS_OUT", raising=False)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"trials": 700, "seed": 9, "target": "disk"}))
    out = tmp_path / "o"
    assert _run(["mc-circle", "--config", str(cfg), "--seed", "2", "--out", str(out)], capsys)[0] == 0
    stored = json.loads((out / "config.json").read_text())
    assert stored["trials"] == 700 and stored["seed"] == 2
    assert (out / "mc.csv").read_text().splitlines()[1].startswith("2,700,")


def test_sumset_small(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("FRACTAL_SUMSETS_OUT", raising=False)
    out = tmp_path / "s"
    code, text, _ = _run(["sumset", "--gamma", "1/9", "--eps-start", "0.0625", "--eps-stop", "0.0078125",
                          "--out", str(out)], capsys)
    assert code == 0
    assert "slope:" in text and "predicted: dim=1.63093" in text
    assert (out / "ladder.csv").read_text().count("\n") == 5
    assert len(list(out.glob("rung_*.pgm"))) == 4


def test_project_small(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("FRACTAL_SUMSETS_OUT", raising=False)
    code, text, _ = _run(["project", "--tan", "1/1", "--max-depth", "4", "--no-probe", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "mode: exact" in text and "predicted: dim<2" in text


def test_ifs_build(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("FRACTAL_SUMSETS_OUT", raising=False)
    code, text, _ = _run(["ifs-build", "--angles", "0.0", "--mode", "b-prime", "--depth", "4", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "ssc: True" in text
    assert (tmp_path / "ifs.txt").exists()


def test_audit_small(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("FRACTAL_SUMSETS_OUT", raising=False)
    code, text, _ = _run(["audit", "--samples", "2000", "--pairs", "40", "--grid", "51", "--out", str(tmp_path)], capsys)
    assert code == 0, text
    assert "lipschitz_plus_violations: 0 [pass]" in text
    assert (tmp_path / "audit.csv").read_text().startswith("quantity,value,samples,seed\n")


def test_audit_segment_reports_domain_error(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("FRACTAL_SUMSETS_OUT", raising=False)
    code, text, _ = _run(["audit", "--samples", "1000", "--curve", "segment", "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "transversality_domain_error" in text


def test_domain_errors_exit_2(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("FRACTAL_SUMSETS_OUT", raising=False)
    code, _, err = _run(["sumset", "--gamma", "0.7", "--out", str(tmp_path)], capsys)
    assert code == 2 and "gamma" in err
    code, _, err = _run(["sumset", "--eps-start", "0.1", "--eps-stop", "0.05", "--out", str(tmp_path)], capsys)
    assert code == 2 and "rungs" in err
    code, _, _ = _run(["mc-circle", "--config", str(tmp_path / "missing.json")], capsys)
    assert code == 2


def test_config_hash_ignores_output_dir():
    a = {"seed": 1, "output_dir": "x"}
    b = {"seed": 1, "output_dir": "y"}
    assert config_hash(a) == config_hash(b) != config_hash({"seed": 2})


def test_helpers():
    assert parse_tangent("1/2") == Slope(1, 2)
    assert parse_tangent("sqrt2") == pytest.approx(math.sqrt(2))
    assert len(eps_ladder(2.0 ** -4, 2.0 ** -10, 2.0)) == 7
    with pytest.raises(DomainError):
        eps_ladder(0.1, 0.05, 2.0)
