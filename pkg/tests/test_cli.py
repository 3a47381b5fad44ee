import csv
import io
import json

import pytest

from betasource.cli import main


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_classify(capsys):
    assert main(["classify", "--family", "laguerre", "--t", "1", "--b", "2"]) == 0
    (row,) = _rows(capsys.readouterr().out)
    assert row["regime"] == "supercritical"
    assert float(row["saddle1_re"]) == -1


def test_jack_eval(capsys):
    assert main(["jack", "eval", "--kappa", "2", "--alpha", "1", "--x", "1,1"]) == 0
    (row,) = _rows(capsys.readouterr().out)
    assert float(row["re"]) == pytest.approx(3)


def test_hyperg_json(capsys):
    assert main(["hyperg", "--alpha", "2", "--x", "0.3,-0.1", "--y", "1,1", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert float(doc["rows"][0]["re"]) == pytest.approx(1.2214027581601699)


def test_sample_requires_seed(capsys):
    assert main(["sample", "--family", "gaussian", "--beta", "2", "--t", "1", "--N", "2", "--samples", "3"]) == 2
    assert "--seed" in capsys.readouterr().err
    assert main(["sample", "--family", "gaussian", "--beta", "2", "--t", "1", "--N", "2", "--samples", "3",
                 "--seed", "5"]) == 0
    assert len(_rows(capsys.readouterr().out)) == 3


def test_config_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"family": "gaussian", "beta": 2, "t": 1.0, "f": [0.5, 0.0], "s": [0.3]}))
    assert main(["kavg", "--config", str(cfg)]) == 0
    exact = float(_rows(capsys.readouterr().out)[0]["re"])
    assert main(["kavg", "--config", str(cfg), "--s", "0.4"]) == 0
    other = float(_rows(capsys.readouterr().out)[0]["re"])
    assert exact != other
    assert main(["kavg", "--config", str(cfg), "--method", "mc"]) == 2


def test_limit_and_scan_to_file(tmp_path, capsys):
    assert main(["limit", "--kind", "gauss", "--alpha", "1", "--y", "0.4", "--sigma", "1.1"]) == 0
    assert float(_rows(capsys.readouterr().out)[0]["re"]) == pytest.approx(0.7, abs=1e-8)
    out = tmp_path / "scan.csv"
    assert main(["scan", "--family", "gaussian", "--beta", "2", "--b", "1", "--t", "0.5", "--N-list", "16",
                 "--y-grid", "0.2;0.4", "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert [r["y1"] for r in rows] == ["0.20000000000000001", "0.40000000000000002"]


def test_domain_errors_exit_2(capsys):
    assert main(["scan", "--family", "gaussian", "--beta", "2", "--b", "1", "--t", "0.5", "--N-list", "15",
                 "--y-grid", "0.2"]) == 2
    assert "even" in capsys.readouterr().err
