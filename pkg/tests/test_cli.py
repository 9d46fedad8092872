import csv
import json

import pytest

from survcopula.cli import main


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "sim.csv"
    assert main(["simulate", "--copula", "Clayton", "--tau", "0.25", "--n", "250", "--seed", "3", "-o", str(path)]) == 0
    return path


def write_cfg(path, cfg):
    path.write_text(json.dumps(cfg))
    return str(path)


def test_simulate_is_deterministic(dataset, tmp_path):
    again = tmp_path / "again.csv"
    main(["simulate", "--copula", "Clayton", "--tau", "0.25", "--n", "250", "--seed", "3", "-o", str(again)])
    assert again.read_text() == dataset.read_text()
    header = dataset.read_text().splitlines()[0].split(",")
    assert header[:5] == ["cluster_id", "y1", "d1", "y2", "d2"]


def test_fit_report(dataset, tmp_path):
    out = tmp_path / "fit.json"
    assert main(["fit", str(dataset), "--copula", "Clayton", "--baseline", "weibull", "--regression", "YP", "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["converged"] is True
    assert rep["aic"] == pytest.approx(2 * rep["n_params"] - 2 * rep["loglik"], rel=1e-14)
    assert rep["n_params"] == 13
    assert len(rep["parameters"]) == 13
    assert rep["tau"]["lower"] < rep["tau"]["estimate"] < rep["tau"]["upper"]
    assert rep["covariates"]["margin1"] == ["x1_bin", "x1_norm"]


def test_fit_with_config(dataset, tmp_path):
    cfg = write_cfg(tmp_path / "c.json", {"model": {"copula": "Frank", "baseline": "pe", "regression": "PO", "n_intervals": 4}})
    out = tmp_path / "fit.json"
    assert main(["fit", str(dataset), "-c", cfg, "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["model"] == "Frank-pe-PO"
    assert rep["n_params"] == 1 + 8 + 4


def test_fit_input_errors(dataset, tmp_path, capsys):
    assert main(["fit", str(tmp_path / "missing.csv"), "--copula", "Clayton"]) == 1
    bad = write_cfg(tmp_path / "bad.json", {"model": {"copula": "Clayton", "extra": 1}})
    assert main(["fit", str(dataset), "-c", bad]) == 1
    assert main(["fit", str(dataset)]) == 1
    assert "error" in capsys.readouterr().err


def test_sweep(dataset, tmp_path):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", str(dataset), "--copulas", "Clayton", "Frank", "--baselines", "weibull", "--classes", "PH", "YP", "-o", str(out)])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 4
    for r in rows:
        k, ll = int(r["n_params"]), float(r["loglik"])
        assert float(r["aic"]) == pytest.approx(2 * k - 2 * ll, rel=1e-14)


def test_lrtest(dataset, tmp_path):
    red = write_cfg(tmp_path / "ph.json", {"model": {"copula": "Clayton", "regression": "PH"}})
    full = write_cfg(tmp_path / "yp.json", {"model": {"copula": "Clayton", "regression": "YP"}})
    out = tmp_path / "lr.json"
    assert main(["lrtest", str(dataset), red, full, "-o", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["df"] == 4
    assert rep["stat"] >= 0
    assert rep["decision"] in ("PH", "YP")
    # identical configurations are not nested
    assert main(["lrtest", str(dataset), full, full]) == 1
    other = write_cfg(tmp_path / "frank.json", {"model": {"copula": "Frank", "regression": "PH"}})
    assert main(["lrtest", str(dataset), other, full]) == 1


def test_crossing(dataset, tmp_path):
    cfg = write_cfg(
        tmp_path / "x.json",
        {"model": {"copula": "Clayton"}, "crossing": {"x_control": [0, 0], "x_treat": [1, 0], "B": 4}, "seed": 1},
    )
    out = tmp_path / "x.out.json"
    assert main(["crossing", str(dataset), "-c", cfg, "-o", str(out), "--workers", "1"]) == 0
    rep = json.loads(out.read_text())
    assert rep["status"] in ("ok", "unreliable")
    assert rep["point"] > 0 and rep["B"] == 4
    ph = write_cfg(
        tmp_path / "ph.json",
        {"model": {"copula": "Clayton", "regression": "PH"}, "crossing": {"x_control": [0, 0], "x_treat": [1, 0]}},
    )
    assert main(["crossing", str(dataset), "-c", ph, "-o", str(out)]) == 0
    assert json.loads(out.read_text())["status"] == "no crossing"


def test_mc(tmp_path):
    cfg = write_cfg(
        tmp_path / "mc.json",
        {"scenario": {"copula": "Clayton", "tau": 0.25, "n": 150}, "mc": {"M": 2, "specs": [{"copula": "Clayton"}]}, "seed": 9},
    )
    out = tmp_path / "mc"
    assert main(["mc", "-c", cfg, "-o", str(out), "--workers", "1"]) == 0
    rep = json.loads((out / "mc_report.json").read_text())
    assert rep["M"] == 2
    assert "Clayton-weibull-YP" in rep["statistics"]
    rows = list(csv.DictReader((out / "mc_replicas.csv").open()))
    assert len(rows) == 2


def test_prepare(tmp_path, capsys):
    raw = tmp_path / "raw.csv"
    raw.write_text("id,T,T_star,A,age\nA1,2,5,10,60\nA2,,5,3,70\nA3,4,4,10,55\n")
    out = tmp_path / "prep.csv"
    assert main(["prepare", str(raw), "-o", str(out)]) == 0
    assert "A3" in capsys.readouterr().out
    lines = out.read_text().splitlines()
    assert lines[0] == "cluster_id,y1,d1,y2,d2,x1_age,x2_age"
    assert lines[1].startswith("A1,2.0,1,5.0,1")
    raw.write_text("id,T,T_star,A,age\nA1,0,5,10,60\n")
    assert main(["prepare", str(raw), "-o", str(out)]) == 1
