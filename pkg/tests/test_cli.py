import json

import numpy as np
import pytest

from treeseed.cli import main


@pytest.fixture
def data(tmp_path, rng):
    path = tmp_path / "pts.csv"
    np.savetxt(path, rng.normal(size=(200, 3)), delimiter=",")
    return path


def test_run(data, tmp_path, capsys):
    out = tmp_path / "res"
    code = main(["run", "--data", str(data), "--k", "5,10", "--seeds", "2", "--out", str(out),
                 "--algo", "fast,uniform,kmeanspp,rejection"])
    assert code == 0
    assert (out / "costs.csv").exists() and (out / "stats.json").exists()
    assert "16/16 cells ok" in capsys.readouterr().out
    assert json.loads((out / "stats.json").read_text())["all_ok"]


def test_run_markdown(data, tmp_path):
    out = tmp_path / "md"
    assert main(["run", "--data", str(data), "--k", "3", "--seeds", "1", "--out", str(out),
                 "--format", "markdown", "--algo", "fast"]) == 0
    assert (out / "reltime.md").read_text().startswith("| algorithm")


def test_sample(data, tmp_path):
    out = tmp_path / "c.txt"
    stats = tmp_path / "s.json"
    assert main(["sample", "--data", str(data), "--k", "4", "--algo", "rejection",
                 "--out", str(out), "--stats", str(stats)]) == 0
    assert len(out.read_text().split()) == 4
    assert "stats" in json.loads(stats.read_text())


def test_bias(data, tmp_path):
    out = tmp_path / "b.csv"
    code = main(["bias", "--data", str(data), "--centers", "0,1", "--trials", "5000",
                 "--structures", "5", "--out", str(out)])
    assert code in (0, 1)
    assert out.read_text().startswith("point,")


def test_gen(tmp_path):
    out = tmp_path / "g.csv"
    assert main(["gen", "--n", "100", "--d", "4", "--components", "3", "--out", str(out)]) == 0
    assert np.loadtxt(out, delimiter=",").shape == (100, 4)


def test_bad_data(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,x\n")
    assert main(["sample", "--data", str(bad), "--k", "1"]) == 2
    assert "error" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert main(["run", "--data", str(tmp_path / "none.csv"), "--out", str(tmp_path)]) == 2


def test_bad_algo(data, tmp_path):
    with pytest.raises(SystemExit):
        main(["run", "--data", str(data), "--algo", "magic", "--out", str(tmp_path)])
