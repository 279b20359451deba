import json
import subprocess
import sys

import pytest

from stochabound.cli import main, paper_config


def write_config(tmp_path, **overrides):
    cfg = paper_config().to_json()
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def with_system(tmp_path, x0=None, gamma_k=None, A=None, kernel=None, **extra):
    cfg = paper_config().to_json()
    if x0 is not None:
        cfg["system"]["x0"] = {"mean": [x0], "std": 0.0}
    if gamma_k is not None:
        cfg["system"]["kernel"]["params"]["k"] = gamma_k
    if A is not None:
        cfg["system"]["A"] = A
    if kernel is not None:
        cfg["system"]["kernel"] = kernel
    cfg.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_certify_paper(tmp_path, capsys):
    code = main(["certify", "-c", str(write_config(tmp_path)), "-o", str(tmp_path / "out")])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["margin"] == 0.5 and report["condition_holds"] is True
    assert report["c"] == 0.25 and report["gamma"] == 1.0 and report["P"] == [[0.5]]
    assert json.loads((tmp_path / "out" / "certificate.json").read_text()) == report


def test_certify_gamma_doubled(tmp_path, capsys):
    # k = 8 doubles the Lipschitz constant a*k to 2
    code = main(["certify", "-c", str(with_system(tmp_path, gamma_k=8.0))])
    assert code == 2
    assert json.loads(capsys.readouterr().out)["margin"] == -1.0


def test_certify_unstable(tmp_path, capsys):
    code = main(["certify", "-c", str(with_system(tmp_path, A=[[1.0]]))])
    assert code == 1
    assert "assumption 1.1 violated" in capsys.readouterr().err


def test_certify_bad_input(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["certify", "-c", str(bad)]) == 1
    assert main(["certify", "-c", str(tmp_path / "missing.json")]) == 1
    bad.write_text(json.dumps({"system": {"A": [[-1.0]]}}))
    assert main(["certify", "-c", str(bad)]) == 1


@pytest.mark.parametrize("x0", [0.0, 0.5])
def test_verify_paper(tmp_path, capsys, x0):
    out = tmp_path / "out"
    code = main(["verify", "-c", str(with_system(tmp_path, x0=x0)), "-o", str(out)])
    assert code == 0
    verdict = json.loads((out / "verdict.json").read_text())
    assert verdict["all_ok"] and verdict["tail_mean"] < verdict["b_limit"]
    for name in ("mean_norm.csv", "sup_norms.csv", "exceedance.csv", "certificate.json"):
        assert (out / name).exists()
    rows = (out / "mean_norm.csv").read_text().splitlines()
    assert rows[0] == "t,mean_norm,sem_norm"
    assert float(rows[1].split(",")[1]) == x0


def test_verify_zero_kernel(tmp_path):
    kernel = {"family": "Constant", "params": {"G0": [[0.0]]}, "n": 1, "m": 1}
    out = tmp_path / "out"
    code = main(["verify", "-c", str(with_system(tmp_path, kernel=kernel, T=2.0)), "-o", str(out)])
    assert code == 0
    means = [float(r.split(",")[1]) for r in (out / "mean_norm.csv").read_text().splitlines()[1:]]
    assert means and all(m == 0.0 for m in means)


def test_verify_uncertified_stops_early(tmp_path):
    out = tmp_path / "out"
    assert main(["verify", "-c", str(with_system(tmp_path, gamma_k=8.0)), "-o", str(out)]) == 2
    assert not (out / "mean_norm.csv").exists()


def test_verify_needs_output_dir(tmp_path):
    assert main(["verify", "-c", str(write_config(tmp_path))]) == 1


def test_verify_output_dir_from_config(tmp_path):
    path = write_config(tmp_path, output_dir="rel_out", n_paths=10)
    assert main(["verify", "-c", str(path)]) == 0
    assert (tmp_path / "rel_out" / "verdict.json").exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "stochabound", "certify", "-c", str(write_config(tmp_path))],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["condition_holds"] is True
