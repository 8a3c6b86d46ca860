import json
import os

import pytest

from stochcontact import csvio
from stochcontact.cli import main
from stochcontact.config import ExperimentConfig, load_config, parse_config_text
from stochcontact.errors import ConfigurationError

SMALL = """\
# short run for tests
horizon = 2.0   # seconds
n_steps = 20
n_paths = 3
oracle_k = 3
ladder = 0.05, 0.1
ladder_horizon = 1.0
"""


@pytest.fixture
def cfg_file(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text(SMALL)
    return str(p)


def _run(*argv):
    return main([str(a) for a in argv])


def test_parse_config():
    values = parse_config_text(SMALL + "schemes = euler_maruyama, hj_contact\nzero_noise = true\n")
    assert values["horizon"] == 2.0 and values["n_steps"] == 20
    assert values["ladder"] == (0.05, 0.1)
    assert values["schemes"] == ("euler_maruyama", "hj_contact")
    assert values["zero_noise"] is True
    with pytest.raises(ConfigurationError):
        parse_config_text("nonsense = 1\n")
    with pytest.raises(ConfigurationError):
        parse_config_text("n_steps = many\n")


def test_config_digest_ignores_output_dir():
    a = ExperimentConfig(out="a")
    b = ExperimentConfig(out="b")
    assert a.digest() == b.digest()
    assert a.digest() != ExperimentConfig(seed=7).digest()


def test_config_rejects_bad_values():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(mass=0.0)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(schemes=("leapfrog",))
    with pytest.raises(ConfigurationError):
        load_config("/nonexistent/file.cfg")


def test_simulate_outputs(cfg_file, tmp_path):
    out = tmp_path / "sim"
    code = _run("simulate", "--config", cfg_file, "--out", out, "--scheme", "euler_maruyama",
                "--scheme", "herglotz_contact")
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["exit_code"] == 0 and manifest["config_sha256"]
    assert {"path_seed42.csv", "traj_euler_maruyama_seed42.csv", "compare_seed42.csv"} <= set(manifest["files"])
    rows = csvio.read_rows(out / "traj_herglotz_contact_seed42.csv")
    assert len(rows) == 21 and float(rows[0]["q"]) == 0.75
    assert list(csvio.read_rows(out / "path_seed42.csv")[0]) == ["n", "t_n", "dW_n"]


def test_simulate_printed_hj_fails(cfg_file, tmp_path):
    out = tmp_path / "hj"
    code = _run("simulate", "--config", cfg_file, "--out", out, "--scheme", "hj_contact")
    assert code == 3
    entry = json.loads((out / "manifest.json").read_text())["schemes"]["hj_contact"]
    assert entry["status"] == "failed" and entry["step"] == 1
    assert entry["discriminant"] == pytest.approx(-1.7111, abs=1e-12)
    assert os.path.exists(out / "traj_hj_contact_seed42.partial.csv")


def test_simulate_hj_general(cfg_file, tmp_path):
    out = tmp_path / "hjg"
    assert _run("simulate", "--config", cfg_file, "--out", out, "--scheme", "hj_contact",
                "--hj-mode", "general") == 0
    trace = csvio.read_rows(out / "hj_trace_seed42.csv")
    assert len(trace) == 20 and float(trace[0]["disc"]) >= 0


def test_zero_steps(tmp_path):
    out = tmp_path / "empty"
    p = tmp_path / "e.cfg"
    p.write_text("n_steps = 0\n")
    assert _run("simulate", "--config", p, "--out", out) == 0
    assert len(csvio.read_rows(out / "traj_euler_maruyama_seed42.csv")) == 1


def test_contact_check(cfg_file, tmp_path):
    out = tmp_path / "cc"
    assert _run("contact-check", "--config", cfg_file, "--out", out, "--zero-noise") == 0
    rows = csvio.read_rows(out / "contact_herglotz_contact_seed42.csv")
    assert [float(r["t"]) for r in rows] == [0.0, 2.0]
    assert float(rows[1]["lambda"]) == pytest.approx((0.95 / 1.05) ** 20, rel=1e-7)


def test_convergence_self_test(tmp_path):
    assert _run("convergence", "--self-test", "--out", tmp_path / "st") == 0
    m = json.loads((tmp_path / "st" / "manifest.json").read_text())
    assert m["self_test_slope"] == pytest.approx(1.0, abs=1e-12)


def test_convergence_small(cfg_file, tmp_path):
    base = ["convergence", "--config", cfg_file, "--scheme", "euler_maruyama", "--em-drift-correction", "none"]
    # k = 3 is too coarse for these step sizes: resolution error, manifest still written
    assert _run(*base, "--out", tmp_path / "coarse") == 4
    m = json.loads((tmp_path / "coarse" / "manifest.json").read_text())
    assert m["error"]["type"] == "OracleResolutionError" and m["exit_code"] == 4
    fine = tmp_path / "fine.cfg"
    fine.write_text(SMALL.replace("oracle_k = 3", "oracle_k = 6"))
    out = tmp_path / "conv"
    assert _run("convergence", "--config", fine, "--scheme", "euler_maruyama",
                "--em-drift-correction", "none", "--out", out) == 0
    rows = csvio.read_rows(out / "convergence_euler_maruyama.csv")
    assert [r["h"] for r in rows] == ["0.050000000000000003", "0.10000000000000001", "slope", "intercept"]


def test_compare(cfg_file, tmp_path):
    out = tmp_path / "cmp"
    assert _run("compare", "--config", cfg_file, "--out", out) == 0
    rows = csvio.read_rows(out / "compare_summary.csv")
    assert [r["scheme"] for r in rows] == ["euler_maruyama", "herglotz_contact"]


def test_usage_errors(cfg_file, tmp_path):
    assert _run("compare", "--config", cfg_file, "--out", tmp_path, "--scheme", "euler_maruyama") == 2
    assert _run("simulate", "--threads", "0", "--out", tmp_path) == 2
    assert _run("bogus") == 2
    assert _run("simulate", "--config", "/no/such.cfg") == 2
