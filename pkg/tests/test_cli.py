import json
import os
import subprocess
import sys

import pytest

from kcontract.cli import main, run_job

ZERO = {"inline": {"matrices": [[[0]], [[0]]]}}


def section(report, name):
    return report["sections"][name]


@pytest.mark.parametrize("job, code", [
    ({"kernel": {"family": "drury_arveson"}, "N": 8, "commands": ["check_kernel"]}, 0),
    ({"kernel": {"family": "dirichlet"}, "N": 8, "commands": ["check_kernel"]}, 0),
    ({"kernel": {"family": "explicit", "a": [1, 1, 1, -1]}, "N": 3, "commands": ["check_kernel"]}, 3),
    ({"kernel": {"family": "da"}, "tuple": {"inline": {"matrices": [[[1]]]}}, "N": 10,
      "commands": ["analyze_tuple"]}, 2),
    ({"kernel": {"family": "da"}, "tuple": {"inline": {"matrices": [[[0, 1], [0, 0]], [[0, 0], [1, 0]]]}},
      "N": 4, "commands": ["analyze_tuple"]}, 3),
    ({"commands": ["corpus"], "corpus": {"entries": []}}, 0),
    ({"commands": ["corpus"], "bogus": 1}, 3),
    ({"commands": ["analyze_tuple"], "kernel": {"family": "da"}}, 3),
    ({"kernel": {"family": "dirichlet"}, "tuple": {"inline": {"matrices": [[[0.99]]]}}, "N": 5,
      "commands": ["analyze_tuple"]}, 4),
])
def test_exit_codes(job, code):
    report, got = run_job(job)
    assert got == code
    assert report["exit_code"] == code and report["pass"] == (code == 0)


def test_check_kernel_content():
    report, _ = run_job({"kernel": {"family": "da"}, "N": 8, "commands": ["check_kernel"]})
    sec = section(report, "check_kernel")
    assert sec["c"][:3] == ["1", "-1", "0"]
    report, _ = run_job({"kernel": {"family": "dirichlet"}, "N": 8, "commands": ["check_kernel"]})
    assert section(report, "check_kernel")["sign_check"]["pivot_index"] == 1


def test_analyze_scalar():
    report, code = run_job({"kernel": {"family": "da"}, "tuple": {"inline": {"matrices": [[[0.5]]]}},
                            "N": 10, "commands": ["analyze_tuple"]})
    assert code == 0
    sec = section(report, "analyze_tuple")
    assert sec["defect"]["defect_op"][0][0][0] == pytest.approx(0.75)
    assert sec["pureness"]["pure"]


@pytest.mark.parametrize("tuple_src", [{"corpus": "lambda_0.5"}, ZERO])
def test_full_pipeline_passes(tuple_src):
    job = {"kernel": {"family": "da"}, "tuple": tuple_src, "N": 10,
           "commands": ["analyze_tuple", "dilate", "wandering", "realize"]}
    report, code = run_job(job)
    assert code == 0, json.dumps(report["sections"], default=str)[:2000]


def test_perturbation_fixture_reports_K2_failure():
    job = {"kernel": {"family": "da"}, "tuple": {"corpus": "lambda_0.5"}, "commands": ["realize"],
           "perturbation": {"target": "D", "amount": 0.1}}
    report, code = run_job(job)
    assert code == 2
    checks = section(report, "realize")["checks"]
    assert not checks["K2"]["pass"] and checks["K3"]["value"] >= 0.01


def test_corpus_with_failure_fixture():
    job = {"commands": ["corpus"],
           "corpus": {"entries": ["da_lambda_0.3", "k2_zero_d2"], "failure_fixture": True}}
    report, code = run_job(job, threads=2)
    sec = section(report, "corpus")
    assert code == 2
    assert sec["failed"] == ["fixture_perturbed_quadruple"]
    assert [e["name"] for e in sec["entries"]] == sorted(e["name"] for e in sec["entries"])


def test_random_tuple_job_and_seed_env(monkeypatch):
    job = {"kernel": {"family": "power", "nu": 2}, "N": 12, "seed": 5,
           "tuple": {"random": {"class": "nilpotent_pair", "size": 3}}, "commands": ["analyze_tuple"]}
    first, _ = run_job(job)
    monkeypatch.setenv("KCONTRACT_SEED", "5")
    same, _ = run_job(dict(job, seed=99))
    assert same["seed"] == 5
    assert section(first, "analyze_tuple")["tuple"] == section(same, "analyze_tuple")["tuple"]


def test_tol_scale_and_horizon_override():
    job = {"kernel": {"family": "da"}, "tuple": {"corpus": "lambda_0.5"}, "commands": ["dilate"]}
    report, code = run_job(job, tol_scale=10.0, horizon=12)
    assert code == 0
    assert report["N"] == 12
    assert report["tolerances"]["iso_tol"] == pytest.approx(1e-7)


def test_main_is_deterministic_modulo_timestamp(tmp_path):
    job = tmp_path / "job.json"
    job.write_text(json.dumps({"kernel": {"family": "power", "nu": 2},
                               "tuple": {"corpus": "nilpair_c"}, "commands": ["dilate", "realize"], "seed": 3}))
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        assert main(["--job", str(job), "--out", str(out)]) == 0
        data = json.loads(out.read_text())
        assert data.pop("generated_at")
        outs.append(json.dumps(data, sort_keys=True))
    assert outs[0] == outs[1]


def test_main_rejects_bad_input(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["--job", str(bad)]) == 3
    assert main(["--job", str(tmp_path / "missing.json")]) == 3


def test_console_entry_point():
    env = dict(os.environ)
    proc = subprocess.run([sys.executable, "-m", "kcontract", "--job", "-"],
                          input=json.dumps({"kernel": {"family": "da"}, "N": 4, "commands": ["check_kernel"]}),
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["pass"]
