import json

import numpy as np
import pytest

from stoqtherm import io
from stoqtherm.boltzmann import DeepBoltzmannMachine
from stoqtherm.cli import EXIT_IO, EXIT_OK, EXIT_PRECONDITION, EXIT_VERIFY, main
from stoqtherm.hamcore import LocalHamiltonian, LocalTerm
from stoqtherm.models import X, ferromagnet, tfim


@pytest.fixture
def workdir(tmp_path):
    io.save(tfim(3), tmp_path / "tfim3.json")
    io.save(ferromagnet(), tmp_path / "ferro.json")
    io.save(DeepBoltzmannMachine([0.3, -0.2], [0.5], [], [[1.0], [-0.7]], np.zeros((1, 0))), tmp_path / "bm.json")
    return tmp_path


def convert(d, src, dst, inp, out, *extra):
    return main(["convert", "--from", src, "--to", dst, "--in", str(d / inp), "--out", str(d / out),
                 "--report", str(d / (out + ".report")), *extra])


CASES = [
    ("stoq", "gibbs", "tfim3.json", ["--eps", "0.3", "--max-factors", "4"]),
    ("stoq", "hbm", "tfim3.json", ["--eps", "0.3", "--max-factors", "4"]),
    ("stoq", "sff", "tfim3.json", ["--eps", "0.3", "--max-factors", "2"]),
    ("stoq", "dbm", "tfim3.json", ["--eps", "0.3", "--max-factors", "3"]),
    ("classical", "rbm", "ferro.json", ["--eps", "0.001"]),
    ("classical", "sff", "ferro.json", []),
    ("classical", "hbm", "ferro.json", []),
    ("bm", "sff", "bm.json", []),
    ("bm", "ising", "bm.json", []),
    ("bm", "hbm", "bm.json", []),
]


@pytest.mark.parametrize("src, dst, inp, extra", CASES)
def test_convert_then_verify(workdir, src, dst, inp, extra, capsys):
    out = f"{src}-{dst}.json"
    assert convert(workdir, src, dst, inp, out, *extra) == EXIT_OK
    report = json.loads((workdir / (out + ".report")).read_text())
    assert report["from"] == src and report["to"] == dst
    assert main(["verify", str(workdir / (out + ".report")), str(workdir / out)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert all(e["ok"] for e in summary)
    if report["final_metric"]["value"] is not None:
        assert abs(summary[0]["recomputed"] - report["final_metric"]["value"]) <= 1e-9


def test_corrupted_table_fails_verification(workdir):
    assert convert(workdir, "classical", "hbm", "ferro.json", "h.json") == EXIT_OK
    data = json.loads((workdir / "h.json").read_text())
    data["hyperedges"][0]["table"][0] += 1.0
    (workdir / "h.json").write_text(json.dumps(data))
    assert main(["verify", str(workdir / "h.json.report")]) == EXIT_VERIFY


def test_verify_rejects_schema_violation(workdir):
    (workdir / "bad.json").write_text(json.dumps({"n": 1, "kind": "quantum", "terms": [{"support": [3]}]}))
    assert main(["verify", str(workdir / "bad.json")]) == EXIT_IO


def test_precondition_failure_exit_code(workdir):
    io.save(LocalHamiltonian(1, (LocalTerm((0,), X),)), workdir / "bad.json")
    assert convert(workdir, "stoq", "gibbs", "bad.json", "o.json") == EXIT_PRECONDITION
    assert convert(workdir, "classical", "ising", "ferro.json", "o.json") == EXIT_PRECONDITION


def test_wrong_input_kind_is_io_error(workdir):
    assert convert(workdir, "stoq", "gibbs", "ferro.json", "o.json") == EXIT_IO
    assert convert(workdir, "stoq", "gibbs", "missing.json", "o.json") == EXIT_IO


@pytest.mark.parametrize("method, inp, extra", [
    ("gibbs", "ferro.json", []),
    ("walk", "ferro.json", ["--beta", "0.1"]),
    ("block", "bm.json", []),
])
def test_sample(workdir, method, inp, extra):
    out, rep = workdir / f"{method}.txt", workdir / f"{method}.json"
    code = main(["sample", "--method", method, "--in", str(workdir / inp), "--steps", "2000", "--burn-in", "100",
                 "--chains", "2", "--seed", "5", "--out", str(out), "--report", str(rep), *extra])
    assert code == EXIT_OK
    lines = out.read_text().split()
    assert len(lines) == 4000 and set("".join(lines)) <= {"0", "1"}
    summary = json.loads(rep.read_text())
    assert {"empirical_tv", "chains", "steps", "seed", "beta"} <= set(summary)
    assert summary["chains"] == 2 and summary["seed"] == 5


def test_sample_unsafe_beta(workdir):
    assert main(["sample", "--method", "walk", "--in", str(workdir / "ferro.json"), "--beta", "10",
                 "--out", str(workdir / "s.txt")]) == EXIT_PRECONDITION


def test_reruns_are_byte_identical(workdir):
    for tag in ("a", "b"):
        assert convert(workdir, "stoq", "gibbs", "tfim3.json", f"{tag}.json", "--eps", "0.3", "--max-factors", "4") == 0
    for suffix in (".json", ".hbm.json", ".psequence.json"):
        assert (workdir / f"a{suffix}").read_bytes() == (workdir / f"b{suffix}").read_bytes()
    ra = json.loads((workdir / "a.json.report").read_text())
    rb = json.loads((workdir / "b.json.report").read_text())
    ra.pop("artifacts"), rb.pop("artifacts")
    assert ra == rb
