"""Command line interface: ``stoqtherm convert | sample | verify``.

Exit codes: 0 success, 2 precondition failure, 3 verification failure,
4 I/O or schema error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import hbm as hbm_mod
from . import io
from .boltzmann import BoltzmannMachine, DeepBoltzmannMachine, IsingModel, dbm_distribution
from .gibbs2sff import build_sff
from .hamcore import (
    MAX_DENSE_QUBITS,
    ClassicalHamiltonian,
    LocalHamiltonian,
    coherent_gibbs_state,
    gibbs_distribution,
    ground_space,
    marginal,
    tv_distance,
)
from .pipelines import (
    SFF_ORACLE_QUBITS,
    PipelineReport,
    PipelineResult,
    PreconditionError,
    pipeline_bm_to_ising,
    pipeline_bm_to_sff,
    pipeline_stoq_to_gibbs,
    pipeline_stoq_to_sff,
    pipeline_to_dbm,
    sff_ground_marginal,
)
from .pseq import PSequence
from .samplers import ChainConfig, dbm_block_gibbs, gibbs_chain, sff_walk

log = logging.getLogger("stoqtherm")

EXIT_OK, EXIT_PRECONDITION, EXIT_VERIFY, EXIT_IO = 0, 2, 3, 4
METRIC_TOL = 1e-9

CONVERSIONS = {
    ("stoq", "gibbs"), ("sff", "gibbs"), ("stoq", "hbm"), ("sff", "hbm"), ("stoq", "sff"), ("sff", "sff"),
    ("stoq", "dbm"), ("sff", "dbm"), ("classical", "dbm"), ("classical", "rbm"), ("hbm", "dbm"), ("hbm", "rbm"),
    ("classical", "sff"), ("classical", "hbm"), ("hbm", "gibbs"),
    ("bm", "sff"), ("bm", "ising"), ("bm", "hbm"),
}


def _expect(obj, cls, what):
    if not isinstance(obj, cls):
        raise io.SchemaError(f"expected {what} input")
    return obj


def _load_source(kind: str, path):
    obj = io.load(path)
    if kind in ("stoq", "sff"):
        return _expect(obj, LocalHamiltonian, "a quantum hamiltonian.json")
    if kind == "classical":
        return _expect(obj, ClassicalHamiltonian, "a classical hamiltonian.json")
    if kind == "hbm":
        return _expect(obj, hbm_mod.HyperBoltzmannMachine, "an hbm.json")
    if kind == "bm":
        return _expect(obj, DeepBoltzmannMachine, "a dbm.json").as_bm()
    raise io.SchemaError(f"unknown source kind {kind}")


def _sidecar(out: Path, role: str) -> Path:
    stem = out.name[:-5] if out.name.endswith(".json") else out.name
    return out.with_name(f"{stem}.{role}.json")


def _exact_report(name: str, value: float, **inputs) -> PipelineReport:
    r = PipelineReport(name, None, input=inputs)
    r.final_metric = {"name": "tv", "value": float(value)}
    return r


def run_conversion(src: str, dst: str, obj, eps: float, max_factors=None) -> PipelineResult:
    """Dispatch one ``--from/--to`` pair to its pipeline."""
    if (src, dst) not in CONVERSIONS:
        raise PreconditionError(f"no conversion from {src} to {dst}")
    if dst in ("gibbs", "hbm") and src in ("stoq", "sff"):
        res = pipeline_stoq_to_gibbs(obj, eps, max_factors, kind=src)
        if dst == "hbm":
            res = PipelineResult(res.intermediates["hbm"], res.report, res.visible_bits,
                                 {"psequence": res.intermediates["psequence"], "classical": res.output})
        return res
    if dst == "sff" and src in ("stoq", "sff"):
        return pipeline_stoq_to_sff(obj, eps, max_factors, kind=src)
    if dst in ("dbm", "rbm"):
        if dst == "rbm" and src == "hbm" and obj.m:
            raise PreconditionError("an HBM with hidden nodes needs a deep layer; use --to dbm")
        return pipeline_to_dbm(src, obj, eps, max_factors)
    if (src, dst) == ("classical", "sff"):
        comp = build_sff(obj)
        r = PipelineReport("classical_to_sff", None, input={"n": obj.n, "T": obj.T, "k": obj.k, "k_prime": obj.k_prime})
        r.stage("sff", **comp.report())
        if obj.n <= SFF_ORACLE_QUBITS:
            g = ground_space(comp.h_sff)
            r.final_metric = {"name": "l2", "value": float(np.linalg.norm(g.psi0 - coherent_gibbs_state(obj))),
                              "ground_dim": g.ground_dim, "gap": g.gap}
        else:
            r.final_metric = {"name": "l2", "value": None}
            r.status = "unverified"
        r.audits["locality_le_bound"] = comp.max_support_observed <= comp.locality
        return PipelineResult(comp.h_sff, r, list(range(obj.n)))
    if (src, dst) == ("classical", "hbm"):
        h = hbm_mod.from_classical(obj)
        tv = tv_distance(hbm_mod.distribution(h).probs, gibbs_distribution(obj).probs)
        return PipelineResult(h, _exact_report("classical_to_hbm", tv, n=obj.n, T=obj.T))
    if (src, dst) == ("hbm", "gibbs"):
        hc, visible = hbm_mod.to_classical(obj)
        tv = tv_distance(marginal(gibbs_distribution(hc).probs, hc.n, visible), hbm_mod.distribution(obj).probs) \
            if hc.n <= 20 else None
        r = _exact_report("hbm_to_gibbs", tv if tv is not None else float("nan"), n=obj.n, m=obj.m)
        if tv is None:
            r.final_metric["value"], r.status = None, "unverified"
        return PipelineResult(hc, r, visible)
    if (src, dst) == ("bm", "sff"):
        return pipeline_bm_to_sff(obj)
    if (src, dst) == ("bm", "ising"):
        return pipeline_bm_to_ising(obj)
    if (src, dst) == ("bm", "hbm"):
        h = obj.as_hbm()
        tv = tv_distance(hbm_mod.distribution(h, brute=True).probs, obj.distribution().probs)
        return PipelineResult(h, _exact_report("bm_to_hbm", tv, nodes=obj.N))
    raise PreconditionError(f"no conversion from {src} to {dst}")


def _rel(path: Path, base: Path) -> str:
    return os.path.relpath(path, base)


def write_outputs(res: PipelineResult, src, dst, in_path, out_path, report_path, eps, include_timing=False):
    out_path = Path(out_path)
    report_path = Path(report_path) if report_path else _sidecar(out_path, "report")
    base = report_path.parent.resolve()
    io.save(res.output, out_path)
    artifacts = {"output": _rel(out_path.resolve(), base)}
    for role, obj in sorted(res.intermediates.items()):
        p = _sidecar(out_path, role)
        io.save(obj, p)
        artifacts[role] = _rel(p.resolve(), base)
    doc = res.report.to_dict(include_timing)
    doc.update({"from": src, "to": dst, "eps": eps, "source": _rel(Path(in_path).resolve(), base),
                "artifacts": artifacts, "visible_bits": res.visible_bits})
    io.write_json(report_path, doc)
    return doc


# --- verification -------------------------------------------------------------

def check_invariants(kind: str, data: dict) -> list:
    """Schema plus invariant checks for a single artifact; returns failure messages."""
    problems = []
    obj = io._READERS[kind](data)
    if isinstance(obj, PSequence):
        if obj.min_entry() < obj.alpha * (1 - 1e-12):
            problems.append("psequence: factor entry below alpha")
    if isinstance(obj, hbm_mod.HyperBoltzmannMachine):
        if obj.copies > 1 and obj.T % obj.copies:
            problems.append("hbm: hyperedge count is not a multiple of copies")
    if isinstance(obj, IsingModel):
        if any(not (0 <= i < obj.N and 0 <= j < obj.N) for i, j, _ in obj.edges):
            problems.append("ising: edge endpoint out of range")
    return problems


def _source_target(src, source):
    """Exact reference distribution over the visible bits for a source object."""
    if src in ("stoq", "sff"):
        return ground_space(source).psi0 ** 2
    if src == "classical":
        return gibbs_distribution(source).probs
    if src == "hbm":
        return hbm_mod.distribution(source).probs
    if src == "bm":
        return source.distribution().probs
    raise io.SchemaError(f"unknown source kind {src}")


def recompute_metric(doc: dict, base: Path):
    """Recompute a report's final metric from its source and emitted artifacts alone."""
    src, dst = doc["from"], doc["to"]
    source = _load_source(src, base / doc["source"])
    arts = doc["artifacts"]
    out = io.load(base / arts["output"])
    problems = []
    if src in ("stoq", "sff") and dst in ("gibbs", "hbm", "sff"):
        hb = io.load(base / arts["hbm"]) if dst != "hbm" else out
        gibbs = io.load(base / arts["classical"]) if dst != "gibbs" else out
        hc, _ = hbm_mod.to_classical(hb)
        if io.hamiltonian_to_dict(hc) != io.hamiltonian_to_dict(gibbs):
            problems.append("classical artifact does not match the HBM")
        if dst == "sff":
            if io.hamiltonian_to_dict(build_sff(gibbs).h_sff) != io.hamiltonian_to_dict(out):
                problems.append("SFF artifact does not match the compiled classical Hamiltonian")
            if out.n <= SFF_ORACLE_QUBITS:
                return tv_distance(sff_ground_marginal(out, doc["visible_bits"]), _source_target(src, source)), problems
        return hbm_mod.distribution_distance(hb, ground_space(source).psi0), problems
    if dst in ("dbm", "rbm"):
        return tv_distance(dbm_distribution(out).probs, _source_target(src, source)), problems
    if (src, dst) == ("classical", "sff"):
        return float(np.linalg.norm(ground_space(out).psi0 - coherent_gibbs_state(source))), problems
    if (src, dst) == ("classical", "hbm"):
        return tv_distance(hbm_mod.distribution(out).probs, gibbs_distribution(source).probs), problems
    if (src, dst) == ("hbm", "gibbs"):
        probs = marginal(gibbs_distribution(out).probs, out.n, doc["visible_bits"])
        return tv_distance(probs, hbm_mod.distribution(source).probs), problems
    if (src, dst) == ("bm", "sff"):
        return tv_distance(sff_ground_marginal(out, doc["visible_bits"]), source.distribution().probs), problems
    if (src, dst) == ("bm", "ising"):
        probs = marginal(out.distribution().probs, out.N, doc["visible_bits"])
        return tv_distance(probs, source.distribution().probs), problems
    if (src, dst) == ("bm", "hbm"):
        return tv_distance(hbm_mod.distribution(out, brute=True).probs, source.distribution().probs), problems
    raise io.SchemaError(f"cannot recompute {src}->{dst}")


def verify_paths(paths) -> tuple:
    """Returns ``(exit_code, summary)`` for a list of artifact/report files."""
    summary, code = [], EXIT_OK
    for path in paths:
        path = Path(path)
        data = io.read_json(path)
        kind = io.detect_kind(data)
        entry = {"path": str(path), "kind": kind}
        if kind == "report":
            base = path.parent
            for role, rel in sorted(data["artifacts"].items()):
                art = io.read_json(base / rel)
                problems = check_invariants(io.detect_kind(art), art)
                if problems:
                    entry.setdefault("problems", []).extend(problems)
            stored = data["final_metric"].get("value")
            if stored is not None:
                try:
                    value, problems = recompute_metric(data, base)
                except KeyError as exc:
                    raise io.SchemaError(f"{path}: report lacks field {exc}") from exc
                entry["recomputed"] = value
                entry["stored"] = stored
                if abs(value - stored) > METRIC_TOL:
                    problems.append(f"final metric {stored} does not reproduce (got {value})")
                if data.get("status") == "success" and data.get("eps") is not None and value > data["eps"]:
                    problems.append("status is success but the metric exceeds eps")
                if problems:
                    entry.setdefault("problems", []).extend(problems)
        else:
            problems = check_invariants(kind, data)
            if problems:
                entry["problems"] = problems
        entry["ok"] = not entry.get("problems")
        if not entry["ok"]:
            code = EXIT_VERIFY
        summary.append(entry)
    return code, summary


# --- sampling -------------------------------------------------------------------

def run_sampler(method: str, obj, cfg: ChainConfig, beta=None):
    if method == "block":
        dbm = _expect(obj, DeepBoltzmannMachine, "a dbm.json")
        exact = dbm_distribution(dbm) if dbm.deep <= 22 and dbm.n <= MAX_DENSE_QUBITS else None
        return dbm_block_gibbs(dbm, cfg, exact), {"beta": None}
    if method == "walk":
        hc = _expect(obj, ClassicalHamiltonian, "a classical hamiltonian.json")
        exact = gibbs_distribution(hc) if hc.n <= 20 else None
        rep = sff_walk(hc, beta, cfg, exact)
        return rep, {"beta": rep.stats["beta"]}
    if method == "gibbs":
        if isinstance(obj, hbm_mod.HyperBoltzmannMachine):
            exact = hbm_mod.distribution(obj).probs if obj.n <= MAX_DENSE_QUBITS else None
            hc, visible = hbm_mod.to_classical(obj)
        else:
            hc = _expect(obj, ClassicalHamiltonian, "a classical hamiltonian.json or hbm.json")
            visible = list(range(hc.n))
            exact = gibbs_distribution(hc).probs if hc.n <= 20 else None
        return gibbs_chain(hc, cfg, visible, exact), {"beta": None}
    raise PreconditionError(f"unknown method {method}")


# --- argument parsing -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stoqtherm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    conv = sub.add_parser("convert", help="convert between distribution families")
    conv.add_argument("--from", dest="src", required=True, choices=["stoq", "sff", "classical", "hbm", "bm"])
    conv.add_argument("--to", dest="dst", required=True, choices=["gibbs", "sff", "hbm", "dbm", "rbm", "ising"])
    conv.add_argument("--eps", type=float, default=0.1)
    conv.add_argument("--in", dest="inp", required=True)
    conv.add_argument("--out", required=True)
    conv.add_argument("--report")
    conv.add_argument("--max-factors", type=int, default=None,
                      help="truncate P-sequences to this many factors (reports the achieved error)")
    conv.add_argument("--timing", action="store_true", help="include wall time in the report")

    samp = sub.add_parser("sample", help="run a Markov-chain sampler")
    samp.add_argument("--method", required=True, choices=["gibbs", "block", "walk"])
    samp.add_argument("--in", dest="inp", required=True)
    samp.add_argument("--out", help="samples file, one bitstring per line (default stdout)")
    samp.add_argument("--report")
    samp.add_argument("--seed", type=int, default=0)
    samp.add_argument("--steps", type=int, default=100_000)
    samp.add_argument("--burn-in", type=int, default=1000)
    samp.add_argument("--chains", type=int, default=1)
    samp.add_argument("--thin", type=int, default=1)
    samp.add_argument("--beta", type=float, default=None)
    samp.add_argument("--random-scan", action="store_true")

    ver = sub.add_parser("verify", help="recheck artifacts and reports")
    ver.add_argument("paths", nargs="+")
    return parser


def _cmd_convert(args) -> int:
    obj = _load_source(args.src, args.inp)
    res = run_conversion(args.src, args.dst, obj, args.eps, args.max_factors)
    doc = write_outputs(res, args.src, args.dst, args.inp, args.out, args.report, args.eps, args.timing)
    log.info("%s: status=%s final=%s wall=%.3fs", doc["pipeline"], doc["status"],
             doc["final_metric"].get("value"), res.report.wall_time or 0.0)
    return EXIT_VERIFY if doc["status"] == "failed" else EXIT_OK


def _cmd_sample(args) -> int:
    cfg = ChainConfig(args.seed, args.burn_in, args.steps, args.chains, args.thin, args.random_scan)
    obj = io.load(args.inp)
    rep, extra = run_sampler(args.method, obj, cfg, args.beta)
    lines = "\n".join(rep.bitstrings()) + "\n"
    if args.out:
        Path(args.out).write_text(lines)
    else:
        sys.stdout.write(lines)
    summary = rep.summary(cfg, **extra)
    if args.report:
        io.write_json(args.report, summary)
    log.info("sampled %d states, empirical TV %s", rep.samples.size, rep.empirical_tv)
    return EXIT_OK


def _cmd_verify(args) -> int:
    code, summary = verify_paths(args.paths)
    sys.stdout.write(io.dumps(summary))
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"convert": _cmd_convert, "sample": _cmd_sample, "verify": _cmd_verify}[args.command]
    try:
        return handler(args)
    except PreconditionError as exc:
        log.error("precondition failed: %s", exc)
        return EXIT_PRECONDITION
    except (io.SchemaError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("precondition failed: %s", exc)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
