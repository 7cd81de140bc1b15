"""Command-line runner for experiment files.

    pconvex report experiment.yaml --output run.json

``space``, ``norm``, ``check``, ``inflate`` and ``witness`` run only the tasks
of that type; ``report`` runs all of them.  The exit code is nonzero iff a
task marked ``required`` fails.
"""
from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .inflation import verify_inflation
from .lpcore import NormEstimate
from .propsuite import (
    OPERATOR_KINDS,
    check_contractibility,
    check_metric_mapping,
    check_p_convexity,
    check_tensor_p_convexity,
    find_remark22_witness,
)
from .quantization import near_L_check
from .report import CheckReport, to_jsonable
from .tensor import TensorNormResult, scalar_certificate, direct_problem, tensor_norm, universal_factorization_check

SUBCOMMANDS = ("space", "norm", "check", "inflate", "witness", "report")


def task_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _tol(cfg: ExperimentConfig, task: dict, key: str = "tol", default: float = 1e-6) -> float:
    return float(task.get(key, cfg.tolerances.get(key, default)))


def run_task(cfg: ExperimentConfig, task: dict):
    seed = task_seed(cfg.seed, task["index"])
    ttype = task["type"]
    if ttype == "space":
        sp = cfg.spaces[task["space"]]
        return {"dim": sp.dim, "total_measure": sp.total_measure, "convenient": sp.convenient, "definition": sp.to_dict()}
    host = cfg.hosts[task["host"]]
    trials = int(task.get("trials", 0)) or None
    tol = _tol(cfg, task)
    if ttype == "norm":
        coef = cfg.elements[task["element"]]
        if host.kind == "pconvex_tensor":
            t = host.tensor
            return tensor_norm(
                coef,
                t.hostE,
                t.hostF,
                t.diamond,
                int(task.get("copies", t.copies)),
                int(task.get("budget", t.budget)),
                seed,
                task.get("route", t.route),
            )
        return host.norm(coef)
    if ttype == "check":
        name = task["check"]
        if name == "contractibility":
            kinds = ("rank_one",) if task.get("rank_one_only") else OPERATOR_KINDS
            return check_contractibility(host, trials or 1000, seed, tol, kinds)
        if name == "near_L":
            return near_L_check(host, trials or 1000, seed, tol)
        if name == "p_convexity":
            if host.kind == "pconvex_tensor":
                t = host.tensor
                return check_tensor_p_convexity(t.hostE, t.hostF, trials or 500, seed, tol, int(task.get("budget", 0)), t.route)
            return check_p_convexity(host, trials or 500, seed, tol)
        t = _tensor_of(cfg, task, host)
        if name == "metric_mapping":
            phi = cfg.operators[task["phi"]] if "phi" in task else None
            psi = cfg.operators[task["psi"]] if "psi" in task else None
            return check_metric_mapping(t.hostE, t.hostF, phi=phi, psi=psi, trials=trials or 200, seed=seed, tol=tol)
        g = cfg.elements.get(task.get("g"))
        h = cfg.elements.get(task.get("h"))
        if g is None or h is None:
            rng = np.random.default_rng(seed)
            g = rng.standard_normal(t.hostE.underlying_dim) if g is None else g
            h = rng.standard_normal(t.hostF.underlying_dim) if h is None else h
        cert = scalar_certificate(g, h, direct_problem(t.hostE, t.hostF), seed=seed)
        if cert is None:
            raise ValueError("certificate failed verification")
        return universal_factorization_check(cert, t.hostE, t.hostF, trials or 20, seed, _tol(cfg, task, "tol", 1e-3))
    if ttype == "inflate":
        return verify_inflation(host, int(task.get("copies", 3)), trials or 100, seed, _tol(cfg, task, "tol", 1e-9))
    if ttype == "witness":
        return find_remark22_witness(host, int(task.get("budget", 200)), seed, tol, bool(task.get("rank_one_only")))
    raise ValueError(f"unknown task type {ttype!r}")


def _tensor_of(cfg, task, host):
    if host.kind != "pconvex_tensor":
        raise cfg.error("this check needs a pconvex_tensor host", "tasks", task["index"], "host")
    return host.tensor


def _passed(result) -> bool | None:
    if isinstance(result, CheckReport):
        return result.passed
    return None


def _execute(cfg: ExperimentConfig, task: dict) -> dict:
    t0 = time.perf_counter()
    entry = {
        "name": task["name"],
        "type": task["type"],
        "seed": task_seed(cfg.seed, task["index"]),
        "required": bool(task.get("required", False)),
    }
    try:
        result = run_task(cfg, task)
        entry["status"] = "ok"
        entry["passed"] = _passed(result)
        entry["result"] = to_jsonable(result)
        entry["_obj"] = result
    except (ValueError, ArithmeticError) as exc:
        entry["status"] = "error"
        entry["passed"] = False if task["type"] in ("check", "inflate", "witness") else None
        entry["error"] = f"{type(exc).__name__}: {exc}"
    entry["timing"] = {"seconds": time.perf_counter() - t0}
    return entry


def environment_stamp() -> dict:
    return {
        "package": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }


def run(cfg: ExperimentConfig, only: str | None = None, workers: int | None = None) -> dict:
    tasks = [t for t in cfg.tasks if only is None or t["type"] == only]
    workers = workers or cfg.workers
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(lambda t: _execute(cfg, t), tasks))
    else:
        entries = [_execute(cfg, t) for t in tasks]
    for e in entries:
        e.pop("_obj", None)
    return {
        "schema": 1,
        "seed": cfg.seed,
        "config_sha256": cfg.sha256,
        "environment": environment_stamp(),
        "tasks": entries,
    }


def required_failures(report: dict) -> list[str]:
    return [e["name"] for e in report["tasks"] if e.get("required") and e.get("passed") is not True]


def payload(report: dict) -> dict:
    """The report without timing fields (the part that is reproducible)."""
    out = dict(report, tasks=[{k: v for k, v in e.items() if k != "timing"} for e in report["tasks"]])
    out.pop("environment", None)
    return out


def _summary(entry: dict) -> str:
    if entry["status"] == "error":
        return entry["error"]
    r = entry["result"]
    if isinstance(r, dict) and "estimate" in r:
        r = dict(r["estimate"], copies=r.get("copies_used"))
    if isinstance(r, dict) and "lower" in r and "upper" in r:
        s = f"[{_num(r['lower'])}, {_num(r['upper'])}] gap {_num(r['gap'])}"
        tags = r.get("method_tags") or []
        return s + (f"  ({', '.join(tags[:3])})" if tags else "")
    if isinstance(r, dict) and "worst_ratio" in r:
        return f"worst ratio {_num(r['worst_ratio'])} over {r['trials']} trials"
    if isinstance(r, dict) and "dim" in r:
        return f"dim {r['dim']}, measure {_num(r['total_measure'])}, convenient {r['convenient']}"
    return ""


def _num(v) -> str:
    if isinstance(v, str):
        return v
    return f"{v:.10g}"


def render_tables(report: dict) -> str:
    rows = [("task", "type", "status", "pass", "summary")]
    for e in report["tasks"]:
        ok = "" if e.get("passed") is None else ("PASS" if e["passed"] else "FAIL")
        rows.append((e["name"], e["type"], e["status"], ok + ("*" if e.get("required") else ""), _summary(e)))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = []
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r[:4], widths)) + "  " + r[4])
    lines.insert(1, "  ".join("-" * w for w in widths) + "  " + "-" * 7)
    traces = [(e["name"], e["result"]["trace"]) for e in report["tasks"] if e["status"] == "ok" and isinstance(e["result"], dict) and "trace" in e["result"]]
    for name, trace in traces:
        lines.append("")
        lines.append(f"per-N upper bounds for {name}")
        lines.append("N\tupper")
        for n, v in trace.items():
            lines.append(f"{n}\t{_num(v)}")
    lines.append("")
    lines.append(f"config sha256 {report['config_sha256']}  seed {report['seed']}  (* = required)")
    lines.append("pass/fail refers to the sampled suite at the recorded seed")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pconvex", description="Norm brackets and property checks for p-convex L-spaces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help="run all tasks" if name == "report" else f"run the {name} tasks")
        p.add_argument("config", type=Path, help="experiment file (YAML)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, help="parallel task workers")
        p.add_argument("--output", type=Path, help="write the JSON report here (tables go next to it as .txt)")
        p.add_argument("--tol", type=float, help="override the check tolerance")
        p.add_argument("--quiet", action="store_true", help="do not print tables")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text()
        cfg = load_config(text)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.seed = args.seed
    if args.tol is not None:
        cfg.tolerances["tol"] = args.tol
    only = None if args.command == "report" else args.command
    report = run(cfg, only, args.workers)
    tables = render_tables(report)
    if args.output:
        args.output.write_text(json.dumps(report, indent=2))
        args.output.with_suffix(".txt").write_text(tables + "\n")
    if not args.quiet:
        print(tables)
    failed = required_failures(report)
    if failed:
        print(f"required checks failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
