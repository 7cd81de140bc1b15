"""Experiment files: YAML with a versioned schema.

Errors name the offending field path and its line in the file.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import yaml

from .banach import norm_from_dict
from .measure import CopiedSpace, MeasureSpace
from .quantization import KINDS, QuantizedSpace, canonical_diamond, induced, standard_extension
from .tensor import pconvex_tensor_space

SCHEMA_VERSION = 1
TASK_TYPES = ("space", "norm", "check", "inflate", "witness")
CHECKS = (
    "contractibility",
    "near_L",
    "p_convexity",
    "metric_mapping",
    "universal_factorization",
)


class ConfigError(ValueError):
    def __init__(self, message: str, path: str = "", line: int | None = None):
        self.path = path
        self.line = line
        where = path or "<root>"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"config error at {where}: {message}")


def _line_map(node, path=(), out=None) -> dict:
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            _line_map(v, path + (k.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, path + (i,), out)
    return out


def _fmt(path) -> str:
    s = ""
    for p in path:
        s += f"[{p}]" if isinstance(p, int) else (f".{p}" if s else str(p))
    return s


@dataclass
class ExperimentConfig:
    raw: dict
    lines: dict
    sha256: str
    seed: int
    spaces: dict = field(default_factory=dict)
    norms: dict = field(default_factory=dict)
    hosts: dict = field(default_factory=dict)
    elements: dict = field(default_factory=dict)
    operators: dict = field(default_factory=dict)
    tasks: list = field(default_factory=list)
    workers: int = 1
    tolerances: dict = field(default_factory=dict)

    def error(self, message: str, *path) -> ConfigError:
        line = None
        for cut in range(len(path), -1, -1):
            if tuple(path[:cut]) in self.lines:
                line = self.lines[tuple(path[:cut])]
                break
        return ConfigError(message, _fmt(path), line)

    def get(self, section: str, name: Any, *path):
        table = getattr(self, section)
        if name not in table:
            raise self.error(f"unknown {section[:-1]} {name!r}", *path)
        return table[name]


def load_config(text: str) -> ExperimentConfig:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", "", mark.line + 1 if mark else None)
    raw = {} if raw is None else raw
    lines = _line_map(node) if node is not None else {}
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping", "", 1)
    cfg = ExperimentConfig(raw, lines, hashlib.sha256(text.encode()).hexdigest(), seed=0)
    if raw.get("schema") != SCHEMA_VERSION:
        raise cfg.error(f"schema must be {SCHEMA_VERSION}", "schema")
    if "seed" not in raw:
        raise cfg.error("seed is mandatory", "seed")
    if not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool) or raw["seed"] < 0:
        raise cfg.error("seed must be a non-negative integer", "seed")
    cfg.seed = raw["seed"]
    cfg.workers = _positive_int(cfg, raw.get("workers", 1), "workers")
    cfg.tolerances = dict(raw.get("tolerances") or {})
    _parse_spaces(cfg)
    _parse_norms(cfg)
    _parse_hosts(cfg)
    for section in ("elements", "operators"):
        for name, val in (raw.get(section) or {}).items():
            try:
                arr = np.asarray(val, dtype=float)
            except (TypeError, ValueError):
                raise cfg.error("must be a numeric array", section, name)
            getattr(cfg, section)[name] = arr
    _parse_tasks(cfg)
    return cfg


def _positive_int(cfg, v, *path):
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise cfg.error("must be a positive integer", *path)
    return v


def _parse_spaces(cfg):
    for name, d in (cfg.raw.get("spaces") or {}).items():
        path = ("spaces", name)
        if not isinstance(d, dict):
            raise cfg.error("space must be a mapping", *path)
        if "copies" in d:
            base = cfg.get("spaces", d.get("of"), *path, "of")
            cfg.spaces[name] = CopiedSpace(base, _positive_int(cfg, d["copies"], *path, "copies"))
            continue
        atoms = []
        for i, a in enumerate(d.get("atoms") or []):
            if not isinstance(a, dict) or "weight" not in a:
                raise cfg.error("atom needs a weight", *path, "atoms", i)
            atoms.append((a.get("label", f"a{i}"), a["weight"]))
        cells = d.get("cells") or {}
        try:
            cfg.spaces[name] = MeasureSpace(
                tuple(atoms), cells.get("count", 0), cells.get("weight", 1.0), d.get("convenient")
            )
        except (ValueError, TypeError) as exc:
            raise cfg.error(str(exc), *path)


def _parse_norms(cfg):
    for name, d in (cfg.raw.get("norms") or {}).items():
        try:
            cfg.norms[name] = norm_from_dict(d)
        except (ValueError, TypeError, KeyError) as exc:
            raise cfg.error(f"bad norm: {exc}", "norms", name)


def _parse_hosts(cfg):
    pending = dict(cfg.raw.get("quantizations") or {})
    # resolve in dependency order
    for _ in range(len(pending) + 1):
        progressed = False
        for name, d in list(pending.items()):
            path = ("quantizations", name)
            if not isinstance(d, dict):
                raise cfg.error("quantization must be a mapping", *path)
            kind = d.get("kind")
            if kind not in KINDS:
                raise cfg.error(f"unknown quantization kind {kind!r}", *path, "kind")
            deps = d.get("of", [])
            deps = deps if isinstance(deps, list) else [deps]
            if any(dep in pending for dep in deps):
                continue
            cfg.hosts[name] = _build_host(cfg, d, kind, path)
            del pending[name]
            progressed = True
        if not pending:
            return
        if not progressed:
            break
    name = next(iter(pending))
    raise cfg.error("unresolvable or cyclic reference", "quantizations", name, "of")


def _build_host(cfg, d, kind, path) -> QuantizedSpace:
    try:
        if kind in ("min", "max", "vector_valued"):
            space = cfg.get("spaces", d.get("space"), *path, "space")
            norm = cfg.get("norms", d.get("norm"), *path, "norm")
            p = float(d.get("p", 2))
            return QuantizedSpace(space, p, kind, norm, restarts=int(d.get("restarts", 8)))
        if kind == "standard_extension":
            inner = cfg.get("hosts", d.get("of"), *path, "of")
            return standard_extension(inner, _positive_int(cfg, d.get("copies", 2), *path, "copies"))
        if kind == "induced":
            return induced(cfg.get("hosts", d.get("of"), *path, "of"))
        of = d.get("of")
        if not isinstance(of, list) or len(of) != 2:
            raise cfg.error("pconvex_tensor needs two hosts", *path, "of")
        hE = cfg.get("hosts", of[0], *path, "of", 0)
        hF = cfg.get("hosts", of[1], *path, "of", 1)
        diamond = canonical_diamond(hE.base, hE.p, d.get("pairing", "cantor"))
        return pconvex_tensor_space(
            hE,
            hF,
            diamond=diamond,
            copies=_positive_int(cfg, d.get("copies", 8), *path, "copies"),
            budget=int(d.get("budget", 64)),
            seed=cfg.seed,
            route=d.get("route", "auto"),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise cfg.error(str(exc), *path)


def _parse_tasks(cfg):
    tasks = cfg.raw.get("tasks") or []
    if not isinstance(tasks, list):
        raise cfg.error("tasks must be a list", "tasks")
    names = set()
    for i, t in enumerate(tasks):
        path = ("tasks", i)
        if not isinstance(t, dict):
            raise cfg.error("task must be a mapping", *path)
        ttype = t.get("type")
        if ttype not in TASK_TYPES:
            raise cfg.error(f"unknown task type {ttype!r}", *path, "type")
        name = t.get("name", f"{ttype}{i}")
        if name in names:
            raise cfg.error(f"duplicate task name {name!r}", *path, "name")
        names.add(name)
        if ttype == "space":
            cfg.get("spaces", t.get("space"), *path, "space")
        else:
            cfg.get("hosts", t.get("host"), *path, "host")
        if ttype == "norm":
            cfg.get("elements", t.get("element"), *path, "element")
        if ttype == "check" and t.get("check") not in CHECKS:
            raise cfg.error(f"unknown check {t.get('check')!r}", *path, "check")
        for ref in ("phi", "psi", "a"):
            if ref in t:
                cfg.get("operators", t[ref], *path, ref)
        for ref in ("g", "h"):
            if ref in t:
                cfg.get("elements", t[ref], *path, ref)
        cfg.tasks.append(dict(t, name=name, index=i))
