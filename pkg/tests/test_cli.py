import json
import textwrap

import numpy as np
import pytest

from pconvex.cli import main, payload, render_tables, required_failures, run, task_seed
from pconvex.config import ConfigError, load_config

BASE = """\
schema: 1
seed: 11
spaces:
  cells: {cells: {count: 4, weight: 0.25}}
  atoms: {atoms: [{weight: 1.0}, {weight: 1.0}]}
norms:
  l1: {type: lr, r: 1, dim: 2}
  l2: {type: lr, r: 2, dim: 2}
quantizations:
  E: {space: cells, p: 2, kind: min, norm: l1}
  F: {space: cells, p: 2, kind: min, norm: l2}
  V: {space: atoms, p: 2, kind: vector_valued, norm: l1}
  T: {kind: pconvex_tensor, of: [E, F], budget: 4}
elements:
  xi_x_y: [[1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]
"""


def cfg(tasks: str, base: str = BASE):
    return base + "tasks:\n" + textwrap.indent(textwrap.dedent(tasks), "  ")


def write(tmp_path, text):
    f = tmp_path / "exp.yaml"
    f.write_text(text)
    return f


def test_empty_tasks_valid_report():
    rep = run(load_config(BASE + "tasks: []\n"))
    assert rep["tasks"] == [] and rep["schema"] == 1 and len(rep["config_sha256"]) == 64
    assert required_failures(rep) == []


def test_elementary_tensor_norm_task():
    rep = run(load_config(cfg("- {name: t, type: norm, host: T, element: xi_x_y}\n")))
    r = rep["tasks"][0]["result"]
    # ||chi(cell 0)|| = 0.5, ||e_1||_l1 = 1, ||e_1||_l2 = 1
    assert r["estimate"]["lower"] <= 0.5 + 1e-9 <= r["estimate"]["upper"] + 2e-9
    assert r["estimate"]["method_tags"] and r["budget"] == 4
    assert set(r["trace"]) == {str(n) for n in range(1, 9)}


def test_unknown_kind_names_field_and_line():
    text = BASE.replace("kind: vector_valued", "kind: ellipsoid") + "tasks: []\n"
    with pytest.raises(ConfigError) as exc:
        load_config(text)
    msg = str(exc.value)
    assert "quantizations.V.kind" in msg and "line 12" in msg and "ellipsoid" in msg


@pytest.mark.parametrize(
    "mutate, needle",
    [
        (lambda s: s.replace("seed: 11\n", ""), "seed is mandatory"),
        (lambda s: s.replace("schema: 1", "schema: 2"), "schema must be 1"),
        (lambda s: s.replace("norm: l2", "norm: l7"), "unknown norm 'l7'"),
        (lambda s: s.replace("of: [E, F]", "of: [E]"), "needs two hosts"),
        (lambda s: s + "tasks:\n  - {type: norm, host: E, element: nope}\n", "unknown element 'nope'"),
        (lambda s: s + "tasks:\n  - {type: check, check: vibes, host: E}\n", "unknown check"),
        (lambda s: s + "tasks: [{type: space, space: cells, name: a}, {type: space, space: cells, name: a}]\n", "duplicate task name"),
        (lambda s: s + "tasks: [\n", "invalid YAML"),
    ],
)
def test_schema_errors(mutate, needle):
    text = mutate(BASE)
    if "tasks" not in text:
        text += "tasks: []\n"
    with pytest.raises(ConfigError, match=needle):
        load_config(text)


def test_cyclic_reference():
    bad = BASE.replace("quantizations:\n", "quantizations:\n  A: {kind: induced, of: B}\n  B: {kind: induced, of: A}\n")
    with pytest.raises(ConfigError, match="cyclic"):
        load_config(bad + "tasks: []\n")


def test_determinism_and_task_seeds():
    text = cfg(
        """\
        - {name: c, type: check, check: contractibility, host: E, trials: 20}
        - {name: w, type: witness, host: V, budget: 20}
        - {name: n, type: norm, host: T, element: xi_x_y}
        """
    )
    one = run(load_config(text), workers=1)
    two = run(load_config(text), workers=3)
    assert json.dumps(payload(one), sort_keys=True) == json.dumps(payload(two), sort_keys=True)
    assert one["tasks"][0]["seed"] == task_seed(11, 0) != task_seed(11, 1)
    assert "timing" not in json.dumps(payload(one))


def test_per_task_errors_do_not_abort_siblings():
    text = cfg(
        """\
        - {name: bad, type: check, check: metric_mapping, host: E, required: true}
        - {name: good, type: space, space: cells}
        """
    )
    rep = run(load_config(text))
    bad, good = rep["tasks"]
    assert bad["status"] == "error" and "pconvex_tensor" in bad["error"]
    assert good["status"] == "ok" and good["result"]["dim"] == 4
    assert required_failures(rep) == ["bad"]


def test_main_exit_codes_and_outputs(tmp_path, capsys):
    ok = write(tmp_path, cfg("- {name: c, type: check, check: contractibility, host: E, trials: 10, required: true}\n"))
    out = tmp_path / "run.json"
    assert main(["report", str(ok), "--output", str(out), "--quiet"]) == 0
    data = json.loads(out.read_text())
    assert data["tasks"][0]["passed"] is True
    assert "environment" in data and "numpy" in data["environment"]
    assert "worst ratio" in out.with_suffix(".txt").read_text()

    failing = write(tmp_path, cfg("- {name: h, type: check, check: contractibility, host: V, trials: 5, required: true}\n"))
    assert main(["check", str(failing), "--quiet"]) == 1
    assert "required checks failed: h" in capsys.readouterr().err

    bad = write(tmp_path, "schema: 1\n")
    assert main(["report", str(bad)]) == 2
    assert main(["report", str(tmp_path / "missing.yaml")]) == 2


def test_subcommand_filters_tasks(tmp_path, capsys):
    f = write(
        tmp_path,
        cfg(
            """\
            - {name: s, type: space, space: atoms}
            - {name: w, type: witness, host: V, budget: 10}
            """
        ),
    )
    out = tmp_path / "r.json"
    assert main(["space", str(f), "--output", str(out)]) == 0
    assert [t["name"] for t in json.loads(out.read_text())["tasks"]] == ["s"]
    assert "convenient False" in capsys.readouterr().out


def test_seed_and_tol_overrides(tmp_path):
    f = write(tmp_path, cfg("- {name: c, type: check, check: near_L, host: V, trials: 10}\n"))
    out = tmp_path / "r.json"
    main(["report", str(f), "--seed", "5", "--tol", "1e-3", "--output", str(out), "--quiet"])
    data = json.loads(out.read_text())
    assert data["seed"] == 5 and data["tasks"][0]["result"]["tolerances"]["tol"] == 1e-3


def test_tables_show_trace():
    rep = run(load_config(cfg("- {name: t, type: norm, host: T, element: xi_x_y}\n")))
    txt = render_tables(rep)
    assert "per-N upper bounds for t" in txt and "config sha256" in txt


def test_all_task_types_run():
    text = cfg(
        """\
        - {name: s, type: space, space: cells}
        - {name: n, type: norm, host: E, element: xi_x_y2}
        - {name: pc, type: check, check: p_convexity, host: E, trials: 10}
        - {name: tpc, type: check, check: p_convexity, host: T, trials: 3}
        - {name: mm, type: check, check: metric_mapping, host: T, trials: 3}
        - {name: uf, type: check, check: universal_factorization, host: T, trials: 3}
        - {name: inf, type: inflate, host: E, copies: 2, trials: 5}
        - {name: w, type: witness, host: V, budget: 10, rank_one_only: true}
        """
    )
    text = text.replace("elements:\n", "elements:\n  xi_x_y2: [[1, 2], [0, 0], [0, 1], [3, 0]]\n")
    rep = run(load_config(text))
    assert [t["status"] for t in rep["tasks"]] == ["ok"] * 8, [t.get("error") for t in rep["tasks"]]
    assert all(t["passed"] in (True, None) for t in rep["tasks"]), [(t["name"], t["passed"]) for t in rep["tasks"]]
