"""The remaining checked-in experiment configs, run end to end through the CLI.

The lambda = 0.25 configs repeat the box-law, Poisson and cluster checks in a
regime where finite-time clusters are already sparse; they are slow.
"""

import json
from pathlib import Path

import pytest

from contactscale.cli import EXIT_OK, main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(name, tmp_path):
    out = tmp_path / "out"
    code = main(["test", str(CONFIGS / name), "--out", str(out)])
    doc = json.loads((out / "results.json").read_text())
    failed = [r["name"] for r in doc["reports"] if not r["passed"]]
    return code, doc, failed


def test_survival_slopes_agree(tmp_path):
    code, doc, failed = run("survival.cfg", tmp_path)
    assert code == EXIT_OK, failed
    names = {r["name"] for r in doc["reports"]}
    assert {"slope_equality", "h_monotone"} <= names


def test_yaglom_tv_decreases(tmp_path):
    code, doc, failed = run("yaglom.cfg", tmp_path)
    assert code == EXIT_OK, failed
    rows = doc["tables"]["tv"]["rows"]
    assert len(rows) == 2 and rows[1][1] < rows[0][1]


def test_bad_points_become_rarer(tmp_path):
    code, doc, failed = run("goodpoints.cfg", tmp_path)
    assert code == EXIT_OK, failed
    assert all(r[4] == 0 for r in doc["tables"]["goodpoints"]["rows"])


def test_no_giant_cluster_at_unit_rate(tmp_path):
    # at lambda = 1, t = 8 the t^3 linking radius chains clusters across the window
    code, doc, failed = run("clusters.cfg", tmp_path)
    assert code == EXIT_OK, failed


@pytest.mark.slow
def test_clusters_sparse_rate(tmp_path):
    code, doc, failed = run("supplementary/clusters_lambda025.cfg", tmp_path)
    assert code == EXIT_OK, failed


@pytest.mark.slow
def test_box_law_sparse_rate(tmp_path):
    code, doc, failed = run("supplementary/box_law_lambda025.cfg", tmp_path)
    assert code == EXIT_OK, failed


@pytest.mark.slow
def test_poisson_suite_sparse_rate(tmp_path):
    code, doc, failed = run("supplementary/poisson_lambda025.cfg", tmp_path)
    assert code == EXIT_OK, failed
