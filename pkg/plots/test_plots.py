"""Figure generation smoke tests.

Inputs come exclusively from the optimizer's command-line interface and its
CSV files: artifacts already produced under out/ are reused, and missing
ones are regenerated by invoking the CLI in a subprocess. make.py itself is
exercised as a subprocess too, never imported alongside the optimizer.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[1]
MAKE = REPO / "plots" / "make.py"
OUT = REPO / "out"

FAST_OPTS = {
    "num_front_samples": 2,
    "rff_features": 100,
    "acq_grid_size": 200,
    "front_size": 20,
    "hyper_sampling": {
        "kind": "fixed",
        "params": {"amplitude": 1.0, "lengthscales": [0.3],
                   "noise_variance": 1e-6},
    },
}


def cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "paretomax", *args],
        capture_output=True, text=True, cwd=REPO,
    )


def render(kind, src, dst):
    return subprocess.run(
        [sys.executable, str(MAKE), "--kind", kind, "--in", str(src),
         "--out", str(dst)],
        capture_output=True, text=True,
    )


@pytest.fixture(scope="module")
def acqmap_csv(tmp_path_factory):
    existing = OUT / "acqmap-1d" / "acqmap.csv"
    if existing.exists():
        return existing
    tmp = tmp_path_factory.mktemp("acqmap")
    proc = cli("acq-map", "--config", str(REPO / "configs" / "acqmap_1d.json"),
               "--out", str(tmp))
    assert proc.returncode == 0, proc.stderr
    return tmp / "acqmap-1d" / "acqmap.csv"


@pytest.fixture(scope="module")
def bench_csv(tmp_path_factory):
    existing = OUT / "bench-2d" / "bench.csv"
    if existing.exists():
        return existing
    tmp = tmp_path_factory.mktemp("bench")
    cfg = tmp / "bench.json"
    cfg.write_text(json.dumps({
        "name": "mini-bench",
        "seed": 5,
        "methods": ["Random", "Mesmoc"],
        "iterations": 1,
        "reps": 2,
        "problem": {"kind": "builtin", "name": "parabolas1d",
                    "noise_variance": 0.0},
        **FAST_OPTS,
    }))
    proc = cli("bench", "--config", str(cfg), "--out", str(tmp))
    assert proc.returncode == 0, proc.stderr
    return tmp / "mini-bench" / "bench.csv"


@pytest.fixture(scope="module")
def trace_csv(tmp_path_factory):
    existing = OUT / "run-dec-1d" / "trace.csv"
    if existing.exists():
        return existing
    tmp = tmp_path_factory.mktemp("trace")
    cfg = tmp / "run.json"
    cfg.write_text(json.dumps({
        "name": "mini-dec",
        "seed": 5,
        "method": "MesmocPlusDec",
        "iterations": 3,
        "problem": {"kind": "builtin", "name": "parabolas1d",
                    "noise_variance": 0.0},
        **FAST_OPTS,
    }))
    proc = cli("run", "--config", str(cfg), "--out", str(tmp))
    assert proc.returncode == 0, proc.stderr
    return tmp / "mini-dec" / "trace.csv"


class TestFigures:
    def test_convergence(self, bench_csv, tmp_path):
        dst = tmp_path / "convergence.png"
        proc = render("convergence", bench_csv, dst)
        assert proc.returncode == 0, proc.stderr
        assert proc.stderr == ""
        assert dst.stat().st_size > 0

    def test_acqmap_totals(self, acqmap_csv, tmp_path):
        dst = tmp_path / "acqmap.png"
        proc = render("acqmap", acqmap_csv, dst)
        assert proc.returncode == 0, proc.stderr
        assert proc.stderr == ""
        assert dst.stat().st_size > 0

    def test_acqmap_per_box_panels(self, acqmap_csv, tmp_path):
        dst = tmp_path / "acqmap_boxes.png"
        proc = render("acqmap-boxes", acqmap_csv, dst)
        assert proc.returncode == 0, proc.stderr
        assert proc.stderr == ""
        assert dst.stat().st_size > 0

    def test_evalcounts(self, trace_csv, tmp_path):
        dst = tmp_path / "evalcounts.png"
        proc = render("evalcounts", trace_csv, dst)
        assert proc.returncode == 0, proc.stderr
        assert proc.stderr == ""
        assert dst.stat().st_size > 0


class TestErrorsAndIsolation:
    def test_wrong_columns_fail_cleanly(self, bench_csv, tmp_path):
        dst = tmp_path / "bad.png"
        proc = render("evalcounts", bench_csv, dst)
        assert proc.returncode == 1
        assert "box" in proc.stderr
        assert not dst.exists()

    def test_unknown_kind_rejected(self, bench_csv, tmp_path):
        proc = render("pie", bench_csv, tmp_path / "x.png")
        assert proc.returncode == 2

    def test_missing_input_fails(self, tmp_path):
        proc = render("convergence", tmp_path / "absent.csv",
                      tmp_path / "x.png")
        assert proc.returncode == 1

    def test_never_imports_the_optimizer(self):
        text = MAKE.read_text()
        assert "import paretomax" not in text
        assert "from paretomax" not in text

    def test_optimizer_tests_never_import_plots(self):
        # the optimizer's own suite must run with this directory deleted
        for path in (REPO / "tests").glob("*.py"):
            text = path.read_text()
            assert "from plots" not in text
            assert "import make" not in text
