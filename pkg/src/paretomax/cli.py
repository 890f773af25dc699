"""Command-line interface: single runs, benchmark sweeps and 1-D
acquisition maps, all driven by JSON configuration files.

Exit codes: 0 success, 1 runtime failure (including aborted runs, whose
partial trace is still persisted), 2 configuration/schema errors.

All CSV output is deterministic: fixed column order, LF line endings,
17-significant-digit floats, and atomic temp-file-plus-rename writes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .acquisition import (
    constraint_mean_mask,
    exact_acquisition,
    mesmoc_baseline,
    mesmoc_baseline_terms,
    mesmoc_plus,
    mesmoc_plus_log,
)
from .core import (
    HyperSampling,
    Method,
    ObservationSet,
    RunConfig,
    make_problem,
)
from .gp import KernelParams
from .loop import (
    ProblemFamily,
    build_contexts,
    fit_hyper_models,
    make_builtin_problem,
    run_benchmark,
    run_single,
)

_METHOD_VALUES = tuple(m.value for m in Method)


# ---------------------------------------------------------------------------
# Config loading and validation
# ---------------------------------------------------------------------------


class ConfigError(Exception):
    """A malformed configuration; rendered with the offending field and its
    line in the file when locatable."""


class _Source:
    """Raw config text, for attributing errors to lines."""

    def __init__(self, path: Path, text: str):
        self.path = path
        self.text = text

    def where(self, field: Optional[str]) -> str:
        if field is None:
            return str(self.path)
        needle = f'"{field}"'
        for lineno, line in enumerate(self.text.splitlines(), 1):
            if needle in line:
                return f"{self.path}:{lineno} (field {field!r})"
        return f"{self.path} (field {field!r})"


def _load_config(path: Path) -> Tuple[dict, _Source]:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}")
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return obj, _Source(path, text)


def _check_keys(obj: dict, allowed: Sequence[str], src: _Source, context: str):
    for key in obj:
        if key not in allowed:
            raise ConfigError(
                f"unknown key {key!r} in {context} at {src.where(key)}; "
                f"allowed: {', '.join(sorted(allowed))}"
            )


def _type_name(types) -> str:
    return "/".join(t.__name__ for t in types)


def _get(obj: dict, key: str, types: tuple, src: _Source, *, required=False,
         default=None):
    if key not in obj:
        if required:
            raise ConfigError(f"missing required key {key!r} at {src.where(None)}")
        return default
    val = obj[key]
    # bool passes isinstance(..., int); reject it for numeric fields
    if bool not in types and isinstance(val, bool):
        raise ConfigError(
            f"{key!r} must be {_type_name(types)}, got bool at {src.where(key)}"
        )
    if not isinstance(val, types):
        raise ConfigError(
            f"{key!r} must be {_type_name(types)}, got "
            f"{type(val).__name__} at {src.where(key)}"
        )
    return val


def _positive_int(obj, key, src, *, required=False, default=None):
    val = _get(obj, key, (int,), src, required=required, default=default)
    if val is not None and val < 1:
        raise ConfigError(f"{key!r} must be >= 1 at {src.where(key)}")
    return val


def _float_list(raw, key, src) -> List[float]:
    if not isinstance(raw, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw
    ):
        raise ConfigError(f"{key!r} must be a list of numbers at {src.where(key)}")
    return [float(v) for v in raw]


def _parse_method(raw: str, src: _Source, key: str) -> Method:
    try:
        return Method(raw)
    except ValueError:
        raise ConfigError(
            f"unknown method {raw!r} at {src.where(key)}; "
            f"one of: {', '.join(_METHOD_VALUES)}"
        )


def _parse_kernel_params(obj: dict, src: _Source) -> KernelParams:
    _check_keys(obj, ("amplitude", "lengthscales", "noise_variance"), src,
                "kernel params")
    amp = _get(obj, "amplitude", (int, float), src, required=True)
    ls = _float_list(_get(obj, "lengthscales", (list,), src, required=True),
                     "lengthscales", src)
    noise = _get(obj, "noise_variance", (int, float), src, required=True)
    if amp <= 0 or any(v <= 0 for v in ls) or noise < 0:
        raise ConfigError(
            f"kernel params need positive amplitude/lengthscales and "
            f"non-negative noise at {src.where('amplitude')}"
        )
    return KernelParams(float(amp), np.array(ls), float(noise))


def _parse_hyper_sampling(obj: Optional[dict], src: _Source) -> HyperSampling:
    if obj is None:
        return HyperSampling()
    _check_keys(obj, ("kind", "count", "params"), src, "hyper_sampling")
    kind = _get(obj, "kind", (str,), src, default="slice")
    if kind == "slice":
        if "params" in obj:
            raise ConfigError(
                f"'params' only applies to fixed hyper sampling at "
                f"{src.where('params')}"
            )
        return HyperSampling(kind="slice",
                             count=_positive_int(obj, "count", src, default=10))
    if kind == "fixed":
        raw = _get(obj, "params", (dict,), src, required=True)
        if "amplitude" in raw:
            return HyperSampling(kind="fixed", params=_parse_kernel_params(raw, src))
        return HyperSampling(
            kind="fixed",
            params={label: _parse_kernel_params(p, src) for label, p in raw.items()},
        )
    raise ConfigError(
        f"hyper_sampling kind must be 'slice' or 'fixed' at {src.where('kind')}"
    )


def _parse_family(obj: dict, src: _Source) -> ProblemFamily:
    kind = _get(obj, "kind", (str,), src, required=True)
    noise = float(_get(obj, "noise_variance", (int, float), src, default=0.0))
    if noise < 0:
        raise ConfigError(
            f"'noise_variance' must be >= 0 at {src.where('noise_variance')}"
        )
    if kind == "builtin":
        _check_keys(obj, ("kind", "name", "noise_variance"), src, "problem")
        return ProblemFamily(
            kind="builtin",
            name=_get(obj, "name", (str,), src, required=True),
            noise_variance=noise,
        )
    if kind == "rff":
        _check_keys(
            obj,
            ("kind", "dim", "num_objectives", "num_constraints",
             "noise_variance", "truth_features"),
            src, "problem",
        )
        return ProblemFamily(
            kind="rff",
            dim=_positive_int(obj, "dim", src, required=True),
            num_objectives=_positive_int(obj, "num_objectives", src, required=True),
            num_constraints=_get(obj, "num_constraints", (int,), src, default=0),
            noise_variance=noise,
            truth_features=_positive_int(obj, "truth_features", src, default=500),
        )
    raise ConfigError(
        f"problem kind must be 'builtin' or 'rff' at {src.where('kind')}"
    )


_COMMON_RUN_KEYS = (
    "num_front_samples", "front_size", "rff_features", "acq_grid_size",
    "initial_design_size", "hyper_sampling",
)


def _parse_run_options(obj: dict, src: _Source) -> dict:
    opts = {
        "num_front_samples": _positive_int(obj, "num_front_samples", src,
                                           default=10),
        "front_size": _positive_int(obj, "front_size", src, default=50),
        "rff_features": _positive_int(obj, "rff_features", src, default=500),
        "acq_grid_size": _positive_int(obj, "acq_grid_size", src, default=1000),
        "initial_design_size": _positive_int(obj, "initial_design_size", src),
        "hyper_sampling": _parse_hyper_sampling(
            _get(obj, "hyper_sampling", (dict,), src), src
        ),
    }
    return opts


def _parse_name(obj: dict, src: _Source) -> str:
    name = _get(obj, "name", (str,), src, required=True)
    if not name or "/" in name or "\\" in name or name in (".", ".."):
        raise ConfigError(
            f"'name' must be a plain directory name at {src.where('name')}"
        )
    return name


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: Path, header: Sequence[str], rows):
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    _atomic_write(path, "\n".join(lines) + "\n")


def _versions() -> dict:
    import scipy

    return {
        "paretomax": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": sys.version.split()[0],
    }


def _write_meta(path: Path, payload: dict):
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

_RUN_KEYS = ("name", "seed", "method", "iterations", "problem",
             "instance_seed") + _COMMON_RUN_KEYS


def cmd_run(config_path: Path, out_root: Path, seed_override: Optional[int]) -> int:
    obj, src = _load_config(config_path)
    _check_keys(obj, _RUN_KEYS, src, "run config")
    name = _parse_name(obj, src)
    seed = seed_override if seed_override is not None else _get(
        obj, "seed", (int,), src, required=True
    )
    method = _parse_method(
        _get(obj, "method", (str,), src, required=True), src, "method"
    )
    iterations = _positive_int(obj, "iterations", src, required=True)
    family = _parse_family(_get(obj, "problem", (dict,), src, required=True), src)
    instance_seed = _get(obj, "instance_seed", (int,), src, default=seed)
    opts = _parse_run_options(obj, src)

    problem = family.instantiate(instance_seed, 0)
    config = RunConfig(method=method, iterations=iterations, seed=seed, **opts)
    trace = run_single(problem, config)

    outdir = out_root / name
    d = problem.spec.dim
    header = ["iteration", "box"] + [f"x{i}" for i in range(d)] + ["y", "metric"]
    rows = (
        [str(r.iteration), r.box.label] + [_fmt(v) for v in r.x]
        + [_fmt(r.y), _fmt(r.metric)]
        for r in trace.rows
    )
    _write_csv(outdir / "trace.csv", header, rows)
    _write_meta(outdir / "meta.json", {
        "command": "run",
        "name": name,
        "seed": seed,
        "instance_seed": instance_seed,
        "method": method.value,
        "iterations": iterations,
        "problem": obj["problem"],
        "options": {k: v for k, v in obj.items()
                    if k in _COMMON_RUN_KEYS and k != "hyper_sampling"},
        "initial_design_size": config.resolved_initial_design(d),
        "hv_max": problem.hv_max,
        "reference": [float(v) for v in problem.reference],
        "final_metric": trace.metrics[-1] if trace.metrics else None,
        "eval_counts": trace.eval_counts(),
        "wall_time_seconds": trace.wall_time,
        "aborted": trace.aborted,
        "abort_reason": trace.abort_reason,
        "versions": _versions(),
    })
    if trace.aborted:
        print(f"run aborted: {trace.abort_reason}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

_BENCH_KEYS = ("name", "seed", "methods", "iterations", "reps",
               "problem") + _COMMON_RUN_KEYS


def _part_path(parts_dir: Path, method_value: str, rep: int) -> Path:
    return parts_dir / f"{method_value}_{rep:04d}.csv"


def _load_parts(parts_dir: Path, methods, reps, iterations):
    """Previously persisted per-repetition metric files, if complete."""
    preloaded = {}
    for method in methods:
        for rep in range(reps):
            path = _part_path(parts_dir, method.value, rep)
            if not path.exists():
                continue
            try:
                lines = path.read_text().splitlines()
                vals = np.array([float(s.split(",")[1]) for s in lines[1:]])
            except (OSError, ValueError, IndexError):
                continue
            if len(vals) == iterations + 1:
                preloaded[(method.value, rep)] = vals
    return preloaded


def cmd_bench(config_path: Path, out_root: Path, seed_override: Optional[int]) -> int:
    obj, src = _load_config(config_path)
    _check_keys(obj, _BENCH_KEYS, src, "bench config")
    name = _parse_name(obj, src)
    seed = seed_override if seed_override is not None else _get(
        obj, "seed", (int,), src, required=True
    )
    raw_methods = _get(obj, "methods", (list,), src, required=True)
    if not raw_methods:
        raise ConfigError(f"'methods' must be non-empty at {src.where('methods')}")
    methods = [_parse_method(m, src, "methods") for m in raw_methods]
    if len(set(methods)) != len(methods):
        raise ConfigError(f"'methods' has duplicates at {src.where('methods')}")
    iterations = _positive_int(obj, "iterations", src, required=True)
    reps = _positive_int(obj, "reps", src, required=True)
    family = _parse_family(_get(obj, "problem", (dict,), src, required=True), src)
    opts = _parse_run_options(obj, src)

    outdir = out_root / name
    parts_dir = outdir / "parts"
    parts_dir.mkdir(parents=True, exist_ok=True)
    preloaded = _load_parts(parts_dir, methods, reps, iterations)

    def persist(method_value: str, rep: int, vals: np.ndarray):
        rows = ([str(i), _fmt(v)] for i, v in enumerate(vals))
        _write_csv(_part_path(parts_dir, method_value, rep),
                   ["iteration", "metric"], rows)

    t0 = time.perf_counter()
    result = run_benchmark(
        family, methods, reps, iterations, master_seed=seed,
        config_overrides=opts, on_result=persist, preloaded=preloaded,
    )
    rows = (
        [method, str(it), _fmt(mean), _fmt(stderr), str(n)]
        for method, it, mean, stderr, n in result.summary_rows()
    )
    _write_csv(outdir / "bench.csv",
               ["method", "iteration", "mean_metric", "stderr", "reps"], rows)
    _write_meta(outdir / "meta.json", {
        "command": "bench",
        "name": name,
        "seed": seed,
        "methods": [m.value for m in methods],
        "iterations": iterations,
        "reps": reps,
        "problem": obj["problem"],
        "resumed_parts": len(preloaded),
        "wall_time_seconds": time.perf_counter() - t0,
        "versions": _versions(),
    })
    return 0


# ---------------------------------------------------------------------------
# acq-map
# ---------------------------------------------------------------------------

_ACQ_MAP_KEYS = ("name", "seed", "problem", "observations", "grid_points",
                 "per_box", "include_exact") + _COMMON_RUN_KEYS
_ACQ_PROBLEM_KEYS = ("dim", "lower", "upper", "num_objectives",
                     "num_constraints", "noise_variance")


def _parse_acq_problem(obj: dict, src: _Source):
    _check_keys(obj, _ACQ_PROBLEM_KEYS, src, "acq-map problem")
    dim = _positive_int(obj, "dim", src, required=True)
    if dim != 1:
        raise ConfigError(
            f"acquisition maps are one-dimensional; 'dim' must be 1 at "
            f"{src.where('dim')}"
        )
    lower = _float_list(_get(obj, "lower", (list,), src, required=True),
                        "lower", src)
    upper = _float_list(_get(obj, "upper", (list,), src, required=True),
                        "upper", src)
    try:
        return make_problem(
            dim, lower, upper,
            _positive_int(obj, "num_objectives", src, required=True),
            _get(obj, "num_constraints", (int,), src, default=0),
            float(_get(obj, "noise_variance", (int, float), src, default=0.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid acq-map problem at {src.where('dim')}: {exc}")


def _parse_observations(raw, spec, src: _Source) -> ObservationSet:
    if not isinstance(raw, list) or not raw:
        raise ConfigError(
            f"'observations' must be a non-empty list at {src.where('observations')}"
        )
    labels = [b.label for b in spec.boxes()]
    obs = ObservationSet(spec)
    for item in raw:
        if not isinstance(item, dict):
            raise ConfigError(
                f"each observation must be an object at {src.where('observations')}"
            )
        _check_keys(item, ("x", "values"), src, "observation")
        x = _float_list(_get(item, "x", (list,), src, required=True), "x", src)
        values = _get(item, "values", (dict,), src, required=True)
        if sorted(values) != sorted(labels):
            raise ConfigError(
                f"observation values must cover exactly {labels} at "
                f"{src.where('values')}"
            )
        try:
            obs.record_all(np.array(x), [float(values[lb]) for lb in labels])
        except ValueError as exc:
            raise ConfigError(f"bad observation at {src.where('x')}: {exc}")
    return obs


def cmd_acq_map(config_path: Path, out_root: Path,
                seed_override: Optional[int]) -> int:
    obj, src = _load_config(config_path)
    _check_keys(obj, _ACQ_MAP_KEYS, src, "acq-map config")
    name = _parse_name(obj, src)
    seed = seed_override if seed_override is not None else _get(
        obj, "seed", (int,), src, required=True
    )
    spec = _parse_acq_problem(_get(obj, "problem", (dict,), src, required=True), src)
    obs = _parse_observations(obj.get("observations"), spec, src)
    grid_points = _positive_int(obj, "grid_points", src, default=100)
    per_box = _get(obj, "per_box", (bool,), src, default=False)
    include_exact = _get(obj, "include_exact", (bool,), src,
                         default=spec.num_boxes <= 3)
    if include_exact and spec.num_boxes > 3:
        raise ConfigError(
            f"the exact reference handles at most 3 black boxes at "
            f"{src.where('include_exact')}"
        )
    opts = _parse_run_options(obj, src)

    config = RunConfig(method=Method.MESMOC_PLUS, iterations=1, seed=seed, **opts)
    models, _ = fit_hyper_models(spec, obs, config, seed, 0)
    contexts = build_contexts(spec, models, obs, config, seed, 0)

    xs = np.linspace(spec.lower[0], spec.upper[0], grid_points)
    grid = xs[:, None]
    bd = mesmoc_plus(grid, contexts)
    log_vals = mesmoc_plus_log(grid, contexts)
    mask = constraint_mean_mask(grid, contexts)
    base = mesmoc_baseline(grid, contexts, mask)

    header = ["x", "MesmocPlus", "MesmocPlusLog", "Mesmoc"]
    columns = [xs, bd.total, log_vals, base]
    if include_exact:
        header.append("Exact")
        columns.append(exact_acquisition(grid, contexts))
    if per_box:
        tf, tc = mesmoc_baseline_terms(grid, contexts)
        per_plus = list(np.moveaxis(bd.per_objective, -1, 0)) + list(
            np.moveaxis(bd.per_constraint, -1, 0)
        )
        per_base = list(tf.T) + list(tc.T)
        for label, col in zip((b.label for b in spec.boxes()), per_plus):
            header.append(f"MesmocPlus_{label}")
            columns.append(col)
        for label, col in zip((b.label for b in spec.boxes()), per_base):
            header.append(f"Mesmoc_{label}")
            columns.append(col)

    outdir = out_root / name
    rows = ([_fmt(col[i]) for col in columns] for i in range(grid_points))
    _write_csv(outdir / "acqmap.csv", header, rows)
    _write_meta(outdir / "meta.json", {
        "command": "acq-map",
        "name": name,
        "seed": seed,
        "grid_points": grid_points,
        "columns": header,
        "num_observations": len(obj["observations"]),
        "versions": _versions(),
    })
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paretomax",
        description="Constrained multi-objective Bayesian optimization runs, "
                    "benchmarks and acquisition maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, help_text in (
        ("run", "one optimization run, writing trace.csv"),
        ("bench", "repeated method comparison, writing bench.csv"),
        ("acq-map", "acquisition values over a 1-D grid, writing acqmap.csv"),
    ):
        p = sub.add_parser(cmd, help=help_text)
        p.add_argument("--config", required=True, type=Path,
                       help="JSON configuration file")
        p.add_argument("--out", required=True, type=Path,
                       help="output root; results land in <out>/<name>/")
        p.add_argument("--seed", type=int, default=None,
                       help="override the seed from the config")
    return parser


_COMMANDS = {"run": cmd_run, "bench": cmd_bench, "acq-map": cmd_acq_map}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args.config, args.out, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surfaced as exit status
        print(f"error: {exc}", file=sys.stderr)
        return 1
