"""Synthetic ground-truth problems, the sequential optimization loop and the
multi-repetition benchmark harness.

A run alternates: fit per-box GP hyperposteriors, sample approximate Pareto
fronts from posterior draws, maximize the configured acquisition, evaluate
the true black boxes (all of them per step when coupled, a single selected
one when decoupled), then recommend an approximate Pareto set from posterior
means and score it against the truth.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from multiprocessing import get_context
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .acquisition import (
    AcquisitionContext,
    constraint_mean_mask,
    decoupled_select,
    mesmoc_baseline,
    mesmoc_baseline_terms,
    mesmoc_plus,
    mesmoc_plus_log,
    optimize_acquisition,
)
from .core import (
    BlackBoxId,
    BoxKind,
    HyperSampling,
    Method,
    ObservationSet,
    ProblemSpec,
    PURPOSE_ACQ_GRID,
    PURPOSE_ADF_ORDER,
    PURPOSE_FALLBACK,
    PURPOSE_FRONT_GRID,
    PURPOSE_HV_GRID,
    PURPOSE_HYPERS,
    PURPOSE_INIT_DESIGN,
    PURPOSE_INSTANCE,
    PURPOSE_OBS_NOISE,
    PURPOSE_RECOMMEND,
    PURPOSE_REP,
    PURPOSE_RFF,
    RunConfig,
    make_problem,
    objective,
    stream,
    stream_seed,
)
from .gp import GpModel, HyperPrior, KernelParams, fit, predict, slice_sample_hypers
from .pareto import RecommendationSet, hypervolume, log_hv_rel_diff, non_dominated
from .sampler import draw_posterior_sample, sample_front

FRONT_GRID_SIZE = 1000
RECOMMEND_GRID_SIZE = 5000
HV_GRID_SIZE = 100_000
REFERENCE_MARGIN = 0.1
RECOMMEND_KEEP_FRACTION = 0.05
NOISELESS_MODEL_NOISE = 1e-6
TRUTH_LENGTHSCALE_FRACTION = 0.25
_INSTANCE_RETRIES = 10


# ---------------------------------------------------------------------------
# Ground truth
# ---------------------------------------------------------------------------


@dataclass
class TrueProblem:
    """A problem with known truth: one vectorized callable per black box
    ((n, d) -> (n,), objectives first), the hypervolume reference point and
    the best attainable feasible hypervolume estimated on a dense grid."""

    spec: ProblemSpec
    functions: List[Callable[[np.ndarray], np.ndarray]]
    reference: np.ndarray
    hv_max: float
    name: str = "synthetic"

    def true_values(self, box: BlackBoxId, x: np.ndarray) -> np.ndarray:
        return np.asarray(
            self.functions[self.spec.box_linear_index(box)](np.atleast_2d(x)),
            float,
        )

    def evaluate(
        self, box: BlackBoxId, x: np.ndarray, rng: Optional[np.random.Generator] = None
    ) -> float:
        """One observation: the truth plus observation noise if configured."""
        y = float(self.true_values(box, x)[0])
        nv = self.spec.noise_for(box)
        if rng is not None and nv > 0:
            y += np.sqrt(nv) * rng.standard_normal()
        return y


def _grid_truth(
    functions: Sequence[Callable], spec: ProblemSpec, grid: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    k, c = spec.num_objectives, spec.num_constraints
    objs = np.column_stack([functions[i](grid) for i in range(k)])
    if c:
        cons = np.column_stack([functions[k + j](grid) for j in range(c)])
    else:
        cons = np.empty((len(grid), 0))
    return objs, cons


def reference_and_hv_max(
    functions: Sequence[Callable], spec: ProblemSpec, seed: int
) -> Tuple[np.ndarray, float]:
    """Reference point and best attainable hypervolume from a dense grid.

    The reference sits a 10% range margin beyond the componentwise worst
    feasible objective values; hv_max is the hypervolume of the feasible
    grid points against it. Returns hv_max 0.0 when nothing is feasible.
    """
    grid = stream(seed, PURPOSE_HV_GRID).uniform(
        spec.lower, spec.upper, size=(HV_GRID_SIZE, spec.dim)
    )
    objs, cons = _grid_truth(functions, spec, grid)
    feasible = np.all(cons >= 0.0, axis=1)
    if not feasible.any():
        return np.zeros(spec.num_objectives), 0.0
    pts = objs[feasible]
    span = pts.max(axis=0) - pts.min(axis=0)
    span = np.where(span > 0, span, 1.0)
    ref = pts.max(axis=0) + REFERENCE_MARGIN * span
    return ref, hypervolume(pts, ref)


def make_rff_problem(
    dim: int,
    num_objectives: int,
    num_constraints: int,
    seed: int,
    noise_variance: float = 0.0,
    truth_features: int = 500,
) -> TrueProblem:
    """Random smooth truth on [0, 1]^d: each box is a stationary random
    feature draw (unit amplitude, lengthscale a quarter of the range).

    Instances whose feasible region is empty on the calibration grid are
    redrawn a bounded number of times.
    """
    spec = make_problem(
        dim, np.zeros(dim), np.ones(dim), num_objectives, num_constraints,
        noise_variance,
    )
    params = KernelParams(1.0, np.full(dim, TRUTH_LENGTHSCALE_FRACTION), 0.0)
    prior_model = fit(np.empty((0, dim)), [], params)
    for attempt in range(_INSTANCE_RETRIES):
        functions = [
            draw_posterior_sample(
                prior_model,
                truth_features,
                stream_seed(seed, PURPOSE_INSTANCE, attempt, i),
            )
            for i in range(spec.num_boxes)
        ]
        ref, hv_max = reference_and_hv_max(
            functions, spec, stream_seed(seed, PURPOSE_INSTANCE, attempt)
        )
        if hv_max > 0:
            return TrueProblem(spec, functions, ref, hv_max, name="rff")
    raise RuntimeError(
        f"no feasible random instance found in {_INSTANCE_RETRIES} draws"
    )


def make_builtin_problem(name: str, noise_variance: float = 0.0) -> TrueProblem:
    """Analytic test problems with known geometry.

    "parabolas1d": two shifted parabolas on [0, 1] with a band constraint
    around the middle; the whole trade-off segment is feasible.
    "bnh": the classic two-objective, two-constraint benchmark on
    [0, 5] x [0, 3].
    """
    if name == "parabolas1d":
        spec = make_problem(1, [0.0], [1.0], 2, 1, noise_variance)
        functions = [
            lambda x: (x[:, 0] - 0.3) ** 2,
            lambda x: (x[:, 0] - 0.7) ** 2,
            lambda x: 0.4 - np.abs(x[:, 0] - 0.5),
        ]
    elif name == "bnh":
        spec = make_problem(2, [0.0, 0.0], [5.0, 3.0], 2, 2, noise_variance)
        functions = [
            lambda x: 4.0 * x[:, 0] ** 2 + 4.0 * x[:, 1] ** 2,
            lambda x: (x[:, 0] - 5.0) ** 2 + (x[:, 1] - 5.0) ** 2,
            lambda x: 25.0 - (x[:, 0] - 5.0) ** 2 - x[:, 1] ** 2,
            lambda x: (x[:, 0] - 8.0) ** 2 + (x[:, 1] + 3.0) ** 2 - 7.7,
        ]
    else:
        raise ValueError(f"unknown builtin problem {name!r}")
    ref, hv_max = reference_and_hv_max(functions, spec, seed=0)
    return TrueProblem(spec, functions, ref, hv_max, name=name)


# ---------------------------------------------------------------------------
# Run record
# ---------------------------------------------------------------------------


@dataclass
class TraceRow:
    iteration: int
    box: BlackBoxId
    x: np.ndarray
    y: float
    metric: float


@dataclass
class RunTrace:
    """Everything a single run produced. Wall time stays in memory (and in
    run metadata); the serialized evaluation trace depends only on the
    configuration and seed."""

    method: Method
    seed: int
    rows: List[TraceRow] = field(default_factory=list)
    metrics: List[float] = field(default_factory=list)
    recommendations: List[RecommendationSet] = field(default_factory=list)
    wall_time: float = 0.0
    aborted: bool = False
    abort_reason: str = ""

    def eval_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for row in self.rows:
            counts[row.box.label] = counts.get(row.box.label, 0) + 1
        return counts


class BlackBoxError(RuntimeError):
    """An underlying black-box evaluation raised; the run is aborted and the
    partial trace kept."""


# ---------------------------------------------------------------------------
# Loop pieces
# ---------------------------------------------------------------------------


def _theta_of(params: KernelParams, prior: HyperPrior) -> np.ndarray:
    theta = [np.log(params.amplitude), *np.log(params.lengthscales)]
    if prior.fixed_noise is None:
        theta.append(np.log(params.noise_variance))
    return np.array(theta)


def _model_prior(spec: ProblemSpec, box: BlackBoxId) -> HyperPrior:
    nv = spec.noise_for(box)
    # synthetic observation noise is known; pin it (tiny floor when none)
    return HyperPrior(fixed_noise=NOISELESS_MODEL_NOISE if nv == 0 else nv)


def fit_hyper_models(
    spec: ProblemSpec,
    obs: ObservationSet,
    config: RunConfig,
    seed: int,
    iteration: int,
    warm: Optional[Dict[BlackBoxId, np.ndarray]] = None,
) -> Tuple[Dict[BlackBoxId, List[GpModel]], Dict[BlackBoxId, np.ndarray]]:
    """Per box, one fitted model per kernel-hyperparameter sample.

    Slice chains restart from the previous iteration's final state. The
    per-box model list is cycled up to `num_front_samples` entries so model
    sample i always pairs with front sample i.
    """
    hs = config.hyper_sampling
    m = config.num_front_samples
    models: Dict[BlackBoxId, List[GpModel]] = {}
    new_warm: Dict[BlackBoxId, np.ndarray] = {}
    for box in spec.boxes():
        x, y = obs.inputs(box), obs.values(box)
        if hs.kind == "fixed":
            p = hs.params
            if isinstance(p, dict):
                p = p[box.label]
            models[box] = [fit(x, y, p)] * m
            continue
        prior = _model_prior(spec, box)
        rng = stream(seed, PURPOSE_HYPERS, iteration, spec.box_linear_index(box))
        start = warm.get(box) if warm else None
        samples = slice_sample_hypers(
            x, y, prior, spec.dim, rng, num_samples=hs.count, start=start
        )
        new_warm[box] = _theta_of(samples[-1], prior)
        fitted = [fit(x, y, p) for p in samples]
        models[box] = [fitted[i % len(fitted)] for i in range(m)]
    return models, new_warm


def build_contexts(
    spec: ProblemSpec,
    models: Dict[BlackBoxId, List[GpModel]],
    obs: ObservationSet,
    config: RunConfig,
    seed: int,
    iteration: int,
) -> List[AcquisitionContext]:
    """One acquisition context per front sample: the m-th hyperparameter
    models paired with a front extracted from their m-th posterior draws."""
    k, c = spec.num_objectives, spec.num_constraints
    noise_f = spec.noise_variance[:k]
    noise_c = spec.noise_variance[k:]
    observed = obs.all_inputs()
    contexts = []
    for m_i in range(config.num_front_samples):
        models_f = [models[b][m_i] for b in spec.boxes() if b.kind is BoxKind.OBJECTIVE]
        models_c = [models[b][m_i] for b in spec.boxes() if b.kind is BoxKind.CONSTRAINT]
        draws_f = [
            draw_posterior_sample(
                models_f[i], config.rff_features,
                stream_seed(seed, PURPOSE_RFF, iteration, m_i, i),
            )
            for i in range(k)
        ]
        draws_c = [
            draw_posterior_sample(
                models_c[j], config.rff_features,
                stream_seed(seed, PURPOSE_RFF, iteration, m_i, k + j),
            )
            for j in range(c)
        ]
        front = sample_front(
            draws_f, draws_c, spec.lower, spec.upper, observed,
            FRONT_GRID_SIZE, config.front_size,
            stream(seed, PURPOSE_FRONT_GRID, iteration, m_i),
        )
        contexts.append(
            AcquisitionContext(
                models_f, models_c, front, noise_f, noise_c,
                adf_seed=stream_seed(seed, PURPOSE_ADF_ORDER, iteration, m_i),
            )
        )
    return contexts


def coupled_acquisition(
    method: Method, contexts: Sequence[AcquisitionContext]
) -> Callable[[np.ndarray], np.ndarray]:
    if method is Method.MESMOC_PLUS:
        return lambda x: mesmoc_plus(x, contexts).total
    if method is Method.MESMOC_PLUS_LOG:
        return lambda x: mesmoc_plus_log(x, contexts)
    if method is Method.MESMOC:
        return lambda x: mesmoc_baseline(
            x, contexts, constraint_mean_mask(x, contexts)
        )
    raise ValueError(f"{method} has no coupled acquisition")


def decoupled_acquisitions(
    method: Method, spec: ProblemSpec, contexts: Sequence[AcquisitionContext]
) -> List[Tuple[BlackBoxId, Callable[[np.ndarray], np.ndarray]]]:
    if method is Method.MESMOC_PLUS_DEC:

        def make(box: BlackBoxId):
            def acq(x):
                bd = mesmoc_plus(np.atleast_2d(x), contexts)
                if box.kind is BoxKind.OBJECTIVE:
                    return bd.per_objective[..., box.index]
                return bd.per_constraint[..., box.index]

            return acq

    elif method is Method.MESMOC_DEC:

        def make(box: BlackBoxId):
            def acq(x):
                x2 = np.atleast_2d(x)
                tf, tc = mesmoc_baseline_terms(x2, contexts)
                val = (
                    tf[:, box.index]
                    if box.kind is BoxKind.OBJECTIVE
                    else tc[:, box.index]
                )
                return np.where(constraint_mean_mask(x2, contexts), val, -np.inf)

            return acq

    else:
        raise ValueError(f"{method} has no decoupled acquisition")
    return [(box, make(box)) for box in spec.boxes()]


def propose_coupled(
    method: Method,
    contexts: Sequence[AcquisitionContext],
    spec: ProblemSpec,
    config: RunConfig,
    seed: int,
    iteration: int,
) -> np.ndarray:
    if method is Method.RANDOM:
        rng = stream(seed, PURPOSE_ACQ_GRID, iteration)
        return rng.uniform(spec.lower, spec.upper)
    acq = coupled_acquisition(method, contexts)
    return optimize_acquisition(
        acq, spec.lower, spec.upper, config.acq_grid_size,
        stream_seed(seed, PURPOSE_ACQ_GRID, iteration),
    )


def propose_decoupled(
    method: Method,
    contexts: Sequence[AcquisitionContext],
    spec: ProblemSpec,
    config: RunConfig,
    seed: int,
    iteration: int,
) -> Tuple[BlackBoxId, np.ndarray]:
    box_acqs = decoupled_acquisitions(method, spec, contexts)
    box, x, value = decoupled_select(
        box_acqs, spec.lower, spec.upper, config.acq_grid_size,
        stream_seed(seed, PURPOSE_ACQ_GRID, iteration),
    )
    if not np.isfinite(value):
        # every box rejected everywhere (e.g. no candidate passes the
        # feasibility mask): fall back to a random box and input
        rng = stream(seed, PURPOSE_FALLBACK, iteration)
        boxes = list(spec.boxes())
        box = boxes[int(rng.integers(len(boxes)))]
        x = rng.uniform(spec.lower, spec.upper)
    return box, x


def recommend(
    spec: ProblemSpec,
    models: Dict[BlackBoxId, List[GpModel]],
    obs: ObservationSet,
    seed: int,
    iteration: int,
) -> RecommendationSet:
    """Approximate Pareto set from hyper-averaged posterior means over a
    random grid plus all observed inputs.

    Candidates need every constraint mean non-negative; if none qualifies,
    the least-violating 5% are used instead and flagged infeasible.
    """
    rng = stream(seed, PURPOSE_RECOMMEND, iteration)
    grid = rng.uniform(spec.lower, spec.upper, size=(RECOMMEND_GRID_SIZE, spec.dim))
    observed = obs.all_inputs()
    if len(observed):
        grid = np.vstack([grid, observed])

    def averaged_mean(box: BlackBoxId) -> np.ndarray:
        acc = np.zeros(len(grid))
        for model in models[box]:
            mean, _ = predict(model, grid)
            acc += mean
        return acc / len(models[box])

    objs = np.column_stack(
        [averaged_mean(objective(k)) for k in range(spec.num_objectives)]
    )
    if spec.num_constraints:
        cons = np.column_stack(
            [
                averaged_mean(BlackBoxId(BoxKind.CONSTRAINT, j))
                for j in range(spec.num_constraints)
            ]
        )
        feasible = np.all(cons >= 0.0, axis=1)
    else:
        feasible = np.ones(len(grid), dtype=bool)

    if feasible.any():
        pool = np.nonzero(feasible)[0]
        flagged = True
    else:
        violation = np.sum(np.maximum(0.0, -cons), axis=1)
        keep = max(1, int(np.ceil(RECOMMEND_KEEP_FRACTION * len(grid))))
        pool = np.argsort(violation, kind="stable")[:keep]
        flagged = False

    nd = pool[non_dominated(objs[pool])]
    return RecommendationSet(
        grid[nd], objs[nd], np.full(len(nd), flagged, dtype=bool)
    )


def score_recommendation(problem: TrueProblem, rec: RecommendationSet) -> float:
    """Metric of a recommendation against the truth: log relative
    hypervolume gap of its truly-feasible points."""
    spec = problem.spec
    objs, cons = _grid_truth(problem.functions, spec, rec.inputs)
    truly_feasible = np.all(cons >= 0.0, axis=1)
    pts = objs[truly_feasible]
    hv = hypervolume(pts, problem.reference) if len(pts) else 0.0
    return log_hv_rel_diff(hv, problem.hv_max)


# ---------------------------------------------------------------------------
# Single run
# ---------------------------------------------------------------------------


def run_single(problem: TrueProblem, config: RunConfig) -> RunTrace:
    """One full optimization run.

    Coupled methods evaluate every black box at the proposed input each
    iteration; decoupled methods evaluate exactly one. A black-box exception
    aborts the run, keeping the partial trace (its in-flight rows carry a
    NaN metric).
    """
    t_start = time.perf_counter()
    spec, seed = problem.spec, config.seed
    obs = ObservationSet(spec)
    trace = RunTrace(method=config.method, seed=seed)

    def observe(box: BlackBoxId, x: np.ndarray, iteration: int,
                pending: List[Tuple[BlackBoxId, np.ndarray, float]]):
        rng = noise_rngs.get((iteration, box))
        if rng is None:
            rng = stream(seed, PURPOSE_OBS_NOISE, iteration,
                         spec.box_linear_index(box))
            noise_rngs[(iteration, box)] = rng
        try:
            y = problem.evaluate(box, x, rng)
        except Exception as exc:
            raise BlackBoxError(f"black box {box.label} failed at {x}: {exc}") from exc
        obs.record(box, x, y)
        pending.append((box, x, y))

    def flush(iteration: int, pending, metric: float):
        for box, x, y in pending:
            trace.rows.append(TraceRow(iteration, box, np.array(x, float), y, metric))

    noise_rngs: Dict[Tuple[int, BlackBoxId], np.random.Generator] = {}
    n0 = config.resolved_initial_design(spec.dim)
    init_x = stream(seed, PURPOSE_INIT_DESIGN).uniform(
        spec.lower, spec.upper, size=(n0, spec.dim)
    )

    iteration = 0
    pending: List[Tuple[BlackBoxId, np.ndarray, float]] = []
    try:
        for x in init_x:
            for box in spec.boxes():
                observe(box, x, 0, pending)

        models, warm = fit_hyper_models(spec, obs, config, seed, 0)
        rec = recommend(spec, models, obs, seed, 0)
        metric = score_recommendation(problem, rec)
        trace.metrics.append(metric)
        trace.recommendations.append(rec)
        flush(0, pending, metric)

        for iteration in range(1, config.iterations + 1):
            pending = []
            if config.method is Method.RANDOM:
                x = propose_coupled(
                    config.method, [], spec, config, seed, iteration
                )
                for box in spec.boxes():
                    observe(box, x, iteration, pending)
            else:
                contexts = build_contexts(
                    spec, models, obs, config, seed, iteration
                )
                if config.method.decoupled:
                    box, x = propose_decoupled(
                        config.method, contexts, spec, config, seed, iteration
                    )
                    observe(box, x, iteration, pending)
                else:
                    x = propose_coupled(
                        config.method, contexts, spec, config, seed, iteration
                    )
                    for box in spec.boxes():
                        observe(box, x, iteration, pending)

            models, warm = fit_hyper_models(
                spec, obs, config, seed, iteration, warm
            )
            rec = recommend(spec, models, obs, seed, iteration)
            metric = score_recommendation(problem, rec)
            trace.metrics.append(metric)
            trace.recommendations.append(rec)
            flush(iteration, pending, metric)
    except BlackBoxError as exc:
        flush(iteration, pending, float("nan"))
        trace.aborted = True
        trace.abort_reason = str(exc)

    trace.wall_time = time.perf_counter() - t_start
    return trace


# ---------------------------------------------------------------------------
# Benchmark harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemFamily:
    """Recipe for constructing problem instances inside worker processes.

    Random-truth families draw a fresh instance per repetition (shared by
    every method at that repetition); builtin families are fixed."""

    kind: str = "rff"  # "rff" | "builtin"
    name: str = "rff"
    dim: int = 2
    num_objectives: int = 2
    num_constraints: int = 1
    noise_variance: float = 0.0
    truth_features: int = 500

    def instantiate(self, master_seed: int, rep: int) -> TrueProblem:
        if self.kind == "builtin":
            return make_builtin_problem(self.name, self.noise_variance)
        return make_rff_problem(
            self.dim,
            self.num_objectives,
            self.num_constraints,
            stream_seed(master_seed, PURPOSE_INSTANCE, rep),
            self.noise_variance,
            self.truth_features,
        )


@dataclass
class BenchmarkResult:
    methods: List[Method]
    iterations: int
    reps: int
    metrics: Dict[str, np.ndarray]  # method value -> (reps, iterations + 1)

    def summary_rows(self):
        """Yield (method, iteration, mean, stderr, reps_counted) rows,
        skipping repetitions that did not finish."""
        for method in self.methods:
            arr = self.metrics[method.value]
            for it in range(arr.shape[1]):
                col = arr[:, it]
                col = col[np.isfinite(col)]
                n = len(col)
                mean = float(col.mean()) if n else float("nan")
                stderr = (
                    float(col.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
                )
                yield method.value, it, mean, stderr, n


def _pin_worker_threads():
    # nested parallelism wastes the pool's cores on BLAS threads
    os.environ.setdefault("OMP_NUM_THREADS", "1")
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=1)
    except Exception:
        pass


def _bench_task(args) -> Tuple[str, int, np.ndarray, float]:
    family, method_value, method_index, rep, master_seed, base = args
    problem = family.instantiate(master_seed, rep)
    config = RunConfig(
        method=Method(method_value),
        iterations=base["iterations"],
        seed=stream_seed(master_seed, PURPOSE_REP, method_index, rep),
        num_front_samples=base["num_front_samples"],
        front_size=base["front_size"],
        rff_features=base["rff_features"],
        acq_grid_size=base["acq_grid_size"],
        hyper_sampling=base["hyper_sampling"],
        initial_design_size=base["initial_design_size"],
    )
    trace = run_single(problem, config)
    if trace.aborted:
        raise RuntimeError(
            f"repetition {rep} of {method_value} aborted: {trace.abort_reason}"
        )
    return method_value, rep, np.array(trace.metrics), trace.wall_time


def resolve_workers(num_tasks: int, workers: Optional[int] = None) -> int:
    if workers is None:
        env = os.environ.get("PARETOMAX_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(workers, num_tasks))


def run_benchmark(
    family: ProblemFamily,
    methods: Sequence[Method],
    reps: int,
    iterations: int,
    master_seed: int,
    config_overrides: Optional[dict] = None,
    workers: Optional[int] = None,
    on_result: Optional[Callable[[str, int, np.ndarray], None]] = None,
    preloaded: Optional[Dict[Tuple[str, int], np.ndarray]] = None,
) -> BenchmarkResult:
    """Repeated paired comparison of methods on a problem family.

    Repetition r of every method runs on the same problem instance with the
    same derived seed path. `preloaded` entries (method value, rep) are
    reused instead of recomputed; `on_result` fires as repetitions finish,
    which callers use to persist partial results.
    """
    base = {
        "iterations": iterations,
        "num_front_samples": 10,
        "front_size": 50,
        "rff_features": 500,
        "acq_grid_size": 1000,
        "hyper_sampling": HyperSampling(),
        "initial_design_size": None,
    }
    if config_overrides:
        base.update(config_overrides)

    methods = list(methods)
    metrics = {
        m.value: np.full((reps, iterations + 1), np.nan) for m in methods
    }
    tasks = []
    for mi, method in enumerate(methods):
        for rep in range(reps):
            key = (method.value, rep)
            if preloaded and key in preloaded:
                metrics[method.value][rep] = preloaded[key]
                continue
            tasks.append((family, method.value, mi, rep, master_seed, base))

    def absorb(method_value: str, rep: int, vals: np.ndarray):
        if len(vals) != iterations + 1:
            raise ValueError(
                f"{method_value} rep {rep}: expected {iterations + 1} metric "
                f"values, got {len(vals)}"
            )
        metrics[method_value][rep] = vals
        if on_result is not None:
            on_result(method_value, rep, vals)

    n_workers = resolve_workers(len(tasks), workers)
    if tasks and n_workers == 1:
        for task in tasks:
            method_value, rep, vals, _ = _bench_task(task)
            absorb(method_value, rep, vals)
    elif tasks:
        ctx = get_context("fork")
        with ProcessPoolExecutor(
            max_workers=n_workers,
            mp_context=ctx,
            initializer=_pin_worker_threads,
        ) as pool:
            futures = [pool.submit(_bench_task, t) for t in tasks]
            for fut in as_completed(futures):
                method_value, rep, vals, _ = fut.result()
                absorb(method_value, rep, vals)

    return BenchmarkResult(methods, iterations, reps, metrics)
