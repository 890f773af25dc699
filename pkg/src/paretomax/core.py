"""Problem definition, per-black-box observation bookkeeping, run
configuration and deterministic stream seeding.

Every black box (objective or constraint) keeps its own observation list so
that decoupled runs, which evaluate a single box per iteration, share the
same bookkeeping as coupled runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np


class BoxKind(Enum):
    OBJECTIVE = "f"
    CONSTRAINT = "c"


@dataclass(frozen=True)
class BlackBoxId:
    """Identifier of one black box: objective k or constraint j (0-based)."""

    kind: BoxKind
    index: int

    @property
    def label(self) -> str:
        return f"{self.kind.value}{self.index}"

    def sort_key(self) -> Tuple[int, int]:
        """Objectives before constraints, then by index."""
        return (0 if self.kind is BoxKind.OBJECTIVE else 1, self.index)

    @staticmethod
    def from_label(label: str) -> "BlackBoxId":
        kind = BoxKind.OBJECTIVE if label[0] == "f" else BoxKind.CONSTRAINT
        return BlackBoxId(kind, int(label[1:]))


def objective(index: int) -> BlackBoxId:
    return BlackBoxId(BoxKind.OBJECTIVE, index)


def constraint(index: int) -> BlackBoxId:
    return BlackBoxId(BoxKind.CONSTRAINT, index)


@dataclass(frozen=True)
class ProblemSpec:
    """Black-box universe: input box, objective/constraint counts, noise.

    `noise_variance` holds one observation-noise variance per black box,
    objectives first, length K + C.
    """

    dim: int
    lower: np.ndarray
    upper: np.ndarray
    num_objectives: int
    num_constraints: int = 0
    noise_variance: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        nv = self.noise_variance
        if nv is None:
            nv = 0.0
        nv = np.asarray(nv, dtype=float)
        if nv.ndim == 0:
            nv = np.full(self.num_objectives + self.num_constraints, float(nv))
        object.__setattr__(self, "noise_variance", nv)

    @property
    def num_boxes(self) -> int:
        return self.num_objectives + self.num_constraints

    def boxes(self) -> Iterator[BlackBoxId]:
        for k in range(self.num_objectives):
            yield objective(k)
        for j in range(self.num_constraints):
            yield constraint(j)

    def box_linear_index(self, box: BlackBoxId) -> int:
        if box.kind is BoxKind.OBJECTIVE:
            return box.index
        return self.num_objectives + box.index

    def noise_for(self, box: BlackBoxId) -> float:
        return float(self.noise_variance[self.box_linear_index(box)])

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            x.shape == (self.dim,)
            and np.all(x >= self.lower - tol)
            and np.all(x <= self.upper + tol)
        )


def make_problem(
    dim: int,
    lower: Sequence[float],
    upper: Sequence[float],
    num_objectives: int,
    num_constraints: int = 0,
    noise_variance=0.0,
) -> ProblemSpec:
    """Build and validate a ProblemSpec.

    Raises ValueError on inconsistent bounds, bad counts or negative noise.
    """
    spec = ProblemSpec(dim, np.asarray(lower, float), np.asarray(upper, float),
                       num_objectives, num_constraints, noise_variance)
    if spec.dim < 1:
        raise ValueError(f"dim must be positive, got {spec.dim}")
    if spec.lower.shape != (spec.dim,) or spec.upper.shape != (spec.dim,):
        raise ValueError("lower/upper must have length dim")
    if not np.all(spec.lower < spec.upper):
        raise ValueError("each lower bound must be strictly below its upper bound")
    if spec.num_objectives < 1:
        raise ValueError("need at least one objective")
    if spec.num_constraints < 0:
        raise ValueError("num_constraints must be >= 0")
    if spec.noise_variance.shape != (spec.num_boxes,):
        raise ValueError("noise_variance must be scalar or length K + C")
    if np.any(spec.noise_variance < 0):
        raise ValueError("noise variances must be non-negative")
    return spec


class ObservationSet:
    """Append-only per-box observation lists.

    Boxes may hold unequal numbers of observations (decoupled evaluation);
    a coupled run simply records the same input on every box.
    """

    def __init__(self, problem: ProblemSpec):
        self.problem = problem
        self._inputs: Dict[BlackBoxId, List[np.ndarray]] = {b: [] for b in problem.boxes()}
        self._values: Dict[BlackBoxId, List[float]] = {b: [] for b in problem.boxes()}

    def record(self, box: BlackBoxId, x: np.ndarray, y: float) -> "ObservationSet":
        x = np.asarray(x, dtype=float)
        if not self.problem.contains(x, tol=1e-12):
            raise ValueError(f"input {x} outside problem bounds")
        if box not in self._inputs:
            raise ValueError(f"unknown box {box}")
        self._inputs[box].append(x.copy())
        self._values[box].append(float(y))
        return self

    def record_all(self, x: np.ndarray, values: Sequence[float]) -> "ObservationSet":
        """Record one coupled evaluation: `values` ordered objectives-first."""
        boxes = list(self.problem.boxes())
        if len(values) != len(boxes):
            raise ValueError("need one value per black box")
        for box, y in zip(boxes, values):
            self.record(box, x, y)
        return self

    def count(self, box: BlackBoxId) -> int:
        return len(self._values[box])

    def counts(self) -> Dict[BlackBoxId, int]:
        return {b: len(v) for b, v in self._values.items()}

    def total(self) -> int:
        return sum(len(v) for v in self._values.values())

    def inputs(self, box: BlackBoxId) -> np.ndarray:
        if not self._inputs[box]:
            return np.empty((0, self.problem.dim))
        return np.array(self._inputs[box])

    def values(self, box: BlackBoxId) -> np.ndarray:
        return np.array(self._values[box], dtype=float)

    def all_inputs(self) -> np.ndarray:
        """Union of observed inputs across boxes (deduplicated, kept in
        first-seen order)."""
        rows: List[np.ndarray] = []
        seen = set()
        for box in self.problem.boxes():
            for x in self._inputs[box]:
                key = x.tobytes()
                if key not in seen:
                    seen.add(key)
                    rows.append(x)
        if not rows:
            return np.empty((0, self.problem.dim))
        return np.array(rows)


class Method(Enum):
    MESMOC_PLUS = "MesmocPlus"
    MESMOC_PLUS_DEC = "MesmocPlusDec"
    MESMOC_PLUS_LOG = "MesmocPlusLog"
    MESMOC = "Mesmoc"
    MESMOC_DEC = "MesmocDec"
    RANDOM = "Random"

    @property
    def decoupled(self) -> bool:
        return self in (Method.MESMOC_PLUS_DEC, Method.MESMOC_DEC)


@dataclass(frozen=True)
class HyperSampling:
    """Hyperparameter handling: slice sampling with `count` kept samples,
    or fixed parameters (`params` maps box label -> KernelParams, or a
    single KernelParams shared by every box)."""

    kind: str = "slice"  # "slice" | "fixed"
    count: int = 10
    params: object = None

    def __post_init__(self):
        if self.kind not in ("slice", "fixed"):
            raise ValueError(f"unknown hyper sampling kind {self.kind!r}")
        if self.kind == "slice" and self.count < 1:
            raise ValueError("slice sampling count must be positive")
        if self.kind == "fixed" and self.params is None:
            raise ValueError("fixed hyper sampling needs params")


@dataclass(frozen=True)
class RunConfig:
    method: Method
    iterations: int
    seed: int
    num_front_samples: int = 10
    front_size: int = 50
    rff_features: int = 500
    acq_grid_size: int = 1000
    hyper_sampling: HyperSampling = field(default_factory=HyperSampling)
    initial_design_size: Optional[int] = None  # None -> 2 * (d + 1)

    def __post_init__(self):
        for name in ("iterations", "num_front_samples", "front_size",
                     "rff_features", "acq_grid_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.initial_design_size is not None and self.initial_design_size < 1:
            raise ValueError("initial_design_size must be positive")

    def resolved_initial_design(self, dim: int) -> int:
        if self.initial_design_size is not None:
            return self.initial_design_size
        return 2 * (dim + 1)


# ---------------------------------------------------------------------------
# Deterministic stream splitting.
#
# A master seed fans out into independent per-purpose streams through
# SeedSequence spawn keys: stream(master, PURPOSE, *path) is the generator
# for one (purpose, path) pair, e.g. stream(seed, PURPOSE_RFF, it, m, box).
# Two runs with the same master seed therefore replay identical randomness
# in every subsystem regardless of evaluation order elsewhere.
# ---------------------------------------------------------------------------

PURPOSE_INIT_DESIGN = 0
PURPOSE_HYPERS = 1        # (iteration, box)
PURPOSE_RFF = 2           # (iteration, m, box)
PURPOSE_FRONT_GRID = 3    # (iteration, m)
PURPOSE_ADF_ORDER = 4     # (iteration, m)
PURPOSE_ACQ_GRID = 5      # (iteration,)
PURPOSE_FALLBACK = 6      # (iteration,)
PURPOSE_RECOMMEND = 7     # (iteration,)
PURPOSE_OBS_NOISE = 8     # (iteration, box)
PURPOSE_INSTANCE = 9      # (rep, box)
PURPOSE_HV_GRID = 10
PURPOSE_REP = 11          # (method_index, rep) -> per-repetition master seed


def seed_for(master: int, purpose: int, *path: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(purpose, *path))


def stream(master: int, purpose: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(seed_for(master, purpose, *path))


def stream_seed(master: int, purpose: int, *path: int) -> int:
    """A derived 32-bit integer seed (for APIs that take plain seeds)."""
    return int(seed_for(master, purpose, *path).generate_state(1)[0])
