"""GD, SGD, and SVRG with step schedules, data-pass accounting, and traces.

Data passes count gradient-component evaluations divided by n: GD adds 1 per
iteration, SGD adds 1/n per step, SVRG adds 1 per anchor gradient plus 2/n
per inner step (the anchor's per-instance gradient is recomputed, not
cached).  Risk evaluations for the trace are free.

Every stochastic run is a pure function of its seed; traces from equal seeds
are bit-identical.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DivergenceError
from .objective import Objective

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class StepSchedule:
    """Step-size schedule eta_t for t >= 1.

    kind "constant": eta_t = c; "inverse": eta_t = c / t;
    "inverse_sqrt": eta_t = c / sqrt(t).
    """

    kind: str
    c: float

    KINDS = ("constant", "inverse", "inverse_sqrt")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.c <= 0:
            raise ValueError(f"schedule coefficient must be > 0, got {self.c}")

    def eta(self, t: int) -> float:
        if self.kind == "constant":
            return self.c
        if self.kind == "inverse":
            return self.c / t
        return self.c / np.sqrt(t)

    def describe(self) -> str:
        if self.kind == "constant":
            return f"{self.c}"
        if self.kind == "inverse":
            return f"{self.c}/t"
        return f"{self.c}/sqrt(t)"


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    data_passes: float
    train_risk: float
    test_risk: float
    reg_risk: float
    grad_norm_sq: float
    dist_sq_to_reference: float
    wall_time: float


CSV_COLUMNS = (
    "iteration",
    "data_passes",
    "train_risk",
    "test_risk",
    "reg_risk",
    "grad_norm_sq",
    "dist_sq_to_reference",
)


@dataclass
class Trace:
    """Per-evaluation metric records of one optimizer run.

    Wall time is kept in memory only; the CSV serialization carries the
    deterministic columns so identical configurations produce byte-identical
    files.
    """

    algorithm: str
    records: list[TraceRecord] = field(default_factory=list)
    final_w: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def series(self, name: str) -> np.ndarray:
        return np.asarray([getattr(r, name) for r in self.records])

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for r in self.records:
                fh.write(
                    ",".join(
                        [str(r.iteration)]
                        + [repr(float(getattr(r, c))) for c in CSV_COLUMNS[1:]]
                    )
                    + "\n"
                )

    @staticmethod
    def from_csv(path, algorithm: str = "") -> "Trace":
        trace = Trace(algorithm=algorithm)
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().strip().split(",")
            if tuple(header) != CSV_COLUMNS:
                raise ValueError(f"unexpected trace CSV header in {path}: {header}")
            for line in fh:
                vals = line.strip().split(",")
                trace.records.append(
                    TraceRecord(
                        iteration=int(vals[0]),
                        data_passes=float(vals[1]),
                        train_risk=float(vals[2]),
                        test_risk=float(vals[3]),
                        reg_risk=float(vals[4]),
                        grad_norm_sq=float(vals[5]),
                        dist_sq_to_reference=float(vals[6]),
                        wall_time=float("nan"),
                    )
                )
        return trace


class _Recorder:
    def __init__(self, objective, test_set, reference, algorithm, step_desc):
        self.objective = objective
        self.test_set = test_set
        self.reference = None if reference is None else np.asarray(reference)
        self.algorithm = algorithm
        self.step_desc = step_desc
        self.t0 = time.perf_counter()
        self.initial_reg_risk = None
        self.trace = Trace(algorithm=algorithm)

    def record(self, iteration, w, component_evals, n):
        obj = self.objective
        train = obj.empirical_risk(w)
        reg = train + obj.lam * obj.reg_norm_sq(w)
        test = (
            obj.empirical_risk(w, self.test_set) if self.test_set is not None else float("nan")
        )
        grad = obj.full_gradient(w)
        dist = (
            float(np.sum((np.asarray(w) - self.reference) ** 2))
            if self.reference is not None
            else float("nan")
        )
        self.trace.records.append(
            TraceRecord(
                iteration=iteration,
                data_passes=component_evals / n,
                train_risk=train,
                test_risk=test,
                reg_risk=reg,
                grad_norm_sq=float(grad @ grad),
                dist_sq_to_reference=dist,
                wall_time=time.perf_counter() - self.t0,
            )
        )
        if self.initial_reg_risk is None:
            self.initial_reg_risk = reg
        threshold = DIVERGENCE_FACTOR * max(self.initial_reg_risk, 1e-12)
        if not np.isfinite(reg) or reg > threshold:
            raise DivergenceError(
                self.algorithm, self.step_desc, iteration, reg, self.initial_reg_risk
            )

    def finish(self, w, metadata):
        self.trace.final_w = np.asarray(w).copy()
        self.trace.metadata = metadata
        return self.trace


def run_gd(
    objective: Objective,
    w0,
    eta: float,
    T: int,
    eval_every: int = 1,
    test_set=None,
    reference=None,
) -> Trace:
    """Full-gradient descent with constant step size.

    The trace holds the initial point, every eval_every-th iterate, and the
    final iterate.
    """
    if eta <= 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    n = objective.n
    w = np.asarray(w0, dtype=np.float64).copy()
    rec = _Recorder(objective, test_set, reference, "gd", f"{eta}")
    rec.record(0, w, 0, n)
    evals = 0
    for t in range(1, T + 1):
        w -= eta * objective.full_gradient(w)
        evals += n
        if t % eval_every == 0 or t == T:
            rec.record(t, w, evals, n)
    return rec.finish(
        w, {"algorithm": "gd", "eta": eta, "T": T, "eval_every": eval_every}
    )


def run_sgd(
    objective: Objective,
    w0,
    schedule: StepSchedule,
    T: int,
    seed: int,
    eval_every: int | None = None,
    test_set=None,
    reference=None,
) -> Trace:
    """SGD with uniform with-replacement sampling from a seeded PRNG.

    eval_every counts iterations and defaults to n (one evaluation per data
    pass).
    """
    if T < 0:
        raise ValueError(f"T must be >= 0, got {T}")
    n = objective.n
    if eval_every is None:
        eval_every = n
    w = np.asarray(w0, dtype=np.float64).copy()
    rng = np.random.default_rng(seed)
    rec = _Recorder(objective, test_set, reference, "sgd", schedule.describe())
    rec.record(0, w, 0, n)
    indices = rng.integers(0, n, size=T) if T > 0 else np.empty(0, dtype=int)
    for t in range(1, T + 1):
        g = objective.stochastic_gradient(w, int(indices[t - 1]))
        w -= schedule.eta(t) * g
        if t % eval_every == 0 or t == T:
            rec.record(t, w, t, n)
    return rec.finish(
        w,
        {
            "algorithm": "sgd",
            "schedule": {"kind": schedule.kind, "c": schedule.c},
            "T": T,
            "seed": seed,
            "eval_every": eval_every,
        },
    )


def svrg_direction(objective: Objective, w, anchor, anchor_full_grad, i: int) -> np.ndarray:
    """Variance-reduced direction for sampled index i.

    v = g_i(w) - g_i(anchor) + full_grad(anchor), where g_i includes the
    regularizer gradient; averaging v over all i returns full_grad(w)
    exactly, and v equals the anchor's full gradient when w == anchor.
    """
    return (
        objective.stochastic_gradient(w, i)
        - objective.stochastic_gradient(anchor, i)
        + anchor_full_grad
    )


def run_svrg(
    objective: Objective,
    w0,
    eta: float,
    inner_m: int,
    stages: int,
    seed: int,
    eval_every: int | None = None,
    test_set=None,
    reference=None,
    stage_output: str = "last",
) -> Trace:
    """SVRG: per stage, one full anchor gradient then inner_m corrected steps.

    stage_output "last" continues from the last inner iterate (the default);
    "random" restarts each stage from a uniformly chosen inner iterate, the
    variant used by nonconvex analyses.  eval_every counts inner steps and
    defaults to ceil(n/2) (about one evaluation per data pass, each inner
    step costing 2/n passes).
    """
    if eta <= 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    if inner_m < 1 or stages < 0:
        raise ValueError(f"need inner_m >= 1 and stages >= 0, got {inner_m}, {stages}")
    if stage_output not in ("last", "random"):
        raise ValueError(f"stage_output must be 'last' or 'random', got {stage_output!r}")
    n = objective.n
    if eval_every is None:
        eval_every = max(1, (n + 1) // 2)
    rng = np.random.default_rng(seed)
    w_tilde = np.asarray(w0, dtype=np.float64).copy()
    rec = _Recorder(objective, test_set, reference, "svrg", f"{eta}")
    rec.record(0, w_tilde, 0, n)
    evals = 0
    iteration = 0
    for stage in range(1, stages + 1):
        anchor = w_tilde.copy()
        anchor_grad = objective.full_gradient(anchor)
        evals += n
        pick = int(rng.integers(1, inner_m + 1)) if stage_output == "random" else inner_m
        indices = rng.integers(0, n, size=inner_m)
        w = anchor.copy()
        picked = None
        for s in range(1, inner_m + 1):
            v = svrg_direction(objective, w, anchor, anchor_grad, int(indices[s - 1]))
            w -= eta * v
            evals += 2
            iteration += 1
            if s == pick:
                picked = w.copy()
            if iteration % eval_every == 0 and s < inner_m:
                rec.record(iteration, w, evals, n)
        w_tilde = picked if stage_output == "random" else w
        rec.record(iteration, w_tilde, evals, n)
    return rec.finish(
        w_tilde,
        {
            "algorithm": "svrg",
            "eta": eta,
            "inner_m": inner_m,
            "stages": stages,
            "seed": seed,
            "eval_every": eval_every,
            "stage_output": stage_output,
        },
    )
