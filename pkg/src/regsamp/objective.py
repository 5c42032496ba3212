"""Objective evaluation, relative-error measurement, OPT bounds, sample-size rules.

The uniform relative-error guarantee

    |f0(x) - f0_hat(x)| <= eps * f(x)   for all x

is checked on finite query sets; queries where f(x) = 0 (possible only for
the relu loss) are flagged as NaN and skipped by the maximizer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ApplicabilityError,
    DataError,
    DimensionMismatchError,
    InvalidInputError,
    OptimizerFailureError,
)
from .losses import (
    L1,
    L2SQ,
    LossSpec,
    RegSpec,
    eval_loss,
    eval_loss_derivative,
    eval_regularizer,
    reg_subgradient,
)
from .model import Constants, Instance, ObjectiveSpec
from .sampler import WeightedSample, derive_rng

TAG_ADVERSARIAL = "adversarial"
TAG_GAUSSIAN = "random-gaussian"
TAG_SPARSE = "random-sparse"
TAG_GRID = "grid"
TAG_ORIGIN = "origin"

RULE_NORM = "norm"
RULE_BOUNDED_DERIVATIVE = "bounded-derivative"
RULE_L1 = "l1"
SAMPLE_SIZE_RULES = (RULE_NORM, RULE_BOUNDED_DERIVATIVE, RULE_L1)


@dataclass(frozen=True, eq=False)
class QuerySet:
    queries: np.ndarray          # (q, d)
    tags: tuple[str, ...] = field(default=())

    def __post_init__(self):
        queries = np.atleast_2d(np.asarray(self.queries, dtype=float))
        if queries.shape[0] == 0:
            raise InvalidInputError("query set must be nonempty")
        if not np.all(np.isfinite(queries)):
            raise InvalidInputError("queries must be finite")
        tags = tuple(self.tags) if self.tags else tuple("grid" for _ in range(queries.shape[0]))
        if len(tags) != queries.shape[0]:
            raise InvalidInputError("one tag per query required")
        if not np.any(~np.any(queries != 0.0, axis=1)):
            queries = np.vstack([np.zeros((1, queries.shape[1])), queries])
            tags = (TAG_ORIGIN,) + tags
        object.__setattr__(self, "queries", queries)
        object.__setattr__(self, "tags", tags)
        queries.setflags(write=False)

    def __len__(self) -> int:
        return self.queries.shape[0]


@dataclass(frozen=True, eq=False)
class OptReport:
    opt_value: float
    minimizer: np.ndarray
    analytic_lower: float
    analytic_upper: float


def full_objective(instance: Instance, spec: ObjectiveSpec, x) -> tuple[float, float]:
    """(f0, f) at x over the full instance."""
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.dim,):
        raise DimensionMismatchError(
            f"query has dimension {x.size}, instance has {instance.dim}")
    margins = instance.atoms @ x
    f0 = float(instance.masses @ np.asarray(eval_loss(spec.loss, margins)))
    f = f0 + eval_regularizer(spec.reg, x) / spec.k
    return f0, f


def coreset_objective(samples: list[WeightedSample], spec: ObjectiveSpec, x
                      ) -> tuple[float, float]:
    """(f0_hat, f_hat) at x: f0_hat = (1/m) sum_i w_i g(<a_i, x>)."""
    if not samples:
        raise InvalidInputError("sample must be nonempty")
    x = np.asarray(x, dtype=float)
    a = np.stack([smp.a for smp in samples])
    if a.shape[1] != x.size:
        raise DimensionMismatchError(
            f"query has dimension {x.size}, samples have {a.shape[1]}")
    w = np.array([smp.w for smp in samples])
    f0_hat = float(np.mean(w * np.asarray(eval_loss(spec.loss, a @ x))))
    return f0_hat, f0_hat + eval_regularizer(spec.reg, x) / spec.k


def exhaustive_sample(instance: Instance, kind: str = "norm") -> list[WeightedSample]:
    """Enumerate each atom once with weight n*p_i, so the coreset objective is exact."""
    from .sampler import score_array

    s = score_array(kind, instance.atoms)
    n = instance.n
    return [WeightedSample(i, instance.atoms[i], float(n * instance.masses[i]), float(s[i]))
            for i in range(n)]


def relative_error(instance: Instance, spec: ObjectiveSpec,
                   samples: list[WeightedSample], x) -> float:
    """|f0(x) - f0_hat(x)| / f(x); NaN when f(x) = 0 (infinite-sensitivity flag)."""
    f0, f = full_objective(instance, spec, x)
    f0_hat, _ = coreset_objective(samples, spec, x)
    if f <= 0.0:
        return float("nan")
    return abs(f0 - f0_hat) / f


def max_relative_error(instance: Instance, spec: ObjectiveSpec,
                       samples: list[WeightedSample], queries: QuerySet
                       ) -> tuple[float, np.ndarray, int]:
    """Maximum relative error over the query set.

    Returns (max, argmax query, number of flagged queries skipped).
    """
    best = -1.0
    best_q = None
    skipped = 0
    for x in queries.queries:
        err = relative_error(instance, spec, samples, x)
        if math.isnan(err):
            skipped += 1
            continue
        if err > best:
            best, best_q = err, x
    if best_q is None:
        raise InvalidInputError("every query was flagged; effective query set is empty")
    return best, best_q, skipped


def opt_lower_bound(loss: LossSpec, reg: RegSpec, k: float, L: float, B: float) -> float:
    """Certified analytic lower bound on inf_x f(x)."""
    g0 = loss.g0
    if g0 == 0.0:
        return 0.0
    if B == 0.0:
        # all mass at the origin: f0(x) = g(0) for every x
        return g0
    if reg.kind == L2SQ:
        return g0 * g0 / (4.0 * (L * B) ** 2 * k)
    return g0 / (L * B * k)


def estimate_opt(instance: Instance, spec: ObjectiveSpec, restarts: int = 8,
                 seed: int = 0, iters: int = 2000) -> OptReport:
    """Multi-start subgradient descent on f with diminishing step c/sqrt(t).

    Starts at the origin plus Gaussian restarts; tracks the best iterate.
    The result is bracketed by the analytic bounds [lower, g(0)].
    """
    if restarts < 1:
        raise InvalidInputError("restarts must be >= 1")
    loss, reg, k = spec.loss, spec.reg, spec.k
    norms = instance.norms()
    b_mean = float(instance.masses @ norms)
    lower = opt_lower_bound(loss, reg, k, loss.lipschitz_formula, b_mean)
    upper = loss.g0

    def f_of(x):
        margins = instance.atoms @ x
        return float(instance.masses @ np.asarray(eval_loss(loss, margins))) \
            + eval_regularizer(reg, x) / k

    def subgrad(x):
        margins = instance.atoms @ x
        coeff = instance.masses * np.asarray(eval_loss_derivative(loss, margins))
        return instance.atoms.T @ coeff + reg_subgradient(reg, x) / k

    best_val = math.inf
    best_x = np.zeros(instance.dim)
    for r in range(restarts):
        if r == 0:
            x = np.zeros(instance.dim)
        else:
            x = derive_rng(seed, r).standard_normal(instance.dim)
        c = float(np.linalg.norm(x)) + 1.0
        val = f_of(x)
        if val < best_val:
            best_val, best_x = val, x.copy()
        for t in range(1, iters + 1):
            x = x - (c / math.sqrt(t)) * subgrad(x)
            val = f_of(x)
            if val < best_val:
                best_val, best_x = val, x.copy()
    if not (lower - 1e-9 <= best_val <= upper + 1e-9):
        raise OptimizerFailureError(
            f"optimizer value {best_val} escaped bracket [{lower}, {upper}]")
    return OptReport(opt_value=best_val, minimizer=best_x,
                     analytic_lower=lower, analytic_upper=upper)


def sensitivity(sample: WeightedSample, instance: Instance, spec: ObjectiveSpec, x) -> float:
    """Fractional contribution w * g(<a, x>) / f(x); NaN when f(x) = 0."""
    _, f = full_objective(instance, spec, x)
    if f <= 0.0:
        return float("nan")
    return sample.w * float(eval_loss(spec.loss, float(np.dot(sample.a, x)))) / f


def _ln(v: float) -> float:
    # sample-size formulas are asymptotic; clamp inner logs so small desk-scale
    # parameters cannot drive the estimate negative
    return max(1.0, math.log(v))


def recommended_sample_size(rule: str, loss: LossSpec, reg: RegSpec, k: float,
                            eps: float, delta: float, constants: Constants,
                            opt_hint: float | None = None, c_abs: float = 1.0,
                            uniform: bool = False) -> int:
    """Evaluate a sample-size rule with the hidden absolute constant set to c_abs.

    Rules: "norm" (general Lipschitz losses, any regularizer),
    "bounded-derivative" (|g'| <= g losses with l2sq), "l1" (l1 regularizer).
    With uniform=True the mass S is replaced by the norm bound D (D^2 for the
    bounded-derivative rule), matching plain uniform sampling.  Results are
    up to the theory's unstated constant.
    """
    if not (0 < eps < 1 and 0 < delta < 1):
        raise InvalidInputError("eps and delta must lie in (0, 1)")
    L = constants.L
    if uniform:
        if constants.D is None:
            raise ApplicabilityError("uniform-sampling rule needs the norm bound D")
        S = constants.D ** 2 if rule == RULE_BOUNDED_DERIVATIVE else constants.D
    else:
        S = constants.S
    ln_delta = math.log(1.0 / delta)

    if rule == RULE_NORM:
        C = (S * L) ** 2
        if reg.kind == L2SQ:
            opt = opt_hint if opt_hint is not None else opt_lower_bound(
                loss, reg, k, L, constants.B)
            if not opt > 0:
                raise ApplicabilityError("the l2sq norm rule needs a positive OPT hint")
            m = C * k * ln_delta / (eps * eps * opt)
        else:
            m = C * k * k * ln_delta / (eps * eps)
    elif rule == RULE_BOUNDED_DERIVATIVE:
        if not loss.bounded_derivative:
            raise ApplicabilityError(
                f"the bounded-derivative rule needs |g'| <= g; {loss.kind} lacks it")
        if reg.kind != L2SQ:
            raise ApplicabilityError("the bounded-derivative rule applies to l2sq only")
        C = S * constants.B * L * L / loss.g0
        m = (C * k / (eps * eps)
             * _ln(C * k * ln_delta / eps) ** 3
             * _ln(_ln(S * L * k / loss.g0) / delta))
    elif rule == RULE_L1:
        if reg.kind != L1:
            raise ApplicabilityError("the l1 rule applies to the l1 regularizer only")
        C = S * L
        if loss.homogeneous:
            m = C * k * ln_delta / (eps * eps) * _ln(C * k * ln_delta / eps) ** 3
        else:
            m = (C * k / (eps * eps)
                 * _ln(C * k * ln_delta / eps) ** 3
                 * _ln(_ln(constants.B * L * k / eps) / delta))
    else:
        raise ApplicabilityError(f"unknown sample-size rule {rule!r}")
    return int(math.ceil(c_abs * m))


def build_query_set(dim: int, k: float, seed: int, adversarial=(),
                    n_gaussian: int = 100, n_sparse: int = 100) -> QuerySet:
    """Origin + adversarial queries + random probes.

    Probes: n_gaussian unit directions at radii {0.1, 1, sqrt(k), k, 10k}
    and n_sparse random few-hot +-1 vectors.
    """
    rng = derive_rng(seed)
    queries = [np.zeros(dim)]
    tags = [TAG_ORIGIN]
    for x in adversarial:
        queries.append(np.asarray(x, dtype=float))
        tags.append(TAG_ADVERSARIAL)
    radii = [0.1, 1.0, math.sqrt(k), k, 10.0 * k]
    dirs = rng.standard_normal((n_gaussian, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    for d in dirs:
        for r in radii:
            queries.append(r * d)
            tags.append(TAG_GAUSSIAN)
    for _ in range(n_sparse):
        support = rng.integers(1, min(5, dim) + 1)
        x = np.zeros(dim)
        pos = rng.choice(dim, size=support, replace=False)
        x[pos] = rng.choice([-1.0, 1.0], size=support)
        queries.append(x)
        tags.append(TAG_SPARSE)
    return QuerySet(np.vstack(queries), tuple(tags))


def l1_scope_mask(instance: Instance, spec: ObjectiveSpec, queries: QuerySet,
                  eps: float) -> np.ndarray:
    """Boolean mask of queries inside {x : f(x) <= g(0)/eps}.

    Outside that set the l1-regularized guarantee only holds up to the 4*eps
    relaxation of the homogeneous-plus-bounded decomposition, so acceptance
    checks may filter on this mask.
    """
    limit = spec.loss.g0 / eps
    return np.array([full_objective(instance, spec, x)[1] <= limit
                     for x in queries.queries])


def save_queries(queries: QuerySet, path) -> None:
    """One {"x", "tag"} JSONL record per non-origin query (origin is implicit)."""
    with open(path, "w") as fh:
        for x, tag in zip(queries.queries, queries.tags):
            if tag == TAG_ORIGIN:
                continue
            fh.write(json.dumps({"x": [float(v) for v in x], "tag": tag}) + "\n")


def load_queries(path, dim: int | None = None) -> QuerySet:
    with open(path) as fh:
        lines = fh.read().splitlines()
    vecs, tags = [], []
    for i, line in enumerate(lines, start=1):
        try:
            rec = json.loads(line)
            x = np.asarray(rec["x"], dtype=float)
            tag = str(rec.get("tag", TAG_GRID))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            raise DataError(f"{path}: line {i}: malformed query record") from None
        if dim is not None and x.size != dim:
            raise DataError(f"{path}: line {i}: query dimension {x.size}, expected {dim}")
        vecs.append(x)
        tags.append(tag)
    if not vecs:
        if dim is None:
            raise DataError(f"{path}: empty query file and no dimension given")
        return QuerySet(np.zeros((1, dim)), (TAG_ORIGIN,))
    return QuerySet(np.vstack(vecs), tuple(tags))
