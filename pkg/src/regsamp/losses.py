"""The four classification losses and three regularizers, with structural metadata.

Losses are monotone non-increasing and nonnegative:

    logistic  g(r) = ln(1 + exp(-r))
    sigmoid   g(r) = 1 / (1 + exp(r))
    hinge     g(r) = max(0, 1 - r)
    relu      g(r) = max(0, -r)

Each loss carries its tight Lipschitz constant, the constant used in
sample-size formulas (clamped to >= 1), g(0), whether |g'| <= g holds
everywhere, and whether g is positively homogeneous.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import InvalidInputError

LOGISTIC = "logistic"
SIGMOID = "sigmoid"
HINGE = "hinge"
RELU = "relu"

L1 = "l1"
L2 = "l2"
L2SQ = "l2sq"

LOSS_KINDS = (LOGISTIC, SIGMOID, HINGE, RELU)
REG_KINDS = (L1, L2, L2SQ)


@dataclass(frozen=True)
class LossSpec:
    kind: str
    lipschitz_tight: float
    lipschitz_formula: float
    g0: float
    bounded_derivative: bool
    homogeneous: bool


@dataclass(frozen=True)
class RegSpec:
    kind: str
    homogeneity_degree: int


_LOSSES = {
    LOGISTIC: LossSpec(LOGISTIC, 1.0, 1.0, float(np.log(2.0)), True, False),
    SIGMOID: LossSpec(SIGMOID, 0.25, 1.0, 0.5, True, False),
    HINGE: LossSpec(HINGE, 1.0, 1.0, 1.0, False, False),
    RELU: LossSpec(RELU, 1.0, 1.0, 0.0, False, True),
}

_REGS = {
    L1: RegSpec(L1, 1),
    L2: RegSpec(L2, 1),
    L2SQ: RegSpec(L2SQ, 2),
}


def make_loss(kind: str) -> LossSpec:
    try:
        return _LOSSES[kind]
    except KeyError:
        raise InvalidInputError(f"unknown loss kind {kind!r}") from None


def make_reg(kind: str) -> RegSpec:
    try:
        return _REGS[kind]
    except KeyError:
        raise InvalidInputError(f"unknown regularizer kind {kind!r}") from None


def eval_loss(loss: LossSpec, r):
    """Evaluate g(r).  Accepts scalars or arrays; stable for |r| up to ~1e3 and beyond."""
    r = np.asarray(r, dtype=float)
    if loss.kind == LOGISTIC:
        v = np.logaddexp(0.0, -r)
    elif loss.kind == SIGMOID:
        v = expit(-r)
    elif loss.kind == HINGE:
        v = np.maximum(0.0, 1.0 - r)
    elif loss.kind == RELU:
        v = np.maximum(0.0, -r)
    else:
        raise InvalidInputError(f"unknown loss kind {loss.kind!r}")
    return v if v.ndim else float(v)


def eval_loss_derivative(loss: LossSpec, r):
    """Evaluate g'(r); at hinge r=1 and relu r=0 kinks returns the left derivative -1."""
    r = np.asarray(r, dtype=float)
    if loss.kind == LOGISTIC:
        v = -expit(-r)
    elif loss.kind == SIGMOID:
        v = -expit(r) * expit(-r)
    elif loss.kind == HINGE:
        v = np.where(r <= 1.0, -1.0, 0.0)
    elif loss.kind == RELU:
        v = np.where(r <= 0.0, -1.0, 0.0)
    else:
        raise InvalidInputError(f"unknown loss kind {loss.kind!r}")
    return v if v.ndim else float(v)


def check_bounded_derivative(loss: LossSpec, grid) -> bool:
    """True iff |g'(r)| <= g(r) + 1e-12 at every grid point."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InvalidInputError("grid must be nonempty")
    g = np.asarray(eval_loss(loss, grid))
    gp = np.abs(np.asarray(eval_loss_derivative(loss, grid)))
    return bool(np.all(gp <= g + 1e-12))


def decompose(loss: LossSpec):
    """Split g = h + b with h positively homogeneous and b bounded.

    logistic/hinge: h(r) = max(0, -r), b = g - h in [0, g(0)].
    sigmoid: h = 0, b = g in [0, 1] (no homogeneous h gets b under g(0)).
    relu: h = g, b = 0.
    """

    def relu_part(r):
        r = np.asarray(r, dtype=float)
        v = np.maximum(0.0, -r)
        return v if v.ndim else float(v)

    def zero_part(r):
        r = np.asarray(r, dtype=float)
        v = np.zeros_like(r)
        return v if v.ndim else float(v)

    if loss.kind == RELU:
        return (lambda r: eval_loss(loss, r)), zero_part
    if loss.kind == SIGMOID:
        return zero_part, (lambda r: eval_loss(loss, r))
    if loss.kind == LOGISTIC:
        # softplus(-r) - max(0,-r) == softplus(-|r|), which avoids cancellation
        def b(r):
            r = np.asarray(r, dtype=float)
            v = np.logaddexp(0.0, -np.abs(r))
            return v if v.ndim else float(v)

        return relu_part, b
    if loss.kind == HINGE:
        def b(r):
            r = np.asarray(r, dtype=float)
            v = np.clip(1.0 - r, 0.0, 1.0)
            return v if v.ndim else float(v)

        return relu_part, b
    raise InvalidInputError(f"unknown loss kind {loss.kind!r}")


def eval_regularizer(reg: RegSpec, x):
    """R(x) for R in {l1, l2, l2sq}."""
    x = np.asarray(x, dtype=float)
    if reg.kind == L1:
        return float(np.sum(np.abs(x)))
    if reg.kind == L2:
        return float(np.linalg.norm(x))
    if reg.kind == L2SQ:
        return float(np.dot(x, x))
    raise InvalidInputError(f"unknown regularizer kind {reg.kind!r}")


def reg_subgradient(reg: RegSpec, x: np.ndarray) -> np.ndarray:
    """A subgradient of R at x (the zero vector at x = 0 for l1/l2)."""
    x = np.asarray(x, dtype=float)
    if reg.kind == L1:
        return np.sign(x)
    if reg.kind == L2:
        nrm = np.linalg.norm(x)
        return x / nrm if nrm > 0 else np.zeros_like(x)
    if reg.kind == L2SQ:
        return 2.0 * x
    raise InvalidInputError(f"unknown regularizer kind {reg.kind!r}")
