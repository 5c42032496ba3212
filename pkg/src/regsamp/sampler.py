"""Importance-sampling engine.

Scores s(a) are norm-based and at least 1.  Two sampling conventions are
implemented and named explicitly:

  * "mixture":   dQ = (s/2S + 1/2) dP, weights w = 2S/(s+S)  (so 0 < w <= 2)
  * "score-only": dQ = (s/S) dP,       weights w = S/s

The mixture convention is the default for guarantee verification; the
score-only convention is the one under which the linear-regime hard
instances state their failure predicates.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

import numpy as np

from .errors import ConfigurationError, EstimatorInconsistencyError, InvalidInputError

if TYPE_CHECKING:  # pragma: no cover
    from .model import Instance

NORM_PLUS_1 = "norm"          # s(a) = ||a||_2 + 1
SQNORM_PLUS_2 = "sqnorm"      # s(a) = ||a||_2^2 + 2
UNIFORM_D = "uniform-d"       # s(a) = D + 1 for all a
UNIFORM_D2 = "uniform-d2"     # s(a) = D^2 + 2 for all a

SCORE_KINDS = (NORM_PLUS_1, SQNORM_PLUS_2, UNIFORM_D, UNIFORM_D2)

MIXTURE = "mixture"
SCORE_ONLY = "score-only"
CONVENTIONS = (MIXTURE, SCORE_ONLY)


def derive_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for stream `key` of a master seed.

    Streams are independent of scheduling: the same (seed, key) always
    yields the same draws, regardless of how many other streams exist.
    """
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(v) for v in key))
    return np.random.Generator(np.random.Philox(ss))


def score_array(kind: str, atoms: np.ndarray, D: float | None = None) -> np.ndarray:
    atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
    if kind == NORM_PLUS_1:
        return np.linalg.norm(atoms, axis=1) + 1.0
    if kind == SQNORM_PLUS_2:
        return np.einsum("ij,ij->i", atoms, atoms) + 2.0
    if kind in (UNIFORM_D, UNIFORM_D2):
        if D is None:
            raise ConfigurationError(f"score kind {kind!r} requires the norm bound D")
        val = D + 1.0 if kind == UNIFORM_D else D * D + 2.0
        return np.full(atoms.shape[0], val)
    raise ConfigurationError(f"unknown score kind {kind!r}")


def score(kind: str, a, D: float | None = None) -> float:
    """s(a); always >= 1."""
    return float(score_array(kind, np.asarray(a, dtype=float)[None, :], D=D)[0])


def weight(s: float, S: float) -> float:
    """Mixture importance weight w = 2S/(s+S); always in (0, 2]."""
    if not (s > 0 and S > 0):
        raise InvalidInputError("scores and score mass must be positive")
    return 2.0 * S / (s + S)


def mixture_probabilities(instance: "Instance", kind: str, D: float | None = None,
                          s_hat: float | None = None) -> np.ndarray:
    """q_i = p_i (s_i + S)/(2S), or the analogous mixture with an estimate in place of S."""
    s = score_array(kind, instance.atoms, D=D)
    S = float(instance.masses @ s)
    ref = S if s_hat is None else float(s_hat)
    q = instance.masses * (s + ref) / (S + ref)
    assert abs(float(q.sum()) - 1.0) <= 1e-12
    return q


def score_only_probabilities(instance: "Instance", kind: str, D: float | None = None) -> np.ndarray:
    """q_i = p_i s_i / S (no uniform half)."""
    s = score_array(kind, instance.atoms, D=D)
    S = float(instance.masses @ s)
    q = instance.masses * s / S
    assert abs(float(q.sum()) - 1.0) <= 1e-12
    return q


def atom_probabilities(instance: "Instance", kind: str, convention: str,
                       D: float | None = None) -> np.ndarray:
    if convention == MIXTURE:
        return mixture_probabilities(instance, kind, D=D)
    if convention == SCORE_ONLY:
        return score_only_probabilities(instance, kind, D=D)
    raise ConfigurationError(f"unknown sampling convention {convention!r}")


def atom_weights(instance: "Instance", kind: str, convention: str,
                 D: float | None = None) -> np.ndarray:
    """Per-atom importance weight under the given convention."""
    s = score_array(kind, instance.atoms, D=D)
    S = float(instance.masses @ s)
    if convention == MIXTURE:
        return 2.0 * S / (s + S)
    if convention == SCORE_ONLY:
        return S / s
    raise ConfigurationError(f"unknown sampling convention {convention!r}")


class CategoricalSampler:
    """Alias-table categorical sampler: O(n) build, O(1) per draw."""

    def __init__(self, probs):
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0 or np.any(probs < 0):
            raise InvalidInputError("probabilities must be a nonempty nonnegative vector")
        total = float(probs.sum())
        if not np.isfinite(total) or total <= 0:
            raise InvalidInputError("probabilities must have a positive finite sum")
        n = probs.size
        scaled = probs * (n / total)
        accept = np.ones(n)
        alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s_i = small.pop()
            l_i = large.pop()
            accept[s_i] = scaled[s_i]
            alias[s_i] = l_i
            scaled[l_i] = (scaled[l_i] + scaled[s_i]) - 1.0
            (small if scaled[l_i] < 1.0 else large).append(l_i)
        for i in small + large:
            accept[i] = 1.0
        self.n = n
        self._accept = accept
        self._alias = alias

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        idx = np.minimum((u * self.n).astype(np.int64), self.n - 1)
        take = rng.random(size) < self._accept[idx]
        return np.where(take, idx, self._alias[idx])


@dataclass(frozen=True)
class WeightedSample:
    atom_index: int
    a: np.ndarray
    w: float
    s: float


@dataclass(frozen=True)
class SEstimate:
    s_hat: float
    m_used: int
    eps: float
    delta: float

    def __post_init__(self):
        if not self.s_hat > 0:
            raise InvalidInputError("estimated score mass must be positive")


def draw_iid(instance: "Instance", kind: str, m: int, seed: int,
             convention: str = MIXTURE, D: float | None = None) -> list[WeightedSample]:
    """m i.i.d. categorical draws from the sampling distribution, with exact weights."""
    if m < 1:
        raise InvalidInputError("sample size m must be >= 1")
    q = atom_probabilities(instance, kind, convention, D=D)
    w = atom_weights(instance, kind, convention, D=D)
    s = score_array(kind, instance.atoms, D=D)
    rng = derive_rng(seed)
    idx = CategoricalSampler(q).draw(rng, m)
    return [WeightedSample(int(i), instance.atoms[i], float(w[i]), float(s[i])) for i in idx]


def rejection_stream(atoms: Iterable, kind: str, s_hat: float, seed: int,
                     D: float | None = None) -> list[np.ndarray]:
    """Accept each arriving atom independently with probability 1/2 + s(a)/(2*s_hat).

    With s_hat >= every observed score the acceptance probability stays in
    (0, 1]; the accepted multiset is distributed as the mixture built from
    s_hat in place of the true score mass.
    """
    if not s_hat > 0:
        raise InvalidInputError("s_hat must be positive")
    rng = derive_rng(seed)
    accepted = []
    for a in atoms:
        a = np.asarray(a, dtype=float)
        s = score(kind, a, D=D)
        p_accept = 0.5 + s / (2.0 * s_hat)
        if p_accept > 1.0 + 1e-12:
            raise EstimatorInconsistencyError(
                f"score {s} exceeds estimate {s_hat}: acceptance probability > 1")
        if rng.random() < p_accept:
            accepted.append(a)
    return accepted


def weighted_reservoir(stream: Iterable, m: int, seed: int) -> list:
    """Single-pass weighted reservoir sample of size m, probability proportional to score.

    Exponential-jumps scheme: keys u^(1/score) with skipping, so only O(m)
    random numbers are consumed in expectation per reservoir turnover.
    Stream items are (atom, score) pairs.
    """
    if m < 1:
        raise InvalidInputError("reservoir size m must be >= 1")
    rng = derive_rng(seed)
    heap: list = []  # (key, counter, atom)
    counter = 0
    it = iter(stream)
    for atom, s in it:
        s = float(s)
        if s <= 0:
            raise InvalidInputError("scores must be positive")
        key = rng.random() ** (1.0 / s)
        heapq.heappush(heap, (key, counter, atom))
        counter += 1
        if counter == m:
            break
    if counter < m:
        return [item for _, _, item in sorted(heap, key=lambda t: t[1])]

    threshold = heap[0][0]
    jump = math.log(rng.random()) / math.log(threshold)
    for atom, s in it:
        s = float(s)
        if s <= 0:
            raise InvalidInputError("scores must be positive")
        jump -= s
        if jump <= 0.0:
            t_pow = threshold ** s
            key = (t_pow + rng.random() * (1.0 - t_pow)) ** (1.0 / s)
            heapq.heapreplace(heap, (key, counter, atom))
            threshold = heap[0][0]
            jump = math.log(rng.random()) / math.log(threshold)
        counter += 1
    return [item for _, _, item in sorted(heap, key=lambda t: t[1])]


def estimate_S(instance: "Instance", kind: str, eps: float, delta: float, seed: int) -> SEstimate:
    """Estimate S from i.i.d. mass-weighted draws, sized for a (1 +- eps) guarantee.

    Sample size m = ceil(D^p ln(1/delta) / eps^2) with p = 1 for norm
    scores and p = 2 for squared-norm scores; requires a bounded instance.
    """
    if kind == NORM_PLUS_1:
        p = 1
    elif kind == SQNORM_PLUS_2:
        p = 2
    else:
        raise ConfigurationError("S estimation is defined for the norm and sqnorm scores")
    if not (0 < eps and 0 < delta < 1):
        raise InvalidInputError("eps must be positive and delta in (0, 1)")
    norms = instance.norms()
    d_max = float(norms.max())
    m = max(1, math.ceil((d_max ** p) * math.log(1.0 / delta) / (eps * eps)))
    rng = derive_rng(seed)
    idx = CategoricalSampler(instance.masses).draw(rng, m)
    s = score_array(kind, instance.atoms)
    return SEstimate(s_hat=float(s[idx].mean()), m_used=m, eps=eps, delta=delta)


def weights_from_estimate(samples: list[WeightedSample], s_hat: float) -> list[WeightedSample]:
    """Recompute mixture weights with an estimated score mass: w' = 2*s_hat/(s + s_hat)."""
    if not s_hat > 0:
        raise InvalidInputError("s_hat must be positive")
    return [WeightedSample(smp.atom_index, smp.a, weight(smp.s, s_hat), smp.s)
            for smp in samples]


def save_samples(samples: list[WeightedSample], path) -> None:
    """One JSONL record per drawn sample."""
    import json

    with open(path, "w") as fh:
        for smp in samples:
            fh.write(json.dumps({"atom_index": smp.atom_index,
                                 "a": [float(v) for v in smp.a],
                                 "w": smp.w, "s": smp.s}) + "\n")


def load_samples(path) -> list[WeightedSample]:
    import json

    from .errors import DataError

    samples = []
    with open(path) as fh:
        for i, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                samples.append(WeightedSample(int(rec["atom_index"]),
                                              np.asarray(rec["a"], dtype=float),
                                              float(rec["w"]), float(rec["s"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                raise DataError(f"{path}: line {i}: malformed sample record") from None
    if not samples:
        raise DataError(f"{path}: empty sample file")
    return samples
