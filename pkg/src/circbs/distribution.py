"""Exact output distributions of small boson samplers.

The probability of an outcome ``s`` (a multiset of output modes) is
``|perm U_T|^2 / prod_k n_k!`` where ``U_T`` has the input modes as rows and
the outcome modes, repeated by occupation, as columns.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .collisions import enumerate_multisets, multiset_count
from .errors import DomainError, GuardError, NumericalError
from .matrices import CirculantUnitary, truncate
from .permanent import permanent_batch, permanent_ryser

__all__ = [
    "MAX_OUTCOMES",
    "MAX_PHOTONS",
    "OutcomeDistribution",
    "full_distribution",
    "occupation_factorials",
    "outcome_probability",
    "sample_outcomes",
]

MAX_PHOTONS = 8
MAX_OUTCOMES = 10**6
NORM_TOL = 1e-8


def occupation_factorials(outcomes) -> np.ndarray:
    """``prod_k n_k!`` for each row of a ``(K, n)`` array of sorted outcomes."""
    s = np.sort(np.atleast_2d(np.asarray(outcomes, dtype=np.int64)), axis=1)
    fact = np.ones(s.shape[0])
    run = np.ones(s.shape[0])
    for i in range(1, s.shape[1]):
        run = np.where(s[:, i] == s[:, i - 1], run + 1, 1.0)
        fact *= run
    return fact


def _size(u):
    return u.m if isinstance(u, CirculantUnitary) else np.shape(u)[0]


def outcome_probability(u, inputs: Sequence[int], outcome: Sequence[int]) -> float:
    """Born-rule probability of observing `outcome` given photons in `inputs`."""
    if len(inputs) > MAX_PHOTONS:
        raise GuardError(f"outcome_probability limited to n <= {MAX_PHOTONS}")
    sub = truncate(u, inputs, np.sort(np.asarray(outcome)))
    return abs(permanent_ryser(sub)) ** 2 / float(occupation_factorials(outcome)[0])


def _truncation_stack(u, inputs, outcomes):
    rows = np.asarray(inputs, dtype=np.int64)
    if isinstance(u, CirculantUnitary):
        return u.first_row[(outcomes[:, None, :] - rows[None, :, None]) % u.m]
    u = np.asarray(u, dtype=np.complex128)
    return u[rows[None, :, None], outcomes[:, None, :]]


@dataclass
class OutcomeDistribution:
    n: int
    m: int
    outcomes: np.ndarray = field(repr=False)
    probabilities: np.ndarray = field(repr=False)
    source: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.outcomes.shape[0]

    def probability_of(self, outcome) -> float:
        s = np.sort(np.asarray(outcome, dtype=np.int64))
        hit = np.flatnonzero(np.all(self.outcomes == s, axis=1))
        return float(self.probabilities[hit[0]]) if hit.size else 0.0

    def to_jsonl(self) -> str:
        """One JSON object per outcome: ``{"modes": [...], "probability": p}``."""
        lines = [
            json.dumps({"modes": s.tolist(), "probability": float(p)})
            for s, p in zip(self.outcomes, self.probabilities)
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str, m: int, source=None) -> "OutcomeDistribution":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        outs = np.array([r["modes"] for r in rows], dtype=np.int64)
        probs = np.array([r["probability"] for r in rows], dtype=float)
        return cls(outs.shape[1], m, outs, probs, dict(source or {}))


def full_distribution(u, inputs: Sequence[int], source: dict | None = None) -> OutcomeDistribution:
    """Probabilities of all ``C(m+n-1, n)`` outcomes, in lexicographic order."""
    n = len(inputs)
    m = _size(u)
    if n > MAX_PHOTONS:
        raise GuardError(f"full_distribution limited to n <= {MAX_PHOTONS}, got {n}")
    count = multiset_count(n, m)
    if count > MAX_OUTCOMES:
        raise GuardError(f"{count} outcomes exceeds the limit {MAX_OUTCOMES}")
    if min(inputs) < 0 or max(inputs) >= m or len(set(inputs)) != n:
        raise DomainError(f"inputs must be {n} distinct modes in [0, {m})")
    outs = enumerate_multisets(n, m)
    perms = permanent_batch(_truncation_stack(u, inputs, outs))
    probs = np.abs(perms) ** 2 / occupation_factorials(outs)
    total = math.fsum(probs)
    if abs(total - 1.0) > NORM_TOL:
        raise NumericalError(f"distribution sums to {total!r}, not 1 (is the matrix unitary?)")
    return OutcomeDistribution(n, m, outs, probs, dict(source or {}))


def sample_outcomes(dist: OutcomeDistribution, k: int, rng: np.random.Generator) -> np.ndarray:
    """`k` i.i.d. outcomes by inverse CDF over the lexicographic order, shape ``(k, n)``."""
    cdf = np.cumsum(dist.probabilities)
    u = rng.random(int(k)) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    np.minimum(idx, len(cdf) - 1, out=idx)
    return dist.outcomes[idx]
