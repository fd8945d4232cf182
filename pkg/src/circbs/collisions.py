"""Good (collision-free) outcomes of circulant boson sampling.

With photons in input modes ``0..n-1`` the truncation of a circulant has
entries ``c[(s_b - a) % m]``.  An outcome is *good* when no entry repeats,
which happens exactly when every two detected modes are at circular
distance ``>= n`` (each photon blocks ``2n - 1`` modes).

Outcomes are sorted integer arrays of length ``n`` (multisets of modes).
Batched helpers take ``(B, n)`` arrays.
"""

from __future__ import annotations

import itertools
import math
from math import comb

import numpy as np

from .errors import DomainError, GuardError
from .matrices import CirculantUnitary, circulant_truncations
from .permanent import permanent_batch
from .stats import Estimate, Moments, bernoulli_sigma

__all__ = [
    "ENUMERATION_LIMIT",
    "MAX_MASS_N",
    "MIN_ACCEPTANCE",
    "circular_distance",
    "count_good_closed_form",
    "count_good_outcomes_exact",
    "enumerate_good_outcomes",
    "enumerate_multisets",
    "estimate_good_fraction",
    "estimate_good_probability_mass",
    "good_fraction_exact",
    "good_mask",
    "good_probability_mass_exact",
    "is_good_by_distance",
    "is_good_by_index_pattern",
    "is_good_outcome",
    "laurent_remainder_constant",
    "multiset_count",
    "n_good_formula",
    "n_good_laurent",
    "occupation",
    "sample_good_outcomes",
    "sample_outcome_uniform",
]

ENUMERATION_LIMIT = 10**7
MIN_ACCEPTANCE = 1e-3
MAX_MASS_N = 8
_CHUNK = 200_000


def circular_distance(a, b, m):
    """``min((a - b) % m, (b - a) % m)``; works elementwise on arrays."""
    d = np.mod(np.asarray(a) - np.asarray(b), m)
    out = np.minimum(d, m - d)
    return int(out) if np.ndim(out) == 0 else out


def occupation(outcome, m: int) -> np.ndarray:
    """Occupation vector ``n_o`` of a multiset of modes."""
    return np.bincount(np.asarray(outcome, dtype=np.int64), minlength=m)


def _as_outcome(outcome, n, m):
    s = np.sort(np.asarray(outcome, dtype=np.int64))
    if s.ndim != 1 or s.size != n:
        raise DomainError(f"outcome must have exactly n={n} entries")
    if s.size and (s[0] < 0 or s[-1] >= m):
        raise DomainError(f"outcome modes must lie in [0, {m})")
    return s


def is_good_by_distance(outcome, n: int, m: int) -> bool:
    """No repeated mode and all pairwise circular distances ``>= n``."""
    s = _as_outcome(outcome, n, m)
    for i in range(n):
        for j in range(i + 1, n):
            if s[i] == s[j] or circular_distance(s[i], s[j], m) < n:
                return False
    return True


def is_good_by_index_pattern(outcome, n: int, m: int) -> bool:
    """The values ``(s_b - a) % m`` over all rows ``a`` and columns ``b`` are distinct."""
    s = _as_outcome(outcome, n, m)
    pattern = [(int(sb) - a) % m for a in range(n) for sb in s]
    return len(set(pattern)) == len(pattern)


def is_good_outcome(outcome, n: int, m: int) -> bool:
    return is_good_by_distance(outcome, n, m)


def good_mask(outcomes, m: int) -> np.ndarray:
    """Vectorized goodness test for a ``(B, n)`` array of outcomes.

    On a circle the smallest pairwise distance is the smallest gap between
    cyclically consecutive points, so only ``n`` gaps are checked per row.
    """
    s = np.sort(np.asarray(outcomes, dtype=np.int64), axis=1)
    n = s.shape[1]
    if n == 1:
        return np.ones(s.shape[0], dtype=bool)
    gaps = np.empty_like(s)
    gaps[:, :-1] = np.diff(s, axis=1)
    gaps[:, -1] = s[:, 0] + m - s[:, -1]
    return np.all(gaps >= n, axis=1)


def multiset_count(n: int, m: int) -> int:
    """Number of outcomes, ``C(m + n - 1, n)``."""
    return comb(m + n - 1, n)


def _iter_multiset_chunks(n, m, chunk=_CHUNK):
    it = itertools.combinations_with_replacement(range(m), n)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int64).reshape(len(block), n)


def enumerate_multisets(n: int, m: int, limit: int = ENUMERATION_LIMIT) -> np.ndarray:
    """All ``C(m+n-1, n)`` sorted outcomes in lexicographic order, shape ``(K, n)``."""
    total = multiset_count(n, m)
    if total > limit:
        raise GuardError(f"C(m+n-1, n) = {total} outcomes exceeds the enumeration limit {limit}")
    chunks = list(_iter_multiset_chunks(n, m))
    return np.concatenate(chunks) if chunks else np.empty((0, n), dtype=np.int64)


def count_good_outcomes_exact(n: int, m: int, limit: int = ENUMERATION_LIMIT) -> int:
    """Brute-force count of good outcomes over every multiset."""
    if n < 1 or m < 1:
        raise DomainError("n and m must be positive")
    total = multiset_count(n, m)
    if total > limit:
        raise GuardError(f"C(m+n-1, n) = {total} outcomes exceeds the enumeration limit {limit}")
    return int(sum(int(good_mask(block, m).sum()) for block in _iter_multiset_chunks(n, m)))


def count_good_closed_form(n: int, m: int) -> int:
    """Circular-gap count ``m/(m - n(n-1)) * C(m - n(n-1), n)``; 0 when ``m <= n(n-1)``."""
    if n < 1 or m < 1:
        raise DomainError("n and m must be positive")
    free = m - n * (n - 1)
    if free <= 0:
        return 0
    num = m * comb(free, n)
    assert num % free == 0
    return num // free


def good_fraction_exact(n: int, m: int) -> float:
    return count_good_closed_form(n, m) / multiset_count(n, m)


def n_good_formula(n: int, m: int) -> float:
    """Approximate good fraction from the blocking argument.

    ``prod_j (m - j(2n-1)) / prod_j (m + n - 1 - j)`` for ``j = 0..n-1``,
    evaluated in log space.  Returns 0 once a numerator factor is ``<= 0``.
    """
    if n < 1 or m < 1:
        raise DomainError("n and m must be positive")
    num = [m - j * (2 * n - 1) for j in range(n)]
    if min(num) <= 0:
        return 0.0
    log_ratio = math.fsum(math.log(x) for x in num) - math.fsum(
        math.log(m + n - 1 - j) for j in range(n)
    )
    return math.exp(log_ratio)


def n_good_laurent(n: int, m: int) -> float:
    """Leading-order large-``m`` form ``1 - (n^3 + n^2)/m``."""
    if m <= 0:
        raise DomainError("m must be positive")
    return 1.0 - (n**3 + n**2) / m


def laurent_remainder_constant(n: int, ms) -> float:
    """``max_m |n_good_formula - n_good_laurent| * m^2 / n^5`` over the grid `ms`.

    Expanding the product formula gives ``1 - (n^3 - n^2)/m + O(n^6/m^2)``,
    so the difference from the Laurent form is ``~2n^2/m`` and this constant
    grows linearly in ``m``.  It is reported, not asserted.
    """
    return max(abs(n_good_formula(n, m) - n_good_laurent(n, m)) * m * m / n**5 for m in ms)


def _floyd_subsets(pool: int, k: int, rng, size: int) -> np.ndarray:
    """Uniform sorted ``k``-subsets of ``range(pool)`` for `size` rows (Floyd's algorithm)."""
    sel = np.empty((size, k), dtype=np.int64)
    for idx, j in enumerate(range(pool - k, pool)):
        t = rng.integers(0, j + 1, size=size)
        if idx:
            dup = (sel[:, :idx] == t[:, None]).any(axis=1)
            t = np.where(dup, j, t)
        sel[:, idx] = t
    sel.sort(axis=1)
    return sel


def sample_outcome_uniform(n: int, m: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform multiset(s) of ``n`` modes out of ``m``.

    A uniform ``n``-subset ``c_0 < ... < c_{n-1}`` of ``range(m + n - 1)`` maps
    to the multiset ``c_i - i`` (stars and bars), which is a bijection.
    """
    if n < 1 or m < 1:
        raise DomainError("n and m must be positive")
    rows = 1 if size is None else int(size)
    out = _floyd_subsets(m + n - 1, n, rng, rows) - np.arange(n)
    return out[0] if size is None else out


def _sample_good_gaps(n, m, rng, size):
    # a uniform (start mode, gap composition) pair picks each good outcome
    # once per photon, hence uniformly
    start = rng.integers(0, m, size=size)
    if n == 1:
        return start[:, None]
    slack = m - n * n
    bars = _floyd_subsets(slack + n - 1, n - 1, rng, size)
    edges = np.concatenate(
        [np.full((size, 1), -1), bars, np.full((size, 1), slack + n - 1)], axis=1
    )
    gaps = np.diff(edges, axis=1) - 1 + n  # n gaps, each >= n, summing to m
    offsets = np.concatenate([np.zeros((size, 1), dtype=np.int64), np.cumsum(gaps[:, :-1], axis=1)], axis=1)
    return np.sort((start[:, None] + offsets) % m, axis=1)


def _sample_good_rejection(n, m, rng, size):
    """Returns ``(outcomes, draws)``; draws counts all uniform proposals used."""
    found = []
    have = 0
    draws = 0
    p = good_fraction_exact(n, m)
    while have < size:
        batch = max(64, int(1.1 * (size - have) / p) + 16)
        cand = sample_outcome_uniform(n, m, rng, size=batch)
        mask = good_mask(cand, m)
        keep = np.flatnonzero(mask)
        need = size - have
        if keep.size >= need:
            # count proposals only up to the last accepted one
            draws += int(keep[need - 1]) + 1
            found.append(cand[keep[:need]])
            have = size
        else:
            draws += batch
            found.append(cand[keep])
            have += keep.size
    return np.concatenate(found), draws


def sample_good_outcomes(
    n: int, m: int, rng: np.random.Generator, size: int, method: str = "auto"
) -> np.ndarray:
    """Uniform draws from the good outcomes, shape ``(size, n)``.

    ``method="rejection"`` filters uniform multisets; ``"gaps"`` samples a
    start mode and a gap composition directly.  ``"auto"`` rejects unless the
    acceptance rate is below ``MIN_ACCEPTANCE``.
    """
    if count_good_closed_form(n, m) == 0:
        raise DomainError(f"no good outcome exists for n={n}, m={m} (need m >= n^2 = {n * n})")
    if method == "auto":
        method = "rejection" if good_fraction_exact(n, m) >= MIN_ACCEPTANCE else "gaps"
    if method == "rejection":
        return _sample_good_rejection(n, m, rng, int(size))[0]
    if method == "gaps":
        return _sample_good_gaps(n, m, rng, int(size))
    raise DomainError(f"unknown sampling method {method!r}")


def enumerate_good_outcomes(n: int, m: int, limit: int = ENUMERATION_LIMIT) -> np.ndarray:
    chunks = [b[good_mask(b, m)] for b in _iter_multiset_chunks(n, m)] if multiset_count(n, m) <= limit else None
    if chunks is None:
        raise GuardError(f"C(m+n-1, n) = {multiset_count(n, m)} outcomes exceeds the enumeration limit {limit}")
    return np.concatenate(chunks) if chunks else np.empty((0, n), dtype=np.int64)


def estimate_good_fraction(n: int, m: int, samples: int, rng: np.random.Generator) -> Estimate:
    """Monte-Carlo good fraction under uniform outcomes, with Bernoulli error bar."""
    if samples < 1:
        raise DomainError("samples must be positive")
    done = 0
    good = 0
    while done < samples:
        k = min(_CHUNK, samples - done)
        good += int(good_mask(sample_outcome_uniform(n, m, rng, size=k), m).sum())
        done += k
    p = good / samples
    return Estimate(p, bernoulli_sigma(p, samples), samples)


def _perm_sq_on(first_row, outcomes):
    return np.abs(permanent_batch(circulant_truncations(first_row, outcomes))) ** 2


def good_probability_mass_exact(u: CirculantUnitary, n: int) -> float:
    """Sum of ``|perm U_T|^2`` over every good outcome (full enumeration)."""
    outs = enumerate_good_outcomes(n, u.m)
    if outs.shape[0] == 0:
        return 0.0
    return math.fsum(_perm_sq_on(u.first_row, outs))


def estimate_good_probability_mass(
    u: CirculantUnitary, n: int, samples: int, rng: np.random.Generator
) -> Estimate:
    """Probability that a circulant sampler lands on a good outcome.

    ``count_good_closed_form * mean |perm U_T|^2`` over uniformly sampled good
    outcomes.  No occupation factorials are needed since good outcomes are
    collision-free.  The error combines the sample standard error of the mean
    with the Bernoulli error of the rejection acceptance rate.
    """
    m = u.m
    if n > MAX_MASS_N:
        raise GuardError(f"n={n} exceeds the probability-mass guard n <= {MAX_MASS_N}")
    if m <= n * (n - 1):
        raise DomainError(f"need m > n(n-1) = {n * (n - 1)}, got m={m}")
    p = good_fraction_exact(n, m)
    if p < MIN_ACCEPTANCE:
        raise GuardError(f"rejection acceptance {p:.3g} below {MIN_ACCEPTANCE} for n={n}, m={m}")
    outs, draws = _sample_good_rejection(n, m, rng, int(samples))
    mom = Moments().add_many(_perm_sq_on(u.first_row, outs))
    n_good = count_good_closed_form(n, m)
    value = n_good * mom.mean
    p_hat = samples / draws
    rel_mean = mom.sem / mom.mean if samples > 1 and mom.mean > 0 else 0.0
    rel_bern = bernoulli_sigma(p_hat, draws) / p_hat
    return Estimate(value, value * math.hypot(rel_mean, rel_bern), int(samples))
