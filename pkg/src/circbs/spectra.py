"""Eigenvalue spectra of truncated matrices and distribution distances.

Eigenvalues of ``n x n`` truncations are binned on a square grid in the
complex plane; two ensembles are compared with the histogram fidelity
``F = sum_j sqrt(p_j q_j)``.  The variation-distance probe looks at the real
coordinates of circulant truncations directly and compares each marginal with
the Gaussian it should approach.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtr

from .collisions import good_mask, sample_good_outcomes
from .errors import DomainError, NumericalError
from .matrices import (
    circulant_first_rows,
    circulant_truncations,
    ginibre_matrix,
    haar_isometry,
    random_phases,
)

__all__ = [
    "DEFAULT_BINS",
    "DEFAULT_RANGE",
    "ENSEMBLES",
    "FidelityRecord",
    "Histogram2D",
    "ProbeAccumulator",
    "ProbeResult",
    "eigen_fidelity_experiment",
    "eigenvalues",
    "ensemble_histogram",
    "fidelity",
    "fidelity_error",
    "histogram_eigenvalues",
    "probe_coordinates",
    "probe_bin_probabilities",
    "sample_truncations",
    "tv_null_distribution",
    "variation_distance_probe",
]

DEFAULT_BINS = 64
DEFAULT_RANGE = 1.1
MAX_EIG_N = 64
ENSEMBLES = ("circulant", "haar", "gaussian")
_BLOCK = 2000


@dataclass
class Histogram2D:
    """Counts on a ``bins x bins`` grid over ``[-r, r]^2``.

    ``counts[i, j]`` holds points with real part in bin ``i`` and imaginary
    part in bin ``j``.  Points outside the square are clamped into the edge
    bins and also tallied in ``overflow``.
    """

    bins: int
    r: float
    counts: np.ndarray = field(repr=False)
    overflow: int = 0

    @classmethod
    def empty(cls, bins: int = DEFAULT_BINS, r: float = DEFAULT_RANGE) -> "Histogram2D":
        return cls(int(bins), float(r), np.zeros((bins, bins), dtype=np.int64), 0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def probabilities(self) -> np.ndarray:
        t = self.total
        if t == 0:
            raise DomainError("empty histogram has no probabilities")
        return self.counts / t

    def same_binning(self, other: "Histogram2D") -> bool:
        return self.bins == other.bins and self.r == other.r

    def add(self, points) -> "Histogram2D":
        z = np.asarray(points, dtype=np.complex128).ravel()
        if z.size == 0:
            return self
        if not np.all(np.isfinite(z)):
            raise DomainError("cannot histogram non-finite points")
        scale = self.bins / (2.0 * self.r)
        ix = np.floor((z.real + self.r) * scale).astype(np.int64)
        iy = np.floor((z.imag + self.r) * scale).astype(np.int64)
        out = (ix < 0) | (ix >= self.bins) | (iy < 0) | (iy >= self.bins)
        self.overflow += int(out.sum())
        np.clip(ix, 0, self.bins - 1, out=ix)
        np.clip(iy, 0, self.bins - 1, out=iy)
        np.add.at(self.counts, (ix, iy), 1)
        return self

    def merge(self, other: "Histogram2D") -> "Histogram2D":
        if not self.same_binning(other):
            raise DomainError("cannot merge histograms with different binning")
        self.counts += other.counts
        self.overflow += other.overflow
        return self


def histogram_eigenvalues(points, bins: int = DEFAULT_BINS, r: float = DEFAULT_RANGE) -> Histogram2D:
    if r <= 0 or bins < 1:
        raise DomainError("need r > 0 and bins >= 1")
    return Histogram2D.empty(bins, r).add(points)


def fidelity(h1: Histogram2D, h2: Histogram2D) -> float:
    """Bhattacharyya coefficient ``sum_j sqrt(p_j q_j)`` of two histograms."""
    if not h1.same_binning(h2):
        raise DomainError(
            f"binning mismatch: ({h1.bins}, {h1.r}) vs ({h2.bins}, {h2.r})"
        )
    if h1.total == 0 or h2.total == 0:
        raise DomainError("fidelity needs two non-empty histograms")
    f = float(np.sum(np.sqrt(h1.probabilities() * h2.probabilities())))
    return min(max(f, 0.0), 1.0)


def fidelity_error(f: float, n1: int, n2: int) -> float:
    """Delta-method multinomial standard error of an empirical fidelity.

    For ``F = sum sqrt(p q)`` with ``p`` estimated from ``n1`` points the
    variance is ``(1 - F^2) / (4 n1)``; the two histograms are independent.
    """
    return math.sqrt(max(1.0 - f * f, 0.0) / 4.0 * (1.0 / n1 + 1.0 / n2))


def eigenvalues(a, seed=None) -> np.ndarray:
    """All eigenvalues of a square matrix (or of each matrix in a stack)."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DomainError(f"eigenvalues need square matrices, got shape {a.shape}")
    if a.shape[-1] > MAX_EIG_N:
        raise DomainError(f"eigenvalue routine limited to n <= {MAX_EIG_N}")
    try:
        return np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue solver did not converge: {exc}", seed=seed) from exc


def sample_truncations(ensemble: str, n: int, m: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``(count, n, n)`` collision-free truncations from one of :data:`ENSEMBLES`.

    Circulant truncations use uniformly drawn good outcomes.  Haar truncations
    use an ``n``-column Haar isometry: by left/right invariance any block with
    distinct rows and columns has the same law.  The Gaussian reference has
    ``E|x|^2 = 1/m``.
    """
    if ensemble == "circulant":
        rows = circulant_first_rows(random_phases(m, rng, size=count))
        outs = sample_good_outcomes(n, m, rng, count)
        return circulant_truncations(rows, outs)
    if ensemble == "haar":
        if m < n:
            raise DomainError(f"need m >= n for Haar truncations, got m={m}")
        return haar_isometry(m, n, rng, size=count)[:, :n, :]
    if ensemble == "gaussian":
        return ginibre_matrix(n, m, rng, size=count)
    raise DomainError(f"unknown ensemble {ensemble!r}; choose from {ENSEMBLES}")


def ensemble_histogram(
    ensemble: str,
    n: int,
    m: int,
    samples: int,
    rng: np.random.Generator,
    bins: int = DEFAULT_BINS,
    r: float = DEFAULT_RANGE,
    seed=None,
) -> Histogram2D:
    """Histogram of all eigenvalues of `samples` truncations."""
    hist = Histogram2D.empty(bins, r)
    done = 0
    while done < samples:
        k = min(_BLOCK, samples - done)
        hist.add(eigenvalues(sample_truncations(ensemble, n, m, k, rng), seed=seed))
        done += k
    return hist


@dataclass(frozen=True)
class FidelityRecord:
    n: int
    m: int
    ensemble_pair: tuple[str, str]
    fidelity: float
    error: float
    samples: int
    seed: int | None


def _check_pairs(pairs):
    out = []
    for a, b in pairs:
        if a not in ENSEMBLES or b not in ENSEMBLES:
            raise DomainError(f"unknown ensemble in pair ({a}, {b})")
        out.append((a, b))
    return out


def eigen_fidelity_experiment(
    n: int,
    m: int,
    pairs: Iterable[Sequence[str]],
    samples: int,
    rng: np.random.Generator,
    bins: int = DEFAULT_BINS,
    r: float = DEFAULT_RANGE,
    seed=None,
) -> list[FidelityRecord]:
    """Fidelity between eigenvalue histograms of pairs of ensembles.

    Every ensemble that appears in some pair is sampled once (`samples`
    matrices) and its histogram is shared between the pairs.
    """
    pairs = _check_pairs(pairs)
    if m < n:
        raise DomainError(f"need m >= n, got n={n}, m={m}")
    if any("circulant" in p for p in pairs) and m < n * n:
        raise DomainError(f"no good outcome exists for m < n^2 = {n * n}")
    needed = sorted({e for p in pairs for e in p}, key=ENSEMBLES.index)
    hists = {e: ensemble_histogram(e, n, m, samples, rng, bins, r, seed) for e in needed}
    records = []
    for a, b in pairs:
        f = fidelity(hists[a], hists[b])
        err = fidelity_error(f, hists[a].total, hists[b].total)
        records.append(FidelityRecord(n, m, (a, b), f, err, samples, seed))
    return records


def _first_good_outcome(n, m):
    s = np.arange(n) * n
    if m < n * n or not good_mask(s[None], m)[0]:
        raise DomainError(f"no good outcome exists for n={n}, m={m}")
    return s


def probe_coordinates(
    n: int, m: int, samples: int, rng: np.random.Generator, ensemble: str = "circulant", outcome=None
) -> np.ndarray:
    """``(samples, 2 n^2)`` real coordinates (re, im interleaved) of truncations.

    Circulant truncations are all taken on one fixed good outcome (default
    ``0, n, 2n, ...``); the Gaussian ensemble serves as the null model.
    """
    if ensemble == "circulant":
        s = _first_good_outcome(n, m) if outcome is None else np.sort(np.asarray(outcome))
        rows = circulant_first_rows(random_phases(m, rng, size=samples))
        mats = circulant_truncations(rows, np.broadcast_to(s, (samples, n)))
    elif ensemble == "gaussian":
        mats = ginibre_matrix(n, m, rng, size=samples)
    else:
        raise DomainError(f"probe supports 'circulant' or 'gaussian', got {ensemble!r}")
    flat = mats.reshape(samples, n * n)
    coords = np.empty((samples, 2 * n * n))
    coords[:, 0::2] = flat.real
    coords[:, 1::2] = flat.imag
    return coords


@dataclass(frozen=True)
class ProbeResult:
    n: int
    m: int
    samples: int
    tv: np.ndarray
    tv_noise_floor: float
    max_corr: float
    max_sq_corr: float

    @property
    def max_tv(self) -> float:
        return float(self.tv.max())


def probe_bin_probabilities(m: int, bins: int, width: float = 4.0):
    """Edges and exact ``N(0, 1/(2m))`` probabilities of the probe's bins."""
    sigma = 1.0 / math.sqrt(2.0 * m)
    inner = np.linspace(-width * sigma, width * sigma, bins + 1)
    edges = np.concatenate([[-np.inf], inner, [np.inf]])
    return edges, np.diff(ndtr(edges / sigma))


def tv_null_distribution(p, samples: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    """TV between exact bin probabilities `p` and `reps` multinomial histograms of size `samples`."""
    p = np.asarray(p, dtype=float)
    counts = rng.multinomial(samples, p / p.sum(), size=reps)
    return 0.5 * np.abs(counts / samples - p).sum(axis=1)


def _max_offdiag(c):
    c = np.abs(c)
    np.fill_diagonal(c, 0.0)
    return float(c.max()) if c.size > 1 else 0.0


def _corr_from_sums(count, sx, sxx):
    cov = (sxx - np.outer(sx, sx) / count) / (count - 1)
    sd = np.sqrt(np.diag(cov))
    return cov / np.outer(sd, sd)


@dataclass
class ProbeAccumulator:
    """Mergeable state of the variation-distance probe.

    Holds per-coordinate bin counts plus first and second moment sums of the
    coordinates and of their squares.
    """

    n: int
    m: int
    bins: int
    width: float = 4.0
    count: int = 0
    counts: np.ndarray | None = field(default=None, repr=False)
    sums: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        d = 2 * self.n * self.n
        self.edges, self.p = probe_bin_probabilities(self.m, self.bins, self.width)
        if self.counts is None:
            self.counts = np.zeros((d, self.p.size), dtype=np.int64)
        if self.sums is None:
            # rows: [sum x, sum x^2] ; then the two outer-product sums
            self.sums = np.zeros((2 + 2 * d, d))

    def add(self, coords) -> "ProbeAccumulator":
        x = np.asarray(coords, dtype=float)
        d = x.shape[1]
        idx = np.searchsorted(self.edges[1:-1], x, side="right")
        for k in range(d):
            self.counts[k] += np.bincount(idx[:, k], minlength=self.p.size)
        x2 = x * x
        self.sums[0] += x.sum(axis=0)
        self.sums[1] += x2.sum(axis=0)
        self.sums[2 : 2 + d] += x.T @ x
        self.sums[2 + d :] += x2.T @ x2
        self.count += x.shape[0]
        return self

    def merge(self, other: "ProbeAccumulator") -> "ProbeAccumulator":
        self.counts += other.counts
        self.sums += other.sums
        self.count += other.count
        return self

    def result(self) -> "ProbeResult":
        if self.count < 2:
            raise DomainError("probe needs at least two samples")
        d = self.counts.shape[0]
        tv = 0.5 * np.abs(self.counts / self.count - self.p).sum(axis=1)
        floor = 0.5 * float(np.sum(np.sqrt(2.0 * self.p * (1.0 - self.p) / (math.pi * self.count))))
        corr = _corr_from_sums(self.count, self.sums[0], self.sums[2 : 2 + d])
        sq_corr = _corr_from_sums(self.count, self.sums[1], self.sums[2 + d :])
        return ProbeResult(self.n, self.m, self.count, tv, floor, _max_offdiag(corr), _max_offdiag(sq_corr))


def variation_distance_probe(
    n: int,
    m: int,
    samples: int,
    bins: int,
    rng: np.random.Generator,
    ensemble: str = "circulant",
    width: float = 4.0,
) -> ProbeResult:
    """Empirical distance of truncation coordinates from i.i.d. Gaussians.

    Each of the ``2 n^2`` real coordinates is binned into `bins` equal-width
    bins over ``+-width`` standard deviations plus two tail bins, and compared
    in total variation with ``N(0, 1/(2m))``.  Also returned are the largest
    absolute Pearson correlation between two coordinates and between two
    squared coordinates; the unitary constraint shows up in the latter.
    ``tv_noise_floor`` is the expected TV of an exact Gaussian sample of the
    same size, ``0.5 * sum_j sqrt(2 p_j (1 - p_j) / (pi N))``.
    """
    if m < n * n:
        raise DomainError(f"probe needs m >= n^2 = {n * n}, got m={m}")
    if bins < 1 or samples < 2:
        raise DomainError("need bins >= 1 and samples >= 2")
    acc = ProbeAccumulator(n, m, bins, width)
    done = 0
    while done < samples:
        k = min(_BLOCK * 10, samples - done)
        acc.add(probe_coordinates(n, m, k, rng, ensemble))
        done += k
    return acc.result()
