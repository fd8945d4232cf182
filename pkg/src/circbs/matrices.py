"""Random matrix ensembles used by the sampler.

Three ensembles live here:

* circulant unitaries ``F diag(exp(i phi)) F^dagger`` built from i.i.d.
  uniform phases,
* Haar-random unitaries (QR of a Ginibre matrix with phase correction),
* i.i.d. complex Gaussian (Ginibre) matrices with a chosen variance.

Matrices are plain ``complex128`` numpy arrays.  A :class:`CirculantUnitary`
stores only its phases and first row; ``dense()`` expands it on demand.

DFT convention: ``F[j, k] = exp(-2 pi i j k / m) / sqrt(m)``.  With that
choice the dense circulant satisfies ``U[a, b] = first_row[(b - a) % m]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "CirculantUnitary",
    "as_matrix",
    "circulant_first_rows",
    "circulant_from_phases",
    "circulant_truncations",
    "dft_matrix",
    "ginibre_matrix",
    "haar_isometry",
    "haar_unitary",
    "matrix_from_json",
    "matrix_to_json",
    "random_circulant",
    "random_phases",
    "truncate",
    "unitarity_error",
]

TWO_PI = 2.0 * np.pi


def _check_positive(name, value):
    if int(value) != value or value < 1:
        raise DomainError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def as_matrix(a) -> np.ndarray:
    """Return `a` as a finite 2-D complex128 array or raise DomainError."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.size == 0:
        raise DomainError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("matrix has non-finite entries")
    return arr


def unitarity_error(u) -> float:
    """Max-norm of ``U U^dagger - I``."""
    u = np.asarray(u)
    return float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))))


def dft_matrix(m: int) -> np.ndarray:
    """Unitary DFT matrix with kernel ``exp(-2 pi i jk/m) / sqrt(m)``."""
    m = _check_positive("m", m)
    jk = np.outer(np.arange(m), np.arange(m)) % m
    return np.exp(-1j * TWO_PI * jk / m) / np.sqrt(m)


def random_phases(m: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw i.i.d. uniform phases on ``[0, 2 pi)``.

    With `size` given, returns a ``(size, m)`` stack, one phase vector per row.
    """
    m = _check_positive("m", m)
    shape = (m,) if size is None else (int(size), m)
    phases = rng.uniform(0.0, TWO_PI, size=shape)
    # uniform() may round up to the open end point
    phases[phases >= TWO_PI] = 0.0
    return phases


def circulant_first_rows(phases) -> np.ndarray:
    """Fast-transform first rows for a stack of phase vectors (last axis = modes).

    ``first_row[k] = (1/m) sum_j exp(i phi_j) exp(2 pi i jk/m)`` is exactly
    numpy's inverse FFT of ``exp(i phi)``.
    """
    return np.fft.ifft(np.exp(1j * np.asarray(phases, dtype=float)), axis=-1)


def _first_row_direct(phases: np.ndarray) -> np.ndarray:
    m = phases.shape[0]
    jk = np.outer(np.arange(m), np.arange(m)) % m
    return (np.exp(1j * phases) @ np.exp(1j * TWO_PI * jk / m)) / m


@dataclass(frozen=True)
class CirculantUnitary:
    """Circulant unitary stored as its phases and first row (O(m) memory)."""

    phases: np.ndarray
    first_row: np.ndarray

    @property
    def m(self) -> int:
        return self.first_row.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.m)

    def entry(self, a, b):
        return self.first_row[(np.asarray(b) - np.asarray(a)) % self.m]

    def dense(self) -> np.ndarray:
        idx = np.arange(self.m)
        return self.first_row[(idx[None, :] - idx[:, None]) % self.m]

    def eigenvalues(self) -> np.ndarray:
        return np.exp(1j * self.phases)


def circulant_from_phases(phases, fast: bool = False) -> CirculantUnitary:
    """Build ``F diag(exp(i phi)) F^dagger`` from a phase vector.

    The default path sums the first row directly in O(m^2); ``fast=True``
    uses the FFT.  The two agree to ~1e-13.
    """
    phases = np.array(phases, dtype=float)
    if phases.ndim != 1 or phases.size == 0:
        raise DomainError("phases must be a non-empty 1-D array")
    if np.any(phases < 0) or np.any(phases >= TWO_PI) or not np.all(np.isfinite(phases)):
        raise DomainError("phases must lie in [0, 2*pi)")
    row = circulant_first_rows(phases) if fast else _first_row_direct(phases)
    phases.setflags(write=False)
    row.setflags(write=False)
    return CirculantUnitary(phases, row)


def random_circulant(m: int, rng: np.random.Generator, fast: bool = True) -> CirculantUnitary:
    return circulant_from_phases(random_phases(m, rng), fast=fast)


def _standard_complex_normal(rng, shape):
    # E|z|^2 = 1
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _qr_haar(z):
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    # zero diagonal has probability zero; guard anyway
    ph = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1.0), 1.0)
    return q * ph[..., None, :]


def haar_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random ``m x m`` unitary (Mezzadri's QR construction)."""
    m = _check_positive("m", m)
    return _qr_haar(_standard_complex_normal(rng, (m, m)))


def haar_isometry(m: int, k: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """First `k` columns of a Haar unitary, via thin QR of an ``m x k`` Ginibre matrix.

    Any ``k x k`` block built from distinct rows of the result has the same law
    as a ``k x k`` collision-free truncation of an ``m x m`` Haar unitary, at
    O(m k^2) cost instead of O(m^3).
    """
    m = _check_positive("m", m)
    k = _check_positive("k", k)
    if k > m:
        raise DomainError(f"isometry width k={k} exceeds m={m}")
    shape = (m, k) if size is None else (int(size), m, k)
    return _qr_haar(_standard_complex_normal(rng, shape))


def ginibre_matrix(n: int, m_norm: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """``n x n`` i.i.d. complex Gaussians with ``E|x|^2 = 1/m_norm``."""
    n = _check_positive("n", n)
    m_norm = _check_positive("m_norm", m_norm)
    shape = (n, n) if size is None else (int(size), n, n)
    return _standard_complex_normal(rng, shape) / np.sqrt(m_norm)


def truncate(u, inputs: Sequence[int], outcome: Sequence[int]) -> np.ndarray:
    """Submatrix with rows = input modes and columns = output modes (with repeats).

    `u` may be a dense matrix or a :class:`CirculantUnitary`; for the latter the
    entries are read off the first row without expanding.
    """
    rows = np.asarray(inputs, dtype=np.int64)
    cols = np.asarray(outcome, dtype=np.int64)
    if rows.ndim != 1 or cols.ndim != 1 or rows.size != cols.size or rows.size == 0:
        raise DomainError(
            f"need equally many input and output modes, got {rows.size} and {cols.size}"
        )
    m = u.m if isinstance(u, CirculantUnitary) else np.shape(u)[0]
    if isinstance(u, CirculantUnitary):
        ncols = m
    else:
        u = np.asarray(u)
        if u.ndim != 2:
            raise DomainError("u must be a matrix")
        ncols = u.shape[1]
    if rows.min() < 0 or rows.max() >= m or cols.min() < 0 or cols.max() >= ncols:
        raise DomainError(f"mode index out of range for a {m}-mode matrix")
    if isinstance(u, CirculantUnitary):
        return np.asarray(u.entry(rows[:, None], cols[None, :]))
    return u[np.ix_(rows, cols)]


def circulant_truncations(first_rows: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
    """Batched truncation of circulants on contiguous inputs ``0..n-1``.

    ``first_rows`` has shape ``(B, m)`` (or ``(m,)`` shared by all outcomes),
    ``outcomes`` shape ``(B, n)``.  Entry ``[i, a, b]`` is
    ``first_rows[i, (outcomes[i, b] - a) % m]``.
    """
    outcomes = np.asarray(outcomes, dtype=np.int64)
    first_rows = np.asarray(first_rows)
    n = outcomes.shape[-1]
    m = first_rows.shape[-1]
    idx = (outcomes[:, None, :] - np.arange(n)[None, :, None]) % m
    if first_rows.ndim == 1:
        return first_rows[idx]
    return np.take_along_axis(first_rows, idx.reshape(idx.shape[0], -1), axis=1).reshape(idx.shape)


def matrix_to_json(a) -> str:
    """Serialize as ``{"rows", "cols", "data"}`` with interleaved re/im values."""
    a = as_matrix(a)
    inter = np.empty(a.size * 2)
    inter[0::2] = a.real.ravel()
    inter[1::2] = a.imag.ravel()
    return json.dumps({"rows": a.shape[0], "cols": a.shape[1], "data": inter.tolist()})


def matrix_from_json(text: str) -> np.ndarray:
    obj = json.loads(text)
    rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    if len(data) != 2 * rows * cols:
        raise DomainError(f"expected {2 * rows * cols} numbers, got {len(data)}")
    flat = np.asarray(data, dtype=float)
    return as_matrix((flat[0::2] + 1j * flat[1::2]).reshape(rows, cols))
