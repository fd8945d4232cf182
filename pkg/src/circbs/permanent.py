"""Matrix permanents.

``permanent_naive`` enumerates permutations and is the correctness oracle.
``permanent_ryser`` is the production kernel: Ryser's inclusion-exclusion
formula walked in Gray-code order, so each of the ``2^n`` subsets costs one
column update of the row sums plus an ``n``-term product.  The outer sum is
Kahan-compensated.  ``permanent_batch`` runs the same recursion over a stack
of matrices with numpy, which is what the Monte-Carlo loops use.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import DomainError, GuardError

try:
    import numba as _nb
except ModuleNotFoundError:  # pragma: no cover
    _nb = None

__all__ = [
    "MAX_NAIVE",
    "MAX_RYSER",
    "expected_gaussian_permanent_sq",
    "log_expected_gaussian_permanent_sq",
    "permanent",
    "permanent_batch",
    "permanent_naive",
    "permanent_ryser",
]

MAX_NAIVE = 10
MAX_RYSER = 30


def _square(a, limit, name):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"permanent needs a square matrix, got shape {a.shape}")
    if a.shape[0] > limit:
        raise GuardError(f"{name} refuses n={a.shape[0]} > {limit}")
    return a


def permanent_naive(a) -> complex:
    """Sum over all ``n!`` permutations of ``prod_j a[j, sigma(j)]``."""
    a = _square(a, MAX_NAIVE, "permanent_naive")
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j
    rows = np.arange(n)
    perms = itertools.permutations(range(n))
    total = 0j
    while True:
        chunk = np.array(list(itertools.islice(perms, 20_000)), dtype=np.intp)
        if chunk.size == 0:
            return complex(total)
        total += np.prod(a[rows, chunk], axis=1).sum()


def _ryser_gray(a):
    n = a.shape[0]
    rowsum = np.zeros(n, dtype=np.complex128)
    acc_re = 0.0
    acc_im = 0.0
    c_re = 0.0
    c_im = 0.0
    gray = 0
    sign = 1.0
    for k in range(1, 1 << n):
        # column to flip: number of trailing zeros of k
        j = 0
        t = k
        while (t & 1) == 0:
            t >>= 1
            j += 1
        bit = 1 << j
        if gray & bit:
            for i in range(n):
                rowsum[i] -= a[i, j]
        else:
            for i in range(n):
                rowsum[i] += a[i, j]
        gray ^= bit
        sign = -sign
        prod = 1.0 + 0j
        for i in range(n):
            prod *= rowsum[i]
        # Kahan step, real and imaginary parts separately
        y = sign * prod.real - c_re
        s = acc_re + y
        c_re = (s - acc_re) - y
        acc_re = s
        y = sign * prod.imag - c_im
        s = acc_im + y
        c_im = (s - acc_im) - y
        acc_im = s
    # sign here is (-1)^{|S|}; Ryser's prefactor is (-1)^n
    if n % 2 == 1:
        return complex(-acc_re, -acc_im)
    return complex(acc_re, acc_im)


_ryser_py = _ryser_gray
if _nb is not None:
    _ryser_kernel = _nb.njit(cache=True)(_ryser_gray)
else:  # pragma: no cover
    _ryser_kernel = _ryser_py


def permanent_ryser(a) -> complex:
    """Permanent by Gray-code Ryser, O(n 2^n)."""
    a = _square(a, MAX_RYSER, "permanent_ryser")
    if a.shape[0] == 0:
        return 1.0 + 0j
    return complex(_ryser_kernel(np.ascontiguousarray(a)))


permanent = permanent_ryser


def permanent_batch(stack) -> np.ndarray:
    """Permanents of a ``(B, n, n)`` stack, vectorized over the batch axis."""
    a = np.asarray(stack, dtype=np.complex128)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise DomainError(f"expected a (B, n, n) stack, got shape {a.shape}")
    b, n, _ = a.shape
    if n > MAX_RYSER:
        raise GuardError(f"permanent_batch refuses n={n} > {MAX_RYSER}")
    if n == 0:
        return np.ones(b, dtype=np.complex128)
    if n == 1:
        return a[:, 0, 0].copy()
    if n == 2:
        return a[:, 0, 0] * a[:, 1, 1] + a[:, 0, 1] * a[:, 1, 0]
    cols = np.ascontiguousarray(np.moveaxis(a, 2, 0))  # (n, B, n): cols[j] = column j
    rowsum = np.zeros((b, n), dtype=np.complex128)
    acc = np.zeros(b, dtype=np.complex128)
    comp = np.zeros(b, dtype=np.complex128)
    gray = 0
    sign = 1.0
    for k in range(1, 1 << n):
        j = (k & -k).bit_length() - 1
        bit = 1 << j
        if gray & bit:
            rowsum -= cols[j]
        else:
            rowsum += cols[j]
        gray ^= bit
        sign = -sign
        y = sign * np.prod(rowsum, axis=1) - comp
        s = acc + y
        comp = (s - acc) - y
        acc = s
    return -acc if n % 2 else acc


def log_expected_gaussian_permanent_sq(n: int, m: int) -> float:
    if n < 1 or m < 1:
        raise DomainError("n and m must be positive")
    return math.lgamma(n + 1) - n * math.log(m)


def expected_gaussian_permanent_sq(n: int, m: int) -> float:
    """``E|perm X|^2 = n!/m^n`` for ``X`` with i.i.d. entries of variance ``1/m``."""
    if n < 1 or m < 1:
        raise DomainError("n and m must be positive")
    try:
        # exact integers, correctly rounded division
        return math.factorial(n) / m**n
    except OverflowError:
        log_v = log_expected_gaussian_permanent_sq(n, m)
        return math.inf if log_v > 709.0 else math.exp(log_v)
