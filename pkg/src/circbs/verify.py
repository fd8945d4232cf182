"""Oracle cross-checks run by ``circbs verify``.

Every check pits a fast path against an independent slow one (naive
permanent, direct circulant sum, brute-force enumeration, exact sums) on
seeded inputs.  The whole suite finishes in a few seconds.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from .collisions import (
    count_good_closed_form,
    count_good_outcomes_exact,
    enumerate_multisets,
    estimate_good_probability_mass,
    good_fraction_exact,
    good_probability_mass_exact,
    is_good_by_distance,
    is_good_by_index_pattern,
    n_good_formula,
)
from .distribution import full_distribution
from .matrices import (
    _first_row_direct,
    circulant_first_rows,
    circulant_from_phases,
    haar_unitary,
    random_phases,
    unitarity_error,
)
from .permanent import permanent_batch, permanent_naive, permanent_ryser
from .streams import stream


class CheckResult(NamedTuple):
    name: str
    ok: bool
    detail: str


def _rng(seed, k):
    return stream(seed, "verify", k)


def check_ryser_vs_naive(seed):
    rng = _rng(seed, 0)
    worst = 0.0
    for n in range(1, 9):
        a = rng.standard_normal((10, n, n)) + 1j * rng.standard_normal((10, n, n))
        batch = permanent_batch(a)
        for i in range(10):
            ref = permanent_naive(a[i])
            for got in (permanent_ryser(a[i]), batch[i]):
                worst = max(worst, abs(got - ref) / abs(ref))
    return worst <= 1e-9, f"max relative error {worst:.2e} (n = 1..8)"


def check_circulant(seed):
    rng = _rng(seed, 1)
    worst_row = worst_unit = worst_eig = 0.0
    for m in (8, 64, 512):
        phases = random_phases(m, rng)
        direct = _first_row_direct(phases)
        worst_row = max(worst_row, float(np.max(np.abs(circulant_first_rows(phases) - direct))))
        u = circulant_from_phases(phases).dense()
        worst_unit = max(worst_unit, unitarity_error(u))
        if m <= 64:
            ev = np.sort_complex(np.linalg.eigvals(u))
            worst_eig = max(worst_eig, float(np.max(np.abs(ev - np.sort_complex(np.exp(1j * phases))))))
    ok = worst_row <= 1e-10 and worst_unit <= 1e-10 and worst_eig <= 1e-8
    return ok, f"fft vs direct {worst_row:.1e}, unitarity {worst_unit:.1e}, eigenvalues {worst_eig:.1e}"


def check_haar_unitarity(seed):
    rng = _rng(seed, 2)
    worst = max(unitarity_error(haar_unitary(m, rng)) for m in (2, 16, 128))
    return worst <= 1e-10, f"max |UU^+ - I| {worst:.1e}"


def check_normalization(seed):
    rng = _rng(seed, 3)
    worst = 0.0
    for n, m in ((2, 4), (3, 6), (3, 9)):
        d = full_distribution(haar_unitary(m, rng), list(range(n)))
        worst = max(worst, abs(math.fsum(d.probabilities) - 1))
    d = full_distribution(circulant_from_phases(random_phases(16, rng)), [0, 1])
    worst = max(worst, abs(math.fsum(d.probabilities) - 1))
    bs = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    hom = full_distribution(bs, [0, 1]).probabilities
    hom_err = float(np.max(np.abs(hom - [0.5, 0.0, 0.5])))
    return worst <= 1e-8 and hom_err <= 1e-12, f"norm deviation {worst:.1e}, HOM deviation {hom_err:.1e}"


def check_good_counts(seed):
    bad = []
    for n in range(1, 4):
        for m in range(n, 25):
            exact = count_good_outcomes_exact(n, m)
            brute = sum(is_good_by_distance(s, n, m) for s in enumerate_multisets(n, m))
            if not exact == brute == count_good_closed_form(n, m):
                bad.append((n, m))
    formula = [abs(n_good_formula(2, m) - good_fraction_exact(2, m)) for m in (4, 6, 50)]
    ok = not bad and max(formula) <= 1e-12
    return ok, f"mismatches {bad or 'none'}; n=2 formula deviation {max(formula):.1e}"


def check_good_predicates(seed):
    rng = _rng(seed, 4)
    disagree = 0
    for n, m in ((2, 7), (3, 12), (4, 30)):
        for s in rng.integers(0, m, size=(2000, n)):
            disagree += is_good_by_distance(s, n, m) != is_good_by_index_pattern(s, n, m)
    return disagree == 0, f"{disagree} disagreements over 6000 outcomes"


def check_good_mass(seed):
    rng = _rng(seed, 5)
    u = circulant_from_phases(random_phases(16, rng))
    exact = good_probability_mass_exact(u, 2)
    est = estimate_good_probability_mass(u, 2, 20_000, rng)
    z = (est.value - exact) / est.error
    return abs(z) <= 4, f"exact {exact:.5f}, estimate {est.value:.5f}±{est.error:.5f} (z={z:+.2f})"


CHECKS: list[tuple[str, Callable]] = [
    ("permanent: Ryser and batch vs naive", check_ryser_vs_naive),
    ("circulant: FFT row, unitarity, spectrum", check_circulant),
    ("haar: unitarity", check_haar_unitarity),
    ("distribution: normalization and HOM dip", check_normalization),
    ("good outcomes: exact, brute force, closed form", check_good_counts),
    ("good outcomes: distance vs index pattern", check_good_predicates),
    ("good mass: estimator vs enumeration", check_good_mass),
]


def run_checks(seed: int = 2021) -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        ok, detail = fn(seed)
        out.append(CheckResult(name, bool(ok), detail))
    return out
