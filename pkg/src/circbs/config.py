"""Experiment configuration files.

A config is an INI file with a single ``[experiment]`` section::

    [experiment]
    experiment = eigen-fidelity
    n = 3
    m = 9, 64, 256, 1024
    samples = 10000
    master_seed = 2021
    output = results/eigen_fidelity.csv

Lists are comma separated.  Unknown keys are rejected.  The mode grid is
given by exactly one of ``m`` (absolute), ``m_over_n`` (``m = r * n``) or
``m_per_n3`` (``m = k * n^3``).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from pathlib import Path

from .collisions import MAX_MASS_N, MIN_ACCEPTANCE, good_fraction_exact
from .errors import ConfigError, DomainError, GuardError
from .records import FORMATS
from .spectra import DEFAULT_BINS, DEFAULT_RANGE, ENSEMBLES, MAX_EIG_N

EXPERIMENTS = (
    "eigen-fidelity",
    "eigen-scaling",
    "avg-permanent",
    "good-fraction",
    "good-mass",
    "tv-probe",
)

DEFAULT_SAMPLES = {
    "eigen-fidelity": 10_000,
    "eigen-scaling": 10_000,
    "avg-permanent": 10_000,
    "good-fraction": 100_000,
    "good-mass": 20_000,
    "tv-probe": 100_000,
}
FULL_SAMPLES = {
    "eigen-fidelity": 1_000_000,
    "eigen-scaling": 1_000_000,
    "avg-permanent": 1_000_000,
    "good-fraction": 5_000_000,
}
DEFAULT_PAIRS = {
    "eigen-fidelity": (("circulant", "gaussian"), ("haar", "gaussian"), ("haar", "circulant")),
    "eigen-scaling": (("circulant", "gaussian"),),
}
DEFAULT_ENSEMBLES = {
    "avg-permanent": ("haar", "circulant", "gaussian"),
    "tv-probe": ("circulant", "gaussian"),
}
MAX_SPECTRA_M = 4096
MAX_PERM_N = 8
PROBE_BINS = 16

_KEYS = {
    "experiment", "n", "m", "m_over_n", "m_per_n3", "samples", "matrices", "bins",
    "range", "pairs", "ensembles", "master_seed", "workers", "block_size", "output",
    "format", "equalize_eigenvalues",
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: tuple[int, ...]
    m: tuple[int, ...] = ()
    m_over_n: tuple[int, ...] = ()
    m_per_n3: tuple[int, ...] = ()
    samples: int | None = None
    matrices: int = 100
    bins: int | None = None
    range: float = DEFAULT_RANGE
    pairs: tuple[tuple[str, str], ...] = ()
    ensembles: tuple[str, ...] = ()
    master_seed: int = 2021
    workers: int = 1
    block_size: int = 1000
    output: str = "results.csv"
    format: str = ""
    equalize_eigenvalues: bool = True

    def __post_init__(self):
        # fill experiment-dependent defaults
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        if self.samples is None:
            set_("samples", DEFAULT_SAMPLES.get(self.experiment, 1))
        if self.bins is None:
            set_("bins", PROBE_BINS if self.experiment == "tv-probe" else DEFAULT_BINS)
        if not self.pairs and self.experiment in DEFAULT_PAIRS:
            set_("pairs", DEFAULT_PAIRS[self.experiment])
        if not self.ensembles and self.experiment in DEFAULT_ENSEMBLES:
            set_("ensembles", DEFAULT_ENSEMBLES[self.experiment])
        if not self.format:
            set_("format", "jsonl" if str(self.output).endswith(".jsonl") else "csv")

    def points(self) -> list[tuple[int, int, float]]:
        """``(n, m, x)`` grid points in run order."""
        out = []
        for n in self.n:
            if self.m:
                out += [(n, m, float(m)) for m in self.m]
            elif self.m_over_n:
                out += [(n, r * n, float(r)) for r in self.m_over_n]
            else:
                out += [(n, k * n**3, float(k * n**3)) for k in self.m_per_n3]
        return out

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "output" in kw and "format" not in kw:
            kw["format"] = "jsonl" if str(kw["output"]).endswith(".jsonl") else "csv"
        return replace(self, **kw)

    def full_scale(self) -> "ExperimentConfig":
        return replace(self, samples=FULL_SAMPLES.get(self.experiment, self.samples))

    def validate(self) -> "ExperimentConfig":
        """Structural checks raise ConfigError, cost/domain guards raise GuardError."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        grids = [g for g in (self.m, self.m_over_n, self.m_per_n3) if g]
        if len(grids) != 1:
            raise ConfigError("give exactly one of m, m_over_n, m_per_n3")
        if not self.n:
            raise ConfigError("n list is empty")
        for name in ("samples", "matrices", "bins", "workers", "block_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if any(v < 1 for v in (*self.n, *self.m, *self.m_over_n, *self.m_per_n3)):
            raise ConfigError("n and m grids must hold positive integers")
        if self.range <= 0:
            raise ConfigError("range must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        for a, b in self.pairs:
            if a not in ENSEMBLES or b not in ENSEMBLES:
                raise ConfigError(f"unknown ensemble pair {a}:{b}")
        for e in self.ensembles:
            if e not in ENSEMBLES:
                raise ConfigError(f"unknown ensemble {e!r}")
        try:
            self._check_guards()
        except DomainError as exc:
            if isinstance(exc, GuardError):
                raise
            raise GuardError(str(exc)) from exc
        return self

    def _check_guards(self):
        exp = self.experiment
        uses_circ = (
            any("circulant" in p for p in self.pairs)
            if exp.startswith("eigen")
            else "circulant" in self.ensembles or exp in ("good-mass", "tv-probe")
        )
        for n, m, _ in self.points():
            if exp.startswith("eigen"):
                if n > MAX_EIG_N:
                    raise GuardError(f"eigenvalue experiments limited to n <= {MAX_EIG_N}")
                if m > MAX_SPECTRA_M:
                    raise GuardError(f"spectra limited to m <= {MAX_SPECTRA_M}")
            if exp in ("avg-permanent", "good-mass") and n > MAX_PERM_N:
                raise GuardError(f"permanent experiments limited to n <= {MAX_PERM_N} (got {n})")
            if exp == "good-mass" and n > MAX_MASS_N:
                raise GuardError(f"good-mass limited to n <= {MAX_MASS_N}")
            if m < n:
                raise GuardError(f"need m >= n, got n={n}, m={m}")
            if uses_circ and exp != "good-fraction" and m < n * n:
                raise GuardError(f"no good outcome exists for n={n}, m={m} < n^2")
            if exp == "good-mass" and good_fraction_exact(n, m) < MIN_ACCEPTANCE:
                raise GuardError(f"rejection acceptance below {MIN_ACCEPTANCE} at n={n}, m={m}")


def _ints(text):
    return tuple(int(v) for v in text.replace(" ", "").split(",") if v)


def _pairs(text):
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        a, sep, b = item.partition(":")
        if not sep:
            raise ConfigError(f"pair {item!r} must look like 'circulant:gaussian'")
        out.append((a.strip(), b.strip()))
    return tuple(out)


_PARSERS = {
    "n": _ints,
    "m": _ints,
    "m_over_n": _ints,
    "m_per_n3": _ints,
    "samples": int,
    "matrices": int,
    "bins": int,
    "range": float,
    "pairs": _pairs,
    "ensembles": lambda t: tuple(v.strip() for v in t.split(",") if v.strip()),
    "master_seed": int,
    "workers": int,
    "block_size": int,
    "output": str,
    "format": str,
    "experiment": str,
}


def parse_config(text: str, base_dir=None) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if cp.sections() != ["experiment"]:
        raise ConfigError("config must contain exactly one [experiment] section")
    raw = dict(cp["experiment"])
    unknown = set(raw) - _KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "experiment" not in raw or "n" not in raw:
        raise ConfigError("config needs at least 'experiment' and 'n'")
    kw = {}
    for key, value in raw.items():
        try:
            if key == "equalize_eigenvalues":
                kw[key] = cp["experiment"].getboolean(key)
            else:
                kw[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
    if base_dir is not None and "output" in kw and not Path(kw["output"]).is_absolute():
        kw["output"] = str(Path(base_dir) / kw["output"])
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
