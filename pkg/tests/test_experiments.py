from pathlib import Path

import pytest

import circbs.experiments as ex
from circbs.config import ExperimentConfig, load_config
from circbs.errors import GuardError
from circbs.permanent import expected_gaussian_permanent_sq
from circbs.records import read_records

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def small(experiment, tmp_path=None, **kw):
    grid = {
        "eigen-fidelity": {"m": (9, 16)},
        "eigen-scaling": {"m_over_n": (4, 8)},
        "avg-permanent": {"m": (9, 27)},
        "good-fraction": {"m_per_n3": (10, 20)},
        "good-mass": {"m": (16, 32)},
        "tv-probe": {"m": (16,)},
    }[experiment]
    base = dict(experiment=experiment, n=(2, 3), samples=1500, matrices=3, block_size=400, **grid)
    if experiment == "good-mass":
        base["n"] = (2,)
    if tmp_path is not None:
        base["output"] = str(tmp_path / f"{experiment}.csv")
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.mark.parametrize("experiment", sorted(ex._RUNNERS))
def test_worker_count_does_not_change_numbers(experiment):
    one = ex.run_experiment(small(experiment, workers=1))
    many = ex.run_experiment(small(experiment, workers=3))
    assert one == many and len(one) > 0


def test_eigen_fidelity_records():
    recs = ex.run_eigen_fidelity([3], [9, 16], 600, master_seed=1)
    assert [(r.m, r.label) for r in recs] == [
        (m, p) for m in (9, 16) for p in ("circulant|gaussian", "haar|gaussian", "haar|circulant")
    ]
    assert all(0 <= r.value <= 1 and r.error > 0 and r.samples == 600 for r in recs)


def test_eigen_scaling_equalizes_eigenvalue_budget():
    recs = ex.run_eigen_scaling([3, 5], [8], 500, master_seed=1)
    assert [(r.n, r.m, r.x, r.samples) for r in recs] == [(3, 24, 8.0, 500), (5, 40, 8.0, 300)]
    raw = ex.run_eigen_scaling([3, 5], [8], 500, master_seed=1, equalize_eigenvalues=False)
    assert [r.samples for r in raw] == [500, 500]


def test_avg_permanent_records():
    recs = ex.run_avg_permanent([2], [9], 2000, master_seed=3)
    by = {(r.label, r.statistic): r for r in recs}
    ref = expected_gaussian_permanent_sq(2, 9)
    assert by[("gaussian-reference", "reference_perm_sq")].value == ref
    for ens in ("haar", "circulant", "gaussian"):
        mean = by[(ens, "mean_perm_sq")]
        dist = by[(ens, "relative_distance")]
        assert dist.value == pytest.approx(abs(mean.value - ref) / ref)
        assert dist.error == pytest.approx(mean.error / ref)
        assert by[(ens, "std_perm_sq")].value > mean.error
    assert by[("gaussian", "relative_distance")].value <= 4 * by[("gaussian", "relative_distance")].error


def test_good_fraction_records():
    recs = ex.run_good_fraction([2], [10], 20_000, master_seed=3)
    by = {r.statistic: r for r in recs}
    # m = 80: (80/78) C(78, 2) = 3080 good outcomes out of C(81, 2) = 3240
    assert by["exact_fraction"].value == pytest.approx(3080 / 3240, rel=1e-14)
    assert abs(by["good_fraction"].value - by["exact_fraction"].value) <= 4 * by["good_fraction"].error
    assert by["formula_fraction"].value == pytest.approx(by["exact_fraction"].value, rel=1e-12)
    assert by["laurent_fraction"].value == pytest.approx(1 - 12 / 80)


def test_good_mass_records():
    recs = ex.run_good_mass([2], [16], 2000, matrices=4, master_seed=3)
    by = {r.statistic: r for r in recs}
    assert by["good_mass"].value + by["bad_mass"].value == pytest.approx(1.0)
    assert by["good_mass"].samples == 8000
    assert 0 < by["good_mass"].value < 1


def test_tv_probe_records():
    recs = ex.run_tv_probe([2], [16], 3000, master_seed=3)
    stats = {(r.label, r.statistic) for r in recs}
    for ens in ("circulant", "gaussian"):
        for s in ("max_tv", "mean_tv", "tv_noise_floor", "max_corr", "max_sq_corr"):
            assert (ens, s) in stats


def test_campaign_writes_file_and_meta(tmp_path):
    lines = []
    cfg = small("good-fraction", tmp_path)
    recs = ex.run_campaign(cfg, echo=lines.append)
    rows = read_records(cfg.output)
    assert len(rows) == len(recs) == 16
    assert len(lines) == len(cfg.points())
    meta = Path(cfg.output + ".meta.json").read_text()
    assert '"wall_time_s"' in meta and '"workers": 1' in meta


def test_campaign_rerun_byte_identical(tmp_path):
    cfg = small("avg-permanent", tmp_path)
    ex.run_campaign(cfg, echo=lambda _: None)
    first = Path(cfg.output).read_bytes()
    ex.run_campaign(cfg.with_overrides(workers=4), echo=lambda _: None)
    assert Path(cfg.output).read_bytes() == first


def test_guard_rejected_before_any_work(tmp_path, monkeypatch):
    called = []
    monkeypatch.setitem(ex._RUNNERS, "avg-permanent", lambda *a: called.append(1) or [])
    cfg = small("avg-permanent", tmp_path, n=(9,), m=(100,))
    with pytest.raises(GuardError):
        ex.run_campaign(cfg, echo=lambda _: None)
    assert not called and not Path(cfg.output).exists()


def test_failed_run_leaves_no_output(tmp_path, monkeypatch):
    def broken(*a):
        raise RuntimeError("worker died")

    monkeypatch.setattr(ex, "_good_fraction", broken)
    monkeypatch.setitem(ex._RUNNERS, "good-fraction", broken)
    cfg = small("good-fraction", tmp_path)
    with pytest.raises(RuntimeError):
        ex.run_campaign(cfg, echo=lambda _: None)
    assert list(tmp_path.iterdir()) == []


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.ini")), ids=lambda p: p.name)
def test_shipped_configs_validate(path):
    cfg = load_config(path)
    cfg.validate()
    assert cfg.full_scale().validate()


def test_shipped_eigen_fidelity_config_smoke(tmp_path):
    cfg = load_config(CONFIGS / "eigen_fidelity.ini").with_overrides(
        samples=300, output=str(tmp_path / "f.csv")
    )
    ex.run_campaign(cfg, echo=lambda _: None)
    rows = read_records(tmp_path / "f.csv")
    assert len(rows) == len(cfg.pairs) * len(cfg.m)


def test_gaussian_control_and_haar_oracle():
    # Gaussian control sits at its own reference; Haar collision-free
    # truncations have E|perm|^2 = 1/C(m+n-1, n) exactly
    from math import comb

    recs = ex.run_avg_permanent([3], [9, 27, 81, 243], 10_000, master_seed=2021)
    by = {(r.m, r.label, r.statistic): r for r in recs}
    for m in (9, 27, 81, 243):
        g = by[(m, "gaussian", "relative_distance")]
        assert g.value <= 3 * g.error
        h = by[(m, "haar", "mean_perm_sq")]
        assert abs(h.value - 1 / comb(m + 2, 3)) <= 4 * h.error


def test_doubling_samples_moves_fidelity_up():
    low = ex.run_eigen_scaling([3], [8], 1000, master_seed=11)[0].value
    high = ex.run_eigen_scaling([3], [8], 2000, master_seed=11)[0].value
    more = ex.run_eigen_scaling([3], [8], 4000, master_seed=11)[0].value
    assert low < high < more
