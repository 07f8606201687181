"""Monte-Carlo harness: scenarios, pilots, noisy observations, NMSE and sweeps."""
from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .channel import PathParams, UpaGeometry, field_boundaries, synthesize_channel
from .dictionary import PolarDictionary, nominal_dictionary, polar_dictionary, upa_dictionary
from .estimators import (
    PcsblHyperParams,
    RecoveryResult,
    bomp_estimate,
    pcsbl_estimate,
    polar_omp_estimate,
)
from .gamp import GampConfig

log = logging.getLogger(__name__)

SNR_CAP_DB = 300.0
NMSE_FLOOR_DB = -300.0
ESTIMATORS = ("2d-pcsbl", "pcsbl", "bomp", "polar-omp")
PILOT_MODES = ("constant_modulus_random_phase", "complex_gaussian")

TRIAL_FIELDS = [
    "trial_id", "estimator", "snr_db", "t_samples", "n_x", "n_y", "seed",
    "nmse_db", "iterations", "converged", "wall_time_s",
]
SUMMARY_FIELDS = [
    "estimator", "snr_db", "t_samples", "mean_nmse_db", "trials",
    "mean_wall_time_s", "relative_runtime",
]
WALL_TIME_FIELDS = ("wall_time_s", "mean_wall_time_s", "relative_runtime")


@dataclass(frozen=True)
class EstimatorSettings:
    """Knobs shared by all estimators of a sweep."""

    block_size: int = 6
    dictionary_mode: str = "genie"  # or "nominal"
    pcsbl: PcsblHyperParams = PcsblHyperParams()
    gamp: GampConfig = GampConfig()
    bomp_blocks_per_path: int = 2
    polar_atoms_per_path: int = 4
    polar_angle_samples: int | None = None  # defaults to max(n_x, n_y)
    polar_distance_samples: int = 4
    # greedy stopping at residual_scale * sqrt(T) * sigma_n
    residual_scale: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    geom: UpaGeometry
    n_paths: int = 3
    nlos_gain_db: float = 13.0
    angle_range: tuple[float, float] = (-math.pi / 3, math.pi / 3)
    distance_range: tuple[float, float] | None = None  # defaults to (F_r, F_R)
    t_samples: int = 128
    snr_db: float = 10.0
    trials: int = 100
    rng_seed: int = 0
    pilot_mode: str = "constant_modulus_random_phase"
    channel_mode: str = "exact"

    def __post_init__(self):
        if self.n_paths < 1 or self.trials < 1 or self.t_samples < 1:
            raise ValueError("n_paths, trials and t_samples must be >= 1")
        if self.pilot_mode not in PILOT_MODES:
            raise ValueError(f"pilot_mode must be one of {PILOT_MODES}")
        if self.distance_range is None:
            fb = field_boundaries(self.geom)
            object.__setattr__(self, "distance_range", (fb.fresnel, fb.rayleigh))
        lo, hi = self.distance_range
        if not 0 < lo <= hi < math.inf:
            raise ValueError(f"invalid distance range {self.distance_range}")


@dataclass
class TrialRecord:
    trial_id: int
    estimator_name: str
    nmse_db: float
    iterations: int
    wall_time_s: float
    converged: bool
    nmse_ratio: float = field(default=float("nan"), repr=False)


def draw_paths(cfg: ScenarioConfig, rng: np.random.Generator) -> list[PathParams]:
    """LoS path (unit gain) followed by ``n_paths - 1`` weaker NLoS paths."""
    lo, hi = cfg.angle_range
    rlo, rhi = cfg.distance_range
    nlos_mag = 10 ** (-cfg.nlos_gain_db / 20)
    paths = []
    for l in range(cfg.n_paths):
        mag = 1.0 if l == 0 else nlos_mag
        gain = mag * np.exp(1j * rng.uniform(0, 2 * np.pi))
        theta, phi = rng.uniform(lo, hi, size=2)
        r = rng.uniform(rlo, rhi)
        paths.append(PathParams(complex(gain), float(r), float(theta), float(phi)))
    return paths


def generate_pilots(
    geom: UpaGeometry,
    t_samples: int,
    mode: str = "constant_modulus_random_phase",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """``T x N`` measurement matrix whose row ``t`` is ``vec(B(t))^T``."""
    rng = np.random.default_rng() if rng is None else rng
    N = geom.n
    if mode == "constant_modulus_random_phase":
        return np.exp(2j * np.pi * rng.random((t_samples, N))) / np.sqrt(N)
    if mode == "complex_gaussian":
        var = 1 / np.sqrt(N)
        return np.sqrt(var / 2) * (
            rng.standard_normal((t_samples, N)) + 1j * rng.standard_normal((t_samples, N))
        )
    raise ValueError(f"unknown pilot mode {mode!r}")


def observe(
    f: np.ndarray, h: np.ndarray, snr_db: float, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """Noisy pilots ``y = F h + n``, noise scaled to hit ``snr_db`` on this realization.

    Returns ``(y, gamma)`` with ``gamma = 1 / sigma_n^2``.
    """
    if f.shape[1] != h.shape[0]:
        raise ValueError("pilot matrix and channel vector sizes differ")
    clean = f @ h
    power = float(np.vdot(clean, clean).real)
    if power == 0.0:
        raise ValueError("zero received signal power: SNR is undefined")
    snr_db = min(snr_db, SNR_CAP_DB)
    T = f.shape[0]
    noise_var = power / (T * 10 ** (snr_db / 10))
    noise = np.sqrt(noise_var / 2) * (rng.standard_normal(T) + 1j * rng.standard_normal(T))
    return clean + noise, 1.0 / noise_var


def nmse_ratio(h_true: np.ndarray, h_est: np.ndarray) -> float:
    h_true = np.asarray(h_true)
    h_est = np.asarray(h_est)
    if h_true.shape != h_est.shape:
        raise ValueError(f"shape mismatch {h_true.shape} vs {h_est.shape}")
    ref = np.linalg.norm(h_true) ** 2
    if ref == 0:
        raise ValueError("true channel is zero; NMSE undefined")
    return float(np.linalg.norm(h_true - h_est) ** 2 / ref)


def to_db(ratio: float) -> float:
    return max(10 * math.log10(ratio), NMSE_FLOOR_DB) if ratio > 0 else NMSE_FLOOR_DB


def nmse_db(h_true: np.ndarray, h_est: np.ndarray) -> float:
    """Single-trial NMSE in dB, floored at -300 dB."""
    return to_db(nmse_ratio(h_true, h_est))


@dataclass
class TrialData:
    paths: list[PathParams]
    H: np.ndarray
    F: np.ndarray
    y: np.ndarray
    gamma: float


def make_trial(cfg: ScenarioConfig, rng: np.random.Generator) -> TrialData:
    """Draw paths, pilots and noise for one trial, in that order."""
    paths = draw_paths(cfg, rng)
    H = synthesize_channel(cfg.geom, paths, cfg.channel_mode)
    F = generate_pilots(cfg.geom, cfg.t_samples, cfg.pilot_mode, rng)
    y, gamma = observe(F, H.ravel(order="F"), cfg.snr_db, rng)
    return TrialData(paths, H, F, y, gamma)


def trial_rng(seed: int, trial_id: int) -> np.random.Generator:
    """Independent stream per trial; the same trial id reuses its stream across sweep points."""
    return np.random.default_rng(np.random.SeedSequence([seed, trial_id]))


def trial_dictionary(cfg: ScenarioConfig, data: TrialData, settings: EstimatorSettings):
    if settings.dictionary_mode == "genie":
        los = data.paths[0]
        return upa_dictionary(cfg.geom, los.zeta_a, los.zeta_e, los.r)
    if settings.dictionary_mode == "nominal":
        return nominal_dictionary(cfg.geom)
    raise ValueError(f"unknown dictionary mode {settings.dictionary_mode!r}")


def build_polar(cfg: ScenarioConfig, settings: EstimatorSettings) -> PolarDictionary:
    S = settings.polar_angle_samples or max(cfg.geom.n_x, cfg.geom.n_y)
    return polar_dictionary(cfg.geom, S, settings.polar_distance_samples)


def run_estimator(
    name: str,
    cfg: ScenarioConfig,
    data: TrialData,
    settings: EstimatorSettings,
    polar: PolarDictionary | None = None,
) -> RecoveryResult:
    """Run one named estimator on a trial; the dictionary product is part of the timed work."""
    geom = cfg.geom
    tol = settings.residual_scale * math.sqrt(cfg.t_samples / data.gamma)
    if name == "polar-omp":
        if polar is None:
            polar = build_polar(cfg, settings)
        return polar_omp_estimate(
            data.y, data.F, polar, geom.n_x, geom.n_y,
            max_atoms=settings.polar_atoms_per_path * cfg.n_paths, residual_tol=tol,
        )
    dico = trial_dictionary(cfg, data, settings)
    phi = dico.measurement_matrix(data.F)
    if name == "bomp":
        return bomp_estimate(
            data.y, phi, dico, settings.block_size,
            max_blocks=settings.bomp_blocks_per_path * cfg.n_paths, residual_tol=tol,
        )
    if name in ("2d-pcsbl", "pcsbl"):
        coupling = "two_dimensional" if name == "2d-pcsbl" else "one_dimensional"
        hp = replace(settings.pcsbl, coupling=coupling)
        return pcsbl_estimate(
            data.y, phi, dico, data.gamma, hp, settings.gamp, block_size=settings.block_size
        )
    raise ValueError(f"unknown estimator {name!r}; choose from {ESTIMATORS}")


def run_trial(
    cfg: ScenarioConfig,
    trial_id: int,
    estimators: Sequence[str],
    settings: EstimatorSettings,
    polar: PolarDictionary | None = None,
) -> list[TrialRecord]:
    data = make_trial(cfg, trial_rng(cfg.rng_seed, trial_id))
    records = []
    for name in estimators:
        t0 = time.perf_counter()
        try:
            res = run_estimator(name, cfg, data, settings, polar)
            elapsed = time.perf_counter() - t0
            ratio = nmse_ratio(data.H, res.H_hat)
            records.append(
                TrialRecord(trial_id, name, to_db(ratio), res.iterations, elapsed, res.converged, ratio)
            )
        except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            elapsed = time.perf_counter() - t0
            log.warning("trial %d, %s failed: %s", trial_id, name, exc)
            # a failed trial scores as the zero estimate
            records.append(TrialRecord(trial_id, name, 0.0, 0, elapsed, False, 1.0))
    return records


@dataclass
class PointSummary:
    estimator: str
    snr_db: float
    t_samples: int
    mean_nmse_db: float
    trials: int
    mean_wall_time_s: float
    relative_runtime: float = float("nan")


@dataclass
class SweepResult:
    trials: list[tuple[ScenarioConfig, TrialRecord]]
    summary: list[PointSummary]
    trial_csv: Path | None = None
    summary_csv: Path | None = None
    charts: list[Path] = field(default_factory=list)

    def curve(self, estimator: str, axis: str = "snr_db") -> tuple[np.ndarray, np.ndarray]:
        rows = sorted(
            (getattr(p, axis), p.mean_nmse_db) for p in self.summary if p.estimator == estimator
        )
        return np.array([r[0] for r in rows]), np.array([r[1] for r in rows])

    def point(self, estimator: str, snr_db: float, t_samples: int) -> PointSummary:
        for p in self.summary:
            if (p.estimator, p.snr_db, p.t_samples) == (estimator, snr_db, t_samples):
                return p
        raise KeyError((estimator, snr_db, t_samples))


def summarize(
    trials: list[tuple[ScenarioConfig, TrialRecord]],
    reference: tuple[str, float, int] | None = None,
) -> list[PointSummary]:
    """Per-point aggregates: NMSE is ``10 log10`` of the mean linear ratio."""
    groups: dict[tuple, list[TrialRecord]] = {}
    for cfg, rec in trials:
        groups.setdefault((rec.estimator_name, cfg.snr_db, cfg.t_samples), []).append(rec)
    out = []
    for (name, snr, T), recs in groups.items():
        ratio = float(np.mean([r.nmse_ratio for r in recs]))
        out.append(
            PointSummary(name, snr, T, to_db(ratio), len(recs),
                         float(np.mean([r.wall_time_s for r in recs])))
        )
    if reference is not None:
        ref = next(
            (p for p in out if (p.estimator, p.snr_db, p.t_samples) == reference), None
        )
        if ref is not None and ref.mean_wall_time_s > 0:
            for p in out:
                p.relative_runtime = p.mean_wall_time_s / ref.mean_wall_time_s
    return out


def run_sweep(
    configs: Sequence[ScenarioConfig],
    estimators: Sequence[str] = ESTIMATORS,
    output_path: str | Path | None = None,
    settings: EstimatorSettings = EstimatorSettings(),
    reference_estimator: str = "polar-omp",
    threads: int = 1,
    chart_axis: str | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> SweepResult:
    """Run every estimator on ``trials`` fresh trials per config.

    ``output_path`` is a file stem: ``<stem>_trials.csv`` and
    ``<stem>_summary.csv`` are written, plus ``<stem>_<axis>.svg`` when
    ``chart_axis`` is ``"snr_db"`` or ``"t_samples"``.  Relative runtime is
    taken against ``reference_estimator`` at the first config.
    """
    if not configs or not estimators:
        raise ValueError("need at least one config and one estimator")
    unknown = set(estimators) - set(ESTIMATORS)
    if unknown:
        raise ValueError(f"unknown estimators {sorted(unknown)}")

    polar_cache: dict[UpaGeometry, PolarDictionary] = {}
    jobs = []
    for cfg in configs:
        polar = None
        if "polar-omp" in estimators:
            if cfg.geom not in polar_cache:
                polar_cache[cfg.geom] = build_polar(cfg, settings)
            polar = polar_cache[cfg.geom]
        jobs.extend((cfg, t, polar) for t in range(cfg.trials))

    def work(job):
        cfg, t, polar = job
        return [(cfg, rec) for rec in run_trial(cfg, t, estimators, settings, polar)]

    trials: list[tuple[ScenarioConfig, TrialRecord]] = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, rows in enumerate(pool.map(work, jobs)):
                trials.extend(rows)
                if progress:
                    progress(i + 1, len(jobs))
    else:
        for i, job in enumerate(jobs):
            trials.extend(work(job))
            if progress:
                progress(i + 1, len(jobs))

    ref = (reference_estimator, configs[0].snr_db, configs[0].t_samples)
    result = SweepResult(trials, summarize(trials, ref))
    if output_path is not None:
        write_results(result, Path(output_path), chart_axis)
    return result


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results(result: SweepResult, stem: Path, chart_axis: str | None = None) -> None:
    stem.parent.mkdir(parents=True, exist_ok=True)
    trial_csv = stem.with_name(stem.name + "_trials.csv")
    summary_csv = stem.with_name(stem.name + "_summary.csv")
    try:
        with open(trial_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRIAL_FIELDS)
            for cfg, r in result.trials:
                w.writerow([_fmt(v) for v in (
                    r.trial_id, r.estimator_name, cfg.snr_db, cfg.t_samples, cfg.geom.n_x,
                    cfg.geom.n_y, cfg.rng_seed, r.nmse_db, r.iterations, r.converged,
                    r.wall_time_s,
                )])
        with open(summary_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SUMMARY_FIELDS)
            for p in result.summary:
                w.writerow([_fmt(v) for v in (
                    p.estimator, p.snr_db, p.t_samples, p.mean_nmse_db, p.trials,
                    p.mean_wall_time_s, p.relative_runtime,
                )])
    except OSError as exc:
        raise OSError(f"failed writing sweep results under {stem.parent}: {exc}") from exc
    result.trial_csv, result.summary_csv = trial_csv, summary_csv
    if chart_axis is not None:
        from .plotting import nmse_chart

        svg = stem.with_name(f"{stem.name}_{chart_axis}.svg")
        nmse_chart(result.summary, chart_axis, svg)
        result.charts.append(svg)


def read_csv_rows(path: str | Path, drop: Sequence[str] = WALL_TIME_FIELDS) -> list[dict]:
    """CSV rows as dicts with timing columns removed (for reproducibility checks)."""
    with open(path, newline="") as fh:
        return [{k: v for k, v in row.items() if k not in drop} for row in csv.DictReader(fh)]
