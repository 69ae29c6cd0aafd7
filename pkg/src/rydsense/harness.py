"""Deterministic parallel Monte Carlo engine for the detection experiments.

Trials are simulated in fixed-size chunks; every chunk derives its random
streams from (master_seed, grid index, chunk index, role), so results are
bit-identical for any worker count and any scheduling order.  Within a
chunk everything is vectorized: channels, signals, shot matrices, and all
four detector statistics are computed as batched array operations.

Per grid point the engine evaluates:
  * empirical CFAR detection for the two LRTs (thresholds calibrated on a
    held-out split of the H0 statistics by default),
  * exact-CFAR detection for the quantum and RF energy detectors, plus the
    closed-form detection probability averaged over the per-trial
    noncentralities as a cross-check,
  * Bayesian total error P_e = (P_FA + P_MD) / 2 (MAP thresholds for the
    LRTs; best-case empirical threshold for the energy detectors).
"""

from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import detectors as det
from . import scene as scn
from .config import SystemConfig
from .detectors import DetectorKind
from .specfn import RngStream

__all__ = [
    "ExperimentSpec",
    "TrialRecord",
    "TrialRecords",
    "SweepRow",
    "SweepResult",
    "run_trials",
    "empirical_threshold",
    "empirical_roc",
    "roc_auc",
    "bayes_error",
    "sweep",
]

CHUNK_TRIALS = 4096

SWEEP_VARIABLES = ("none", "shots", "rnr_db", "rf_shots", "rf_noise_penalty_db")
_INT_SWEEPS = {"shots", "rf_shots"}

# Stream roles; combined with grid/chunk indices into a Philox stream index.
_ROLE_CHANNEL = 0
_ROLE_SIGNAL = 1
_ROLE_SHOTS_H0 = 2
_ROLE_SHOTS_H1 = 3
_ROLE_RF_CHANNEL = 4
_ROLE_RF_H0 = 5
_ROLE_RF_H1 = 6


@dataclass
class ExperimentSpec:
    base: SystemConfig
    sweep_variable: str = "none"
    grid: tuple = (0.0,)
    trials: int = 100_000
    p_fa_target: float = 0.1
    held_out: bool = True
    common_random_numbers: bool = False

    def __post_init__(self) -> None:
        self.base.validate()
        if self.sweep_variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep_variable: {self.sweep_variable}")
        self.grid = tuple(self.grid)
        if len(self.grid) == 0:
            raise ValueError("grid must be nonempty")
        if len(self.grid) > 1 and not (
            all(a < b for a, b in zip(self.grid, self.grid[1:]))
            or all(a > b for a, b in zip(self.grid, self.grid[1:]))
        ):
            raise ValueError("grid must be strictly monotone")
        if self.trials < 100:
            raise ValueError("trials must be >= 100")
        if not 0.0 < self.p_fa_target < 1.0:
            raise ValueError("p_fa_target must lie in (0, 1)")

    def config_at(self, grid_point) -> SystemConfig:
        if self.sweep_variable == "none":
            return dataclasses.replace(self.base)
        value = grid_point
        if self.sweep_variable in _INT_SWEEPS:
            value = int(round(value))
        cfg = dataclasses.replace(self.base, **{self.sweep_variable: value})
        cfg.validate()
        return cfg


@dataclass
class TrialRecord:
    """Per-trial detector statistics under both hypotheses."""

    trial_index: int
    ga_h0: float
    ga_h1: float
    ga_map_threshold: float
    pa_h0: float
    pa_h1: float
    pa_map_threshold: float
    ed_h0: float
    ed_h1: float
    ed_lambda1: float
    rf_h0: float
    rf_h1: float
    rf_lambda: float


@dataclass
class TrialRecords:
    """Column-oriented container of TrialRecord values for one grid point."""

    cfg: SystemConfig
    p_fa_target: float
    ga_h0: np.ndarray
    ga_h1: np.ndarray
    ga_map: np.ndarray
    pa_h0: np.ndarray
    pa_h1: np.ndarray
    pa_map: np.ndarray
    ed_h0: np.ndarray
    ed_h1: np.ndarray
    ed_lambda1: np.ndarray
    rf_h0: np.ndarray
    rf_h1: np.ndarray
    rf_lambda: np.ndarray
    ed_lambda0: float
    ed_threshold: float
    rf_threshold: float
    dof_pairs: int
    rf_dof_pairs: int

    def __len__(self) -> int:
        return len(self.ga_h0)

    def __getitem__(self, i: int) -> TrialRecord:
        return TrialRecord(
            i, self.ga_h0[i], self.ga_h1[i], self.ga_map[i],
            self.pa_h0[i], self.pa_h1[i], self.pa_map[i],
            self.ed_h0[i], self.ed_h1[i], self.ed_lambda1[i],
            self.rf_h0[i], self.rf_h1[i], self.rf_lambda[i],
        )

    def stats(self, kind: DetectorKind) -> tuple[np.ndarray, np.ndarray]:
        return {
            DetectorKind.GenieLRT: (self.ga_h0, self.ga_h1),
            DetectorKind.PhaseAvgLRT: (self.pa_h0, self.pa_h1),
            DetectorKind.QuantumED: (self.ed_h0, self.ed_h1),
            DetectorKind.ClassicalRfED: (self.rf_h0, self.rf_h1),
        }[kind]

    def pooled(self, kind: DetectorKind) -> tuple[np.ndarray, np.ndarray]:
        """Statistics comparable across trials under one global threshold.

        For the LRT kinds the raw statistic is only tested against its own
        per-trial MAP threshold; pooling across random scenes needs the full
        log-likelihood ratio, i.e. the statistic re-centered by that
        threshold.  The energy statistics pool as-is.
        """
        h0, h1 = self.stats(kind)
        if kind is DetectorKind.GenieLRT:
            return h0 - self.ga_map, h1 - self.ga_map
        if kind is DetectorKind.PhaseAvgLRT:
            return h0 - self.pa_map, h1 - self.pa_map
        return h0, h1


@dataclass
class SweepRow:
    grid_value: float
    detector: str
    metric: str
    estimate: float
    std_error: float
    n_trials: int


@dataclass
class SweepResult:
    sweep_variable: str
    rows: list[SweepRow] = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["grid_value", "detector", "metric", "estimate", "std_error", "n_trials"]
            )
            for r in self.rows:
                writer.writerow(
                    [repr(r.grid_value), r.detector, r.metric,
                     repr(r.estimate), repr(r.std_error), r.n_trials]
                )

    def lookup(self, grid_value, detector: str, metric: str) -> SweepRow:
        for r in self.rows:
            if (
                math.isclose(r.grid_value, grid_value)
                and r.detector == detector
                and r.metric == metric
            ):
                return r
        raise KeyError((grid_value, detector, metric))


def _stream(cfg: SystemConfig, grid_index: int, chunk_index: int, role: int) -> RngStream:
    index = (grid_index << 44) | (chunk_index << 4) | role
    return RngStream(cfg.master_seed, index)


def _simulate_chunk(
    cfg: SystemConfig,
    grid_index: int,
    chunk_index: int,
    n: int,
    crn: bool,
) -> dict:
    """Simulate n trials; returns column arrays for this chunk."""
    s2 = cfg.noise_var
    k = cfg.shots
    reference = scn.make_reference(cfg).values
    ref_mag = np.abs(reference)

    h = scn.draw_channel_batch(_stream(cfg, grid_index, chunk_index, _ROLE_CHANNEL), cfg, n)
    x = scn.draw_signal_batch(_stream(cfg, grid_index, chunk_index, _ROLE_SIGNAL), cfg, n)
    alpha = np.einsum("tmj,tj->tm", h, x) + reference
    alpha_mag = np.abs(alpha)
    sigma_v2 = (cfg.total_power / cfg.n_tx) * np.sum(np.abs(h) ** 2, axis=2)
    alpha_bar = scn.phase_averaged_means(np.broadcast_to(ref_mag, sigma_v2.shape), sigma_v2)

    if crn:
        # optional variance-reduction mode: both hypotheses share noise draws
        gen = _stream(cfg, grid_index, chunk_index, _ROLE_SHOTS_H0).generator
        noise = math.sqrt(s2 / 2.0) * (
            gen.standard_normal((n, cfg.n_rx, k))
            + 1j * gen.standard_normal((n, cfg.n_rx, k))
        )
        shots_h0 = np.abs(reference[None, :, None] + noise)
        shots_h1 = np.abs(alpha[:, :, None] + noise)
    else:
        means_h0 = np.broadcast_to(reference, (n, cfg.n_rx))
        stream_h0 = _stream(cfg, grid_index, chunk_index, _ROLE_SHOTS_H0)
        shots_h0 = scn.generate_shots_batch(stream_h0, means_h0, s2, k)
        stream_h1 = _stream(cfg, grid_index, chunk_index, _ROLE_SHOTS_H1)
        shots_h1 = scn.generate_shots_batch(stream_h1, alpha, s2, k)

    ga_h0 = det.ga_statistic(shots_h0, alpha_mag, ref_mag, s2)
    ga_h1 = det.ga_statistic(shots_h1, alpha_mag, ref_mag, s2)
    ga_map = det.ga_map_threshold(cfg, alpha_mag, ref_mag)
    pa_h0 = det.pa_statistic(shots_h0, alpha_bar, ref_mag, s2)
    pa_h1 = det.pa_statistic(shots_h1, alpha_bar, ref_mag, s2)
    pa_map = det.pa_map_threshold(cfg, alpha_bar, ref_mag)
    ed_h0 = det.ed_statistic(shots_h0)
    ed_h1 = det.ed_statistic(shots_h1)
    ed_lambda1 = det.ed_noncentrality(alpha, k, s2)

    # classical RF baseline: own channel, coherent complex samples
    sn2 = cfg.rf_noise_var
    k_rf = cfg.rf_shots
    g = scn.draw_channel_batch(_stream(cfg, grid_index, chunk_index, _ROLE_RF_CHANNEL), cfg, n)
    mu = np.einsum("tmj,tj->tm", g, x)
    scale = math.sqrt(sn2 / 2.0)

    gen0 = _stream(cfg, grid_index, chunk_index, _ROLE_RF_H0).generator
    noise0 = scale * (
        gen0.standard_normal((n, cfg.n_rx, k_rf))
        + 1j * gen0.standard_normal((n, cfg.n_rx, k_rf))
    )
    if crn:
        noise1 = noise0
    else:
        gen1 = _stream(cfg, grid_index, chunk_index, _ROLE_RF_H1).generator
        noise1 = scale * (
            gen1.standard_normal((n, cfg.n_rx, k_rf))
            + 1j * gen1.standard_normal((n, cfg.n_rx, k_rf))
        )
    rf_h0 = det.rf_ed_statistic(noise0)
    rf_h1 = det.rf_ed_statistic(mu[:, :, None] + noise1)
    rf_lambda = det.rf_noncentrality(g, x, k_rf, sn2)

    return {
        "ga_h0": ga_h0, "ga_h1": ga_h1, "ga_map": ga_map,
        "pa_h0": pa_h0, "pa_h1": pa_h1, "pa_map": pa_map,
        "ed_h0": ed_h0, "ed_h1": ed_h1, "ed_lambda1": ed_lambda1,
        "rf_h0": rf_h0, "rf_h1": rf_h1, "rf_lambda": rf_lambda,
    }


def run_trials(spec: ExperimentSpec, grid_point, *, workers: int = 1) -> TrialRecords:
    """Simulate spec.trials independent trials at one grid point.

    Fully deterministic given the master seed; independent of worker count.
    """
    grid_index = (
        0 if spec.sweep_variable == "none" else list(spec.grid).index(grid_point)
    )
    cfg = spec.config_at(grid_point)
    n_chunks = (spec.trials + CHUNK_TRIALS - 1) // CHUNK_TRIALS
    sizes = [
        min(CHUNK_TRIALS, spec.trials - i * CHUNK_TRIALS) for i in range(n_chunks)
    ]
    args = [
        (cfg, grid_index, i, sizes[i], spec.common_random_numbers)
        for i in range(n_chunks)
    ]
    if workers > 1 and n_chunks > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_simulate_chunk_star, args))
    else:
        chunks = [_simulate_chunk(*a) for a in args]

    cols = {key: np.concatenate([c[key] for c in chunks]) for key in chunks[0]}

    dof = cfg.n_rx * cfg.shots
    lambda0 = 2.0 * cfg.shots * cfg.n_rx * cfg.reference_power / cfg.noise_var
    ed_thr = det.ed_cfar_threshold(spec.p_fa_target, dof, lambda0, cfg.noise_var)
    rf_dof = cfg.n_rx * cfg.rf_shots
    rf_thr = det.rf_cfar_threshold(spec.p_fa_target, rf_dof, cfg.rf_noise_var)

    return TrialRecords(
        cfg=cfg,
        p_fa_target=spec.p_fa_target,
        ed_lambda0=lambda0,
        ed_threshold=ed_thr,
        rf_threshold=rf_thr,
        dof_pairs=dof,
        rf_dof_pairs=rf_dof,
        **cols,
    )


def _simulate_chunk_star(args):
    return _simulate_chunk(*args)


def empirical_threshold(statistics_h0, p_fa: float) -> float:
    """(1 - p_fa)-quantile of pooled H0 statistics (k = ceil((1-p_fa) n))."""
    stats = np.asarray(statistics_h0, dtype=float)
    if stats.size < 100:
        raise ValueError("need at least 100 H0 statistics to calibrate")
    if not 0.0 < p_fa < 1.0:
        raise ValueError("p_fa must lie in (0, 1)")
    k = int(math.ceil((1.0 - p_fa) * stats.size))
    return float(np.sort(stats)[k - 1])


def empirical_roc(records: TrialRecords, detector: DetectorKind, max_points: int = 512):
    """Step-curve ROC points (P_FA, P_D) from pooled H0/H1 statistics."""
    h0, h1 = records.pooled(detector)
    if len(h0) < 1000:
        raise ValueError("need at least 1000 trials for a ROC curve")
    h0s = np.sort(h0)
    h1s = np.sort(h1)
    thresholds = np.unique(np.concatenate([h0s, h1s]))[::-1]
    pfa = 1.0 - np.searchsorted(h0s, thresholds, side="right") / h0s.size
    pd = 1.0 - np.searchsorted(h1s, thresholds, side="right") / h1s.size
    pfa = np.concatenate([[0.0], pfa, [1.0]])
    pd = np.concatenate([[0.0], pd, [1.0]])
    if max_points and pfa.size > max_points:
        idx = np.unique(np.linspace(0, pfa.size - 1, max_points).astype(int))
        pfa, pd = pfa[idx], pd[idx]
    return list(zip(pfa.tolist(), pd.tolist()))


def roc_auc(points) -> float:
    pfa = np.array([p for p, _ in points])
    pd = np.array([d for _, d in points])
    return float(np.trapezoid(pd, pfa))


def _binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def _min_pe_threshold(h0: np.ndarray, h1: np.ndarray) -> float:
    """Threshold minimizing empirical (P_FA + P_MD) / 2 over the pooled stats.

    In-sample by construction: gives the energy detectors their best case,
    which makes the LRT advantage conservative.
    """
    h0s = np.sort(h0)
    h1s = np.sort(h1)
    candidates = np.unique(np.concatenate([h0s, h1s]))
    pfa = 1.0 - np.searchsorted(h0s, candidates, side="right") / h0s.size
    pmd = np.searchsorted(h1s, candidates, side="right") / h1s.size
    pe = 0.5 * (pfa + pmd)
    return float(candidates[int(np.argmin(pe))])


def bayes_error(records: TrialRecords, detector: DetectorKind) -> tuple[float, float]:
    """Bayesian total error (estimate, standard error) for one detector.

    LRT detectors decide with their per-trial MAP thresholds; the energy
    detectors use the empirical minimum-P_e threshold.
    """
    h0, h1 = records.stats(detector)
    n = len(h0)
    if detector is DetectorKind.GenieLRT:
        thr = records.ga_map
    elif detector is DetectorKind.PhaseAvgLRT:
        thr = records.pa_map
    else:
        thr = _min_pe_threshold(h0, h1)
    pfa = float(np.mean(h0 > thr))
    pmd = float(np.mean(h1 <= thr))
    pe = 0.5 * (pfa + pmd)
    se = 0.5 * math.sqrt(
        (pfa * (1.0 - pfa) + pmd * (1.0 - pmd)) / n
    )
    return pe, se


def _split(arr: np.ndarray, held_out: bool) -> tuple[np.ndarray, np.ndarray]:
    if not held_out:
        return arr, arr
    half = arr.size // 2
    return arr[:half], arr[half:]


def _grid_point_rows(
    spec: ExperimentSpec, grid_value, records: TrialRecords
) -> list[SweepRow]:
    rows: list[SweepRow] = []
    p_fa = spec.p_fa_target

    def add(detector: DetectorKind, metric: str, estimate: float, se: float, n: int):
        rows.append(SweepRow(float(grid_value), detector.value, metric, estimate, se, n))

    for kind in (DetectorKind.GenieLRT, DetectorKind.PhaseAvgLRT):
        h0, h1 = records.pooled(kind)
        cal_h0, eval_h0 = _split(h0, spec.held_out)
        _, eval_h1 = _split(h1, spec.held_out)
        thr = empirical_threshold(cal_h0, p_fa)
        pd = float(np.mean(eval_h1 > thr))
        pfa_hat = float(np.mean(eval_h0 > thr))
        add(kind, "pd", pd, _binomial_se(pd, eval_h1.size), eval_h1.size)
        add(kind, "pfa", pfa_hat, _binomial_se(pfa_hat, eval_h0.size), eval_h0.size)
        pe, pe_se = bayes_error(records, kind)
        add(kind, "pe", pe, pe_se, len(records))

    # quantum ED: analytic CFAR threshold, exact under the chi-square model
    n = len(records)
    pd = float(np.mean(records.ed_h1 > records.ed_threshold))
    pfa_hat = float(np.mean(records.ed_h0 > records.ed_threshold))
    add(DetectorKind.QuantumED, "pd", pd, _binomial_se(pd, n), n)
    add(DetectorKind.QuantumED, "pfa", pfa_hat, _binomial_se(pfa_hat, n), n)
    pd_analytic = det.ed_pd_closed_form_batch(
        p_fa, records.dof_pairs, records.ed_lambda0, records.ed_lambda1
    )
    add(
        DetectorKind.QuantumED, "pd_analytic", float(np.mean(pd_analytic)),
        float(np.std(pd_analytic) / math.sqrt(n)), n,
    )
    pe, pe_se = bayes_error(records, DetectorKind.QuantumED)
    add(DetectorKind.QuantumED, "pe", pe, pe_se, n)

    # classical RF ED baseline
    pd = float(np.mean(records.rf_h1 > records.rf_threshold))
    pfa_hat = float(np.mean(records.rf_h0 > records.rf_threshold))
    add(DetectorKind.ClassicalRfED, "pd", pd, _binomial_se(pd, n), n)
    add(DetectorKind.ClassicalRfED, "pfa", pfa_hat, _binomial_se(pfa_hat, n), n)
    pd_analytic = det.rf_pd_closed_form_batch(
        p_fa, records.rf_dof_pairs, records.rf_lambda
    )
    add(
        DetectorKind.ClassicalRfED, "pd_analytic", float(np.mean(pd_analytic)),
        float(np.std(pd_analytic) / math.sqrt(n)), n,
    )
    pe, pe_se = bayes_error(records, DetectorKind.ClassicalRfED)
    add(DetectorKind.ClassicalRfED, "pe", pe, pe_se, n)
    return rows


def sweep(spec: ExperimentSpec, *, workers: int = 1) -> SweepResult:
    """Run the full experiment over the grid and collect all metrics."""
    result = SweepResult(sweep_variable=spec.sweep_variable)
    for grid_value in spec.grid:
        records = run_trials(spec, grid_value, workers=workers)
        result.rows.extend(_grid_point_rows(spec, grid_value, records))
    return result
