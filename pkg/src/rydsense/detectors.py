"""Decision statistics and thresholds for the four detectors.

Two likelihood-ratio tests on the magnitude shots (genie-aided and
phase-averaged, differing only in which noncentrality they plug into the
log-Bessel kernel), the non-coherent quantum energy detector with exact
noncentral chi-square CFAR thresholds, and the classical RF energy-detector
baseline operating on coherent complex samples.

All statistic functions accept either the scene dataclasses or bare arrays,
and broadcast over leading batch dimensions: shots of shape (..., n_rx, K)
with per-cell parameters of shape (..., n_rx) produce statistics of shape
(...).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .config import SystemConfig
from .specfn import inverse_marcum_q_b, log_bessel_i0, marcum_q, marcum_q_batch

__all__ = [
    "DetectorKind",
    "EdNoncentrality",
    "ga_statistic",
    "ga_map_threshold",
    "pa_statistic",
    "pa_map_threshold",
    "ed_statistic",
    "ed_noncentrality",
    "ed_cfar_threshold",
    "ed_pd_closed_form",
    "ed_pd_closed_form_batch",
    "rf_ed_statistic",
    "rf_cfar_threshold",
    "rf_noncentrality",
    "rf_pd_closed_form",
    "rf_pd_closed_form_batch",
]


class DetectorKind(enum.Enum):
    GenieLRT = "genie_lrt"
    PhaseAvgLRT = "phase_avg_lrt"
    QuantumED = "quantum_ed"
    ClassicalRfED = "rf_ed"


@dataclass
class EdNoncentrality:
    """Noncentrality pair (Lambda_0, Lambda_1) and L = n_rx * shots."""

    lambda0: float
    lambda1: float
    dof_pairs: int

    def __post_init__(self) -> None:
        if self.lambda0 < 0.0 or self.lambda1 < 0.0:
            raise ValueError("noncentralities must be nonnegative")
        if self.dof_pairs < 1:
            raise ValueError("dof_pairs must be >= 1")


def _values(x) -> np.ndarray:
    return np.asarray(getattr(x, "values", x))


def _lrt_sum(shots: np.ndarray, nu1: np.ndarray, nu0: np.ndarray, sigma2: float):
    """sum over (m, k) of ln I0(2 y nu1 / s2) - ln I0(2 y nu0 / s2)."""
    y = np.asarray(shots, dtype=float)
    if y.ndim < 2:
        raise ValueError("shots must have shape (..., n_rx, K)")
    nu1 = np.asarray(nu1, dtype=float)[..., :, None]
    nu0 = np.asarray(nu0, dtype=float)[..., :, None]
    if nu1.shape[-2] != y.shape[-2] or nu0.shape[-2] != y.shape[-2]:
        raise ValueError("per-cell parameters do not match shot matrix")
    scale = 2.0 / sigma2
    kernel = log_bessel_i0(scale * y * nu1) - log_bessel_i0(scale * y * nu0)
    out = np.sum(kernel, axis=(-2, -1))
    return float(out) if out.ndim == 0 else out


def ga_statistic(shots, alpha, reference, sigma2: float):
    """Genie-aided log-likelihood-ratio statistic (data-dependent part)."""
    if not sigma2 > 0.0:
        raise ValueError("sigma2 must be positive")
    return _lrt_sum(
        _values(shots), np.abs(_values(alpha)), np.abs(_values(reference)), sigma2
    )


def ga_map_threshold(cfg: SystemConfig, alpha, reference):
    """tau* = ln(eta) - (K / sigma2) * sum_m (|r_m|^2 - |alpha_m|^2)."""
    a2 = np.abs(_values(alpha)) ** 2
    r2 = np.abs(_values(reference)) ** 2
    out = math.log(cfg.prior_eta) - (cfg.shots / cfg.noise_var) * np.sum(r2 - a2, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def pa_statistic(shots, alpha_bar, reference, sigma2: float):
    """Phase-averaged LRT statistic: the genie kernel with alpha_bar_m."""
    if not sigma2 > 0.0:
        raise ValueError("sigma2 must be positive")
    return _lrt_sum(
        _values(shots), np.asarray(_values(alpha_bar), dtype=float),
        np.abs(_values(reference)), sigma2,
    )


def pa_map_threshold(cfg: SystemConfig, alpha_bar, reference):
    """tau* = ln(eta) - (K / sigma2) * sum_m (|r_m|^2 - alpha_bar_m^2)."""
    ab2 = np.asarray(_values(alpha_bar), dtype=float) ** 2
    r2 = np.abs(_values(reference)) ** 2
    out = math.log(cfg.prior_eta) - (cfg.shots / cfg.noise_var) * np.sum(r2 - ab2, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def ed_statistic(shots):
    """Accumulated optical energy: sum over (m, k) of y^2."""
    y = _values(shots).astype(float)
    out = np.sum(y * y, axis=(-2, -1))
    return float(out) if np.ndim(out) == 0 else out


def ed_noncentrality(means, shots: int, sigma2: float):
    """Lambda = (2 K / sigma2) * sum_m |nu_m|^2."""
    if not sigma2 > 0.0:
        raise ValueError("sigma2 must be positive")
    nu2 = np.abs(_values(means)) ** 2
    out = (2.0 * shots / sigma2) * np.sum(nu2, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def ed_cfar_threshold(p_fa: float, dof_pairs: int, lambda0: float, sigma2: float) -> float:
    """tau = (sigma2 / 2) * [Q_L^{-1}(p_fa; sqrt(Lambda0))]^2."""
    b = inverse_marcum_q_b(dof_pairs, math.sqrt(lambda0), p_fa)
    return 0.5 * sigma2 * b * b


def ed_pd_closed_form(p_fa: float, dof_pairs: int, lambda0: float, lambda1: float) -> float:
    """P_D(P_FA) = Q_L(sqrt(Lambda1), Q_L^{-1}(p_fa; sqrt(Lambda0)))."""
    b = inverse_marcum_q_b(dof_pairs, math.sqrt(lambda0), p_fa)
    return marcum_q(dof_pairs, math.sqrt(lambda1), b)


def ed_pd_closed_form_batch(p_fa: float, dof_pairs: int, lambda0: float, lambda1) -> np.ndarray:
    """Vectorized closed-form P_D over an array of Lambda1 values."""
    b = inverse_marcum_q_b(dof_pairs, math.sqrt(lambda0), p_fa)
    return marcum_q_batch(dof_pairs, np.sqrt(np.asarray(lambda1, dtype=float)), b)


def rf_ed_statistic(samples):
    """RF energy: sum over (m, k) of |y|^2 on complex baseband samples."""
    y = _values(samples)
    out = np.sum(np.abs(y) ** 2, axis=(-2, -1))
    return float(out) if np.ndim(out) == 0 else out


def rf_cfar_threshold(p_fa: float, dof_pairs: int, noise_var: float) -> float:
    """Central-case CFAR threshold: (sigma_n^2 / 2) * [Q_L^{-1}(p_fa; 0)]^2."""
    if not (0.0 < p_fa < 1.0):
        raise ValueError("p_fa must lie strictly inside (0, 1)")
    return float(noise_var * special.gammainccinv(dof_pairs, p_fa))


def rf_noncentrality(rf_channel, signal, rf_shots: int, noise_var: float):
    """Lambda_RF = (2 K_RF / sigma_n^2) * sum_m |g_m^T x|^2."""
    g = np.asarray(getattr(rf_channel, "gains", rf_channel))
    x = np.asarray(getattr(signal, "symbols", signal))
    if g.shape[-1] != x.shape[-1]:
        raise ValueError("rf_channel and signal dimensions do not match")
    mu = np.einsum("...mt,...t->...m", g, x)
    out = (2.0 * rf_shots / noise_var) * np.sum(np.abs(mu) ** 2, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def rf_pd_closed_form(p_fa: float, dof_pairs: int, lambda_rf: float) -> float:
    """P_D = Q_L(sqrt(Lambda_RF), Q_L^{-1}(p_fa; 0))."""
    b = inverse_marcum_q_b(dof_pairs, 0.0, p_fa)
    return marcum_q(dof_pairs, math.sqrt(lambda_rf), b)


def rf_pd_closed_form_batch(p_fa: float, dof_pairs: int, lambda_rf) -> np.ndarray:
    b = inverse_marcum_q_b(dof_pairs, 0.0, p_fa)
    return marcum_q_batch(dof_pairs, np.sqrt(np.asarray(lambda_rf, dtype=float)), b)
