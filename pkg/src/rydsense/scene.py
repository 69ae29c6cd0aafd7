"""One realization of the RF-quantum scenario and its multi-shot readouts.

A scene is the quasistatic tuple (channel H, transmit vector x, reference r)
together with the per-cell derived quantities the detectors need: the exact
complex means alpha_m = h_m^T x + r_m, the phasor-sum variances sigma_v,m^2,
and the phase-averaged means alpha_bar_m.  Shot matrices are magnitude-only
Rician draws around those means; all randomness flows through RngStream so
generation is reproducible and order-independent.

Batched variants (trailing ``_batch``) generate many independent trials in
one vectorized call; they draw from the same stream types and match the
single-draw functions distribution-for-distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .specfn import RngStream, rician_mean

__all__ = [
    "Channel",
    "TransmitSignal",
    "ReferenceField",
    "Scene",
    "ShotMatrix",
    "draw_channel",
    "draw_channel_batch",
    "draw_signal",
    "draw_signal_batch",
    "make_reference",
    "build_scene",
    "phase_averaged_means",
    "generate_shots",
    "generate_shots_batch",
    "max_shots",
]


@dataclass
class Channel:
    """Effective complex gains h_{m,l}, shape (n_rx, n_tx)."""

    gains: np.ndarray


@dataclass
class TransmitSignal:
    """Constant-modulus PSK vector x, |x_l|^2 = per_antenna_power."""

    symbols: np.ndarray
    per_antenna_power: float


@dataclass
class ReferenceField:
    """Injected reference r_m per vapor cell (equal magnitude, zero phase)."""

    values: np.ndarray


@dataclass
class Scene:
    channel: Channel
    signal: TransmitSignal
    reference: ReferenceField
    alpha: np.ndarray       # h_m^T x + r_m
    sigma_v2: np.ndarray    # (P / n_tx) * sum_l |h_{m,l}|^2
    alpha_bar: np.ndarray   # phase-averaged |alpha_m|


@dataclass
class ShotMatrix:
    """Nonnegative magnitude readouts, shape (n_rx, shots)."""

    values: np.ndarray


def draw_channel(stream: RngStream, cfg: SystemConfig) -> Channel:
    """i.i.d. CN(0, 1) channel entries, shape (n_rx, n_tx)."""
    return Channel(draw_channel_batch(stream, cfg, 1)[0])


def draw_channel_batch(stream: RngStream, cfg: SystemConfig, count: int) -> np.ndarray:
    g = stream.generator
    shape = (count, cfg.n_rx, cfg.n_tx)
    return (g.standard_normal(shape) + 1j * g.standard_normal(shape)) / math.sqrt(2.0)


def draw_signal(stream: RngStream, cfg: SystemConfig) -> TransmitSignal:
    """Uniform M-PSK symbols at equal power P / n_tx per antenna."""
    symbols = draw_signal_batch(stream, cfg, 1)[0]
    return TransmitSignal(symbols, cfg.total_power / cfg.n_tx)


def draw_signal_batch(stream: RngStream, cfg: SystemConfig, count: int) -> np.ndarray:
    g = stream.generator
    phases = g.integers(0, cfg.psk_order, size=(count, cfg.n_tx))
    amp = math.sqrt(cfg.total_power / cfg.n_tx)
    return amp * np.exp(2j * math.pi * phases / cfg.psk_order)


def make_reference(cfg: SystemConfig) -> ReferenceField:
    """Deterministic equal-magnitude, zero-phase reference across cells.

    The Rician likelihood depends only on |r_m|, so the phase convention is
    immaterial; rnr_db = -inf turns the reference off.
    """
    mag = math.sqrt(cfg.reference_power)
    return ReferenceField(np.full(cfg.n_rx, mag, dtype=complex))


def phase_averaged_means(ref_mag: np.ndarray, sigma_v2: np.ndarray) -> np.ndarray:
    """alpha_bar_m = sqrt(pi sigma_v2 / 4) L_{1/2}(-|r_m|^2 / sigma_v2).

    The degenerate zero-channel row (sigma_v2 = 0) is the continuity limit
    alpha_bar_m = |r_m|.
    """
    ref_mag = np.asarray(ref_mag, dtype=float)
    sigma_v2 = np.asarray(sigma_v2, dtype=float)
    out = np.array(ref_mag, dtype=float, copy=True)
    live = sigma_v2 > 0.0
    if np.any(live):
        out = np.where(live, rician_mean(ref_mag, np.where(live, sigma_v2, 1.0)), out)
    return out


def build_scene(
    channel: Channel,
    signal: TransmitSignal,
    reference: ReferenceField,
    cfg: SystemConfig,
) -> Scene:
    h = np.asarray(channel.gains)
    x = np.asarray(signal.symbols)
    r = np.asarray(reference.values)
    if h.shape != (cfg.n_rx, cfg.n_tx) or x.shape != (cfg.n_tx,) or r.shape != (cfg.n_rx,):
        raise ValueError("channel/signal/reference dimensions do not match config")
    alpha = h @ x + r
    sigma_v2 = (cfg.total_power / cfg.n_tx) * np.sum(np.abs(h) ** 2, axis=1)
    alpha_bar = phase_averaged_means(np.abs(r), sigma_v2)
    return Scene(channel, signal, reference, alpha, sigma_v2, alpha_bar)


def generate_shots(stream: RngStream, means, sigma2: float, shots: int) -> ShotMatrix:
    """Rician magnitude matrix |means_m + w_{m,k}|, shape (n_rx, shots)."""
    means = np.asarray(means, dtype=complex)
    if means.ndim != 1:
        raise ValueError("means must be a vector (one entry per cell)")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    values = generate_shots_batch(stream, means[None, :], sigma2, shots)[0]
    return ShotMatrix(values)


def generate_shots_batch(
    stream: RngStream, means: np.ndarray, sigma2: float, shots: int
) -> np.ndarray:
    """Batched shots: means (count, n_rx) -> values (count, n_rx, shots)."""
    if not sigma2 > 0.0:
        raise ValueError("sigma2 must be positive")
    g = stream.generator
    count, n_rx = means.shape
    shape = (count, n_rx, shots)
    scale = math.sqrt(sigma2 / 2.0)
    noise = scale * (g.standard_normal(shape) + 1j * g.standard_normal(shape))
    return np.abs(means[:, :, None] + noise)


def max_shots(t_sig: float, t_r: float, t_n: float) -> int:
    """Usable approximately-independent shots: floor(t_sig / max(t_r, t_n)).

    t_r is the splitting settling time, t_n the noise correlation time.
    """
    if min(t_sig, t_r, t_n) <= 0.0:
        raise ValueError("durations must be positive")
    k = int(math.floor(t_sig / max(t_r, t_n)))
    if k < 1:
        raise ValueError("signalling interval shorter than one shot")
    return k
