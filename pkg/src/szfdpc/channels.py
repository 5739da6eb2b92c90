"""Scenario description, Rayleigh channel generation and channel files.

Noise power is normalized to one per receive antenna, so the total
transmit power in watts doubles as the SNR.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ChannelFileError, DimensionError


def snr_to_power(snr_dbw):
    """Convert an SNR (dBW, unit noise) to a total power in watts."""
    return 10.0 ** (snr_dbw / 10.0)


@dataclass
class ScenarioConfig:
    n_tx: int
    n_rx: int
    n_users: int
    total_power: float = 1.0
    per_antenna_power: np.ndarray | None = None
    tolerance: float = 1e-6
    seed: int = 0
    max_outer_iters: int = 500
    gap_tolerance: float | None = 1e-5
    scaled_gp: bool = True
    extrapolate: bool = True
    papc_tolerance: float = 1e-6

    def __post_init__(self):
        if self.per_antenna_power is None:
            self.per_antenna_power = np.full(self.n_tx, self.total_power / self.n_tx)
        else:
            self.per_antenna_power = np.asarray(self.per_antenna_power, dtype=float)
        self.validate()

    def validate(self):
        N, M, K = self.n_tx, self.n_rx, self.n_users
        if min(N, M, K) < 1:
            raise DimensionError(f"dimensions must be positive, got N={N} M={M} K={K}")
        if N <= (K - 1) * M:
            raise DimensionError(f"SZFDPC needs N > (K-1)M, got N={N} M={M} K={K}")
        p = self.per_antenna_power
        if p.shape != (N,):
            raise DimensionError(f"per_antenna_power must have length {N}")
        if np.any(p <= 0):
            raise ValueError("per-antenna power limits must be strictly positive")
        if self.total_power <= 0:
            raise ValueError("total power must be positive")
        if abs(p.sum() - self.total_power) > 1e-12 * self.total_power * max(1, N):
            raise ValueError("per-antenna limits must sum to the total power")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.gap_tolerance is not None and self.gap_tolerance <= 0:
            raise ValueError("gap_tolerance must be positive or None")


@dataclass
class ChannelSet:
    channels: list[np.ndarray] = field(default_factory=list)

    @property
    def n_users(self):
        return len(self.channels)

    @property
    def shape(self):
        return self.channels[0].shape

    def check(self, config: ScenarioConfig):
        if len(self.channels) != config.n_users:
            raise DimensionError(f"expected {config.n_users} channels, got {len(self.channels)}")
        for H in self.channels:
            if H.shape != (config.n_rx, config.n_tx):
                raise DimensionError(
                    f"channel shape {H.shape} != ({config.n_rx}, {config.n_tx})")


def generate_channels(config: ScenarioConfig) -> ChannelSet:
    """Draw K i.i.d. CN(0, 1) channel matrices, deterministic in ``config.seed``."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    shape = (config.n_users, config.n_rx, config.n_tx)
    draws = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    return ChannelSet([draws[k] for k in range(config.n_users)])


def save_channels(path, chans: ChannelSet):
    """Write channels as text: ``N M K`` header, then K blocks of M rows of ``re im`` pairs."""
    M, N = chans.shape
    lines = [f"{N} {M} {chans.n_users}"]
    for H in chans.channels:
        for row in H:
            lines.append(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row))
        lines.append("")
    Path(path).write_text("\n".join(lines))


def load_channels(path) -> ChannelSet:
    text = Path(path).read_text()
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise ChannelFileError(f"{path}: empty channel file")
    try:
        N, M, K = (int(t) for t in rows[0])
    except ValueError as exc:
        raise ChannelFileError(f"{path}: bad header {rows[0]!r}") from exc
    data = rows[1:]
    if len(data) > K * M:
        raise DimensionError(f"{path}: header declares {K * M} rows, found {len(data)}")
    widths = {len(r) for r in data}
    if len(widths) == 1 and widths != {2 * N}:
        raise DimensionError(f"{path}: rows hold {widths.pop() // 2} entries, header declares N={N}")
    last_cut = bool(data) and len(data[-1]) < 2 * N and all(len(r) == 2 * N for r in data[:-1])
    if len(data) < K * M or last_cut:
        raise ChannelFileError(f"{path}: file truncated")
    mats = np.empty((K * M, N), dtype=complex)
    for i, tokens in enumerate(data):
        if len(tokens) != 2 * N:
            raise DimensionError(
                f"{path}: row {i} has {len(tokens) // 2} entries, header declares N={N}")
        try:
            vals = np.array([float(t) for t in tokens])
        except ValueError as exc:
            raise ChannelFileError(f"{path}: non-numeric entry in row {i}") from exc
        mats[i] = vals[0::2] + 1j * vals[1::2]
    return ChannelSet([mats[k * M:(k + 1) * M].copy() for k in range(K)])
