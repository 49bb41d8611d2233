"""Topology and block-fading channel generation.

Links are modeled as sqrt(linear path loss) x CN(0,1) Rayleigh fading,
independent per link per SC, constant for one transmission cycle. Path loss
follows the Hata urban model (small/medium-city mobile correction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig


@dataclass(frozen=True)
class Topology:
    """Node positions: RS at the origin, M user pairs, one eavesdropper."""

    rs_position: np.ndarray          # (2,)
    user_positions: np.ndarray       # (M, 2, 2): [pair, A/B, xy]
    eve_position: np.ndarray         # (2,)

    def validate(self, cfg: SystemConfig) -> "Topology":
        d_users = np.linalg.norm(self.user_positions - self.rs_position, axis=2)
        if not np.all(d_users <= cfg.cell_radius + 1e-9):
            raise ValueError("user outside the cell radius")
        d_eve = float(np.linalg.norm(self.eve_position - self.rs_position))
        if abs(d_eve - cfg.eve_distance) > 1e-9:
            raise ValueError("eavesdropper not at the configured distance")
        return self


@dataclass(frozen=True)
class ChannelState:
    """Complex gains for every link on every SC, plus per-SC noise power.

    Uplink (MA phase, SC i): h_a_r, h_b_r; user->eavesdropper: h_a_e, h_b_e.
    Downlink (BC phase, SC j): g_a, g_b; RS->eavesdropper: g_e.
    """

    h_a_r: np.ndarray   # (M, N) complex
    h_b_r: np.ndarray   # (M, N) complex
    h_a_e: np.ndarray   # (M, N) complex
    h_b_e: np.ndarray   # (M, N) complex
    g_a: np.ndarray     # (M, N) complex
    g_b: np.ndarray     # (M, N) complex
    g_e: np.ndarray     # (N,)  complex
    sigma2: float       # W

    def validate(self) -> "ChannelState":
        for arr in (self.h_a_r, self.h_b_r, self.h_a_e, self.h_b_e,
                    self.g_a, self.g_b, self.g_e):
            if not np.all(np.isfinite(arr)):
                raise ValueError("non-finite channel gain")
        if not self.sigma2 > 0.0:
            raise ValueError("sigma2 must be strictly positive")
        return self

    def crnn_a(self, m: int, j: int) -> float:
        """CRNN of user A_m on SC j: |g_a|^2 / sigma^2."""
        return float(abs(self.g_a[m, j]) ** 2) / self.sigma2

    def crnn_b(self, m: int, j: int) -> float:
        return float(abs(self.g_b[m, j]) ** 2) / self.sigma2

    def pair_crnn(self, m: int, j: int) -> float:
        """Pair-level CRNN: mean of the two users' CRNNs on SC j."""
        return 0.5 * (self.crnn_a(m, j) + self.crnn_b(m, j))


def path_loss_db(distance: float, cfg: SystemConfig) -> float:
    """Hata urban median path loss in dB at `distance` meters.

    L = 69.55 + 26.16 log10(f) - 13.82 log10(hb) - a(hm)
        + (44.9 - 6.55 log10(hb)) log10(d_km),
    with the small/medium-city mobile correction a(hm).
    """
    if distance <= 0.0:
        raise ValueError("distance must be strictly positive")
    f = cfg.carrier_freq
    hb = cfg.h_base
    hm = cfg.h_mobile
    a_hm = (1.1 * math.log10(f) - 0.7) * hm - (1.56 * math.log10(f) - 0.8)
    return (69.55 + 26.16 * math.log10(f) - 13.82 * math.log10(hb) - a_hm
            + (44.9 - 6.55 * math.log10(hb)) * math.log10(distance / 1000.0))


def path_loss_linear(distance: float, cfg: SystemConfig) -> float:
    """Linear attenuation 10^(-L/10) for the Hata loss L at `distance`."""
    return 10.0 ** (-path_loss_db(distance, cfg) / 10.0)


def _uniform_disk(rng: np.random.Generator, center: np.ndarray,
                  radius: float) -> np.ndarray:
    r = radius * math.sqrt(rng.uniform())
    theta = rng.uniform(0.0, 2.0 * math.pi)
    return center + r * np.array([math.cos(theta), math.sin(theta)])


def generate_topology(cfg: SystemConfig, rng: np.random.Generator) -> Topology:
    """Place M user pairs uniformly in the cell and the eavesdropper on a
    random bearing at `eve_distance`.

    The second user of each pair lands within `pairing_radius` of the first,
    resampled until it also falls inside the cell.
    """
    rs = np.zeros(2)
    users = np.empty((cfg.M, 2, 2))
    for m in range(cfg.M):
        a = _uniform_disk(rng, rs, cfg.cell_radius)
        while True:
            b = _uniform_disk(rng, a, cfg.pairing_radius)
            if np.linalg.norm(b - rs) <= cfg.cell_radius:
                break
        users[m, 0] = a
        users[m, 1] = b
    bearing = rng.uniform(0.0, 2.0 * math.pi)
    eve = cfg.eve_distance * np.array([math.cos(bearing), math.sin(bearing)])
    return Topology(rs_position=rs, user_positions=users,
                    eve_position=eve).validate(cfg)


def _rayleigh(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def sample_channels(topo: Topology, cfg: SystemConfig,
                    rng: np.random.Generator) -> ChannelState:
    """Draw one block-fading realization for every link on every SC."""
    M, N = cfg.M, cfg.N
    rs = topo.rs_position
    eve = topo.eve_position
    d_a_rs = np.linalg.norm(topo.user_positions[:, 0] - rs, axis=1)
    d_b_rs = np.linalg.norm(topo.user_positions[:, 1] - rs, axis=1)
    d_a_e = np.linalg.norm(topo.user_positions[:, 0] - eve, axis=1)
    d_b_e = np.linalg.norm(topo.user_positions[:, 1] - eve, axis=1)
    d_rs_e = float(np.linalg.norm(eve - rs))

    def amp(distances) -> np.ndarray:
        return np.sqrt([path_loss_linear(float(d), cfg) for d in np.atleast_1d(distances)])

    h_a_r = amp(d_a_rs)[:, None] * _rayleigh(rng, (M, N))
    h_b_r = amp(d_b_rs)[:, None] * _rayleigh(rng, (M, N))
    h_a_e = amp(d_a_e)[:, None] * _rayleigh(rng, (M, N))
    h_b_e = amp(d_b_e)[:, None] * _rayleigh(rng, (M, N))
    g_a = amp(d_a_rs)[:, None] * _rayleigh(rng, (M, N))
    g_b = amp(d_b_rs)[:, None] * _rayleigh(rng, (M, N))
    g_e = amp(d_rs_e)[0] * _rayleigh(rng, (N,))
    return ChannelState(h_a_r=h_a_r, h_b_r=h_b_r, h_a_e=h_a_e, h_b_e=h_b_e,
                        g_a=g_a, g_b=g_b, g_e=g_e, sigma2=cfg.sigma2).validate()
