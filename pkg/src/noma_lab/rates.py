"""Analytical rate expressions for the two-way AF relay with an eavesdropper.

Implements, for one SC pair shared by a member set K: the amplification
normalizers, per-pair SINRs with cochannel interference, the eavesdropper's
equivalent 2x2 MIMO rate, and the worst-case secrecy sum rate, in both the
plain model and the cooperative-jamming (CJ) model where users spend power
fractions alpha1/alpha2 on pre-shared artificial noise that the relay
cancels before forwarding.

All math is scalar and linear (watts); rates are bit/s with the 1/2 pre-log
of the two-phase protocol. log is base 2 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelState
from .config import SystemConfig

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class ScAllocation:
    """One SC pair (MA-phase SC i, BC-phase SC j) and the pairs sharing it.

    `relay_power` is the relay's total transmit power on the BC SC; uplink
    powers are per member, aligned with `members`.
    """

    sc_ma: int
    sc_bc: int
    members: tuple[int, ...]
    relay_power: float
    uplink_a: tuple[float, ...]
    uplink_b: tuple[float, ...]

    def __post_init__(self):
        if len(self.members) < 1:
            raise ValueError("members must be nonempty")
        if len(set(self.members)) != len(self.members):
            raise ValueError("duplicate member")
        if self.relay_power < 0.0:
            raise ValueError("relay_power must be >= 0")
        if len(self.uplink_a) != len(self.members) or len(self.uplink_b) != len(self.members):
            raise ValueError("uplink power lists must align with members")
        if any(p < 0.0 for p in self.uplink_a) or any(p < 0.0 for p in self.uplink_b):
            raise ValueError("uplink powers must be >= 0")

    def index_of(self, m: int) -> int:
        try:
            return self.members.index(m)
        except ValueError:
            raise ValueError(f"pair {m} is not a member of this allocation") from None


@dataclass(frozen=True)
class PairRates:
    """Per-pair rates on one SC pair: legitimate, eavesdropper, secrecy."""

    r_a: float
    r_b: float
    r_e: float
    r_sec: float


@dataclass(frozen=True)
class EveChannel2x2:
    """Equivalent 2x2 eavesdropper channel (rows: MA/BC phase) with diagonal
    noise covariance diag(ET, ER)."""

    h: np.ndarray            # (2, 2) complex
    q_diag: tuple[float, float]

    def __post_init__(self):
        if not (self.q_diag[0] > 0.0 and self.q_diag[1] > 0.0):
            raise ValueError("noise covariance entries must be strictly positive")


def unit_allocation(members, sc_ma: int, sc_bc: int, relay_power: float,
                    cfg: SystemConfig) -> ScAllocation:
    """ScAllocation with the configured per-user uplink powers."""
    members = tuple(members)
    return ScAllocation(sc_ma=sc_ma, sc_bc=sc_bc, members=members,
                        relay_power=relay_power,
                        uplink_a=(cfg.P_Am,) * len(members),
                        uplink_b=(cfg.P_Bm,) * len(members))


def _uplink_powers_x_gain2(alloc: ScAllocation, ch: ChannelState):
    """Per-member P_A|h_A,R|^2 and P_B|h_B,R|^2 on the MA SC (floats)."""
    i = alloc.sc_ma
    pa = []
    pb = []
    for k, m in enumerate(alloc.members):
        pa.append(alloc.uplink_a[k] * abs(ch.h_a_r[m, i]) ** 2)
        pb.append(alloc.uplink_b[k] * abs(ch.h_b_r[m, i]) ** 2)
    return pa, pb


def alpha_normalizer(alloc: ScAllocation, ch: ChannelState) -> float:
    """alpha_i = sqrt(sum_K (P_A|h_A,R|^2 + P_B|h_B,R|^2) + sigma^2)."""
    pa, pb = _uplink_powers_x_gain2(alloc, ch)
    return math.sqrt(sum(pa) + sum(pb) + ch.sigma2)


def gamma_normalizer(alloc: ScAllocation, ch: ChannelState,
                     alpha1: float, alpha2: float) -> float:
    """CJ normalizer: the message fractions (1-alpha) replace full powers."""
    pa, pb = _uplink_powers_x_gain2(alloc, ch)
    return math.sqrt((1.0 - alpha1) * sum(pa) + (1.0 - alpha2) * sum(pb)
                     + ch.sigma2)


def _cross_power_sum(alloc: ScAllocation, ch: ChannelState, m: int,
                     f1: float, f2: float) -> float:
    """sum over members k != m of f1*P_A|h_A,R|^2 + f2*P_B|h_B,R|^2."""
    pa, pb = _uplink_powers_x_gain2(alloc, ch)
    own = alloc.index_of(m)
    return sum(f1 * a + f2 * b
               for k, (a, b) in enumerate(zip(pa, pb)) if k != own)


def interference_terms(alloc: ScAllocation, ch: ChannelState,
                       m: int) -> tuple[float, float]:
    """Cochannel interference (I_Am, I_Bm) at the pair-m receivers: the
    full-sum-minus-own-pair forwarded power of the other members."""
    j = alloc.sc_bc
    a2 = alpha_normalizer(alloc, ch) ** 2
    cross = _cross_power_sum(alloc, ch, m, 1.0, 1.0)
    i_a = alloc.relay_power * abs(ch.g_a[m, j]) ** 2 * cross / a2
    i_b = alloc.relay_power * abs(ch.g_b[m, j]) ** 2 * cross / a2
    return i_a, i_b


def interference_terms_cj(alloc: ScAllocation, ch: ChannelState, m: int,
                          alpha1: float, alpha2: float) -> tuple[float, float]:
    """CJ variant: message fractions (1-alpha) and gamma normalization."""
    j = alloc.sc_bc
    g2 = gamma_normalizer(alloc, ch, alpha1, alpha2) ** 2
    cross = _cross_power_sum(alloc, ch, m, 1.0 - alpha1, 1.0 - alpha2)
    i_a = alloc.relay_power * abs(ch.g_a[m, j]) ** 2 * cross / g2
    i_b = alloc.relay_power * abs(ch.g_b[m, j]) ** 2 * cross / g2
    return i_a, i_b


def sinr_pair_nocj(alloc: ScAllocation, ch: ChannelState,
                   m: int) -> tuple[float, float]:
    """(SNR_A, SNR_B) for pair m; the partner's forwarded message over
    cochannel interference plus amplified and local noise."""
    i, j = alloc.sc_ma, alloc.sc_bc
    k = alloc.index_of(m)
    a2 = alpha_normalizer(alloc, ch) ** 2
    sig = ch.sigma2
    p_r = alloc.relay_power
    ga2 = abs(ch.g_a[m, j]) ** 2
    gb2 = abs(ch.g_b[m, j]) ** 2
    pa_h2 = alloc.uplink_a[k] * abs(ch.h_a_r[m, i]) ** 2
    pb_h2 = alloc.uplink_b[k] * abs(ch.h_b_r[m, i]) ** 2
    i_a, i_b = interference_terms(alloc, ch, m)
    snr_a = (p_r * ga2 * pb_h2 / a2) / (i_a + (p_r * ga2 / a2 + 1.0) * sig)
    snr_b = (p_r * gb2 * pa_h2 / a2) / (i_b + (p_r * gb2 / a2 + 1.0) * sig)
    return snr_a, snr_b


def sinr_pair_cj(alloc: ScAllocation, ch: ChannelState, m: int,
                 alpha1: float, alpha2: float) -> tuple[float, float]:
    """CJ SINRs: (1-alpha) message fractions, gamma normalization, primed
    interference terms."""
    i, j = alloc.sc_ma, alloc.sc_bc
    k = alloc.index_of(m)
    g2 = gamma_normalizer(alloc, ch, alpha1, alpha2) ** 2
    sig = ch.sigma2
    p_r = alloc.relay_power
    ga2 = abs(ch.g_a[m, j]) ** 2
    gb2 = abs(ch.g_b[m, j]) ** 2
    pa_h2 = alloc.uplink_a[k] * abs(ch.h_a_r[m, i]) ** 2
    pb_h2 = alloc.uplink_b[k] * abs(ch.h_b_r[m, i]) ** 2
    i_a, i_b = interference_terms_cj(alloc, ch, m, alpha1, alpha2)
    snr_a = ((1.0 - alpha2) * p_r * ga2 * pb_h2 / g2
             / (i_a + (p_r * ga2 / g2 + 1.0) * sig))
    snr_b = ((1.0 - alpha1) * p_r * gb2 * pa_h2 / g2
             / (i_b + (p_r * gb2 / g2 + 1.0) * sig))
    return snr_a, snr_b


def eve_channel(alloc: ScAllocation, ch: ChannelState, m: int, cj: bool,
                alpha1: float = 0.0, alpha2: float = 0.0,
                strict_paper_cov: bool = True) -> EveChannel2x2:
    """Equivalent 2x2 eavesdropper channel for pair m, with the other
    members' signals folded into the diagonal noise covariance.

    Under CJ, ET additionally carries the full artificial-noise power of all
    members (the relay cancels it, the eavesdropper cannot), and, when
    `strict_paper_cov`, an extra forwarded-message leakage term with RS-side
    gains that has no counterpart in the plain model.
    """
    i, j = alloc.sc_ma, alloc.sc_bc
    k = alloc.index_of(m)
    sig = ch.sigma2
    p_r = alloc.relay_power
    ge = complex(ch.g_e[j])
    ge2 = abs(ge) ** 2
    f1 = 1.0 - alpha1 if cj else 1.0
    f2 = 1.0 - alpha2 if cj else 1.0
    norm = (gamma_normalizer(alloc, ch, alpha1, alpha2) if cj
            else alpha_normalizer(alloc, ch))
    n2 = norm * norm

    pa_m, pb_m = alloc.uplink_a[k], alloc.uplink_b[k]
    h11 = math.sqrt(f1 * pa_m) * complex(ch.h_a_e[m, i])
    h12 = math.sqrt(f2 * pb_m) * complex(ch.h_b_e[m, i])
    h21 = math.sqrt(f1 * p_r * pa_m) * complex(ch.h_a_r[m, i]) * ge / norm
    h22 = math.sqrt(f2 * p_r * pb_m) * complex(ch.h_b_r[m, i]) * ge / norm

    # MA phase: other members' message power at the eavesdropper ...
    et = sig
    for kk, mm in enumerate(alloc.members):
        if kk == k:
            continue
        et += (f1 * alloc.uplink_a[kk] * abs(ch.h_a_e[mm, i]) ** 2
               + f2 * alloc.uplink_b[kk] * abs(ch.h_b_e[mm, i]) ** 2)
    if cj:
        # ... plus every member's AN power, own pair included
        for kk, mm in enumerate(alloc.members):
            et += (alpha1 * alloc.uplink_a[kk] * abs(ch.h_a_e[mm, i]) ** 2
                   + alpha2 * alloc.uplink_b[kk] * abs(ch.h_b_e[mm, i]) ** 2)
        if strict_paper_cov:
            for kk, mm in enumerate(alloc.members):
                et += (f1 * alloc.uplink_a[kk] * abs(ch.h_a_r[mm, i]) ** 2
                       + f2 * alloc.uplink_b[kk] * abs(ch.h_b_r[mm, i]) ** 2)

    # BC phase: forwarded cochannel power, amplified relay noise, local noise
    er = p_r * ge2 * _cross_power_sum(alloc, ch, m, f1, f2) / n2
    er += (p_r * ge2 / n2) * sig + sig

    return EveChannel2x2(h=np.array([[h11, h12], [h21, h22]]), q_diag=(et, er))


def eve_rate(evec: EveChannel2x2, B_sc: float) -> float:
    """(B/2) log2 det(I + H H^H Q^-1) via the closed-form 2x2 determinant."""
    h11, h12 = complex(evec.h[0, 0]), complex(evec.h[0, 1])
    h21, h22 = complex(evec.h[1, 0]), complex(evec.h[1, 1])
    et, er = evec.q_diag
    a = abs(h11) ** 2 + abs(h12) ** 2
    c = abs(h21) ** 2 + abs(h22) ** 2
    b = h11 * h21.conjugate() + h12 * h22.conjugate()
    det = (1.0 + a / et) * (1.0 + c / er) - abs(b) ** 2 / (et * er)
    if det < 1.0:  # Cauchy-Schwarz guarantees det >= 1; guard FP round-off
        det = 1.0
    return 0.5 * B_sc * math.log(det) / LOG2


def secrecy_rate(alloc: ScAllocation, ch: ChannelState, m: int, cj: bool,
                 alpha1: float, alpha2: float, B_sc: float,
                 strict_paper_cov: bool = True) -> PairRates:
    """Worst-case secrecy sum rate [r_a + r_b - r_e]^+ for pair m."""
    if cj:
        snr_a, snr_b = sinr_pair_cj(alloc, ch, m, alpha1, alpha2)
    else:
        snr_a, snr_b = sinr_pair_nocj(alloc, ch, m)
    r_a = 0.5 * B_sc * math.log1p(snr_a) / LOG2
    r_b = 0.5 * B_sc * math.log1p(snr_b) / LOG2
    r_e = eve_rate(eve_channel(alloc, ch, m, cj, alpha1, alpha2,
                               strict_paper_cov), B_sc)
    return PairRates(r_a=r_a, r_b=r_b, r_e=r_e,
                     r_sec=max(0.0, r_a + r_b - r_e))


def unit_pair_rates(alloc: ScAllocation, ch: ChannelState, cj: bool,
                    alpha1: float, alpha2: float, B_sc: float,
                    strict_paper_cov: bool = True) -> list[PairRates]:
    """PairRates for every member of one allocation (shared normalizers)."""
    return [secrecy_rate(alloc, ch, m, cj, alpha1, alpha2, B_sc,
                         strict_paper_cov) for m in alloc.members]


def rates_for_config(alloc: ScAllocation, ch: ChannelState,
                     cfg: SystemConfig) -> list[PairRates]:
    """PairRates for every member, pulling model switches from the config."""
    return unit_pair_rates(alloc, ch, cfg.cj_enabled, cfg.alpha1, cfg.alpha2,
                           cfg.sc_bandwidth, cfg.eve_cov_strict_paper)


def system_ee(rates, power, cfg: SystemConfig) -> tuple[float, float, float]:
    """Secrecy energy efficiency: (ee, r_total, p_total) with
    ee = sum r_sec / (P_c + P_T) and p_total = P_c + P_T.

    `power` is the total allocated transmit power in W, or any object with a
    `transmit_power` attribute (e.g. a PowerAllocation).
    """
    p_t = power if isinstance(power, (int, float)) else power.transmit_power
    r_total = sum(r.r_sec for r in rates)
    p_total = cfg.P_c + p_t
    return r_total / p_total, r_total, p_total


class ChannelTables:
    """Per-trial plain-float views of a ChannelState for the hot paths
    (swap search, solver objective). Same formulas as the contract
    functions above, grouped for scalar speed."""

    __slots__ = ("ar2", "br2", "ae2", "be2", "ga2", "gb2", "ge2",
                 "h_ar", "h_br", "h_ae", "h_be", "g_e", "sigma2")

    def __init__(self, ch: ChannelState):
        self.ar2 = (np.abs(ch.h_a_r) ** 2).tolist()
        self.br2 = (np.abs(ch.h_b_r) ** 2).tolist()
        self.ae2 = (np.abs(ch.h_a_e) ** 2).tolist()
        self.be2 = (np.abs(ch.h_b_e) ** 2).tolist()
        self.ga2 = (np.abs(ch.g_a) ** 2).tolist()
        self.gb2 = (np.abs(ch.g_b) ** 2).tolist()
        self.ge2 = (np.abs(ch.g_e) ** 2).tolist()
        self.h_ar = ch.h_a_r.tolist()
        self.h_br = ch.h_b_r.tolist()
        self.h_ae = ch.h_a_e.tolist()
        self.h_be = ch.h_b_e.tolist()
        self.g_e = ch.g_e.tolist()
        self.sigma2 = float(ch.sigma2)


def unit_rates_fast(tb: ChannelTables, sc_ma: int, sc_bc: int, members,
                    relay_power: float, pa: float, pb: float, cj: bool,
                    alpha1: float, alpha2: float, B_sc: float,
                    strict_paper_cov: bool = True) -> list[PairRates]:
    """PairRates for all members of one SC pair, from precomputed tables.

    Uplink powers are uniform across members here (the configured per-user
    values), which is the only case the pipelines use.
    """
    i, j = sc_ma, sc_bc
    sig = tb.sigma2
    q = relay_power
    f1 = 1.0 - alpha1 if cj else 1.0
    f2 = 1.0 - alpha2 if cj else 1.0
    ge2 = tb.ge2[j]

    pah2 = [pa * tb.ar2[m][i] for m in members]
    pbh2 = [pb * tb.br2[m][i] for m in members]
    pae2 = [pa * tb.ae2[m][i] for m in members]
    pbe2 = [pb * tb.be2[m][i] for m in members]
    own_fwd = [f1 * a + f2 * b for a, b in zip(pah2, pbh2)]
    own_eve = [f1 * a + f2 * b for a, b in zip(pae2, pbe2)]
    s_fwd = sum(own_fwd)             # message power reaching the relay
    n2 = s_fwd + sig                 # gamma^2 (alpha^2 when f1 = f2 = 1)
    s_eve = sum(own_eve)
    an_eve = (sum(alpha1 * a + alpha2 * b for a, b in zip(pae2, pbe2))
              if cj else 0.0)
    et_base = sig + an_eve + (s_fwd if cj and strict_paper_cov else 0.0)
    er_noise = (q * ge2 / n2) * sig + sig
    ge_conj_scaled = complex(tb.g_e[j]).conjugate() * math.sqrt(q / n2)

    out = []
    for k, m in enumerate(members):
        ga2 = tb.ga2[m][j]
        gb2 = tb.gb2[m][j]
        cross = s_fwd - own_fwd[k]
        i_a = q * ga2 * cross / n2
        i_b = q * gb2 * cross / n2
        snr_a = f2 * q * ga2 * pbh2[k] / n2 / (i_a + (q * ga2 / n2 + 1.0) * sig)
        snr_b = f1 * q * gb2 * pah2[k] / n2 / (i_b + (q * gb2 / n2 + 1.0) * sig)
        r_a = 0.5 * B_sc * math.log1p(snr_a) / LOG2
        r_b = 0.5 * B_sc * math.log1p(snr_b) / LOG2

        a = own_eve[k]
        c = q * ge2 * own_fwd[k] / n2
        b = ge_conj_scaled * (f1 * pa * tb.h_ae[m][i] * complex(tb.h_ar[m][i]).conjugate()
                              + f2 * pb * tb.h_be[m][i] * complex(tb.h_br[m][i]).conjugate())
        et = et_base + (s_eve - own_eve[k])
        er = q * ge2 * cross / n2 + er_noise
        det = (1.0 + a / et) * (1.0 + c / er) - abs(b) ** 2 / (et * er)
        if det < 1.0:
            det = 1.0
        r_e = 0.5 * B_sc * math.log(det) / LOG2
        out.append(PairRates(r_a=r_a, r_b=r_b, r_e=r_e,
                             r_sec=max(0.0, r_a + r_b - r_e)))
    return out


def unit_rates_for_config(tb: ChannelTables, sc_ma: int, sc_bc: int, members,
                          relay_power: float, cfg: SystemConfig) -> list[PairRates]:
    return unit_rates_fast(tb, sc_ma, sc_bc, members, relay_power,
                           cfg.P_Am, cfg.P_Bm, cfg.cj_enabled,
                           cfg.alpha1, cfg.alpha2, cfg.sc_bandwidth,
                           cfg.eve_cov_strict_paper)
