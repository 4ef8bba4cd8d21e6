"""Closed-form primary-link success/outage under Rayleigh fading.

The PU transmits at a fixed rate while the SU interferes at one of its three
power levels. Both link power gains are exponential (Rayleigh amplitudes):
the PU-link gain with rate fading_pp, the SU-to-PU-receiver gain with rate
fading_sp. Averaging the conditional success over the interferer gain gives

    Pr(suc | P_sec = P_j) = exp(-d_pp * r_p * N0 / P) / (1 + d_pp * P_j * r_p / (P * d_sp))

with r_p = 2^(rate/B) - 1 and all powers as PSDs. A failed PU transmission
produces a NACK, so outage probability and NACK probability coincide.
"""

import math


def pu_rate_threshold(params) -> float:
    """SINR threshold r_p = 2^(pu_rate/B) - 1 below which the PU link is in outage."""
    return 2.0 ** (params.pu_rate_bps / params.bandwidth_hz) - 1.0


def pu_success_prob(params, j: int) -> float:
    """Probability a PU transmission succeeds while the SU sends at power level j."""
    if j not in (0, 1, 2):
        raise ValueError(f"power level index must be 0, 1 or 2, got {j}")
    r_p = pu_rate_threshold(params)
    d_pp = params.fading_pp
    d_sp = params.fading_sp
    p_pu = params.pu_power_psd
    p_su = params.su_power_psd[j]
    fade_only = math.exp(-d_pp * r_p * params.noise_psd / p_pu)
    return fade_only / (1.0 + d_pp * p_su * r_p / (p_pu * d_sp))


def pu_outage_prob(params, j: int) -> float:
    """Probability of PU outage (equivalently, of a NACK) at SU power level j."""
    return 1.0 - pu_success_prob(params, j)


def nack_access_prob(params, j: int) -> float:
    """Probability the SU actually overhears a NACK caused at power level j.

    The feedback channel of the PU is perfect, but the SU misses the NACK with
    probability feedback_miss_prob and then mistakes it for an implicit ACK.
    """
    return (1.0 - params.feedback_miss_prob) * pu_outage_prob(params, j)
