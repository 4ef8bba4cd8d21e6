"""Shared test utilities: randomized valid parameter sets and tolerance helpers."""

import math

import cogcap as cc


def random_valid_params(rng, eps=None, rho=None):
    """A random parameter set satisfying every invariant, with an integer
    sensing sample count (no rounding warning) and a detector operating point
    away from the degenerate corners."""
    frame = rng.uniform(0.005, 0.02)
    bandwidth = rng.uniform(2e4, 2e5)
    nb = int(rng.integers(50, 600))
    sensing_window = nb / bandwidth
    if sensing_window >= 0.5 * frame:
        frame = 2.5 * sensing_window
    noise = rng.uniform(0.5, 2.0)
    p1 = rng.uniform(0.1, 0.5)
    p0 = p1 * rng.uniform(0.0, 0.8)
    p2 = p1 * rng.uniform(1.5, 5.0)
    r1 = rng.uniform(500, 2000)
    r_p_thresh = rng.uniform(0.5, 2.0)
    return cc.validate(
        cc.SystemParams(
            frame_duration_s=frame,
            sensing_duration_s=sensing_window,
            bandwidth_hz=bandwidth,
            pu_prior=rho if rho is not None else rng.uniform(0.05, 0.6),
            detector_threshold=noise * rng.uniform(1.1, 1.8),
            noise_psd=noise,
            pu_signal_var=rng.uniform(0.3, 3.0),
            su_power_psd=(p0, p1, p2),
            pu_power_psd=rng.uniform(50, 200),
            su_rates_bps=(r1 * rng.uniform(0.3, 1.0), r1, r1 * rng.uniform(1.5, 3.0)),
            pu_rate_bps=bandwidth * math.log2(1.0 + r_p_thresh),
            fading_pp=rng.uniform(0.05, 0.3),
            fading_sp=rng.uniform(0.05, 0.3),
            fading_ss_mean=rng.uniform(0.5, 2.0),
            qos_exponent=rng.uniform(0.001, 0.05),
            feedback_miss_prob=eps if eps is not None else rng.uniform(0.0, 0.9),
        )
    )


def three_sigma(p, n):
    """Three standard errors of a proportion estimate around the analytic p."""
    return 3.0 * math.sqrt(max(p * (1.0 - p), 0.0) / n)


def mc_tolerance(p, n):
    """three_sigma with a 5-count floor: for p*n of order one the normal
    approximation undercovers badly (a single hit exceeds 3 SE even though
    Pr(N>=1) is a few percent); 5 extra counts sits below the 3-sigma
    two-sided level throughout the Poisson regime."""
    return max(three_sigma(p, n), 5.0 / n)
