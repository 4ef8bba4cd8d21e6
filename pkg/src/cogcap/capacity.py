"""Effective capacity of the secondary link from the Markov model.

EC(theta) = -(1/theta) * ln sp(Phi(-theta) R) in bits per slot, where Phi is
the diagonal of per-state service moment generating functions and sp() the
spectral radius. theta -> 0 recovers the stationary mean service rate.
"""

import math
from dataclasses import dataclass

import numpy as np

from .chain import build_chain, service_profile, steady_state
from .params import SchemeKind

# Below this QoS exponent the spectral-radius route is numerically meaningless;
# the stationary-mean limit is exact to first order.
THETA_LIMIT = 1e-8


class PowerIterationError(ArithmeticError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class EcResult:
    theta: float
    spectral_radius: float
    ec_bits_per_slot: float
    ec_bits_per_sec: float
    rates_used: tuple


@dataclass(frozen=True)
class OptimizeResult:
    best: EcResult
    surface: tuple  # ((r0, r1, r2, ec_bits_per_slot), ...) when recorded, else ()


def mgf_diagonal(params, scheme: SchemeKind, theta: float) -> np.ndarray:
    """Diagonal of per-state service MGFs evaluated at -theta.

    OFF states serve zero bits, so their entries are exactly 1; ON states carry
    exp(-duration * theta * rate) with the NACK state using the full slot.
    """
    if theta < 0:
        raise ValueError(f"qos exponent must be nonnegative, got {theta}")
    service, _ = service_profile(params, scheme)
    return np.exp(-theta * service)


def spectral_radius(matrix, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Perron root of an entrywise nonnegative matrix by power iteration.

    Deterministic all-ones start; converges when the eigenvalue estimate is
    stable to a relative tol and the eigenvector residual confirms it. Raises
    PowerIterationError with the residual if max_iter is exhausted.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.min() < 0:
        raise ValueError("matrix must be entrywise nonnegative")
    n = m.shape[0]
    vec = np.full(n, 1.0 / n)
    lam = 0.0
    for _ in range(max_iter):
        nxt = m @ vec
        lam_new = nxt.sum()
        if lam_new == 0.0:
            return 0.0  # iterate hit the kernel: only the zero eigenvalue remains
        nxt /= lam_new
        if abs(lam_new - lam) <= tol * lam_new:
            residual = np.abs(m @ nxt - lam_new * nxt).max()
            if residual <= math.sqrt(tol) * max(lam_new, 1.0):
                return float(lam_new)
        lam = lam_new
        vec = nxt
    residual = float(np.abs(m @ vec - lam * vec).max())
    raise PowerIterationError(f"power iteration did not converge in {max_iter} steps", residual)


def effective_capacity(params, scheme: SchemeKind, sensing, theta: float = None) -> EcResult:
    """EC of the secondary link; theta defaults to params.qos_exponent.

    theta <= 1e-8 is routed to the stationary-mean limit (spectral radius
    reported as 1, its exact value at theta = 0).
    """
    chain = build_chain(params, scheme, sensing)
    return effective_capacity_from_chain(params, chain, theta)


def effective_capacity_from_chain(params, chain, theta: float = None) -> EcResult:
    if theta is None:
        theta = params.qos_exponent
    if theta < 0:
        raise ValueError(f"qos exponent must be nonnegative, got {theta}")
    rates = tuple(params.su_rates_bps)
    if theta <= THETA_LIMIT:
        steady = steady_state(chain)
        per_slot = float(steady.pi @ chain.service_bits)
        return EcResult(
            theta=theta,
            spectral_radius=1.0,
            ec_bits_per_slot=per_slot,
            ec_bits_per_sec=per_slot / params.frame_duration_s,
            rates_used=rates,
        )
    phi = np.exp(-theta * chain.service_bits)
    sp = spectral_radius(phi[:, None] * chain.matrix)
    per_slot = -math.log(sp) / theta
    return EcResult(
        theta=theta,
        spectral_radius=sp,
        ec_bits_per_slot=per_slot,
        ec_bits_per_sec=per_slot / params.frame_duration_s,
        rates_used=rates,
    )


def _grid_axis(spec) -> list:
    lo, hi, step = (float(v) for v in spec)
    if step <= 0 or hi < lo:
        raise ValueError(f"bad rate grid ({lo}, {hi}, {step})")
    values = []
    k = 0
    while True:
        v = lo + k * step
        if v > hi * (1.0 + 1e-12):
            break
        values.append(v)
        k += 1
    if not values:
        raise ValueError(f"empty rate grid ({lo}, {hi}, {step})")
    return values


def optimize_rates(
    params,
    scheme: SchemeKind,
    sensing,
    r0_grid=None,
    r1_grid=None,
    r2_grid=None,
    theta: float = None,
    record_surface: bool = False,
) -> OptimizeResult:
    """Exhaustive search of the fixed transmission rates maximizing EC.

    Each grid is (min, max, step); a None grid pins that rate at its current
    value (DPL ignores r0 regardless). Ties go to the lexicographically
    smallest (r0, r1, r2). Rates must be positive.
    """
    base = tuple(params.su_rates_bps)
    axes = [
        _grid_axis(r0_grid) if r0_grid is not None else [base[0]],
        _grid_axis(r1_grid) if r1_grid is not None else [base[1]],
        _grid_axis(r2_grid) if r2_grid is not None else [base[2]],
    ]
    if scheme is SchemeKind.DPL:
        axes[0] = [base[0]]
    for axis in axes:
        if any(v <= 0 for v in axis):
            raise ValueError("rate grids must contain positive rates only")

    best = None
    surface = []
    for r0 in axes[0]:
        for r1 in axes[1]:
            for r2 in axes[2]:
                trial = params.replace(su_rates_bps=(r0, r1, r2))
                result = effective_capacity(trial, scheme, sensing, theta)
                if record_surface:
                    surface.append((r0, r1, r2, result.ec_bits_per_slot))
                # strict improvement only: ascending loops keep the
                # lexicographically smallest tie
                if best is None or result.ec_bits_per_slot > best.ec_bits_per_slot:
                    best = result
    return OptimizeResult(best=best, surface=tuple(surface))
