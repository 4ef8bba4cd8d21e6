"""Energy-detector sensing probabilities and the incomplete gamma ratio they need.

The detector averages the energy of the NB complex samples collected during
the sensing window and compares it to a threshold; under a Gaussian model of
both noise and primary signal the test statistic is gamma distributed, so the
false-alarm and detection probabilities are upper gamma tails.
"""

import math
import warnings
from dataclasses import dataclass

_MAX_ITER = 10_000
_EPS = 1e-16


class GammaConvergenceError(ArithmeticError):
    pass


def _lower_series(a: float, x: float) -> float:
    """P(a,x) by the ascending power series; good for x < a + 1."""
    if x == 0.0:
        return 0.0
    term = 1.0 / a
    total = term
    denom = a
    for _ in range(_MAX_ITER):
        denom += 1.0
        term *= x / denom
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(a * math.log(x) - x - math.lgamma(a))
    raise GammaConvergenceError(f"series for P({a}, {x}) did not converge in {_MAX_ITER} terms")


def _upper_cont_fraction(a: float, x: float) -> float:
    """Q(a,x) by the Lentz continued fraction; good for x >= a + 1."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h * math.exp(a * math.log(x) - x - math.lgamma(a))
    raise GammaConvergenceError(
        f"continued fraction for Q({a}, {x}) did not converge in {_MAX_ITER} terms"
    )


def reg_lower_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ratio P(a, x) = gamma(a, x) / Gamma(a).

    Series for x < a + 1, continued fraction on the complement otherwise,
    with an iteration cap of 10^4 (raises GammaConvergenceError beyond it).
    Nondecreasing in x; P(a, 0) = 0 and P(a, x) -> 1 as x -> inf.
    """
    if a <= 0:
        raise ValueError(f"shape parameter must be positive, got a={a}")
    if x < 0:
        raise ValueError(f"argument must be nonnegative, got x={x}")
    if x < a + 1.0:
        return _lower_series(a, x)
    return 1.0 - _upper_cont_fraction(a, x)


def reg_upper_gamma(a: float, x: float) -> float:
    """Complement Q(a, x) = 1 - P(a, x), computed without cancellation for x >= a+1."""
    if a <= 0:
        raise ValueError(f"shape parameter must be positive, got a={a}")
    if x < 0:
        raise ValueError(f"argument must be nonnegative, got x={x}")
    if x < a + 1.0:
        return 1.0 - _lower_series(a, x)
    return _upper_cont_fraction(a, x)


@dataclass(frozen=True)
class SensingProbs:
    p_false_alarm: float  # channel declared busy while idle
    p_detection: float    # channel declared busy while occupied


def sample_count(params) -> int:
    """Number of complex samples in the sensing window, NB = N * B.

    A non-integer product is rounded to the nearest integer with a warning:
    the detector model is defined over a whole sample count.
    """
    nb = params.sensing_duration_s * params.bandwidth_hz
    nb_int = int(round(nb))
    if abs(nb - nb_int) > 1e-9:
        warnings.warn(
            f"sensing window holds a non-integer sample count {nb}; rounding to {nb_int}",
            stacklevel=2,
        )
    if nb_int < 1:
        raise ValueError(f"sensing window must hold at least one sample, got NB={nb}")
    return nb_int


def sensing_probs(params) -> SensingProbs:
    """False-alarm and detection probability of the mean-energy detector.

    P_f = Q(NB, NB*lambda/sigma_n^2) and P_d = Q(NB, NB*lambda/(sigma_sp^2+sigma_n^2))
    where Q is the regularized upper gamma tail: the mean energy over NB complex
    samples is Gamma(NB, sigma^2/NB)-distributed under either hypothesis.
    """
    nb = sample_count(params)
    lam = params.detector_threshold
    pf = reg_upper_gamma(nb, nb * lam / params.noise_psd)
    pd = reg_upper_gamma(nb, nb * lam / (params.pu_signal_var + params.noise_psd))
    return SensingProbs(p_false_alarm=pf, p_detection=pd)


def perfect_sensing_override(params=None) -> SensingProbs:
    """The ideal detector: never a false alarm, never a miss."""
    return SensingProbs(p_false_alarm=0.0, p_detection=1.0)
