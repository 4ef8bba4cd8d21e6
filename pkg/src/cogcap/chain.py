"""Ten-state Markov model of the secondary link under DPL/TPL power adaptation.

State catalog (1-based indices, odd = channel ON, even = OFF):

    1, 2   PU busy, detected busy (B-B)   -> SU at P1 for T - N
    3, 4   PU busy, detected idle (MD)    -> SU at P2 for T - N
    5, 6   PU idle, detected busy (FA)    -> SU at P1 for T - N
    7, 8   PU idle, detected idle (I-I)   -> SU at P2 for T - N
    9, 10  SU overheard a NACK            -> SU at P0 (TPL) or P1 (DPL) for the
                                             whole slot T, no sensing

The PU is transmitting in states 1-4 and 9-10. The model never stays in
states 9/10 twice in a row (a packet is retransmitted at most once) and
states 5-8 cannot lead there (an idle PU produces no NACK).
"""

import math
from dataclasses import dataclass

import numpy as np

from .outage import pu_outage_prob
from .params import SchemeKind

# 0-based indices of the states where the PU transmits.
PU_ACTIVE_IDX = (0, 1, 2, 3, 8, 9)

_OUTCOMES = ("B-B", "B-B", "MD", "MD", "FA", "FA", "I-I", "I-I", "NACK", "NACK")
_REGULAR_LEVELS = (1, 1, 2, 2, 1, 1, 2, 2)  # SU power level in states 1..8


class ChainSolveError(ArithmeticError):
    pass


@dataclass(frozen=True)
class StateSemantics:
    index: int        # 1-based state number
    pu_active: bool
    outcome: str      # sensing/feedback situation the state encodes
    channel_on: bool  # SU rate below instantaneous capacity
    power_level: int  # index into su_power_psd / su_rates_bps
    duration_s: float # transmission time within the slot


@dataclass(frozen=True)
class ChainModel:
    scheme: SchemeKind
    matrix: np.ndarray        # 10x10 row-stochastic transition matrix
    states: tuple             # StateSemantics for states 1..10
    snr: np.ndarray           # the five link SNRs (interference included where the PU is active)
    z_thresholds: np.ndarray  # fading gain above which each transmission mode is ON
    base_probs: np.ndarray    # destination probabilities p_1..p_8 before NACK rescaling
    nack_access: tuple        # probability of entering the NACK states from P1 / P2 sources
    service_bits: np.ndarray  # per-slot service of each state (rate * duration, 0 when OFF)
    durations: np.ndarray


@dataclass(frozen=True)
class SteadyState:
    pi: np.ndarray    # stationary distribution over the 10 states
    beta: np.ndarray  # pi renormalized over the PU-active states (0 elsewhere, NaN if no active mass)

    @property
    def power_level_mix(self):
        """beta mass aggregated per SU power level index {0, 1, 2} (NACK states excluded)."""
        return (
            float(self.beta[8] + self.beta[9]),
            float(self.beta[0] + self.beta[1]),
            float(self.beta[2] + self.beta[3]),
        )


def snr_and_thresholds(params, scheme: SchemeKind):
    """The five per-mode SNRs and the fading thresholds that turn each mode ON.

    Modes 1..4 cover the sensing outcomes (P1/P2 with/without PU interference);
    mode 5 is the NACK slot. Under DPL the NACK slot reuses mode 1 (P1 at rate
    r1 with interference). A zero-power mode gets an infinite threshold.
    """
    noise = params.noise_psd
    interf = params.pu_signal_var + noise
    p0, p1, p2 = params.su_power_psd
    r0, r1, r2 = params.su_rates_bps
    snr = np.array([p1 / interf, p2 / interf, p1 / noise, p2 / noise, p0 / interf])
    rates = np.array([r1, r2, r1, r2, r0])
    if scheme is SchemeKind.DPL:
        snr[4] = snr[0]
        rates[4] = rates[0]
    gain_needed = 2.0 ** (rates / params.bandwidth_hz) - 1.0
    thresholds = np.where(snr > 0, gain_needed / np.where(snr > 0, snr, 1.0), np.inf)
    return snr, thresholds


def channel_on_prob(threshold: float, params) -> float:
    """Pr(z > threshold) for the exponential SU-link power gain z."""
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    if math.isinf(threshold):
        return 0.0
    return math.exp(-threshold / params.fading_ss_mean)


def state_catalog(params, scheme: SchemeKind):
    """The fixed 10-state catalog for a given parameter set and scheme."""
    t_tx = params.frame_duration_s - params.sensing_duration_s
    nack_level = 0 if scheme is SchemeKind.TPL else 1
    states = []
    for i in range(10):
        level = _REGULAR_LEVELS[i] if i < 8 else nack_level
        states.append(
            StateSemantics(
                index=i + 1,
                pu_active=i in PU_ACTIVE_IDX,
                outcome=_OUTCOMES[i],
                channel_on=(i % 2 == 0),
                power_level=level,
                duration_s=t_tx if i < 8 else params.frame_duration_s,
            )
        )
    return tuple(states)


def service_profile(params, scheme: SchemeKind):
    """Per-state service in bits per slot: rate * duration when ON, zero when OFF."""
    states = state_catalog(params, scheme)
    service = np.array(
        [params.su_rates_bps[s.power_level] * s.duration_s if s.channel_on else 0.0 for s in states]
    )
    durations = np.array([s.duration_s for s in states])
    return service, durations


def build_chain(params, scheme: SchemeKind, sensing) -> ChainModel:
    """Assemble the 10x10 transition matrix for the given scheme and detector.

    Destination probabilities for the prior-driven states 1..8 factor as
    (PU activity) x (sensing outcome) x (fading above/below threshold); rows
    for the PU-active sources additionally branch to the NACK states with the
    probability of overhearing a NACK at the power level used in that source.
    """
    rho = params.pu_prior
    p_d = sensing.p_detection
    p_f = sensing.p_false_alarm
    snr, thr = snr_and_thresholds(params, scheme)
    on = np.array([channel_on_prob(t, params) for t in thr])

    base = np.array(
        [
            rho * p_d * on[0],
            rho * p_d * (1.0 - on[0]),
            rho * (1.0 - p_d) * on[1],
            rho * (1.0 - p_d) * (1.0 - on[1]),
            (1.0 - rho) * p_f * on[2],
            (1.0 - rho) * p_f * (1.0 - on[2]),
            (1.0 - rho) * (1.0 - p_f) * on[3],
            (1.0 - rho) * (1.0 - p_f) * (1.0 - on[3]),
        ]
    )

    miss = params.feedback_miss_prob
    q_p1 = (1.0 - miss) * pu_outage_prob(params, 1)  # NACK overheard from a P1 source
    q_p2 = (1.0 - miss) * pu_outage_prob(params, 2)  # ... from a P2 (mis-detection) source

    matrix = np.zeros((10, 10))
    for i in range(10):
        q = q_p1 if i in (0, 1) else q_p2 if i in (2, 3) else 0.0
        matrix[i, :8] = base * (1.0 - q)
        matrix[i, 8] = q * on[4]
        matrix[i, 9] = q * (1.0 - on[4])

    service, durations = service_profile(params, scheme)
    return ChainModel(
        scheme=scheme,
        matrix=matrix,
        states=state_catalog(params, scheme),
        snr=snr,
        z_thresholds=thr,
        base_probs=base,
        nack_access=(q_p1, q_p2),
        service_bits=service,
        durations=durations,
    )


def _closed_classes(matrix: np.ndarray):
    """Strongly connected components with no outgoing edge (the recurrent classes)."""
    n = matrix.shape[0]
    reach = (matrix > 0.0) | np.eye(n, dtype=bool)
    for _ in range(int(math.ceil(math.log2(n))) + 1):
        reach = (reach.astype(np.int8) @ reach.astype(np.int8)) > 0
    mutual = reach & reach.T
    seen = set()
    classes = []
    for i in range(n):
        if i in seen:
            continue
        comp = tuple(j for j in range(n) if mutual[i, j])
        seen.update(comp)
        classes.append(comp)
    closed = []
    for comp in classes:
        inside = np.zeros(n, dtype=bool)
        inside[list(comp)] = True
        if not np.any(matrix[np.ix_(comp, np.flatnonzero(~inside))] > 0.0):
            closed.append(comp)
    return closed


def steady_state(chain: ChainModel) -> SteadyState:
    """Stationary distribution of the chain and its PU-active renormalization.

    States outside the single recurrent class get exactly zero mass. Solved by
    a direct linear system with a normalization row; falls back to damped power
    iteration if the solve is singular or leaves a residual above 1e-10.
    """
    matrix = chain.matrix
    closed = _closed_classes(matrix)
    if len(closed) != 1:
        raise ChainSolveError(
            f"no unique stationary distribution: {len(closed)} closed classes {closed}"
        )
    comp = list(closed[0])
    sub = matrix[np.ix_(comp, comp)]
    m = len(comp)

    pi_sub = None
    try:
        system = sub.T - np.eye(m)
        system[-1, :] = 1.0
        rhs = np.zeros(m)
        rhs[-1] = 1.0
        pi_sub = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError:
        pi_sub = None
    if pi_sub is not None and (pi_sub.min() < -1e-9 or _residual(pi_sub, sub) > 1e-10):
        pi_sub = None
    if pi_sub is None:
        pi_sub = _power_iteration_stationary(sub)

    pi_sub = np.clip(pi_sub, 0.0, None)
    pi_sub /= pi_sub.sum()
    pi = np.zeros(matrix.shape[0])
    pi[comp] = pi_sub

    active_mass = pi[list(PU_ACTIVE_IDX)].sum()
    if active_mass == 0.0:
        beta = np.full_like(pi, np.nan)
    else:
        beta = np.zeros_like(pi)
        for i in PU_ACTIVE_IDX:
            beta[i] = pi[i] / active_mass
    return SteadyState(pi=pi, beta=beta)


def _residual(pi, matrix):
    return float(np.abs(pi @ matrix - pi).max())


def _power_iteration_stationary(matrix, tol=1e-12, max_iter=100_000):
    # Damped iteration (I + R)/2 preserves the stationary vector and kills periodicity.
    m = matrix.shape[0]
    pi = np.full(m, 1.0 / m)
    half = 0.5 * (matrix + np.eye(m))
    for _ in range(max_iter):
        nxt = pi @ half
        nxt /= nxt.sum()
        if np.abs(nxt - pi).max() <= tol:
            pi = nxt
            break
        pi = nxt
    res = _residual(pi, matrix)
    if res > 1e-10:
        raise ChainSolveError(f"stationary iteration stalled, residual {res:.3e}")
    return pi


def pu_success_rate(params, scheme: SchemeKind, sensing) -> float:
    """Per-transmission PU packet success rate implied by the stationary model."""
    chain = build_chain(params, scheme, sensing)
    steady = steady_state(chain)
    return success_from_steady(params, scheme, steady)


def success_from_steady(params, scheme: SchemeKind, steady: SteadyState) -> float:
    """1 - Pr(NACK), mixing per-level outage over the PU-active power-level mass."""
    beta = steady.beta
    if np.any(np.isnan(beta)):
        return math.nan
    level_mass = [0.0, 0.0, 0.0]
    nack_mass = float(beta[8] + beta[9])
    if scheme is SchemeKind.TPL:
        level_mass[0] += nack_mass
    else:
        level_mass[1] += nack_mass
    level_mass[1] += float(beta[0] + beta[1])
    level_mass[2] += float(beta[2] + beta[3])
    nack = sum(pu_outage_prob(params, j) * level_mass[j] for j in range(3))
    return 1.0 - nack


def dump_csv(chain: ChainModel, steady: SteadyState, path) -> None:
    """Debug dump of the transition matrix and stationary vectors, 17 significant digits."""
    lines = []
    for i, row in enumerate(chain.matrix):
        lines.append(",".join(["R[%d]" % (i + 1)] + [f"{v:.17g}" for v in row]))
    lines.append(",".join(["pi"] + [f"{v:.17g}" for v in steady.pi]))
    lines.append(",".join(["beta"] + [f"{v:.17g}" for v in steady.beta]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
