"""Monte Carlo cross-validation: chain sampling, MGF-based EC estimation,
a slot-level protocol simulator, and a symbol-level detector simulation.

Randomness comes from counter-based Philox streams, one independent stream
per trajectory spawned from SeedSequence(seed), so runs are reproducible and
trivially parallelizable; identical (inputs, seed) give bit-identical reports.
"""

import hashlib
import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .capacity import effective_capacity_from_chain
from .chain import build_chain, steady_state, success_from_steady
from .params import SchemeKind
from .sensing import sample_count, sensing_probs

_MODES = ("chain-sampling", "protocol")
_SENSING_MODELS = ("bernoulli", "symbol-level")

# Below this many successes or failures a normal-approximation interval is
# reported but flagged as unreliable.
_MIN_TAIL = 100


@dataclass(frozen=True)
class SimConfig:
    mode: str = "chain-sampling"
    slots: int = 10_000
    trajectories: int = 1
    seed: int = 0
    sensing_model: str = "bernoulli"

    def __post_init__(self):
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.sensing_model not in _SENSING_MODELS:
            raise ValueError(
                f"sensing_model must be one of {_SENSING_MODELS}, got {self.sensing_model!r}"
            )
        if self.slots < 1:
            raise ValueError("slots must be >= 1")
        if self.trajectories < 1:
            raise ValueError("trajectories must be >= 1")


@dataclass(frozen=True)
class Estimate:
    value: float
    half_width: float  # 95% normal-approximation half interval (NaN when undefined)
    n: int
    wide: bool = False


@dataclass(frozen=True)
class SimReport:
    mode: str
    seed: int
    slots: int
    trajectories: int
    scheme: str = ""
    sensing_model: str = ""
    empirical_pi: np.ndarray = None
    pi_half_widths: np.ndarray = None
    empirical_ec: Estimate = None
    success_per_transmission: Estimate = None
    success_per_packet: Estimate = None
    sensing_estimates: tuple = None  # (false-alarm Estimate, detection Estimate)
    n_transmissions: int = 0
    n_packets: int = 0
    analytical_success: float = None
    analytical_ec_bits_per_slot: float = None
    fidelity_gap: float = None  # empirical minus analytical per-transmission success
    trajectory_digest: str = None

    @property
    def empirical_ec_bits_per_slot(self):
        return None if self.empirical_ec is None else self.empirical_ec.value

    @property
    def half_widths(self) -> dict:
        out = {}
        if self.pi_half_widths is not None:
            for i, hw in enumerate(self.pi_half_widths):
                out[f"pi[{i + 1}]"] = float(hw)
        for name in ("empirical_ec", "success_per_transmission", "success_per_packet"):
            est = getattr(self, name)
            if est is not None:
                out[name] = est.half_width
        if self.sensing_estimates is not None:
            out["p_false_alarm"] = self.sensing_estimates[0].half_width
            out["p_detection"] = self.sensing_estimates[1].half_width
        return out

    def to_csv_text(self) -> str:
        rows = [
            ("mode", self.mode),
            ("scheme", self.scheme),
            ("sensing_model", self.sensing_model),
            ("seed", repr(self.seed)),
            ("slots", repr(self.slots)),
            ("trajectories", repr(self.trajectories)),
        ]

        def add_estimate(name, est):
            if est is None:
                return
            rows.append((name, repr(est.value)))
            rows.append((name + "_half_width", repr(est.half_width)))
            rows.append((name + "_n", repr(est.n)))
            rows.append((name + "_wide", repr(est.wide)))

        if self.empirical_pi is not None:
            for i, (f, hw) in enumerate(zip(self.empirical_pi, self.pi_half_widths)):
                rows.append((f"pi[{i + 1}]", repr(float(f))))
                rows.append((f"pi[{i + 1}]_half_width", repr(float(hw))))
        add_estimate("empirical_ec_bits_per_slot", self.empirical_ec)
        add_estimate("success_per_transmission", self.success_per_transmission)
        add_estimate("success_per_packet", self.success_per_packet)
        if self.sensing_estimates is not None:
            add_estimate("p_false_alarm", self.sensing_estimates[0])
            add_estimate("p_detection", self.sensing_estimates[1])
        rows.append(("n_transmissions", repr(self.n_transmissions)))
        rows.append(("n_packets", repr(self.n_packets)))
        for name in ("analytical_success", "analytical_ec_bits_per_slot", "fidelity_gap"):
            value = getattr(self, name)
            if value is not None:
                rows.append((name, repr(value)))
        if self.trajectory_digest is not None:
            rows.append(("trajectory_digest", self.trajectory_digest))
        return "\n".join(f"{k},{v}" for k, v in rows) + "\n"

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv_text())

    def summary(self) -> str:
        lines = [
            f"{self.mode} run: {self.trajectories} x {self.slots} slots, seed {self.seed}"
            + (f", scheme {self.scheme}" if self.scheme else "")
        ]
        if self.empirical_ec is not None:
            e = self.empirical_ec
            lines.append(
                f"  empirical EC: {e.value:.6g} bits/slot (+/- {e.half_width:.2g})"
                + (" [wide]" if e.wide else "")
            )
        if self.analytical_ec_bits_per_slot is not None:
            lines.append(f"  analytical EC: {self.analytical_ec_bits_per_slot:.6g} bits/slot")
        if self.success_per_transmission is not None:
            e = self.success_per_transmission
            if math.isnan(e.value):
                lines.append("  PU success/transmission: undefined (no PU transmissions)")
            else:
                lines.append(
                    f"  PU success/transmission: {e.value:.6g} (+/- {e.half_width:.2g},"
                    f" n={e.n})" + (" [wide]" if e.wide else "")
                )
        if self.success_per_packet is not None and not math.isnan(self.success_per_packet.value):
            e = self.success_per_packet
            lines.append(f"  PU success/packet: {e.value:.6g} (+/- {e.half_width:.2g}, n={e.n})")
        if self.analytical_success is not None:
            lines.append(f"  analytical PU success/transmission: {self.analytical_success:.6g}")
        if self.fidelity_gap is not None:
            lines.append(f"  model fidelity gap (empirical - analytical): {self.fidelity_gap:+.3e}")
        if self.sensing_estimates is not None:
            pf, pd = self.sensing_estimates
            lines.append(f"  sensing estimates: P_f={pf.value:.4g}, P_d={pd.value:.4g}")
        return "\n".join(lines)


def trajectory_streams(seed: int, n: int):
    """n independent Philox generators spawned from SeedSequence(seed)."""
    root = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.Philox(child)) for child in root.spawn(n)]


def _proportion(successes, n) -> Estimate:
    successes, n = int(successes), int(n)
    if n == 0:
        return Estimate(value=math.nan, half_width=math.nan, n=0, wide=True)
    p = successes / n
    hw = 1.96 * math.sqrt(p * (1.0 - p) / n)
    wide = bool(successes < _MIN_TAIL or (n - successes) < _MIN_TAIL)
    return Estimate(value=p, half_width=hw, n=n, wide=wide)


def sample_chain(chain, cfg: SimConfig) -> SimReport:
    """Sample the transition matrix directly and report state frequencies.

    Counts the landing state of every transition, starting each trajectory in
    state 1. Verifies on the fly that the NACK states never repeat.
    """
    if cfg.mode != "chain-sampling":
        raise ValueError(f"sample_chain needs mode='chain-sampling', got {cfg.mode!r}")
    cum_rows = [row.tolist() for row in np.cumsum(chain.matrix, axis=1)]
    counts = np.zeros(10, dtype=np.int64)
    digest = hashlib.sha256()
    for stream in trajectory_streams(cfg.seed, cfg.trajectories):
        draws = stream.random(cfg.slots).tolist()
        path = bytearray(cfg.slots)
        state = 0
        for t, u in enumerate(draws):
            nxt = bisect_right(cum_rows[state], u)
            if nxt > 9:
                nxt = 9
            if state >= 8 and nxt >= 8:
                raise RuntimeError("chain sampled two consecutive NACK-slot states")
            counts[nxt] += 1
            path[t] = nxt
            state = nxt
        digest.update(bytes(path))
    total = counts.sum()
    freqs = counts / total
    hws = 1.96 * np.sqrt(freqs * (1.0 - freqs) / total)
    return SimReport(
        mode=cfg.mode,
        seed=cfg.seed,
        slots=cfg.slots,
        trajectories=cfg.trajectories,
        scheme=chain.scheme.value,
        empirical_pi=freqs,
        pi_half_widths=hws,
        trajectory_digest=digest.hexdigest(),
    )


# Trajectories are simulated in fixed-size blocks to bound the memory held by
# pre-generated uniforms; the per-trajectory streams make results independent
# of the blocking.
_EC_BLOCK = 1000


def estimate_ec(chain, params, cfg: SimConfig, theta: float = None) -> SimReport:
    """MGF estimator of the effective capacity from independent chain runs.

    Each trajectory accumulates its served bits S; the estimate is
    -(1/(theta*slots)) * ln(mean_r exp(-theta * S_r)), evaluated through a
    log-sum-exp shift so the exponentials cannot underflow.
    """
    if theta is None:
        theta = params.qos_exponent
    if theta <= 0:
        raise ValueError(f"the MGF estimator needs theta > 0, got {theta}")
    cum = np.cumsum(chain.matrix, axis=1)
    service = chain.service_bits
    streams = trajectory_streams(cfg.seed, cfg.trajectories)
    log_weights = np.empty(cfg.trajectories)
    for start in range(0, cfg.trajectories, _EC_BLOCK):
        block = streams[start : start + _EC_BLOCK]
        uniforms = np.empty((len(block), cfg.slots))
        for j, stream in enumerate(block):
            uniforms[j] = stream.random(cfg.slots)
        states = np.zeros(len(block), dtype=np.intp)
        totals = np.zeros(len(block))
        for t in range(cfg.slots):
            rows = cum[states]
            states = np.minimum((rows <= uniforms[:, t, None]).sum(axis=1), 9)
            totals += service[states]
        log_weights[start : start + len(block)] = -theta * totals
    if not np.isfinite(log_weights).all():
        raise ArithmeticError("degenerate service totals in the EC estimator")
    shift = float(log_weights.max())
    scaled = np.exp(log_weights - shift)
    mean_scaled = float(scaled.mean())
    ec_slot = -(shift + math.log(mean_scaled)) / (theta * cfg.slots)
    if cfg.trajectories >= 2:
        rel_sd = float(scaled.std(ddof=1)) / (mean_scaled * math.sqrt(cfg.trajectories))
        hw = 1.96 * rel_sd / (theta * cfg.slots)
        wide = cfg.trajectories < _MIN_TAIL
    else:
        hw, wide = math.nan, True
    analytical = effective_capacity_from_chain(params, chain, theta)
    return SimReport(
        mode=cfg.mode,
        seed=cfg.seed,
        slots=cfg.slots,
        trajectories=cfg.trajectories,
        scheme=chain.scheme.value,
        empirical_ec=Estimate(value=ec_slot, half_width=hw, n=cfg.trajectories, wide=wide),
        analytical_ec_bits_per_slot=analytical.ec_bits_per_slot,
    )


def monte_carlo_sensing(params, trials: int, seed: int = 0):
    """Symbol-level estimate of the detector operating point.

    Per trial, NB complex Gaussian samples are drawn (noise-only and
    noise-plus-primary variance), their mean energy compared to the threshold.
    Returns empirical (P_f, P_d).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    nb = sample_count(params)
    lam = params.detector_threshold
    stream = trajectory_streams(seed, 1)[0]
    sd_h0 = math.sqrt(params.noise_psd / 2.0)
    sd_h1 = math.sqrt((params.noise_psd + params.pu_signal_var) / 2.0)
    chunk = max(1, min(trials, 4_000_000 // nb))
    hits_h0 = 0
    hits_h1 = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        re = stream.normal(0.0, sd_h0, (m, nb))
        im = stream.normal(0.0, sd_h0, (m, nb))
        energy = (re * re + im * im).mean(axis=1)
        hits_h0 += int((energy > lam).sum())
        re = stream.normal(0.0, sd_h1, (m, nb))
        im = stream.normal(0.0, sd_h1, (m, nb))
        energy = (re * re + im * im).mean(axis=1)
        hits_h1 += int((energy > lam).sum())
        done += m
    return hits_h0 / trials, hits_h1 / trials


def simulate_protocol(params, scheme: SchemeKind, cfg: SimConfig, sensing=None) -> SimReport:
    """Slot-level simulation of the true medium-access protocol.

    Unlike the analytical chain (which maps missed NACKs back to the prior
    occupancy), the simulated PU retransmits a failed packet with probability
    one, and only first-attempt failures produce an actionable NACK (the
    packet is dropped after two attempts). The per-transmission gap between
    this ground truth and the chain model is reported, not asserted away.

    In 'bernoulli' mode the detector outcome is drawn from the supplied (or
    model-derived) sensing probabilities; 'symbol-level' draws the NB detector
    samples per sensed slot and ignores the sensing argument.
    """
    if cfg.mode != "protocol":
        raise ValueError(f"simulate_protocol needs mode='protocol', got {cfg.mode!r}")
    symbol_level = cfg.sensing_model == "symbol-level"
    if symbol_level:
        # the drawn detector IS the energy detector: its analytic counterpart
        # comes from the model, not from any supplied override
        model_sensing = sensing_probs(params)
    else:
        model_sensing = sensing if sensing is not None else sensing_probs(params)

    t_frame = params.frame_duration_s
    t_tx = t_frame - params.sensing_duration_s
    rho = params.pu_prior
    miss = params.feedback_miss_prob
    bandwidth = params.bandwidth_hz
    noise = params.noise_psd
    interf = params.pu_signal_var
    su_psd = params.su_power_psd
    su_rates = params.su_rates_bps
    pu_psd = params.pu_power_psd
    r_p = 2.0 ** (params.pu_rate_bps / bandwidth) - 1.0
    nack_level = 0 if scheme is SchemeKind.TPL else 1
    if symbol_level:
        nb = sample_count(params)
        sd_h0 = math.sqrt(noise / 2.0)
        sd_h1 = math.sqrt((noise + interf) / 2.0)
    lam = params.detector_threshold

    # ON thresholds for (power level, interference) pairs, indexed [level][pu_tx]
    thr = [[0.0, 0.0] for _ in range(3)]
    for level in range(3):
        need = 2.0 ** (su_rates[level] / bandwidth) - 1.0
        for pu_tx in (0, 1):
            snr = su_psd[level] / (noise + (interf if pu_tx else 0.0))
            thr[level][pu_tx] = need / snr if snr > 0 else math.inf

    counts = np.zeros(10, dtype=np.int64)
    n_tx = n_suc = 0
    n_pkts = n_pkt_suc = 0
    sensed_h0 = busy_h0 = 0
    sensed_h1 = busy_h1 = 0
    log_weights = np.empty(cfg.trajectories)

    for r, stream in enumerate(trajectory_streams(cfg.seed, cfg.trajectories)):
        # fixed draw layout per trajectory: arrival, sensing, nack access, fading
        u_arrival = stream.random(cfg.slots)
        if symbol_level:
            energy_h0 = _mean_energies(stream, cfg.slots, nb, sd_h0)
            energy_h1 = _mean_energies(stream, cfg.slots, nb, sd_h1)
        else:
            u_sense = stream.random(cfg.slots)
        u_nack = stream.random(cfg.slots)
        z = stream.exponential(params.fading_ss_mean, cfg.slots)
        chi_pp = stream.exponential(1.0 / params.fading_pp, cfg.slots)
        chi_sp = stream.exponential(1.0 / params.fading_sp, cfg.slots)

        pending_retx = False
        in_nack_slot = False
        served = 0.0
        for t in range(cfg.slots):
            if pending_retx:
                pu_tx, attempt = True, 2
            elif u_arrival[t] < rho:
                pu_tx, attempt = True, 1
            else:
                pu_tx, attempt = False, 0

            if in_nack_slot:
                level, duration = nack_level, t_frame
                sensed_busy = None
            else:
                if symbol_level:
                    sensed_busy = (energy_h1[t] if pu_tx else energy_h0[t]) > lam
                else:
                    p_busy = model_sensing.p_detection if pu_tx else model_sensing.p_false_alarm
                    sensed_busy = u_sense[t] < p_busy
                if pu_tx:
                    sensed_h1 += 1
                    busy_h1 += sensed_busy
                else:
                    sensed_h0 += 1
                    busy_h0 += sensed_busy
                level = 1 if sensed_busy else 2
                duration = t_tx

            on = z[t] > thr[level][1 if pu_tx else 0]
            if on:
                served += su_rates[level] * duration

            if in_nack_slot:
                state = 8 if on else 9
            elif pu_tx:
                state = (0 if sensed_busy else 2) + (0 if on else 1)
            else:
                state = (4 if sensed_busy else 6) + (0 if on else 1)
            counts[state] += 1

            next_nack = False
            if pu_tx:
                n_tx += 1
                success = r_p < (pu_psd * chi_pp[t]) / (noise + su_psd[level] * chi_sp[t])
                if success:
                    n_suc += 1
                if attempt == 1:
                    n_pkts += 1
                    if success:
                        n_pkt_suc += 1
                        pending_retx = False
                    else:
                        pending_retx = True
                        next_nack = u_nack[t] < (1.0 - miss)
                else:
                    # second attempt: packet leaves the buffer either way and
                    # its NACK is not actionable
                    if success:
                        n_pkt_suc += 1
                    pending_retx = False
            in_nack_slot = next_nack
        if pending_retx:
            n_pkts -= 1  # unresolved packet at the horizon: excluded from the per-packet rate
        log_weights[r] = served

    theta = params.qos_exponent
    slots_total = cfg.slots * cfg.trajectories
    if theta > 0:
        log_weights = -theta * log_weights
        shift = float(log_weights.max())
        scaled = np.exp(log_weights - shift)
        mean_scaled = float(scaled.mean())
        ec_slot = -(shift + math.log(mean_scaled)) / (theta * cfg.slots)
        if cfg.trajectories >= 2:
            rel_sd = float(scaled.std(ddof=1)) / (mean_scaled * math.sqrt(cfg.trajectories))
            ec_hw = 1.96 * rel_sd / (theta * cfg.slots)
        else:
            ec_hw = math.nan
    else:
        ec_slot = float(log_weights.sum()) / slots_total
        ec_hw = math.nan
    ec_est = Estimate(
        value=ec_slot, half_width=ec_hw, n=cfg.trajectories, wide=cfg.trajectories < _MIN_TAIL
    )

    freqs = counts / slots_total
    hws = 1.96 * np.sqrt(freqs * (1.0 - freqs) / slots_total)

    chain = build_chain(params, scheme, model_sensing)
    analytical_success = success_from_steady(params, scheme, steady_state(chain))
    analytical_ec = (
        effective_capacity_from_chain(params, chain).ec_bits_per_slot if theta > 0 else None
    )
    suc_tx = _proportion(n_suc, n_tx)
    gap = suc_tx.value - analytical_success if n_tx > 0 else math.nan

    return SimReport(
        mode=cfg.mode,
        seed=cfg.seed,
        slots=cfg.slots,
        trajectories=cfg.trajectories,
        scheme=scheme.value,
        sensing_model=cfg.sensing_model,
        empirical_pi=freqs,
        pi_half_widths=hws,
        empirical_ec=ec_est,
        success_per_transmission=suc_tx,
        success_per_packet=_proportion(n_pkt_suc, n_pkts),
        sensing_estimates=(
            _proportion(busy_h0, sensed_h0),
            _proportion(busy_h1, sensed_h1),
        ),
        n_transmissions=n_tx,
        n_packets=n_pkts,
        analytical_success=analytical_success,
        analytical_ec_bits_per_slot=analytical_ec,
        fidelity_gap=gap,
    )


def _mean_energies(stream, slots, nb, sd):
    """Mean energy of nb complex Gaussian samples per slot, drawn in chunks."""
    out = np.empty(slots)
    chunk = max(1, min(slots, 2_000_000 // nb))
    done = 0
    while done < slots:
        m = min(chunk, slots - done)
        re = stream.normal(0.0, sd, (m, nb))
        im = stream.normal(0.0, sd, (m, nb))
        out[done : done + m] = (re * re + im * im).mean(axis=1)
        done += m
    return out
