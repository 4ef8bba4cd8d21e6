"""System parameters: definition, validation, flat-file (de)serialization.

All powers are carried as per-Hz spectral densities (W/Hz), so downstream
SNR expressions never multiply by the bandwidth.
"""

from dataclasses import dataclass, fields, replace
from enum import Enum
from importlib import resources
from pathlib import Path


class SchemeKind(Enum):
    """Secondary-user power adaptation scheme.

    DPL: two power levels; after overhearing a NACK the SU transmits the whole
    slot at P1 without sensing. TPL: adds a third, lowest level P0 used for
    the NACK slot. DPL ignores P0 and r0 entirely.
    """

    DPL = "DPL"
    TPL = "TPL"


class ParamError(ValueError):
    """Raised when a parameter set violates an invariant or a file is malformed."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class SystemParams:
    frame_duration_s: float      # slot/frame length T (s)
    sensing_duration_s: float    # sensing window N at the head of each frame (s)
    bandwidth_hz: float          # channel bandwidth B (Hz)
    pu_prior: float              # prior probability the PU occupies the channel
    detector_threshold: float    # energy detector threshold (per-sample mean energy)
    noise_psd: float             # AWGN power spectral density at the SU receiver (W/Hz)
    pu_signal_var: float         # PU interference PSD seen by the SU detector (W/Hz)
    su_power_psd: tuple          # SU power PSDs (P0/B, P1/B, P2/B), W/Hz
    pu_power_psd: float          # PU transmit PSD (W/Hz)
    su_rates_bps: tuple          # SU fixed rates (r0, r1, r2), bits/s
    pu_rate_bps: float           # PU fixed rate, bits/s
    fading_pp: float             # exponential rate of the PU->PU-receiver power gain
    fading_sp: float             # exponential rate of the SU->PU-receiver power gain
    fading_ss_mean: float        # mean of the SU-link power gain z
    qos_exponent: float          # QoS exponent theta (1/bits)
    feedback_miss_prob: float    # probability the SU fails to overhear a PU NACK

    def __post_init__(self):
        object.__setattr__(self, "su_power_psd", tuple(float(x) for x in self.su_power_psd))
        object.__setattr__(self, "su_rates_bps", tuple(float(x) for x in self.su_rates_bps))

    def replace(self, **kwargs) -> "SystemParams":
        return replace(self, **kwargs)


# Fields that may be omitted from a config file.
_DEFAULTS = {
    "pu_signal_var": 1.0,
    "fading_ss_mean": 1.0,
}

_LIST_FIELDS = {"su_power_psd": 3, "su_rates_bps": 3}
_FIELD_NAMES = [f.name for f in fields(SystemParams)]


def validate(params: SystemParams, allow_boundary: bool = False) -> SystemParams:
    """Check every parameter invariant; return the set unchanged if all hold.

    allow_boundary additionally accepts P0 == P1 (and P1 == P2), the degenerate
    configuration used to check that the three-level scheme collapses onto the
    two-level one at the top of the P0 sweep.

    Raises ParamError listing every violated invariant by field name.
    """
    p = params
    bad = []
    if not p.frame_duration_s > 0:
        bad.append("frame_duration_s must be > 0")
    if not 0 < p.sensing_duration_s < p.frame_duration_s:
        bad.append("sensing_duration_s must satisfy 0 < N < T (frame_duration_s)")
    if not p.bandwidth_hz > 0:
        bad.append("bandwidth_hz must be > 0")
    if not 0.0 <= p.pu_prior <= 1.0:
        bad.append("pu_prior must lie in [0, 1]")
    if not 0.0 <= p.feedback_miss_prob <= 1.0:
        bad.append("feedback_miss_prob must lie in [0, 1]")
    if not p.qos_exponent >= 0:
        bad.append("qos_exponent must be >= 0")
    if not p.detector_threshold > 0:
        bad.append("detector_threshold must be > 0")
    if not p.noise_psd > 0:
        bad.append("noise_psd must be > 0")
    if not p.pu_signal_var >= 0:
        bad.append("pu_signal_var must be >= 0")
    if len(p.su_power_psd) != 3:
        bad.append("su_power_psd must have exactly 3 entries")
    else:
        p0, p1, p2 = p.su_power_psd
        if not p0 >= 0:
            bad.append("su_power_psd[0] must be >= 0")
        ordered = p0 < p1 < p2 or (allow_boundary and p0 <= p1 <= p2)
        if not ordered:
            bad.append("su_power_psd must be strictly increasing (P0 < P1 < P2)")
    if not p.pu_power_psd > 0:
        bad.append("pu_power_psd must be > 0")
    if len(p.su_rates_bps) != 3:
        bad.append("su_rates_bps must have exactly 3 entries")
    elif not all(r > 0 for r in p.su_rates_bps):
        bad.append("su_rates_bps entries must be > 0")
    if not p.pu_rate_bps > 0:
        bad.append("pu_rate_bps must be > 0")
    for name in ("fading_pp", "fading_sp", "fading_ss_mean"):
        if not getattr(p, name) > 0:
            bad.append(f"{name} must be > 0")
    if bad:
        raise ParamError(bad)
    return p


def _format_value(name, value):
    if name in _LIST_FIELDS:
        return ", ".join(repr(float(v)) for v in value)
    return repr(float(value))


def save_config(params: SystemParams, path) -> None:
    """Write a flat key = value config file; load_config(save_config(p)) == p exactly."""
    lines = ["# cogcap parameter file (one key per line, '#' starts a comment)"]
    for name in _FIELD_NAMES:
        lines.append(f"{name} = {_format_value(name, getattr(params, name))}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_config(path) -> SystemParams:
    """Parse a flat config file into SystemParams.

    Every key is mandatory except pu_signal_var and fading_ss_mean (default 1.0).
    Malformed lines, unknown/duplicate keys and unparsable numbers are reported
    with their line number; missing keys are reported by field name.
    """
    return loads_config(Path(path).read_text(encoding="utf-8"))


def loads_config(text: str) -> SystemParams:
    """Parse config file content given as a string (same rules as load_config)."""
    seen = {}
    errors = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _FIELD_NAMES:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in seen:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        try:
            if key in _LIST_FIELDS:
                parts = [s.strip() for s in value.split(",")]
                if len(parts) != _LIST_FIELDS[key]:
                    raise ValueError(f"expected {_LIST_FIELDS[key]} comma-separated values")
                seen[key] = tuple(float(s) for s in parts)
            else:
                seen[key] = float(value)
        except ValueError as exc:
            errors.append(f"line {lineno}: invalid value for {key!r}: {exc}")
    for name in _FIELD_NAMES:
        if name not in seen:
            if name in _DEFAULTS:
                seen[name] = _DEFAULTS[name]
            else:
                errors.append(f"missing field {name!r}")
    if errors:
        raise ParamError(errors)
    return SystemParams(**seen)


def default_config_path() -> Path:
    """Path of the packaged default config (the published numerical setup)."""
    return Path(resources.files("cogcap").joinpath("data", "defaults.cfg"))


def default_params() -> SystemParams:
    return validate(load_config(default_config_path()))
