"""Pydantic request/response models for the cogcap service."""

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

from ..params import SystemParams

SchemeName = Literal["DPL", "TPL"]


class ParamsModel(BaseModel):
    frame_duration_s: float
    sensing_duration_s: float
    bandwidth_hz: float
    pu_prior: float
    detector_threshold: float
    noise_psd: float
    pu_signal_var: float = 1.0
    su_power_psd: Tuple[float, float, float]
    pu_power_psd: float
    su_rates_bps: Tuple[float, float, float]
    pu_rate_bps: float
    fading_pp: float
    fading_sp: float
    fading_ss_mean: float = 1.0
    qos_exponent: float
    feedback_miss_prob: float

    def to_core(self) -> SystemParams:
        return SystemParams(**self.model_dump())

    @classmethod
    def from_core(cls, params: SystemParams) -> "ParamsModel":
        return cls(
            frame_duration_s=params.frame_duration_s,
            sensing_duration_s=params.sensing_duration_s,
            bandwidth_hz=params.bandwidth_hz,
            pu_prior=params.pu_prior,
            detector_threshold=params.detector_threshold,
            noise_psd=params.noise_psd,
            pu_signal_var=params.pu_signal_var,
            su_power_psd=params.su_power_psd,
            pu_power_psd=params.pu_power_psd,
            su_rates_bps=params.su_rates_bps,
            pu_rate_bps=params.pu_rate_bps,
            fading_pp=params.fading_pp,
            fading_sp=params.fading_sp,
            fading_ss_mean=params.fading_ss_mean,
            qos_exponent=params.qos_exponent,
            feedback_miss_prob=params.feedback_miss_prob,
        )


class ValidateRequest(BaseModel):
    params: ParamsModel
    allow_boundary: bool = False


class ValidateResponse(BaseModel):
    valid: bool
    violations: List[str] = []


class SensingRequest(BaseModel):
    params: ParamsModel
    perfect: bool = False


class SensingResponse(BaseModel):
    p_false_alarm: float
    p_detection: float


class OutageRequest(BaseModel):
    params: ParamsModel


class OutageResponse(BaseModel):
    pr_success: Tuple[float, float, float]
    pr_outage: Tuple[float, float, float]
    pr_nack_access: Tuple[float, float, float]


class StateInfo(BaseModel):
    index: int
    pu_active: bool
    outcome: str
    channel_on: bool
    power_level: int
    duration_s: float


class ChainRequest(BaseModel):
    params: ParamsModel
    scheme: SchemeName
    perfect_sensing: bool = False


class ChainResponse(BaseModel):
    scheme: SchemeName
    matrix: List[List[float]]
    pi: List[float]
    beta: List[float]
    snr: List[float]
    z_thresholds: List[float]
    base_probs: List[float]
    success_rate: float
    states: List[StateInfo]


class EcRequest(BaseModel):
    params: ParamsModel
    scheme: SchemeName
    perfect_sensing: bool = False
    theta: Optional[float] = None


class EcResponse(BaseModel):
    theta: float
    spectral_radius: float
    ec_bits_per_slot: float
    ec_bits_per_sec: float
    rates_used: Tuple[float, float, float]


class RateGrid(BaseModel):
    min: float
    max: float
    step: float


class OptimizeRequest(BaseModel):
    params: ParamsModel
    scheme: SchemeName
    perfect_sensing: bool = False
    theta: Optional[float] = None
    r0_grid: Optional[RateGrid] = None
    r1_grid: Optional[RateGrid] = None
    r2_grid: Optional[RateGrid] = None
    record_surface: bool = False


class OptimizeResponse(BaseModel):
    best: EcResponse
    surface: List[Tuple[float, float, float, float]] = []


class EstimateModel(BaseModel):
    value: float
    half_width: float
    n: int
    wide: bool


class SimulateRequest(BaseModel):
    params: ParamsModel
    scheme: SchemeName
    mode: Literal["chain-sampling", "protocol"] = "chain-sampling"
    slots: int = Field(default=10_000, ge=1)
    trajectories: int = Field(default=1, ge=1)
    seed: int = 0
    sensing_model: Literal["bernoulli", "symbol-level"] = "bernoulli"
    perfect_sensing: bool = False


class SimulateResponse(BaseModel):
    mode: str
    scheme: str
    seed: int
    slots: int
    trajectories: int
    empirical_pi: Optional[List[float]] = None
    empirical_ec: Optional[EstimateModel] = None
    success_per_transmission: Optional[EstimateModel] = None
    success_per_packet: Optional[EstimateModel] = None
    sensing_estimates: Optional[Tuple[EstimateModel, EstimateModel]] = None
    n_transmissions: int = 0
    n_packets: int = 0
    analytical_success: Optional[float] = None
    analytical_ec_bits_per_slot: Optional[float] = None
    fidelity_gap: Optional[float] = None
    trajectory_digest: Optional[str] = None
    csv_text: str
    summary: str


class ExperimentRequest(BaseModel):
    preset: Optional[str] = None
    config_text: Optional[str] = None  # flat config file content; None = packaged defaults
    sweep_var: Optional[Literal["P0", "eps", "theta", "lambda"]] = None
    sweep_values: Optional[List[float]] = None
    schemes: Optional[List[SchemeName]] = None
    sensing_modes: Optional[List[Literal["model", "perfect"]]] = None
    seed: int = 12345
    simulate: bool = True
    ec_sim_trajectories: Optional[int] = None
    ec_sim_slots: Optional[int] = None
    protocol_slots: Optional[int] = None


class ExperimentResponse(BaseModel):
    name: str
    sweep_var: str
    metric: str
    columns: List[str]
    rows: List[List[Optional[object]]]
    csv_text: str
    description: str = ""


class PresetListResponse(BaseModel):
    presets: List[str]


class PresetInfoResponse(BaseModel):
    name: str
    text: str
