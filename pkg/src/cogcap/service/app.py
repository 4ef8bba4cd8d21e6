"""FastAPI application exposing the cogcap computations."""

import dataclasses
import math

from fastapi import FastAPI, HTTPException

from .. import experiments as xp
from ..capacity import effective_capacity, effective_capacity_from_chain, optimize_rates
from ..chain import build_chain, steady_state, success_from_steady
from ..params import ParamError, SchemeKind, default_params, loads_config, validate
from ..outage import nack_access_prob, pu_outage_prob, pu_success_prob
from ..sensing import perfect_sensing_override, sensing_probs
from ..simulate import SimConfig, estimate_ec, sample_chain, simulate_protocol
from . import schemas as sc


def _core_params(model: sc.ParamsModel, allow_boundary: bool = False):
    try:
        return validate(model.to_core(), allow_boundary=allow_boundary)
    except ParamError as exc:
        raise HTTPException(status_code=422, detail=exc.violations) from exc


def _sensing(params, perfect: bool):
    return perfect_sensing_override() if perfect else sensing_probs(params)


def _nan_to_none(x):
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) else x


def _estimate(est):
    if est is None:
        return None
    # NaN fields (undefined estimates) serialize as JSON null
    return sc.EstimateModel(value=est.value, half_width=est.half_width, n=est.n, wide=est.wide)


def create_app() -> FastAPI:
    app = FastAPI(
        title="cogcap",
        description=(
            "Effective capacity of a feedback-aware cognitive secondary link and the "
            "primary user's packet success rate: analytical 10-state Markov model plus "
            "Monte Carlo cross-validation."
        ),
        version="0.1.0",
    )

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/params/validate", response_model=sc.ValidateResponse)
    def params_validate(req: sc.ValidateRequest):
        try:
            validate(req.params.to_core(), allow_boundary=req.allow_boundary)
        except ParamError as exc:
            return sc.ValidateResponse(valid=False, violations=exc.violations)
        return sc.ValidateResponse(valid=True)

    @app.get("/params/default", response_model=sc.ParamsModel)
    def params_default():
        return sc.ParamsModel.from_core(default_params())

    @app.post("/sensing", response_model=sc.SensingResponse)
    def sensing(req: sc.SensingRequest):
        params = _core_params(req.params)
        probs = _sensing(params, req.perfect)
        return sc.SensingResponse(
            p_false_alarm=probs.p_false_alarm, p_detection=probs.p_detection
        )

    @app.post("/outage", response_model=sc.OutageResponse)
    def outage(req: sc.OutageRequest):
        params = _core_params(req.params, allow_boundary=True)
        suc = tuple(pu_success_prob(params, j) for j in range(3))
        return sc.OutageResponse(
            pr_success=suc,
            pr_outage=tuple(pu_outage_prob(params, j) for j in range(3)),
            pr_nack_access=tuple(nack_access_prob(params, j) for j in range(3)),
        )

    @app.post("/chain", response_model=sc.ChainResponse)
    def chain(req: sc.ChainRequest):
        params = _core_params(req.params, allow_boundary=True)
        scheme = SchemeKind(req.scheme)
        probs = _sensing(params, req.perfect_sensing)
        model = build_chain(params, scheme, probs)
        steady = steady_state(model)
        return sc.ChainResponse(
            scheme=req.scheme,
            matrix=model.matrix.tolist(),
            pi=steady.pi.tolist(),
            beta=steady.beta.tolist(),
            snr=model.snr.tolist(),
            z_thresholds=model.z_thresholds.tolist(),
            base_probs=model.base_probs.tolist(),
            success_rate=success_from_steady(params, scheme, steady),
            states=[sc.StateInfo(**dataclasses.asdict(s)) for s in model.states],
        )

    @app.post("/ec", response_model=sc.EcResponse)
    def ec(req: sc.EcRequest):
        params = _core_params(req.params, allow_boundary=True)
        result = effective_capacity(
            params, SchemeKind(req.scheme), _sensing(params, req.perfect_sensing), req.theta
        )
        return sc.EcResponse(**dataclasses.asdict(result))

    @app.post("/ec/optimize", response_model=sc.OptimizeResponse)
    def ec_optimize(req: sc.OptimizeRequest):
        params = _core_params(req.params, allow_boundary=True)

        def grid(g):
            return None if g is None else (g.min, g.max, g.step)

        try:
            result = optimize_rates(
                params,
                SchemeKind(req.scheme),
                _sensing(params, req.perfect_sensing),
                r0_grid=grid(req.r0_grid),
                r1_grid=grid(req.r1_grid),
                r2_grid=grid(req.r2_grid),
                theta=req.theta,
                record_surface=req.record_surface,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return sc.OptimizeResponse(
            best=sc.EcResponse(**dataclasses.asdict(result.best)), surface=list(result.surface)
        )

    @app.post("/simulate", response_model=sc.SimulateResponse)
    def simulate(req: sc.SimulateRequest):
        params = _core_params(req.params, allow_boundary=True)
        scheme = SchemeKind(req.scheme)
        cfg = SimConfig(
            mode=req.mode,
            slots=req.slots,
            trajectories=req.trajectories,
            seed=req.seed,
            sensing_model=req.sensing_model,
        )
        probs = _sensing(params, req.perfect_sensing)
        if req.mode == "protocol":
            report = simulate_protocol(params, scheme, cfg, sensing=probs)
        else:
            model = build_chain(params, scheme, probs)
            if params.qos_exponent > 0:
                report = estimate_ec(model, params, cfg)
                pi_report = sample_chain(model, cfg)
                report = dataclasses.replace(
                    report,
                    empirical_pi=pi_report.empirical_pi,
                    pi_half_widths=pi_report.pi_half_widths,
                    trajectory_digest=pi_report.trajectory_digest,
                )
            else:
                report = sample_chain(model, cfg)
        return sc.SimulateResponse(
            mode=report.mode,
            scheme=report.scheme,
            seed=report.seed,
            slots=report.slots,
            trajectories=report.trajectories,
            empirical_pi=None if report.empirical_pi is None else report.empirical_pi.tolist(),
            empirical_ec=_estimate(report.empirical_ec),
            success_per_transmission=_estimate(report.success_per_transmission),
            success_per_packet=_estimate(report.success_per_packet),
            sensing_estimates=(
                None
                if report.sensing_estimates is None
                else tuple(_estimate(e) for e in report.sensing_estimates)
            ),
            n_transmissions=report.n_transmissions,
            n_packets=report.n_packets,
            analytical_success=_nan_to_none(report.analytical_success),
            analytical_ec_bits_per_slot=report.analytical_ec_bits_per_slot,
            fidelity_gap=_nan_to_none(report.fidelity_gap),
            trajectory_digest=report.trajectory_digest,
            csv_text=report.to_csv_text(),
            summary=report.summary(),
        )

    @app.get("/experiments/presets", response_model=sc.PresetListResponse)
    def presets():
        return sc.PresetListResponse(presets=list(xp.list_presets()))

    @app.get("/experiments/presets/{name}", response_model=sc.PresetInfoResponse)
    def preset_info(name: str):
        try:
            text = xp.describe_preset(name)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return sc.PresetInfoResponse(name=name, text=text)

    @app.post("/experiments/run", response_model=sc.ExperimentResponse)
    def run(req: sc.ExperimentRequest):
        if req.config_text is not None:
            try:
                params = validate(loads_config(req.config_text))
            except ParamError as exc:
                raise HTTPException(status_code=422, detail=exc.violations) from exc
        else:
            params = default_params()

        overrides = {"seed": req.seed, "simulate": req.simulate}
        for field in ("ec_sim_trajectories", "ec_sim_slots", "protocol_slots"):
            value = getattr(req, field)
            if value is not None:
                overrides[field] = value

        try:
            if req.preset is not None:
                exp = xp.preset_experiment(req.preset, params, **overrides)
                if req.sweep_var is not None or req.sweep_values is not None:
                    exp = dataclasses.replace(
                        exp,
                        sweep_var=req.sweep_var or exp.sweep_var,
                        sweep_values=tuple(req.sweep_values or exp.sweep_values),
                    )
            else:
                if req.sweep_var is None or not req.sweep_values:
                    raise HTTPException(
                        status_code=422,
                        detail="either a preset or a sweep_var with sweep_values is required",
                    )
                exp = xp.Experiment(
                    name=f"sweep_{req.sweep_var}",
                    params=params,
                    sweep_var=req.sweep_var,
                    sweep_values=tuple(req.sweep_values),
                    schemes=tuple(SchemeKind(s) for s in (req.schemes or ["DPL", "TPL"])),
                    sensing_modes=tuple(req.sensing_modes or ["model"]),
                    **overrides,
                )
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

        if req.schemes is not None and req.preset is not None:
            exp = dataclasses.replace(exp, schemes=tuple(SchemeKind(s) for s in req.schemes))
        if req.sensing_modes is not None and req.preset is not None:
            exp = dataclasses.replace(exp, sensing_modes=tuple(req.sensing_modes))

        try:
            result = xp.run_experiment(exp)
        except ParamError as exc:
            raise HTTPException(status_code=422, detail=exc.violations) from exc
        rows = [[_nan_to_none(v) if isinstance(v, float) else v for v in row] for row in result.rows]
        return sc.ExperimentResponse(
            name=result.name,
            sweep_var=result.sweep_var,
            metric=result.metric,
            columns=list(result.columns),
            rows=rows,
            csv_text=result.csv_text,
            description=exp.description,
        )

    return app
