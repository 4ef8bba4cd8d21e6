import pytest
from fastapi.testclient import TestClient

import cogcap as cc
from cogcap.service import create_app
from cogcap.service.schemas import ParamsModel


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


@pytest.fixture(scope="module")
def table1_json():
    return ParamsModel.from_core(cc.default_params()).model_dump()


def test_health(client):
    assert client.get("/health").json() == {"status": "ok"}


def test_default_params_endpoint(client, table1):
    data = client.get("/params/default").json()
    assert ParamsModel(**data).to_core() == table1


def test_validate_endpoint(client, table1_json):
    ok = client.post("/params/validate", json={"params": table1_json}).json()
    assert ok == {"valid": True, "violations": []}
    bad = dict(table1_json, pu_prior=2.0)
    res = client.post("/params/validate", json={"params": bad}).json()
    assert res["valid"] is False
    assert any("pu_prior" in v for v in res["violations"])
    boundary = dict(table1_json, su_power_psd=[0.25, 0.25, 1.0])
    assert client.post("/params/validate", json={"params": boundary}).json()["valid"] is False
    assert client.post(
        "/params/validate", json={"params": boundary, "allow_boundary": True}
    ).json()["valid"] is True


def test_invalid_params_rejected_with_detail(client, table1_json):
    bad = dict(table1_json, sensing_duration_s=0.05)
    res = client.post("/ec", json={"params": bad, "scheme": "DPL"})
    assert res.status_code == 422
    assert any("sensing_duration_s" in str(d) for d in res.json()["detail"])


def test_sensing_endpoint_matches_library(client, table1_json, table1, table1_sensing):
    data = client.post("/sensing", json={"params": table1_json}).json()
    assert data["p_false_alarm"] == table1_sensing.p_false_alarm
    assert data["p_detection"] == table1_sensing.p_detection
    perfect = client.post("/sensing", json={"params": table1_json, "perfect": True}).json()
    assert perfect == {"p_false_alarm": 0.0, "p_detection": 1.0}


def test_outage_endpoint_matches_library(client, table1_json, table1):
    data = client.post("/outage", json={"params": table1_json}).json()
    for j in range(3):
        assert data["pr_success"][j] == cc.pu_success_prob(table1, j)
        assert data["pr_outage"][j] == cc.pu_outage_prob(table1, j)
        assert data["pr_nack_access"][j] == cc.nack_access_prob(table1, j)


def test_chain_endpoint(client, table1_json, table1, table1_sensing):
    data = client.post("/chain", json={"params": table1_json, "scheme": "TPL"}).json()
    assert len(data["matrix"]) == 10
    for row in data["matrix"]:
        assert sum(row) == pytest.approx(1.0, abs=1e-12)
    assert data["success_rate"] == cc.pu_success_rate(table1, cc.SchemeKind.TPL, table1_sensing)
    assert [s["outcome"] for s in data["states"][:2]] == ["B-B", "B-B"]
    assert data["snr"] == [0.125, 0.5, 0.25, 1.0, 0.05]


def test_ec_endpoint_matches_library(client, table1_json, table1, table1_sensing):
    data = client.post("/ec", json={"params": table1_json, "scheme": "DPL"}).json()
    direct = cc.effective_capacity(table1, cc.SchemeKind.DPL, table1_sensing)
    assert data["ec_bits_per_slot"] == direct.ec_bits_per_slot
    assert data["spectral_radius"] == direct.spectral_radius
    themed = client.post(
        "/ec", json={"params": table1_json, "scheme": "DPL", "theta": 0.1}
    ).json()
    assert themed["theta"] == 0.1
    assert themed["ec_bits_per_slot"] < data["ec_bits_per_slot"]


def test_optimize_endpoint(client, table1_json, table1, table1_sensing):
    body = {
        "params": table1_json,
        "scheme": "TPL",
        "r1_grid": {"min": 800.0, "max": 1200.0, "step": 200.0},
        "record_surface": True,
    }
    data = client.post("/ec/optimize", json=body).json()
    assert len(data["surface"]) == 3
    best = max(v for *_, v in data["surface"])
    assert data["best"]["ec_bits_per_slot"] == best
    bad = client.post(
        "/ec/optimize",
        json={"params": table1_json, "scheme": "TPL",
              "r1_grid": {"min": 900.0, "max": 800.0, "step": 100.0}},
    )
    assert bad.status_code == 422


def test_simulate_endpoint_deterministic(client, table1_json):
    body = {"params": table1_json, "scheme": "TPL", "mode": "protocol",
            "slots": 4000, "seed": 11}
    a = client.post("/simulate", json=body).json()
    b = client.post("/simulate", json=body).json()
    assert a["csv_text"] == b["csv_text"]
    assert a["fidelity_gap"] is not None
    assert a["success_per_transmission"]["n"] == a["n_transmissions"]
    assert "fidelity gap" in a["summary"]


def test_simulate_undefined_success_serializes_as_null(client, table1_json):
    idle = dict(table1_json, pu_prior=0.0)
    body = {"params": idle, "scheme": "TPL", "mode": "protocol", "slots": 1000, "seed": 1}
    data = client.post("/simulate", json=body).json()
    assert data["success_per_transmission"]["value"] is None
    assert data["success_per_transmission"]["wide"] is True
    assert data["n_transmissions"] == 0


def test_simulate_chain_mode_reports_pi_and_ec(client, table1_json):
    body = {"params": table1_json, "scheme": "DPL", "mode": "chain-sampling",
            "slots": 3000, "trajectories": 10, "seed": 12}
    data = client.post("/simulate", json=body).json()
    assert data["empirical_pi"] is not None
    assert sum(data["empirical_pi"]) == pytest.approx(1.0, abs=1e-9)
    assert data["empirical_ec"] is not None
    assert data["trajectory_digest"]


def test_preset_endpoints(client):
    names = client.get("/experiments/presets").json()["presets"]
    assert names == ["fig2", "fig3", "fig4", "fig5"]
    info = client.get("/experiments/presets/fig2").json()
    assert info["name"] == "fig2" and "P0" in info["text"]
    assert client.get("/experiments/presets/fig7").status_code == 404


def test_run_experiment_endpoint_matches_library(client, table1):
    body = {"preset": "fig2", "simulate": False}
    data = client.post("/experiments/run", json=body).json()
    direct = cc.run_experiment(cc.preset_experiment("fig2", table1, simulate=False))
    assert data["csv_text"] == direct.csv_text
    assert data["columns"] == list(direct.columns)
    assert len(data["rows"]) == len(direct.rows)


def test_run_custom_sweep(client):
    body = {
        "sweep_var": "eps",
        "sweep_values": [0.0, 0.2, 0.4],
        "schemes": ["TPL"],
        "simulate": False,
    }
    data = client.post("/experiments/run", json=body).json()
    assert data["name"] == "sweep_eps"
    assert len(data["rows"]) == 3
    assert data["columns"][3] == "eps"


def test_run_experiment_errors(client):
    assert client.post("/experiments/run", json={"simulate": False}).status_code == 422
    assert (
        client.post("/experiments/run", json={"preset": "nope", "simulate": False}).status_code
        == 404
    )
    bad_cfg = client.post(
        "/experiments/run",
        json={"preset": "fig2", "config_text": "pu_prior = 0.1\n", "simulate": False},
    )
    assert bad_cfg.status_code == 422
    assert any("missing field" in str(d) for d in bad_cfg.json()["detail"])
    bad_grid = client.post(
        "/experiments/run",
        json={"sweep_var": "P0", "sweep_values": [0.0, 5.0], "simulate": False},
    )
    assert bad_grid.status_code == 422


def test_run_experiment_with_config_text(client, table1):
    text = cc.default_config_path().read_text()
    data = client.post(
        "/experiments/run",
        json={"preset": "fig2", "config_text": text, "simulate": False},
    ).json()
    direct = cc.run_experiment(cc.preset_experiment("fig2", table1, simulate=False))
    assert data["csv_text"] == direct.csv_text
