"""Command-line client for the cogcap service.

Every subcommand talks HTTP to the service: by default an in-process instance
(no server required), or a remote one via --server. File input/output stays on
the client side; the math lives behind the service API.
"""

import sys
import warnings
from pathlib import Path

import click
import httpx

from .experiments import ExperimentResult, write_plot
from .service import create_app


def _client(server):
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    with warnings.catch_warnings():
        # the import may warn about its own transport internals; not actionable here
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient  # in-process ASGI transport

    return TestClient(create_app())


def _fail(message, code=1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _checked(response):
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except Exception:
            detail = response.text
        if isinstance(detail, list):
            detail = "; ".join(str(d) for d in detail)
        _fail(f"service returned {response.status_code}: {detail}")
    return response.json()


def _parse_sweep(text):
    """--sweep VAR:MIN:MAX:POINTS, e.g. P0:0:0.25:21."""
    parts = text.split(":")
    if len(parts) != 4:
        _fail(f"--sweep expects VAR:MIN:MAX:POINTS, got {text!r}", code=2)
    var = parts[0]
    try:
        lo, hi = float(parts[1]), float(parts[2])
        n = int(parts[3])
    except ValueError:
        _fail(f"--sweep expects numeric MIN:MAX:POINTS, got {text!r}", code=2)
    if n < 1 or hi < lo:
        _fail(f"--sweep needs POINTS >= 1 and MAX >= MIN, got {text!r}", code=2)
    values = [lo] if n == 1 else [lo + (hi - lo) * k / (n - 1) for k in range(n)]
    return var, values


@click.group()
def main():
    """Effective-capacity experiments for a feedback-aware cognitive link."""


@main.command("list")
@click.option("--server", default=None, help="Base URL of a running service (default: in-process).")
def list_cmd(server):
    """List the available experiment presets."""
    with _client(server) as client:
        data = _checked(client.get("/experiments/presets"))
    for name in data["presets"]:
        click.echo(name)


@main.command()
@click.argument("preset")
@click.option("--server", default=None, help="Base URL of a running service (default: in-process).")
def describe(preset, server):
    """Describe a preset: sweep, schemes, parameter deltas."""
    with _client(server) as client:
        data = _checked(client.get(f"/experiments/presets/{preset}"))
    click.echo(data["text"])


@main.command()
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Flat parameter file (default: the packaged defaults).")
@click.option("--preset", default=None, help="Named experiment preset (fig2..fig5).")
@click.option("--sweep", default=None, help="Custom sweep VAR:MIN:MAX:POINTS (VAR in P0/eps/theta/lambda).")
@click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True,
              help="Directory for the CSV/plot output.")
@click.option("--seed", type=int, default=12345, show_default=True, help="Simulation seed.")
@click.option("--no-sim", is_flag=True, help="Analytical columns only (skip Monte Carlo).")
@click.option("--ec-trajectories", type=int, default=None, help="Trajectories for the EC estimator.")
@click.option("--ec-slots", type=int, default=None, help="Slots per EC-estimator trajectory.")
@click.option("--protocol-slots", type=int, default=None, help="Slots for the protocol simulator.")
@click.option("--scheme", "schemes", multiple=True, type=click.Choice(["DPL", "TPL"]),
              help="Restrict to specific schemes (repeatable).")
@click.option("--server", default=None, help="Base URL of a running service (default: in-process).")
def run(config, preset, sweep, out_dir, seed, no_sim, ec_trajectories, ec_slots,
        protocol_slots, schemes, server):
    """Run a preset or custom sweep; writes <name>.csv (and <name>.svg) to --out-dir."""
    if preset is None and sweep is None:
        _fail("provide --preset and/or --sweep", code=2)
    body = {"seed": seed, "simulate": not no_sim}
    if config is not None:
        body["config_text"] = Path(config).read_text(encoding="utf-8")
    if preset is not None:
        body["preset"] = preset
    if sweep is not None:
        var, values = _parse_sweep(sweep)
        body["sweep_var"] = var
        body["sweep_values"] = values
    if schemes:
        body["schemes"] = list(schemes)
    if ec_trajectories is not None:
        body["ec_sim_trajectories"] = ec_trajectories
    if ec_slots is not None:
        body["ec_sim_slots"] = ec_slots
    if protocol_slots is not None:
        body["protocol_slots"] = protocol_slots

    with _client(server) as client:
        data = _checked(client.post("/experiments/run", json=body))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{data['name']}.csv"
    csv_path.write_text(data["csv_text"], encoding="utf-8")
    click.echo(f"wrote {csv_path}")

    result = ExperimentResult(
        name=data["name"],
        sweep_var=data["sweep_var"],
        columns=tuple(data["columns"]),
        rows=tuple(tuple(row) for row in data["rows"]),
        csv_text=data["csv_text"],
        metric=data["metric"],
    )
    plot_path = out / f"{data['name']}.svg"
    if write_plot(result, plot_path):
        click.echo(f"wrote {plot_path}")
    else:
        click.echo("plot skipped (no backend); CSV written", err=True)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
