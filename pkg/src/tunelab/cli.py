"""Command-line client for the tuning service.

By default commands talk to an in-process instance of the service, so no
server needs to be running; ``--server URL`` points them at a remote one
instead. Exit codes: 0 success, 2 configuration error, 3 runtime abort.
"""

from __future__ import annotations

import csv
import io
import json
import sys

import click
import httpx

from .config import ConfigurationError, apply_overrides, load_document

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ServiceClient:
    """httpx against a remote server, or the ASGI app in-process."""

    def __init__(self, server: str | None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            import warnings

            with warnings.catch_warnings():
                # some starlette releases warn about their own test-client shim
                warnings.simplefilter("ignore", DeprecationWarning)
                from fastapi.testclient import TestClient

            from .service.app import app

            self._client = TestClient(app)

    def post(self, path: str, payload: dict) -> httpx.Response:
        return self._client.post(path, json=payload)

    def get(self, path: str) -> httpx.Response:
        return self._client.get(path)


def _format_detail(detail) -> str:
    if isinstance(detail, str):
        return detail
    lines = []
    for err in detail:
        loc = [str(p) for p in err.get("loc", []) if p not in ("body", "config")]
        lines.append(f"{'.'.join(loc) or '<root>'}: {err.get('msg', 'invalid')}")
    return "; ".join(lines)


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_effective(config_path: str, overrides: tuple[str, ...], output: str | None) -> dict:
    try:
        doc = load_document(config_path)
        doc = apply_overrides(doc, list(overrides))
    except (OSError, ConfigurationError, ValueError) as exc:
        _fail(str(exc), EXIT_CONFIG)
    if output:
        doc.setdefault("output", {})["dir"] = output
    return doc


def _submit(client: ServiceClient, path: str, doc: dict, output: str | None, quiet: bool) -> None:
    try:
        response = client.post(path, {"config": doc, "output_dir": output})
    except httpx.HTTPError as exc:
        _fail(f"cannot reach server: {exc}", EXIT_RUNTIME)
    if response.status_code in (400, 422):
        _fail(_format_detail(response.json().get("detail")), EXIT_CONFIG)
    if response.status_code != 200:
        _fail(_format_detail(response.json().get("detail", response.text)), EXIT_RUNTIME)
    if not quiet:
        click.echo(json.dumps(response.json(), indent=2))


@click.group()
def main() -> None:
    """Hyperparameter tuning studies: run, compare, inspect."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override a config entry.")
@click.option("--output", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("--quiet", is_flag=True, default=False)
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
def run(config_path, overrides, output, quiet, server) -> None:
    """Run a single study from a config file."""
    doc = _load_effective(config_path, overrides, output)
    _submit(ServiceClient(server), "/runs", doc, output, quiet)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE")
@click.option("--output", type=click.Path(file_okay=False), default=None)
@click.option("--quiet", is_flag=True, default=False)
@click.option("--server", default=None)
def matrix(config_path, overrides, output, quiet, server) -> None:
    """Run a sampler-by-objective comparison matrix."""
    doc = _load_effective(config_path, overrides, output)
    _submit(ServiceClient(server), "/matrix", doc, output, quiet)


@main.command()
@click.argument("ledger", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["table", "csv"]), default="table")
@click.option("--direction", type=click.Choice(["minimize", "maximize"]), default="minimize",
              help="Direction used to compute best-so-far.")
@click.option("--server", default=None)
def history(ledger, fmt, direction, server) -> None:
    """Print iteration, score, best-so-far, and source for a trial ledger."""
    client = ServiceClient(server)
    try:
        response = client.post("/ledger/inspect", {"path": ledger, "direction": direction})
    except httpx.HTTPError as exc:
        _fail(f"cannot reach server: {exc}", EXIT_RUNTIME)
    if response.status_code != 200:
        _fail(_format_detail(response.json().get("detail", response.text)), EXIT_RUNTIME)
    body = response.json()
    rows = body["rows"]
    if body["skipped"]:
        click.echo(f"warning: skipped {body['skipped']} corrupt line(s)", err=True)
    header = ["iteration", "score", "best_so_far", "source"]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(header)
        for row in rows:
            writer.writerow([row["iteration"], row["score"], row["best_so_far"], row["source"]])
        click.echo(buf.getvalue(), nl=False)
    else:
        widths = [10, 14, 14, 12]
        click.echo("".join(h.ljust(w) for h, w in zip(header, widths)))
        for row in rows:
            cells = [str(row["iteration"]), f"{row['score']:.6g}", f"{row['best_so_far']:.6g}", row["source"]]
            click.echo("".join(c.ljust(w) for c, w in zip(cells, widths)))
    if not rows:
        sys.exit(1)


@main.command()
@click.argument("kind", type=click.Choice(["run", "matrix"]), default="run")
def schema(kind) -> None:
    """Print the published JSON Schema for config documents."""
    from .config import MatrixConfig, RunConfig

    model = RunConfig if kind == "run" else MatrixConfig
    click.echo(json.dumps(model.model_json_schema(), indent=2))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host, port) -> None:
    """Serve the tuning API over HTTP."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
