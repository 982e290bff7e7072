"""Command-line entry points: replay, serve, validate.

Exit codes: 0 ok, 1 bundle validation failure, 2 runtime failure.
"""

from __future__ import annotations

import sys

import click

from .controller import parse_duration_ms, parse_policy
from .engine import load_bundle, replay as run_replay, trace_checksum
from .errors import BundleError, EngineError, FormatError


@click.group()
def main() -> None:
    """Goal-inference engine over interface event streams."""


def _load_bundle_or_exit(directory: str):
    try:
        return load_bundle(directory)
    except BundleError as exc:
        click.echo(str(exc), err=True)
        sys.exit(1)


def _parse_query_at(value: str) -> tuple[float, str]:
    time_text, sep, text = value.partition(":")
    if not sep or not text:
        raise FormatError(f"expected T:TEXT, got {value!r}")
    return parse_duration_ms(time_text), text


@main.command()
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--log", "log_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--policy", "policy_spec", default=None, help="pulsed:2s | event:a,b | augmented:2s:a | deferred:2s:1s")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--threshold", type=float, default=None, help="override the assistance threshold")
@click.option(
    "--query-at",
    "query_specs",
    multiple=True,
    help="T:TEXT — force a query cycle at virtual time T (e.g. 12s:how do I print)",
)
@click.option("--declared-level", default=None, help="declared expertise for the session profile")
def replay(bundle_dir, log_path, policy_spec, out_path, threshold, query_specs, declared_level):
    """Replay an event log deterministically and write one line per cycle."""
    bundle = _load_bundle_or_exit(bundle_dir)
    try:
        policy = parse_policy(policy_spec) if policy_spec else None
        queries = [_parse_query_at(q) for q in query_specs]
        results = run_replay(
            bundle,
            log_path,
            policy=policy,
            out_path=out_path,
            threshold=threshold,
            queries=queries,
            declared_level=declared_level,
        )
    except EngineError as exc:
        click.echo(f"replay failed: {exc}", err=True)
        sys.exit(2)
    click.echo(f"{len(results)} cycles -> {out_path} (sha256 {trace_checksum(out_path)})")


@main.command()
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--port", default=8000, type=int)
@click.option("--host", default="127.0.0.1")
@click.option("--console", "console_dir", default=None, type=click.Path(file_okay=False), help="serve a built console at /console")
def serve(bundle_dir, port, host, console_dir):
    """Host the live session service for consoles and clients."""
    import uvicorn

    from .service import create_app

    bundle = _load_bundle_or_exit(bundle_dir)
    app = create_app(bundle, console_dir=console_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--bundle", "bundle_dir", required=True, type=click.Path(exists=True, file_okay=False))
def validate(bundle_dir):
    """Validate a bundle directory and report every problem found."""
    bundle = _load_bundle_or_exit(bundle_dir)
    network = bundle.network
    click.echo(f"bundle ok: {bundle_dir}")
    click.echo(
        f"  network: {len(network.variables)} variables, assistance={network.assistance!r}, "
        f"goal variable {bundle.goal_variable!r} "
        f"({len(network.variables[bundle.goal_variable].states)} states)"
    )
    click.echo(
        f"  patterns: {len(bundle.program.filters)} filters "
        f"({len(bundle.program.output_names())} observation-mapped)"
    )
    click.echo(
        f"  terms: {len(bundle.term_model.vocabulary)} words over {len(bundle.term_model.goals)} goals"
    )
    click.echo(f"  indicators: {len(bundle.rules)} rules")


if __name__ == "__main__":
    main()
