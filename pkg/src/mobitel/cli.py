"""mobsim: command-line synthetic client.

Subcommands: gen (write a trace as segment files), upload (drive the
full protocol against a server), loadtest (fixed-cadence encrypted
requests with a latency report), bench (local decrypt timing), and
inbox (poll push messages).

Exit codes: 0 success, 1 partial failure, 2 configuration error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import requests

from . import crypto, report, simclient, trace
from .segments import serialize_segments

DEFAULT_CONFIG = "mobsim.json"


def _client_config(config_path: str, server: str | None) -> simclient.ClientConfig:
    try:
        return simclient.ClientConfig.load(config_path, server_url=server)
    except simclient.ClientConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(simclient.EXIT_CONFIG)


@click.group()
def main() -> None:
    """Synthetic mobility client and load driver."""


@main.command()
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="trace.json")
@click.option("--interval", type=int, default=20, show_default=True,
              help="sample interval in seconds")
def gen(seed: int, out: str, interval: int) -> None:
    """Generate a deterministic trace and write it as a segment file."""
    spec = trace.default_trace_spec(seed)
    spec.sample_interval_s = interval
    points = trace.generate_trace(spec)
    segments, _ = simclient.segment_trace(points)
    Path(out).write_text(serialize_segments(segments, include_power=True) + "\n")
    click.echo(f"wrote {len(segments)} segment(s), {len(points)} samples to {out}")


@main.command()
@click.option("--server", default=None, help="server base URL")
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--config", "config_path", default=DEFAULT_CONFIG, show_default=True)
@click.option("--no-silence", is_flag=True, help="disable the silence feature")
def upload(server: str | None, seed: int, config_path: str, no_silence: bool) -> None:
    """Generate a trace and upload it through the full protocol."""
    config = _client_config(config_path, server)
    if no_silence:
        config.silence_feature = False
    points = trace.generate_trace(trace.default_trace_spec(seed))
    result = simclient.run_upload(config, points)
    for envelope in result.envelopes:
        click.echo(json.dumps(envelope))
    for error in result.transport_errors:
        click.echo(f"transport error: {error}", err=True)
    click.echo(
        f"{result.segments_built} segment(s) from {result.samples_generated} samples"
    )
    sys.exit(result.exit_code)


@main.command()
@click.option("--server", default=None)
@click.option("--period", type=float, default=10.0, show_default=True)
@click.option("--duration", type=float, default=60.0, show_default=True)
@click.option("--key-bits", type=int, default=2048, show_default=True)
@click.option("--config", "config_path", default=DEFAULT_CONFIG, show_default=True)
@click.option("--out-dir", default="reports", show_default=True)
def loadtest(
    server: str | None,
    period: float,
    duration: float,
    key_bits: int,
    config_path: str,
    out_dir: str,
) -> None:
    """Send one encrypted register request per period for the duration."""
    config = _client_config(config_path, server)
    result = simclient.load_test(config, period, duration, key_bits=key_bits)
    paths = report.write_latency_report(
        result.latencies_s,
        out_dir,
        stem=f"loadtest_{key_bits}",
        title=f"register latency, {key_bits}-bit key, period {period}s",
    )
    click.echo(
        f"{result.successes}/{result.requests_sent} requests ok, "
        f"mean latency {result.mean_latency_s * 1000:.2f} ms, "
        f"cpu {result.cpu_time_delta_s:.2f} s"
    )
    click.echo(f"report: {paths['csv']} {paths['png']}")
    if result.requests_sent and result.successes < result.requests_sent:
        sys.exit(simclient.EXIT_PARTIAL)


@main.command()
@click.option("--key-bits", type=int, default=2048, show_default=True)
@click.option("--period", type=float, default=1.0, show_default=True)
@click.option("--duration", type=float, default=60.0, show_default=True)
@click.option("--out-dir", default="reports", show_default=True)
def bench(key_bits: int, period: float, duration: float, out_dir: str) -> None:
    """Local decrypt benchmark at a fixed cadence."""
    result = crypto.bench_decrypt(key_bits, duration, period)
    paths = report.write_latency_report(
        result.latencies_s,
        out_dir,
        stem=f"bench_{key_bits}",
        title=f"decrypt latency, {key_bits}-bit key",
    )
    click.echo(
        f"{result.ops_completed} decrypts, mean {result.mean_latency_s * 1000:.3f} ms, "
        f"cpu {result.cpu_time_s:.2f} s"
    )
    click.echo(f"report: {paths['csv']} {paths['png']}")


@main.command()
@click.option("--server", default=None)
@click.option("--config", "config_path", default=DEFAULT_CONFIG, show_default=True)
def inbox(server: str | None, config_path: str) -> None:
    """Poll and drain this client's push inbox."""
    config = _client_config(config_path, server)
    url = f"{config.server_url.rstrip('/')}/inbox/{config.regid}"
    try:
        response = requests.get(url, timeout=10)
    except requests.RequestException as exc:
        click.echo(f"transport error: {exc}", err=True)
        sys.exit(simclient.EXIT_PARTIAL)
    if response.status_code != 200:
        click.echo(f"inbox error: {response.text}", err=True)
        sys.exit(simclient.EXIT_PARTIAL)
    for message in response.json().get("messages", []):
        click.echo(json.dumps(message))


if __name__ == "__main__":
    main()
