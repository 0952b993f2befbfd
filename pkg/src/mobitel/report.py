"""Render timing reports: a latency CSV plus matplotlib figures."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def write_latency_report(
    latencies_s: list[float],
    out_dir: str | Path,
    stem: str,
    title: str,
) -> dict[str, Path]:
    """Write <stem>.csv (index,latency_s) and <stem>.png (timeline and
    histogram) into out_dir; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    png_path = out_dir / f"{stem}.png"

    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "latency_s"])
        for i, latency in enumerate(latencies_s):
            writer.writerow([i, f"{latency:.6f}"])

    fig, (ax_t, ax_h) = plt.subplots(1, 2, figsize=(10, 4))
    if latencies_s:
        ax_t.plot(range(len(latencies_s)), [s * 1000 for s in latencies_s], lw=0.8)
        ax_h.hist([s * 1000 for s in latencies_s], bins=30, color="#4CAF50")
    ax_t.set_xlabel("request")
    ax_t.set_ylabel("latency (ms)")
    ax_h.set_xlabel("latency (ms)")
    ax_h.set_ylabel("count")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return {"csv": csv_path, "png": png_path}
