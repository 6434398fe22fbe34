"""Render the training-comparison figure from episode CSVs.

Reads one or more files in the trainer's episode schema

    algorithm,trial,episode,reward,steps

and draws, per algorithm, the per-episode mean cumulative reward with a
shaded mean +- 0.5 * sample-std band, plus a horizontal reference line at the
195 solve threshold. Statistics are recomputed here from the raw rows rather
than taken from any pre-aggregated file, so the script doubles as an
independent check of the trainer's own aggregation.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "pdrl-plots"  # reproducible element ids

import matplotlib.pyplot as plt
import numpy as np

CSV_HEADER = "algorithm,trial,episode,reward,steps"
SOLVE_THRESHOLD = 195.0


@dataclass
class PlotSpec:
    input_csvs: list[str]
    output: str
    smooth: int | None = None
    labels: dict[str, str] = field(default_factory=dict)


class SchemaError(ValueError):
    """CSV row did not match the episode schema; message names the line."""


def read_rows(path: str) -> list[tuple[str, int, int, float]]:
    """Parse (algorithm, trial, episode, reward) rows, validating the schema."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise SchemaError(f"{path}:1: expected header {CSV_HEADER!r}, "
                              f"got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise SchemaError(f"{path}:{lineno}: expected 5 fields, "
                                  f"got {len(parts)}")
            algo, trial, episode, reward, steps = parts
            try:
                rows.append((algo, int(trial), int(episode), float(reward)))
                int(steps)
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from exc
    return rows


def aggregate(rows) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Per-algorithm (mean, half_std) arrays indexed by episode.

    Trials of unequal length are truncated to the shortest; the band is
    0.5 times the n-1 sample standard deviation (zero for a single trial).
    """
    by_trial: dict[str, dict[int, list[float]]] = {}
    for algo, trial, episode, reward in rows:
        trial_map = by_trial.setdefault(algo, {})
        series = trial_map.setdefault(trial, [])
        if episode != len(series) + 1:
            raise SchemaError(f"episodes for {algo} trial {trial} are not "
                              f"contiguous at episode {episode}")
        series.append(reward)
    out = {}
    for algo, trial_map in sorted(by_trial.items()):
        n_eps = min(len(s) for s in trial_map.values())
        data = np.array([trial_map[t][:n_eps] for t in sorted(trial_map)])
        mean = data.mean(axis=0)
        if data.shape[0] > 1:
            half = 0.5 * data.std(axis=0, ddof=1)
        else:
            half = np.zeros(n_eps)
        out[algo] = (mean, half)
    return out


def moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average with a growing window at the start."""
    out = np.empty_like(x)
    csum = np.cumsum(x)
    for i in range(x.size):
        lo = max(0, i - window + 1)
        out[i] = (csum[i] - (csum[lo - 1] if lo > 0 else 0.0)) / (i - lo + 1)
    return out


def build_figure(spec: PlotSpec):
    """Create the figure; returns (fig, per-algorithm stats) for inspection."""
    rows = []
    for path in spec.input_csvs:
        rows.extend(read_rows(path))
    if not rows:
        raise SchemaError("no data rows in input files")
    stats = aggregate(rows)
    fig, ax = plt.subplots(figsize=(8, 5))
    for algo, (mean, half) in stats.items():
        show_mean, show_half = mean, half
        if spec.smooth and spec.smooth > 1:
            show_mean = moving_average(mean, spec.smooth)
            show_half = moving_average(half, spec.smooth)
        episodes = np.arange(1, mean.size + 1)
        label = spec.labels.get(algo, algo)
        line, = ax.plot(episodes, show_mean, label=label)
        ax.fill_between(episodes, show_mean - show_half, show_mean + show_half,
                        alpha=0.25, color=line.get_color())
    ax.axhline(SOLVE_THRESHOLD, linestyle="--", linewidth=1.0, color="gray",
               label=f"solve threshold ({SOLVE_THRESHOLD:.0f})")
    ax.set_xlabel("episode")
    ax.set_ylabel("cumulative reward")
    ax.legend()
    fig.tight_layout()
    return fig, stats


def render_comparison(spec: PlotSpec) -> str:
    """Render and save the figure; returns the output path."""
    fig, _ = build_figure(spec)
    metadata = None
    if spec.output.endswith(".svg"):
        metadata = {"Date": None}  # keep byte-identical output across reruns
    elif spec.output.endswith(".pdf"):
        metadata = {"CreationDate": None}
    fig.savefig(spec.output, metadata=metadata)
    plt.close(fig)
    return spec.output


def parse_labels(text: str) -> dict[str, str]:
    labels = {}
    for pair in text.split(","):
        if pair:
            key, _, value = pair.partition("=")
            labels[key] = value or key
    return labels


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pdrl-plot",
        description="render the mean +- 0.5*std training-comparison figure")
    parser.add_argument("csvs", nargs="+", help="episode CSV file(s)")
    parser.add_argument("--out", required=True,
                        help="output image path (extension picks the format)")
    parser.add_argument("--smooth", type=int, default=None,
                        help="moving-average window for display")
    parser.add_argument("--labels", default="",
                        help="display names, e.g. primal_dual=PD,actor_critic=AC")
    args = parser.parse_args(argv)
    spec = PlotSpec(input_csvs=args.csvs, output=args.out, smooth=args.smooth,
                    labels=parse_labels(args.labels))
    try:
        out = render_comparison(spec)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
