"""Figures for benchmark CSV rows, written next to the CSV file."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Iterable

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .runner import BASE_N, BASE_SIZE, MiB, Row  # noqa: E402

_MARKERS = {"I": "o", "II": "s", "III": "^", "IV": "D"}


def _series(rows: Iterable[Row], keep, key, x):
    out: dict[str, list[tuple[float, float]]] = defaultdict(list)
    for r in rows:
        if keep(r.point):
            out[key(r.point)].append((x(r.point), r.mean_seconds))
    return {k: sorted(v) for k, v in sorted(out.items())}


def _plot(ax, series, *, log: bool, xlabel: str, title: str) -> None:
    for label, pts in series.items():
        xs, ys = zip(*pts)
        suite = label.split()[0]
        ax.plot(xs, ys, marker=_MARKERS.get(suite, "o"), label=label)
    if log:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("mean time [s]")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    if series:
        ax.legend(fontsize="small")


def render_figures(rows: list[Row], directory: Path, stem: str = "bench") -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def save(fig, name: str) -> None:
        path = directory / f"{stem}_{name}.png"
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    # experiments 1 and 2
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
    for ax, op in zip(axes, ("encrypt", "decrypt")):
        series = _series(
            rows,
            lambda p, op=op: p.op == op and p.n == BASE_N and p.deception == "on" and p.validation == "on",
            lambda p: f"{p.suite}",
            lambda p: p.size / MiB,
        )
        _plot(ax, series, log=True, xlabel="content size [MiB]", title=f"{op}, n={BASE_N}")
    save(fig, "content_size")

    # experiment 3
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
    for ax, op in zip(axes, ("encrypt", "decrypt")):
        series = _series(
            rows,
            lambda p, op=op: p.op == op and p.size == BASE_SIZE and p.validation == "on",
            lambda p: f"{p.suite} deception {p.deception}",
            lambda p: p.n,
        )
        _plot(ax, series, log=False, xlabel="recipients n", title=f"{op}, 1 MiB")
    save(fig, "recipients")

    # experiment 4
    fig, ax = plt.subplots(figsize=(6, 4.5))
    series = _series(
        rows,
        lambda p: p.op == "decrypt" and p.size == BASE_SIZE and p.deception == "on",
        lambda p: f"{p.suite} validation {p.validation}",
        lambda p: p.n,
    )
    _plot(ax, series, log=False, xlabel="recipients n", title="decrypt, 1 MiB, signature validation")
    save(fig, "validation")
    return written
