"""Timing harness for encryption and decryption.

Four experiments, each a slice of one parameter grid:

1. encrypt, n = 5, content size varied, every suite
2. decrypt, same parameters
3. encrypt and decrypt, 1 MiB, recipient count varied, deception on/off
4. decrypt, 1 MiB, recipient count varied, signature validation on/off

Overlapping points are measured once. Each row holds the mean wall-clock
time of a full operation (serialization and parsing included).
"""

from __future__ import annotations

import argparse
import csv
import gc
import io
import math
import os
import statistics
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from ..container import decrypt, encrypt, max_recipient_count
from ..keystore import generate_keypair
from ..recipient import RecipientEntry
from ..suite import DEFAULT_SUITE, SUITES, parse_suite_arg

MiB = 1 << 20
COLUMNS = ("suite", "op", "size", "n", "deception", "validation", "mean_seconds")

DEFAULT_SIZES = (1 * MiB, 10 * MiB, 100 * MiB)
DEFAULT_COUNTS = (5, 10, 20, 50, 100)
FULL_SIZE = 1000 * MiB
FULL_COUNT = 1000
BASE_N = 5
BASE_SIZE = 1 * MiB


def _flag(on: bool) -> str:
    return "on" if on else "off"


@dataclass(frozen=True)
class BenchConfig:
    suites: tuple[int, ...] = tuple(SUITES)
    content_sizes: tuple[int, ...] = DEFAULT_SIZES
    recipient_counts: tuple[int, ...] = DEFAULT_COUNTS
    deception: tuple[bool, ...] = (True, False)
    validation: tuple[bool, ...] = (True, False)
    repetitions: int = 5
    warmup: int = 2
    experiments: tuple[int, ...] = (1, 2, 3, 4)
    # suites used by the recipient-count experiments; all by default
    count_suites: tuple[int, ...] | None = None
    # extra rounds until a typical point has this much sampled time
    min_seconds: float = 0.0

    def __post_init__(self) -> None:
        if self.repetitions < 3:
            raise ValueError("repetitions must be at least 3")
        if self.min_seconds < 0:
            raise ValueError("min_seconds must be non-negative")
        if self.warmup < 0:
            raise ValueError("warmup must be non-negative")
        if not self.content_sizes or not self.recipient_counts or not self.suites:
            raise ValueError("suites, sizes and counts must be non-empty")
        if min(self.content_sizes) < 0 or min(self.recipient_counts) < 1:
            raise ValueError("sizes must be >= 0 and counts >= 1")
        for sid in self.suites + (self.count_suites or ()):
            if sid not in SUITES:
                raise ValueError(f"unknown suite 0x{sid:08X}")
        if not set(self.experiments) <= {1, 2, 3, 4}:
            raise ValueError("experiments are numbered 1 to 4")


@dataclass(frozen=True, order=True)
class Point:
    suite: str
    op: str
    size: int
    n: int
    deception: str
    validation: str


@dataclass
class Row:
    point: Point
    mean_seconds: float
    samples: list[float] = field(default_factory=list, compare=False)

    def as_dict(self) -> dict[str, object]:
        p = self.point
        return {
            "suite": p.suite,
            "op": p.op,
            "size": p.size,
            "n": p.n,
            "deception": p.deception,
            "validation": p.validation,
            "mean_seconds": f"{self.mean_seconds:.6f}",
        }


def grid(config: BenchConfig) -> list[Point]:
    """Unique measurement points of the selected experiments."""
    labels = [SUITES[s].label for s in config.suites]
    count_labels = [SUITES[s].label for s in (config.count_suites or config.suites)]
    points: set[Point] = set()
    if 1 in config.experiments:
        points |= {Point(s, "encrypt", q, BASE_N, "on", "on") for s in labels for q in config.content_sizes}
    if 2 in config.experiments:
        points |= {Point(s, "decrypt", q, BASE_N, "on", "on") for s in labels for q in config.content_sizes}
    if 3 in config.experiments:
        points |= {
            Point(s, op, BASE_SIZE, n, _flag(dec), "on")
            for s in count_labels
            for op in ("encrypt", "decrypt")
            for n in config.recipient_counts
            for dec in config.deception
        }
    if 4 in config.experiments:
        points |= {
            Point(s, "decrypt", BASE_SIZE, n, "on", _flag(val))
            for s in count_labels
            for n in config.recipient_counts
            for val in config.validation
        }
    return sorted(points, key=lambda p: (p.op, p.suite, p.size, p.n, p.deception, p.validation))


class _Fixtures:
    """Keys and contents shared by all measurements."""

    def __init__(self) -> None:
        self._keys: list[bytes] = []
        self._entries: list[RecipientEntry] = []
        self._contents: dict[int, bytes] = {}

    def recipients(self, n: int) -> tuple[list[bytes], list[RecipientEntry]]:
        while len(self._keys) < n:
            sk, _ = generate_keypair()
            raw = bytes(sk)
            self._keys.append(raw)
            self._entries.append(RecipientEntry.create(raw, f"recipient-{len(self._keys):04d}"))
        return self._keys[:n], self._entries[:n]

    def content(self, size: int) -> bytes:
        if size not in self._contents:
            # keep at most one large buffer alive
            self._contents = {k: v for k, v in self._contents.items() if k <= BASE_SIZE}
            self._contents[size] = os.urandom(size)
        return self._contents[size]


def _m_strategy(deception: str):
    # Deception on uses the largest allowed m so its cost is visible.
    return (lambda n, rng: max_recipient_count(n)) if deception == "on" else "exact"


def _prepare(point: Point, fixtures: _Fixtures) -> Callable[[], object]:
    suite = parse_suite_arg(point.suite)
    keys, entries = fixtures.recipients(point.n)
    content = fixtures.content(point.size)
    strategy = _m_strategy(point.deception)
    if point.op == "encrypt":
        return lambda: encrypt(entries, content, suite, m_strategy=strategy).to_bytes()
    data = encrypt(entries, content, suite, m_strategy=strategy).to_bytes()
    verify = point.validation == "on"
    sk = keys[-1]
    return lambda: decrypt(sk, data, verify_signatures=verify)


def _once(fn: Callable[[], object]) -> float:
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def measure_group(
    points: Sequence[Point],
    fixtures: _Fixtures,
    repetitions: int,
    warmup: int,
    min_seconds: float = 0.0,
    max_rounds: int = 200,
) -> list[Row]:
    """Time ``points`` round-robin so slow drift of the host hits all alike.

    At least ``repetitions`` rounds are run; more if needed for the mean
    point to accumulate ``min_seconds`` of samples.
    """
    ops = [_prepare(p, fixtures) for p in points]
    warm = [_once(op) for op in ops for _ in range(max(warmup, 1))]
    typical = statistics.fmean(warm)
    rounds = repetitions
    if min_seconds > 0 and typical > 0:
        rounds = max(repetitions, min(max_rounds, math.ceil(min_seconds / typical)))
    samples: list[list[float]] = [[] for _ in points]
    gc_was_enabled = gc.isenabled()
    try:
        for _ in range(rounds):
            gc.collect()
            gc.disable()
            for i, op in enumerate(ops):
                samples[i].append(_once(op))
            if gc_was_enabled:
                gc.enable()
    finally:
        if gc_was_enabled:
            gc.enable()
    return [Row(p, statistics.fmean(ts), ts) for p, ts in zip(points, samples)]


def measure(point: Point, fixtures: _Fixtures, repetitions: int, warmup: int) -> Row:
    return measure_group([point], fixtures, repetitions, warmup)[0]


def run_bench(
    config: BenchConfig,
    *,
    progress: Callable[[Row, int, int], None] | None = None,
) -> list[Row]:
    fixtures = _Fixtures()
    points = grid(config)
    groups: dict[int, list[Point]] = {}
    for p in points:
        groups.setdefault(p.size, []).append(p)
    rows: list[Row] = []
    for size in sorted(groups):
        # one size at a time so large buffers are allocated once
        for row in measure_group(groups[size], fixtures, config.repetitions, config.warmup, config.min_seconds):
            rows.append(row)
            if progress:
                progress(row, len(rows), len(points))
    rows.sort(key=lambda r: (r.point.op, r.point.suite, r.point.size, r.point.n, r.point.deception, r.point.validation))
    return rows


# -- csv -----------------------------------------------------------------
def write_csv(rows: Iterable[Row], out: io.TextIOBase) -> None:
    writer = csv.DictWriter(out, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.as_dict())


def read_csv(source: io.TextIOBase) -> list[Row]:
    rows = []
    for rec in csv.DictReader(source):
        point = Point(rec["suite"], rec["op"], int(rec["size"]), int(rec["n"]), rec["deception"], rec["validation"])
        rows.append(Row(point, float(rec["mean_seconds"])))
    return rows


# -- goals ---------------------------------------------------------------
@dataclass(frozen=True)
class Goal:
    name: str
    passed: bool | None  # None when the grid lacks the data
    detail: str

    @property
    def status(self) -> str:
        return {True: "PASS", False: "FAIL", None: "SKIP"}[self.passed]


TARGET_1MIB_N5 = 0.030
CEILING = 0.100
TARGET_1MIB_N50 = 0.045
SCALING_10X = (5.0, 20.0)
SCALING_2X = (1.5, 2.5)
DECEPTION_TOLERANCE = 0.25
VALIDATION_MIN_R2 = 0.9
SHA_PAIRS = (("I", "II"), ("III", "IV"))  # (SHA-256, SHA-512) with the same AEAD


def _index(rows: Iterable[Row]) -> dict[Point, float]:
    return {r.point: r.mean_seconds for r in rows}


def _threshold(idx, name, point, limit) -> Goal:
    value = idx.get(point)
    if value is None:
        return Goal(name, None, "not measured")
    return Goal(name, value < limit, f"{value * 1e3:.2f} ms (limit {limit * 1e3:.0f} ms)")


def _ratio_goal(name: str, ratios: list[tuple[str, float]], lo: float, hi: float) -> Goal:
    if not ratios:
        return Goal(name, None, "no matching size pairs in the grid")
    ok = all(lo <= r <= hi for _, r in ratios)
    return Goal(name, ok, ", ".join(f"{k}: {r:.2f}" for k, r in ratios) + f" (allowed [{lo}, {hi}])")


def check_goals(rows: Iterable[Row]) -> list[Goal]:
    rows = list(rows)
    idx = _index(rows)
    base = DEFAULT_SUITE.label
    goals: list[Goal] = []

    for op in ("encrypt", "decrypt"):
        p5 = Point(base, op, BASE_SIZE, 5, "on", "on")
        goals.append(_threshold(idx, f"{op} 1 MiB n=5 suite {base} < 30 ms", p5, TARGET_1MIB_N5))
        goals.append(_threshold(idx, f"{op} 1 MiB n=5 suite {base} < 100 ms", p5, CEILING))
        p50 = Point(base, op, BASE_SIZE, 50, "on", "on")
        goals.append(_threshold(idx, f"{op} 1 MiB n=50 suite {base} < 45 ms", p50, TARGET_1MIB_N50))

    # content-size scaling, n = 5
    tenfold, doubling = [], []
    for p, t in idx.items():
        if p.n != BASE_N or p.deception != "on" or p.validation != "on" or p.size == 0:
            continue
        for factor, bucket in ((10, tenfold), (2, doubling)):
            q = Point(p.suite, p.op, p.size * factor, p.n, "on", "on")
            if q in idx:
                bucket.append((f"{p.op}/{p.suite}/{p.size // MiB}->{q.size // MiB}MiB", idx[q] / t))
    goals.append(_ratio_goal("10x content scaling", sorted(tenfold), *SCALING_10X))
    goals.append(_ratio_goal("2x content scaling", sorted(doubling), *SCALING_2X))

    # SHA-512 beats SHA-256 for large contents
    sha = []
    for p, t in idx.items():
        if p.size < 10 * MiB or p.n != BASE_N:
            continue
        for s256, s512 in SHA_PAIRS:
            if p.suite == s256:
                q = Point(s512, p.op, p.size, p.n, p.deception, p.validation)
                if q in idx:
                    sha.append((f"{p.op}/{s256}vs{s512}/{p.size // MiB}MiB", t / idx[q]))
    sha.sort()
    if sha:
        goals.append(
            Goal(
                "SHA-512 suites faster than SHA-256 suites",
                all(r > 1 for _, r in sha),
                ", ".join(f"{k}: {r:.2f}x" for k, r in sha),
            )
        )
    else:
        goals.append(Goal("SHA-512 suites faster than SHA-256 suites", None, "need >=10 MiB points for paired suites"))

    # decrypt is not slower than encrypt
    pairs = []
    for p, t in idx.items():
        if p.op == "encrypt":
            q = Point(p.suite, "decrypt", p.size, p.n, p.deception, "on")
            if q in idx:
                pairs.append((p, idx[q] / t))
    if pairs:
        worst = max(pairs, key=lambda x: x[1])
        goals.append(
            Goal(
                "decrypt <= encrypt",
                all(r <= 1 for _, r in pairs),
                f"{sum(r <= 1 for _, r in pairs)}/{len(pairs)} points; worst decrypt/encrypt {worst[1]:.2f}",
            )
        )
    else:
        goals.append(Goal("decrypt <= encrypt", None, "no paired points"))

    # deception has no effect on decryption
    deltas = []
    for p, t in idx.items():
        if p.op == "decrypt" and p.deception == "off" and p.validation == "on":
            q = Point(p.suite, "decrypt", p.size, p.n, "on", "on")
            if q in idx:
                deltas.append((f"{p.suite}/n={p.n}", abs(idx[q] - t) / t))
    deltas.sort(key=lambda x: x[1])
    if deltas:
        worst = deltas[-1]
        goals.append(
            Goal(
                "deception on/off decrypt delta < 25%",
                worst[1] < DECEPTION_TOLERANCE,
                f"largest {worst[1] * 100:.1f}% at {worst[0]} over {len(deltas)} points",
            )
        )
    else:
        goals.append(Goal("deception on/off decrypt delta < 25%", None, "no deception off points"))

    goals.append(_validation_goal(idx))
    return goals


def _validation_goal(idx: dict[Point, float]) -> Goal:
    name = "validation cost linear in n"
    details, verdicts = [], []
    for suite in sorted({p.suite for p in idx}):
        xs, ys = [], []
        for p, t in idx.items():
            if p.suite == suite and p.op == "decrypt" and p.validation == "on" and p.size == BASE_SIZE:
                q = Point(suite, "decrypt", p.size, p.n, p.deception, "off")
                if q in idx:
                    xs.append(p.n)
                    ys.append(t - idx[q])
        if len(set(xs)) < 3:
            continue
        fit = statistics.linear_regression(xs, ys)
        r2 = statistics.correlation(xs, ys) ** 2
        ok = fit.slope > 0 and r2 >= VALIDATION_MIN_R2
        verdicts.append(ok)
        details.append(f"{suite}: {fit.slope * 1e6:.1f} us/recipient, R^2={r2:.3f}")
    if not verdicts:
        return Goal(name, None, "need validation on/off at >=3 recipient counts")
    return Goal(name, all(verdicts), "; ".join(details))


def format_report(goals: Sequence[Goal]) -> str:
    width = max(len(g.name) for g in goals)
    return "\n".join(f"[{g.status}] {g.name.ljust(width)}  {g.detail}" for g in goals)


# -- command line --------------------------------------------------------
def _sizes(text: str) -> tuple[int, ...]:
    return tuple(int(float(x) * MiB) for x in text.split(",") if x)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x)


def _suites(text: str) -> tuple[int, ...]:
    return tuple(parse_suite_arg(x).id for x in text.split(",") if x)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ecf bench", description="Time container encryption and decryption.")
    p.add_argument("--out", "-o", help="CSV destination (default stdout)")
    p.add_argument("--report", action="store_true", help="render figures next to the CSV and print the goal report")
    p.add_argument("--check", metavar="CSV", help="only evaluate goals (and figures) for an existing CSV")
    p.add_argument("--sizes", type=_sizes, default=DEFAULT_SIZES, help="content sizes in MiB, comma separated")
    p.add_argument("--counts", type=_ints, default=DEFAULT_COUNTS, help="recipient counts, comma separated")
    p.add_argument("--suites", type=_suites, default=tuple(SUITES), help="suites, e.g. I,II,IV")
    p.add_argument("--count-suites", type=_suites, default=None, help="suites for experiments 3 and 4")
    p.add_argument("--experiments", type=_ints, default=(1, 2, 3, 4))
    p.add_argument("--repetitions", "-r", type=int, default=5)
    p.add_argument("--warmup", "-w", type=int, default=2)
    p.add_argument(
        "--min-seconds",
        type=float,
        default=0.5,
        help="run extra rounds until a typical point has this much sampled time",
    )
    p.add_argument("--full-size", action="store_true", help="add the 1000 MiB content point")
    p.add_argument("--full-count", action="store_true", help="add the n=1000 point")
    p.add_argument("--quiet", "-q", action="store_true")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.check:
        with open(args.check, newline="") as fh:
            rows = read_csv(fh)
        csv_path: Path | None = Path(args.check)
    else:
        sizes = args.sizes + ((FULL_SIZE,) if args.full_size else ())
        counts = args.counts + ((FULL_COUNT,) if args.full_count else ())
        try:
            config = BenchConfig(
                suites=args.suites,
                content_sizes=tuple(sorted(set(sizes))),
                recipient_counts=tuple(sorted(set(counts))),
                repetitions=args.repetitions,
                warmup=args.warmup,
                experiments=args.experiments,
                count_suites=args.count_suites,
                min_seconds=args.min_seconds,
            )
        except ValueError as exc:
            print(f"ecf bench: {exc}", file=sys.stderr)
            return 2

        def progress(row: Row, i: int, total: int) -> None:
            if not args.quiet:
                p = row.point
                print(
                    f"[{i}/{total}] {p.op:7} {p.suite:3} {p.size // MiB:5d} MiB n={p.n:<4d} "
                    f"dec={p.deception:3} val={p.validation:3} {row.mean_seconds * 1e3:9.2f} ms",
                    file=sys.stderr,
                )

        rows = run_bench(config, progress=progress)
        csv_path = Path(args.out) if args.out else None
        if csv_path:
            with open(csv_path, "w", newline="") as fh:
                write_csv(rows, fh)
        else:
            write_csv(rows, sys.stdout)

    if args.report or args.check:
        goals = check_goals(rows)
        report = format_report(goals)
        print(report, file=sys.stderr if csv_path is None else sys.stdout)
        if csv_path is not None:
            from .plotting import render_figures

            for path in render_figures(rows, csv_path.parent, stem=csv_path.stem):
                print(f"figure: {path}", file=sys.stderr)
            csv_path.with_name(csv_path.stem + "_goals.txt").write_text(report + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
