"""Command-line front end.

Reads a property/complement automaton pair and a trace of ``@<time> <symbol>``
lines, streams the events through the requested engine (``classic`` for
delay-free monitoring, ``monitor`` for one delayed output channel, ``test``
for delayed input and output channels), and prints a verdict block with the
consistent-latency intervals after every observation.

Times on the wire are decimals with at most ``log10(scale)`` fractional
digits; internally everything is an integer multiple of ``1/scale``.  Exit
codes: 0 the property holds, 1 it is violated, 2 inconclusive at end of
stream, 3 any error.

Extras: ``--csv`` writes one row of latency-bound columns per observation
(strict endpoints carry an ``s`` suffix, interval unions are joined with
``;``), ``--inject`` replays the trace as a ground truth through synthetic
channels with assigned latencies and seeded jitter, and ``--benchmark``
reports response times and reach-set sizes.
"""

from __future__ import annotations

import argparse
import random
import statistics
import sys
import time as time_mod
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, TextIO

from .automata import TBA, TBAError, parse_tba
from .dbm import INF, Interval
from .monitor import DelayBounds, Monitor, MonitorError, Verdict
from .tester import IODelayBounds, Tester


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 2 is taken by "inconclusive"
        raise CliError(message)


@dataclass(frozen=True)
class TraceEvent:
    timestamp: int  # scaled
    symbol: str


# -- scaled-decimal formatting ----------------------------------------------


def parse_scaled(text: str, scale: int, what: str) -> int:
    if text == "inf":
        return INF
    try:
        f = Fraction(text) * scale
    except (ValueError, ZeroDivisionError):
        raise CliError(f"{what}: not a number: {text!r}") from None
    if f.denominator != 1:
        raise CliError(
            f"{what}: {text!r} needs more precision than scale {scale}")
    if f < 0:
        raise CliError(f"{what}: {text!r} is negative")
    return int(f)


def fmt_scaled(value: int, scale: int) -> str:
    if value == INF:
        return "inf"
    f = Fraction(value, scale)
    if f.denominator == 1:
        return str(f.numerator)
    return str(f.numerator / f.denominator)


def fmt_interval(iv: Interval, scale: int) -> str:
    lo = "(" if iv.lo_strict else "["
    hi = ")" if iv.hi_strict or iv.hi == INF else "]"
    return (f"{lo}{fmt_scaled(iv.lo, scale)},"
            f"{fmt_scaled(iv.hi, scale)}{hi}")


def fmt_union(ivs: Iterable[Interval], scale: int) -> str:
    return "{" + ",".join(fmt_interval(iv, scale) for iv in ivs) + "}"


def _csv_cell(ivs, scale: int, which: str) -> str:
    parts = []
    for iv in ivs:
        if which == "low":
            parts.append(fmt_scaled(iv.lo, scale)
                         + ("s" if iv.lo_strict else ""))
        else:
            parts.append(fmt_scaled(iv.hi, scale)
                         + ("s" if iv.hi_strict or iv.hi == INF else ""))
    return ";".join(parts)


# -- trace handling ----------------------------------------------------------


def read_trace(stream: TextIO, scale: int) -> Iterator[TraceEvent]:
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or not parts[0].startswith("@"):
            raise CliError(
                f"trace line {lineno}: expected '@<time> <symbol>', "
                f"got {line!r}")
        yield TraceEvent(
            parse_scaled(parts[0][1:], scale, f"trace line {lineno}"),
            parts[1])


def inject_delay(events: Iterable[TraceEvent], assigned: dict[str, int],
                 jitters: dict[str, int], inputs: frozenset[str],
                 seed: int) -> list[TraceEvent]:
    """Turn a ground-truth trace into an observed one by shifting outputs
    forward and input stimuli backward by the assigned latency plus seeded
    jitter.  Rejects schedules where the shifts would reorder the channel."""
    rng = random.Random(seed)
    out: list[TraceEvent] = []
    last = 0
    for ev in events:
        if ev.symbol in inputs:
            shift = assigned["din"] + rng.randint(0, jitters["din"])
            stamp = max(0, ev.timestamp - shift)
        else:
            stamp = (ev.timestamp + assigned["dout"]
                     + rng.randint(0, jitters["dout"]))
        if stamp < last:
            raise CliError(
                f"injected delays would reorder the observation at "
                f"ground-truth time {ev.timestamp}")
        last = stamp
        out.append(TraceEvent(stamp, ev.symbol))
    return out


# -- output blocks -----------------------------------------------------------


def monitor_block(m: Monitor, verdict: Verdict, scale: int) -> list[str]:
    rep = m.latency_report()
    jit = fmt_scaled(m.bounds.jitter, scale)
    return [
        f"Verdict: {verdict.value}",
        "Positive:",
        f"Consistent latencies: {fmt_union(rep.positive, scale)}",
        f"Jitter bound: {jit}",
        "Negative:",
        f"Consistent latencies: {fmt_union(rep.negative, scale)}",
        f"Jitter bound: {jit}",
    ]


def tester_block(t: Tester, verdict: Verdict, scale: int) -> list[str]:
    rep = t.latency_report()
    lines = [f"Verdict: {verdict.value}"]
    for label, in_u, out_u, sum_u in (
        ("Positive:", rep.positive_input, rep.positive_output,
         rep.positive_combined),
        ("Negative:", rep.negative_input, rep.negative_output,
         rep.negative_combined),
    ):
        lines += [
            label,
            f"Consistent input latencies: {fmt_union(in_u, scale)}",
            f"Consistent output latencies: {fmt_union(out_u, scale)}",
            f"Consistent combined latencies: {fmt_union(sum_u, scale)}",
        ]
    lines.append(f"Input jitter bound: "
                 f"{fmt_scaled(t.bounds.input.jitter, scale)}")
    lines.append(f"Output jitter bound: "
                 f"{fmt_scaled(t.bounds.output.jitter, scale)}")
    return lines


CSV_HEADER = ("obs,pos_in_low,pos_in_high,pos_out_low,pos_out_high,"
              "pos_sum_low,pos_sum_high,neg_in_low,neg_in_high,"
              "neg_out_low,neg_out_high,neg_sum_low,neg_sum_high")


def csv_row(engine, obs_index: int, scale: int) -> str:
    rep = engine.latency_report()
    if isinstance(engine, Tester):
        cols = [rep.positive_input, rep.positive_output,
                rep.positive_combined, rep.negative_input,
                rep.negative_output, rep.negative_combined]
    else:
        empty: tuple[Interval, ...] = ()
        cols = [empty, rep.positive, empty, empty, rep.negative, empty]
    cells = [str(obs_index)]
    for ivs in cols:
        cells.append(_csv_cell(ivs, scale, "low"))
        cells.append(_csv_cell(ivs, scale, "high"))
    return ",".join(cells)


# -- argument handling -------------------------------------------------------


def build_parser() -> _Parser:
    p = _Parser(prog="delaymon", description=__doc__.split("\n\n")[0])
    p.add_argument("--spec", required=True, help="property automaton file")
    p.add_argument("--complement", required=True,
                   help="complement automaton file")
    p.add_argument("--mode", choices=["classic", "monitor", "test"],
                   default="monitor")
    p.add_argument("--scale", type=int, default=10,
                   help="integer time units per 1.0 of wire time")
    p.add_argument("--latency", nargs=2, metavar=("L", "U"))
    p.add_argument("--jitter", metavar="E")
    p.add_argument("--in-latency", nargs=2, metavar=("L", "U"))
    p.add_argument("--in-jitter", metavar="E")
    p.add_argument("--out-latency", nargs=2, metavar=("L", "U"))
    p.add_argument("--out-jitter", metavar="E")
    p.add_argument("--trace", default="-",
                   help="trace file, or - for standard input")
    p.add_argument("--csv", help="write per-observation latency bounds here")
    p.add_argument("--benchmark", action="store_true")
    p.add_argument("--keep-going", action="store_true",
                   help="do not stop at a conclusive verdict")
    p.add_argument("--inject", metavar="din:D,dout:D,seed:S",
                   help="treat the trace as ground truth and delay it")
    return p


def _bounds_pair(args, prefix: str, scale: int) -> DelayBounds:
    lat = getattr(args, f"{prefix}latency".replace("-", "_"))
    jit = getattr(args, f"{prefix}jitter".replace("-", "_"))
    lo, hi = (parse_scaled(lat[0], scale, "latency"),
              parse_scaled(lat[1], scale, "latency")) if lat else (0, 0)
    eps = parse_scaled(jit, scale, "jitter") if jit else 0
    try:
        return DelayBounds(lo, hi, eps)
    except ValueError as e:
        raise CliError(str(e)) from None


def _check_mode_flags(args) -> None:
    single = args.latency or args.jitter
    dual = (args.in_latency or args.in_jitter or args.out_latency
            or args.out_jitter)
    if args.mode == "classic" and (single or dual):
        raise CliError("classic mode takes no latency/jitter flags")
    if args.mode == "monitor" and dual:
        raise CliError("monitor mode uses --latency/--jitter only")
    if args.mode == "test" and single:
        raise CliError("test mode uses the --in-*/--out-* flags")


def _parse_inject(text: str, scale: int) -> tuple[dict[str, int], int]:
    vals: dict[str, int] = {}
    seed = 0
    for part in text.split(","):
        key, _, val = part.partition(":")
        key = key.strip()
        if key == "seed":
            try:
                seed = int(val)
            except ValueError:
                raise CliError(f"--inject: bad seed {val!r}") from None
        elif key in ("din", "dout"):
            vals[key] = parse_scaled(val.strip(), scale, f"--inject {key}")
        else:
            raise CliError(f"--inject: unknown key {key!r}")
    return vals, seed


def _load_tba(path: str, scale: int) -> TBA:
    try:
        with open(path, encoding="utf-8") as f:
            return parse_tba(f.read(), scale)
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}") from None


# -- main loop ---------------------------------------------------------------


def run_stream(args, out: TextIO) -> int:
    scale = args.scale
    if scale <= 0:
        raise CliError("--scale must be positive")
    _check_mode_flags(args)
    spec = _load_tba(args.spec, scale)
    comp = _load_tba(args.complement, scale)

    if args.mode == "test":
        io_bounds = IODelayBounds(_bounds_pair(args, "in_", scale),
                                  _bounds_pair(args, "out_", scale))
        engine = Tester(spec, comp, io_bounds)
        observe = engine.observe_io
        block = tester_block
        jitters = {"din": io_bounds.input.jitter,
                   "dout": io_bounds.output.jitter}
        inject_bounds = {"din": io_bounds.input, "dout": io_bounds.output}
    else:
        bounds = (DelayBounds(0, 0, 0) if args.mode == "classic"
                  else _bounds_pair(args, "", scale))
        engine = Monitor(spec, comp, bounds)
        observe = engine.observe
        block = monitor_block
        jitters = {"din": 0, "dout": bounds.jitter}
        inject_bounds = {"dout": bounds}

    if args.trace == "-":
        events: Iterable[TraceEvent] = read_trace(sys.stdin, scale)
    else:
        try:
            trace_file = open(args.trace, encoding="utf-8")
        except OSError as e:
            raise CliError(
                f"cannot read {args.trace}: {e.strerror}") from None
        events = read_trace(trace_file, scale)

    if args.inject:
        assigned, seed = _parse_inject(args.inject, scale)
        for key, b in inject_bounds.items():
            if key not in assigned:
                raise CliError(f"--inject: missing {key}")
            if not (b.latency_low <= assigned[key]
                    and (b.latency_high == INF
                         or assigned[key] <= b.latency_high)):
                raise CliError(
                    f"--inject: {key} outside the declared bounds")
        assigned.setdefault("din", 0)
        events = inject_delay(list(events), assigned, jitters,
                              spec.inputs, seed)

    csv_rows = [CSV_HEADER] if args.csv else None
    timings_ns: list[int] = []
    max_states = 0
    verdict = engine.verdict
    count = 0
    for ev in events:
        out.write(f"Input: @{fmt_scaled(ev.timestamp, scale)} {ev.symbol}\n")
        out.write("\n")
        start = time_mod.perf_counter_ns()
        verdict = observe(ev.symbol, ev.timestamp)
        timings_ns.append(time_mod.perf_counter_ns() - start)
        count += 1
        max_states = max(
            max_states, len(engine.pos.reach) + len(engine.neg.reach))
        for line in block(engine, verdict, scale):
            out.write(line + "\n")
        out.write("\n")
        if csv_rows is not None:
            csv_rows.append(csv_row(engine, count, scale))
        if verdict.conclusive and not args.keep_going:
            break

    if count == 0:
        for line in block(engine, verdict, scale):
            out.write(line + "\n")

    if csv_rows is not None:
        with open(args.csv, "w", encoding="utf-8") as f:
            f.write("\n".join(csv_rows) + "\n")

    if args.benchmark and timings_ns:
        out.write(f"Events: {count}\n")
        out.write(f"Max response time (us): {max(timings_ns) / 1000:.1f}\n")
        out.write("Mean response time (us): "
                  f"{statistics.fmean(timings_ns) / 1000:.1f}\n")
        out.write(f"Max symbolic states: {max_states}\n")

    return {Verdict.TRUE: 0, Verdict.FALSE: 1,
            Verdict.INCONCLUSIVE: 2}[verdict]


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return run_stream(args, sys.stdout)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (TBAError, MonitorError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
