"""Command-line front end.

Every run writes a header with its full configuration (and a timestamp
unless ``--no-timestamp``) followed by CSV rows or JSON lines.

Exit codes: 0 success, 2 usage error, 3 missing cache, 4 numeric failure
or failed cross-check.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

from . import feynman, graph_enum, lattice_green, moments, walk_oracle
from .feynman import MissingCacheError
from .lattice_green import PrecisionError
from .special_fn import NumericError

EXIT_OK, EXIT_USAGE, EXIT_CACHE, EXIT_NUMERIC = 0, 2, 3, 4
THREADS_ENV = "RWRANGE_THREADS"


class UsageError(ValueError):
    pass


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _threads(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer") from None
    return os.cpu_count() or 1


# --------------------------------------------------------------------------
# Output
# --------------------------------------------------------------------------


class Output:
    def __init__(self, args: argparse.Namespace, config: dict):
        self.fmt = args.format
        self.config = config
        self.timestamp = None if args.no_timestamp else _dt.datetime.now(_dt.timezone.utc).isoformat()
        self.rows: list = []
        self.header: list[str] | None = None

    def table(self, header: list[str], rows: list[list]):
        self.header = header
        self.rows.extend(rows)

    def records(self, recs: list[dict]):
        self.rows.extend(recs)

    def render(self) -> str:
        buf = io.StringIO()
        if self.fmt == "json":
            head = {"config": self.config}
            if self.timestamp:
                head["timestamp"] = self.timestamp
            buf.write(json.dumps(head, sort_keys=True) + "\n")
            for row in self.rows:
                if self.header is not None and not isinstance(row, dict):
                    row = dict(zip(self.header, row))
                buf.write(json.dumps(row, sort_keys=True) + "\n")
        else:
            buf.write("# config: " + json.dumps(self.config, sort_keys=True) + "\n")
            if self.timestamp:
                buf.write(f"# timestamp: {self.timestamp}\n")
            w = csv.writer(buf, lineterminator="\n")
            header = self.header
            if header is None and self.rows:
                header = list(self.rows[0].keys())
            if header:
                w.writerow(header)
            for row in self.rows:
                if isinstance(row, dict):
                    row = [row[h] for h in header]
                w.writerow([_cell(v) for v in row])
        return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return v


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for {args.command}")


def _degree_vector(args) -> tuple[int, ...]:
    _need(args, "r", "h")
    if len(args.h) != args.r:
        raise UsageError(f"--h has {len(args.h)} entries but --r is {args.r}")
    if args.r < 2 or args.r > 6 or any(v < 1 for v in args.h):
        raise UsageError("need 2 <= r <= 6 and all degrees >= 1")
    return tuple(args.h)


def cmd_enumerate(args, out: Output):
    h = _degree_vector(args)
    out.records([json.loads(F.to_json()) for F in graph_enum.enumerate_balanced(args.r, h)])


def cmd_weights(args, out: Output):
    h = _degree_vector(args)
    rows = []
    for F in graph_enum.enumerate_balanced(args.r, h):
        w = graph_enum.weights(F)
        rows.append([graph_enum.matrix_key(F), w.cof, str(w.mult), w.trails])
    out.table(["matrix", "cof", "mult", "euler_circuits"], rows)


def _integral_file(cache_dir, r: int, budget: int, seed: int) -> Path:
    return Path(cache_dir) / f"integrals_r{r}_b{budget}_s{seed}.jsonl"


def cmd_integrals(args, out: Output):
    _need(args, "r")
    if args.h is not None:
        mats = graph_enum.enumerate_balanced(args.r, _degree_vector(args))
    else:
        _need(args, "M")
        groups = moments.moment_graphs(args.r, args.M)
        mats = [F for h in sorted(groups) for F in groups[h]]
    threads = _threads(args.threads)
    recs = []
    for F in mats:
        gi, gs = feynman.integrals(F, args.budget, args.seed, threads)
        recs.append({"r": F.r, "rows": [list(r) for r in F.rows], "I": gi.value, "I_stderr": gi.stderr,
                     "scriptI": gs.value, "scriptI_stderr": gs.stderr, "method": gi.method})
    if args.cache_dir:
        path = _integral_file(args.cache_dir, args.r, args.budget, args.seed)
        path.parent.mkdir(parents=True, exist_ok=True)
        existing = {}
        if path.exists():
            for line in path.read_text().splitlines():
                if line.strip():
                    rec = json.loads(line)
                    existing[json.dumps(rec["rows"])] = rec
        for rec in recs:
            existing[json.dumps(rec["rows"])] = rec
        path.write_text("".join(json.dumps(existing[k], sort_keys=True) + "\n" for k in sorted(existing)))
    out.records(recs)


def cmd_graph_sums(args, out: Output):
    _need(args, "rmax")
    if not 2 <= args.rmax <= 6:
        raise UsageError("--rmax must lie in 2..6")
    threads = _threads(args.threads)
    rows = []
    for r in range(2, args.rmax + 1):
        path = feynman.cache_path(args.cache_dir, r, args.budget, args.seed) if args.cache_dir else None
        if r == 2:
            rec = feynman.quadrature_record()
        elif path is not None and path.exists():
            rec = feynman.GraphSumRecord.from_json(path.read_text())
        else:
            rec = feynman.graph_sum(r, args.budget, args.seed, threads)
            if args.cache_dir:
                feynman.save_record(rec, args.cache_dir)
        rows.append([rec.r, rec.count, rec.sum_I, rec.sum_I_stderr, rec.sum_scriptI,
                     rec.sum_scriptI_stderr, rec.budget, rec.seed])
    out.table(["r", "count", "sum_I", "sum_I_stderr", "sum_scriptI", "sum_scriptI_stderr", "budget", "seed"], rows)


def _integral_table(args, r: int) -> moments.IntegralTable:
    table = moments.IntegralTable(budget=args.budget, seed=args.seed)
    if args.cache_dir and r > 2:
        path = _integral_file(args.cache_dir, r, args.budget, args.seed)
        if path.exists():
            loaded = moments.IntegralTable.from_jsonl(path.read_text().splitlines())
            table.entries.update(loaded.entries)
    return table


def cmd_moments(args, out: Output):
    _need(args, "k", "M")
    if any(k < 1 for k in args.k):
        raise UsageError("--k entries must be >= 1")
    if not 0 <= args.M <= 12:
        raise UsageError("--M must lie in 0..12")
    ns = args.n or []
    if any(n < 3 for n in ns):
        raise UsageError("--n values must be >= 3")
    r = len(args.k)
    table = _integral_table(args, r)
    exp = moments.moment_full(args.which, args.k, None, args.M, table=table)
    rows = []
    for n in ns:
        val = moments.moment_full(args.which, args.k, n, args.M, table=table).value
        rows.append({"kind": "value", "n": n, "k": args.k, "M": args.M, "j": "", "value": val})
    for j, c in exp.to_rows():
        rows.append({"kind": "logcoeff", "n": "", "k": args.k, "M": args.M, "j": j, "value": c})
    out.table(["kind", "n", "k", "M", "j", "value"], [[d[h] for h in ["kind", "n", "k", "M", "j", "value"]] for d in rows])


def _sums(args, r_max: int):
    return feynman.load_sums(args.cache_dir, r_max, args.budget, args.seed)


def cmd_central(args, out: Output):
    _need(args, "k")
    order = len(args.k)
    if order < 1 or order > 6:
        raise UsageError("the k-vector length (moment order) must lie in 1..6")
    sums = _sums(args, max(order, 2))
    lead = moments.central_moment_leading(args.which, order, args.k, sums)
    rows = [["leading_constant", "", lead]]
    if order == 2:
        A, B = moments.second_moment_constants(args.which, args.k[0], args.k[1], sums)
        rows.append(["correction_constant", "", B])
        for n in args.n or []:
            rows.append(["second_moment_central", n,
                         moments.second_moment_central(args.which, n, args.k[0], args.k[1], sums)])
    for n in args.n or []:
        rows.append(["leading_value", n, lead * moments.central_scale(args.which, n) ** order])
    out.table(["quantity", "n", "value"], rows)


def cmd_charfn(args, out: Output):
    _need(args, "rmax")
    if not 2 <= args.rmax <= 6:
        raise UsageError("--rmax must lie in 2..6")
    ts = args.t if args.t is not None else [0.0]
    r_used = args.rmax
    try:
        sums = _sums(args, args.rmax)
    except MissingCacheError:
        # every graph term carries a positive power of t, so t = 0 needs no sums;
        # the series is then reported only up to the quadrature-backed r = 2
        if any(t != 0 for t in ts):
            raise
        r_used = 2
        sums = _sums(args, 2)
    recs = []
    for t in ts:
        if args.which == "brownian":
            res = moments.char_brownian(t, r_used, sums, order=args.order)
        else:
            res = moments.char_closed(args.lam, t, r_used, sums, order=args.order)
        recs.append({"t": t, "re": res.value.real, "im": res.value.imag, "stderr": res.value_stderr,
                     "series_rmax": r_used, "series": json.loads(res.series.to_json())})
    out.records(recs)


def cmd_oracle(args, out: Output):
    _need(args, "n")
    if len(args.n) != 1 or args.n[0] != int(args.n[0]):
        raise UsageError("--n takes one integer for oracle runs")
    n = int(args.n[0])
    ks = tuple(args.k or (1, 2, 3))
    cls = moments._check_class(args.which)
    if args.exact:
        if cls == moments.CLOSED:
            agg = walk_oracle.enumerate_closed(2 * n, ks)
        else:
            agg = walk_oracle.enumerate_unrestricted(n, ks)
        out.table(["n", "walks", "k", "sum", "mean"],
                  [[n, agg.walks, k, agg.sums[k], agg.sums[k] / agg.walks] for k in ks])
        return
    spec = walk_oracle.SeedSpec(args.seed, args.stream, args.samples)
    fn = walk_oracle.mc_closed if cls == moments.CLOSED else walk_oracle.mc_unrestricted
    stats = fn(n, spec, ks, threads=_threads(args.threads))
    reader = csv.reader(io.StringIO(stats.to_csv()))
    rows = list(reader)
    out.table(rows[0], rows[1:])


# --------------------------------------------------------------------------
# Cross-checks
# --------------------------------------------------------------------------


def _check(name: str, ok: bool, detail: str) -> list:
    return [name, "PASS" if ok else "FAIL", detail]


def _suite_gf(Lmax: int) -> list[list]:
    rows = []
    for L in range(2, Lmax + 1, 2):
        agg = walk_oracle.enumerate_closed(L, (1, 2, 3), points=[(1, 0), (1, 1), (2, 0)])
        for k in (1, 2, 3):
            gf = lattice_green.first_moment_gf(k, L)[L]
            rows.append(_check(f"first_moment_gf k={k} L={L}", gf == agg.sums[k], f"{gf} vs {agg.sums[k]}"))
            for y in [(1, 0), (1, 1), (2, 0)]:
                gf = lattice_green.multiplicity_fixed_gf(y, k, L)[L]
                cnt = agg.point_counts[(y, k)]
                rows.append(_check(f"multiplicity_fixed_gf y={y[0]},{y[1]} k={k} L={L}", gf == cnt, f"{gf} vs {cnt}"))
    return rows


def _suite_graphs() -> list[list]:
    rows = []
    n2 = len(graph_enum.enumerate_balanced(2, (2, 2)))
    n3 = len(graph_enum.enumerate_balanced(3, (2, 2, 2)))
    rows.append(_check("|H(2,2)| = 1 and |H(2,2,2)| = 3", (n2, n3) == (1, 3), f"{n2}, {n3}"))
    for r in (2, 3):
        for total in range(r, 7):
            for h in graph_enum.degree_vectors(r, total):
                for F in graph_enum.enumerate_balanced(r, h):
                    a = graph_enum.euler_circuit_count(F)
                    b = graph_enum.euler_circuit_search(F)
                    rows.append(_check(f"BEST {graph_enum.matrix_key(F)}", a == b, f"{a} vs {b}"))
    return rows


def _suite_moments() -> list[list]:
    rows = []
    sums = {2: feynman.quadrature_record()}
    for cls in moments.WALK_CLASSES:
        full = moments.central_second_from_full(cls, 1, 1, M=7)
        scale = (2 * math.pi**2 if cls == moments.CLOSED else math.pi**2) ** 2
        A, _ = moments.second_moment_constants(cls, 1, 1, sums)
        lead = moments.central_moment_leading(cls, 2, (1, 1), sums)
        rows.append(_check(f"{cls}: full expansion vs closed form", abs(full.logcoeffs[6] / scale - A) < 1e-10,
                           f"{full.logcoeffs[6] / scale!r} vs {A!r}"))
        rows.append(_check(f"{cls}: leading centralized vs closed form", abs(lead - A) < 1e-10, f"{lead!r} vs {A!r}"))
    return rows


def _suite_charfn() -> list[list]:
    sums = {2: feynman.quadrature_record()}
    rows = []
    b = moments.char_brownian(0.0, 2, sums)
    c = moments.char_closed([1.0], 0.0, 2, sums)
    rows.append(_check("brownian value at 0", b.value == 1, repr(b.value)))
    rows.append(_check("closed value at 0", c.value == 1, repr(c.value)))
    rows.append(_check("brownian first coefficient", abs(b.series.coeffs[1]) <= 1e-10, repr(b.series.coeffs[1])))
    rows.append(_check("closed first coefficient", abs(c.series.coeffs[1]) <= 1e-10, repr(c.series.coeffs[1])))
    rep = moments.t2_consistency(sums)
    rows.append(["t^2 report (not asserted)", "INFO",
                 f"closed {rep['closed_t2']!r}, brownian {rep['brownian_t2']!r}, ratio {rep['ratio']!r}"])
    return rows


SUITES = {"gf": None, "graphs": _suite_graphs, "moments": _suite_moments, "charfn": _suite_charfn}


def cmd_crosscheck(args, out: Output) -> int:
    suite = args.suite
    if args.Lmax % 2 or not 2 <= args.Lmax <= 12:
        raise UsageError("--Lmax must be even and lie in 2..12")
    names = list(SUITES) if suite == "all" else [suite]
    rows = []
    for name in names:
        part = _suite_gf(args.Lmax) if name == "gf" else SUITES[name]()
        rows.extend([[name] + r for r in part])
    out.table(["suite", "check", "status", "detail"], rows)
    return EXIT_NUMERIC if any(r[2] == "FAIL" for r in rows) else EXIT_OK


RECORD_COMMANDS = {"enumerate", "charfn"}

COMMANDS = {
    "enumerate": cmd_enumerate,
    "weights": cmd_weights,
    "integrals": cmd_integrals,
    "graph-sums": cmd_graph_sums,
    "moments": cmd_moments,
    "central": cmd_central,
    "charfn": cmd_charfn,
    "oracle": cmd_oracle,
    "crosscheck": cmd_crosscheck,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rwrange", description="Multiple-point range of planar random walks.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--r", type=int)
    p.add_argument("--h", type=_ints, help="degree vector, e.g. 2,2,2")
    p.add_argument("--k", type=_ints, help="multiplicity indices, e.g. 1,1")
    p.add_argument("--n", type=_floats, help="walk size(s), comma separated")
    p.add_argument("--M", type=int, help="order of the 1/ln(n) expansion")
    p.add_argument("--rmax", type=int)
    p.add_argument("--budget", type=int, default=feynman.DEFAULT_BUDGET, help="Monte Carlo samples per integral")
    p.add_argument("--seed", type=int, default=feynman.DEFAULT_SEED)
    p.add_argument("--threads", type=int, help=f"defaults to ${THREADS_ENV} or the CPU count")
    p.add_argument("--cache-dir")
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"],
                   help="default: json lines for enumerate and charfn, csv otherwise")
    p.add_argument("--no-timestamp", action="store_true")
    p.add_argument("--which", default="closed",
                   choices=["closed", "non-restricted", "unrestricted", "brownian"])
    p.add_argument("--t", type=_floats)
    p.add_argument("--lam", type=_floats, default=[1.0], help="weights of the closed-walk linear combination")
    p.add_argument("--order", type=int, default=8, help="Taylor order of characteristic-function series")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--exact", action="store_true", help="oracle: exhaustive enumeration instead of sampling")
    p.add_argument("--suite", default="all", choices=["all", *SUITES])
    p.add_argument("--Lmax", type=int, default=10)
    return p


def _validate(args) -> None:
    if args.budget < 2 and args.command in ("integrals", "graph-sums"):
        raise UsageError("--budget must be >= 2")
    if args.seed < 0:
        raise UsageError("--seed must be nonnegative")
    if args.threads is not None and args.threads < 1:
        raise UsageError("--threads must be >= 1")
    if args.which == "brownian" and args.command != "charfn":
        raise UsageError("--which brownian only applies to charfn")
    if args.command == "charfn" and args.which not in ("closed", "brownian"):
        raise UsageError("charfn takes --which closed or brownian")
    if not 0 <= args.order <= 30:
        raise UsageError("--order must lie in 0..30")


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.format is None:
        args.format = "json" if args.command in RECORD_COMMANDS else "csv"
    config = {k: v for k, v in sorted(vars(args).items())}
    out = Output(args, config)
    try:
        _validate(args)
        code = COMMANDS[args.command](args, out) or EXIT_OK
    except MissingCacheError as exc:
        print(f"rwrange: missing cache entries: {exc.missing}", file=sys.stderr)
        return EXIT_CACHE
    except (NumericError, PrecisionError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"rwrange: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # UsageError, oversized enumerations and library precondition failures
        print(f"rwrange: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = out.render()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())
