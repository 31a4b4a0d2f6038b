"""Command-line entry point: ``liptree <subcommand> [flags]``.

Exit codes: 0 success, 2 a certificate failed, 3 invalid input.
"""
import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import contraction, envelope, gibbsmc, recursion, tables, treesampler
from .report import CertificateReport, fmt_number, jsonable
from .seqspace import ProbDist, RatioSeq, WeightSeq, ratio_transform

EXIT_OK, EXIT_CERT, EXIT_INPUT = 0, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _global_flags(p, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=default(0), help="64-bit unsigned seed")
    p.add_argument("--mode", choices=["float", "rational"], default=default("float"))
    p.add_argument("--threads", type=int, default=default(1))
    p.add_argument("--out", default=default("-"), help="output path, - for stdout")
    p.add_argument("--format", choices=["csv", "json"], default=default("json"))


def _int_list(text):
    return [int(t) for t in text.split(",") if t]


def build_parser():
    parser = _Parser(prog="liptree", description="Lipschitz functions on trees: "
                     "recursions, certificates, samplers and checks.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _global_flags(p, suppress=True)
        return p

    p = add("iterate", "iterate psi, F or phi")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--map", choices=["psi", "F", "phi"], default="psi")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--length", type=int, default=64)
    p.add_argument("--start", default=None,
                   help="zero, comma-separated values, or a JSON file of half-weights")

    p = add("envelope", "certified box for the even-step fixed point")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--rounds", default="auto")
    p.add_argument("--guesses", choices=["auto", "handpicked"], default="auto")
    p.add_argument("--delta", type=float, default=1e-3)

    p = add("certify", "contraction, partition and non-convergence certificates")
    p.add_argument("--d", type=_int_list, default=None, help="comma-separated list")
    p.add_argument("--what", "--kind", dest="kind",
                   choices=["contraction", "partition", "nonconvergence", "all"], default="all")
    p.add_argument("--triple", default=None, help="a,b,c box for the contraction check")
    p.add_argument("--partition", default=None, help="JSON partition file")
    p.add_argument("--adaptive", action="store_true")
    p.add_argument("--samples", type=int, default=200)

    p = add("sample", "exact samples on the d-ary tree")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--boundary", default="zero")
    p.add_argument("--count", type=int, default=1)

    p = add("marginal", "root marginal on the d-ary or regular tree")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--boundary", default="zero")
    p.add_argument("--regular", action="store_true")

    p = add("gibbs", "heat-bath Glauber dynamics and cluster statistics")
    p.add_argument("--graph", required=True)
    p.add_argument("--M", type=int, default=1)
    p.add_argument("--a", type=int, default=0)
    p.add_argument("--b", type=int, default=0)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--chains", type=int, default=2)
    p.add_argument("--probes", type=_int_list, default=[0])

    p = add("fkg", "exhaustive CBC/FKG checks")
    p.add_argument("--graph", default=None)
    p.add_argument("--kappa", default=None, help="JSON list of [kappa, kappa' or null] pairs")
    p.add_argument("--mode-fkg", dest="fkg_mode", choices=["heights", "shifted-abs"],
                   default="heights")
    p.add_argument("--library", action="store_true", help="run the built-in graph library")
    p.add_argument("--holley", action="store_true")

    p = add("tables", "regenerate result tables 1-8")
    p.add_argument("--which", default="all", help="table number or all")
    p.add_argument("--guesses", choices=["auto", "handpicked"], default="handpicked")

    p = add("figure1", "grid data for f(1, x) and f(f(x))")
    p.add_argument("--d", type=_int_list, default=[2, 7, 8])
    p.add_argument("--points", type=int, default=1000)
    return parser


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (np.floating,)):
        v = float(v)
    if isinstance(v, (np.integer,)):
        v = int(v)
    return fmt_number(v)


def to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def to_json(obj):
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def emit(args, text):
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def parse_boundary(spec):
    """zero | interval:k | set:i,j,... | a JSON file with half-weights or a height list."""
    if spec == "zero":
        return frozenset({0})
    if spec.startswith("interval:"):
        return WeightSeq.interval(int(spec.split(":", 1)[1]))
    if spec.startswith("set:"):
        return frozenset(_int_list(spec[4:]))
    try:
        with open(spec) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read boundary {spec!r}: {exc}") from None
    if isinstance(data, dict) and "weights" in data:
        return ProbDist.from_weights([Fraction(str(v)) for v in data["weights"]], exact=True)
    if isinstance(data, list):
        return frozenset(int(v) for v in data)
    raise InputError("boundary file must hold a height list or {'weights': [...]}")


def _dist_record(dist):
    if isinstance(dist, ProbDist):
        return {"kind": "symmetric", "half": dist.to_json()}
    return {"kind": "offset", **dist.to_dict()}


def _report_exit(reports):
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CERT


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_iterate(args):
    exact = args.mode == "rational"
    if args.map == "phi":
        start = [float(v) for v in args.start.split(",")] if args.start else tables.PHI_START
        emit(args, to_json({"d": args.d, "steps": args.steps,
                            "triple": list(envelope.iterate_phi(start, args.d, args.steps))}))
        return EXIT_OK
    if args.map == "F":
        z = ProbDist.point_mass(exact)
        for z in recursion.iterate_F(z, args.d, args.steps):
            pass
        emit(args, to_json({"d": args.d, "steps": args.steps, "dist": z.to_json()}))
        return EXIT_OK
    x0 = _psi_start(args.start, args.length, exact)
    tr = recursion.iterate_psi(x0, args.d, args.steps)
    if args.format == "csv":
        header = ["step"] + [f"x{k}" for k in range(1, 9)] + ["norm_delta"]
        rows = []
        for j, st in enumerate(tr.states):
            step = (j + 1) * tr.stride
            rows.append([step, *list(st)[:8], tr.norm_deltas[step - 1]])
        emit(args, to_csv(header, rows))
    else:
        emit(args, to_json({"d": args.d, "steps": args.steps, "final": tr.final.to_json(),
                            "converged_at": tr.converged_at,
                            "truncation_events": tr.truncation_events}))
    return EXIT_OK


def _psi_start(spec, length, exact):
    if not spec or spec == "zero":
        return RatioSeq.zero(length, exact)
    if "," in spec or spec.replace(".", "", 1).replace("/", "", 1).isdigit():
        vals = [Fraction(v) if exact else float(Fraction(v)) for v in spec.split(",")]
        return RatioSeq(vals, exact).resized(length)
    boundary = parse_boundary(spec)
    if not isinstance(boundary, ProbDist):
        boundary = ProbDist.from_weights([1] * (max(boundary) + 1), exact)
    z = boundary if exact else boundary.to_float()
    return ratio_transform(z, length)


def cmd_envelope(args):
    res = envelope.two_round_pipeline(args.d, args.rounds, args.delta, args.guesses)
    dom = envelope.verify_box_domination(args.d, res.final_box)
    out = res.to_dict()
    out["domination"] = dom.to_dict()
    emit(args, to_json(out))
    return _report_exit([res.report, dom])


def cmd_certify(args):
    reports = []
    kinds = ["contraction", "partition", "nonconvergence"] if args.kind == "all" else [args.kind]
    for kind in kinds:
        ds = args.d or (list(range(8, 13)) if kind == "nonconvergence" else list(range(2, 8)))
        for d in ds:
            if kind == "contraction":
                triple = None
                if args.triple:
                    triple = envelope.EnvelopeTriple.exact(*args.triple.split(","))
                reports.append(contraction.contraction_certificate(
                    d, triple, samples=args.samples, seed=args.seed))
            elif kind == "partition":
                if args.partition:
                    with open(args.partition) as fh:
                        spec = contraction.PartitionSpec.from_json(fh.read())
                else:
                    spec = contraction.PartitionSpec.builtin(d)
                reports.append(contraction.partition_certificate(spec, args.adaptive))
            else:
                reports.append(recursion.nonconvergence_certificate(d))
    if args.format == "csv":
        rows = [[r.title, "PASS" if r.passed else "FAIL", len(r.checks),
                 "; ".join(c.name for c in r.failures())] for r in reports]
        emit(args, to_csv(["certificate", "status", "checks", "failing"], rows))
    else:
        emit(args, to_json([r.to_dict() for r in reports]))
    return _report_exit(reports)


def cmd_sample(args):
    boundary = parse_boundary(args.boundary)
    arrays = treesampler.sample_tree_arrays(args.n, args.d, boundary, args.count, args.seed,
                                            threads=args.threads)
    lines = []
    for s in range(args.count):
        levels = [arr[s].tolist() for arr in arrays]
        lines.append(json.dumps({"sample": s, "n": args.n, "d": args.d, "levels": levels},
                                sort_keys=True))
    emit(args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_marginal(args):
    boundary = parse_boundary(args.boundary)
    exact = args.mode == "rational"
    dist = treesampler.root_marginal(args.n, args.d, boundary, args.regular, exact)
    if args.format == "csv":
        if isinstance(dist, ProbDist):
            dist = treesampler.IntDist.from_probdist(dist)
        rows = [[h, dist.value(h)] for h in dist.support]
        emit(args, to_csv(["height", "probability"], rows))
    else:
        emit(args, to_json({"n": args.n, "d": args.d, "regular": args.regular,
                            "dist": _dist_record(dist)}))
    return EXIT_OK


def cmd_gibbs(args):
    g = gibbsmc.parse_graph(args.graph).with_ab(args.a, args.b, args.M)
    vals, _ = gibbsmc.glauber_chains(g, args.M, args.sweeps, args.chains, args.seed)
    states = [gibbsmc.MLipschitzState(row, args.M) for row in vals]
    valid = all(s.is_valid(g) for s in states)
    per_chain = []
    for s in states:
        st = gibbsmc.cluster_stats(s, g, (args.a, args.b), args.probes, args.M)
        per_chain.append({"atypical_even": sorted(st.atypical_even),
                          "atypical_odd": sorted(st.atypical_odd),
                          "component_sizes": {str(k): v for k, v in sorted(st.component_sizes.items())}})
    out = {"graph": args.graph, "M": args.M, "a": args.a, "b": args.b, "sweeps": args.sweeps,
           "valid": valid, "chains": per_chain,
           "split_chain_tv": gibbsmc.split_chain_tv(vals, args.probes) if args.chains > 1 else None,
           "final_states": vals.tolist()}
    emit(args, to_json(out))
    return EXIT_OK if valid else EXIT_CERT


def cmd_fkg(args):
    mode = "shifted_abs" if args.fkg_mode == "shifted-abs" else "heights"
    reports = []
    if args.library:
        for name, g, hp, ap in gibbsmc.fkg_library():
            rep = gibbsmc.fkg_bruteforce(g, hp if mode == "heights" else ap, mode, args.holley)
            rep.title = f"{name}: {rep.title}"
            reports.append(rep)
    else:
        if not (args.graph and args.kappa):
            raise InputError("fkg needs --graph and --kappa, or --library")
        g = gibbsmc.parse_graph(args.graph)
        with open(args.kappa) as fh:
            raw = json.load(fh)
        pairs = [({int(k): v for k, v in p[0].items()},
                  None if p[1] is None else {int(k): v for k, v in p[1].items()}) for p in raw]
        reports.append(gibbsmc.fkg_bruteforce(g, pairs, mode, args.holley))
    emit(args, to_json([r.to_dict() for r in reports]))
    return _report_exit(reports)


def cmd_tables(args):
    which = list(range(1, 9)) if args.which == "all" else _int_list(args.which)
    if any(not 1 <= w <= 8 for w in which):
        raise InputError("tables are numbered 1..8")
    parts = {}
    for w in which:
        header, rows = tables.reproduce_table(w, args.guesses)
        if args.mode == "float":
            rows = [[float(v) if isinstance(v, Fraction) else v for v in r] for r in rows]
        parts[w] = (header, rows)
    if args.format == "csv":
        text = "".join((f"# table {w}\n" if len(which) > 1 else "") + to_csv(*parts[w])
                       for w in which)
    else:
        text = to_json({str(w): {"header": h, "rows": r} for w, (h, r) in parts.items()})
    emit(args, text)
    return EXIT_OK


def cmd_figure1(args):
    header, rows = tables.figure1_data(args.d, args.points)
    if args.format == "csv":
        emit(args, to_csv(header, rows))
    else:
        summary = {str(d): {"sign_changes": tables.sign_changes(d, args.points),
                            "max_abs_ff_slope": tables.ff_slope_max(d, args.points)}
                   for d in args.d}
        emit(args, to_json({"header": header, "rows": rows, "summary": summary}))
    return EXIT_OK


COMMANDS = {
    "iterate": cmd_iterate, "envelope": cmd_envelope, "certify": cmd_certify,
    "sample": cmd_sample, "marginal": cmd_marginal, "gibbs": cmd_gibbs, "fkg": cmd_fkg,
    "tables": cmd_tables, "figure1": cmd_figure1,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed < 0 or args.seed >= 2 ** 64:
        parser.error("--seed must be a 64-bit unsigned integer")
    try:
        return COMMANDS[args.command](args)
    except (InputError, ValueError, OSError, KeyError) as exc:
        print(f"liptree: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
