"""Command-line front end.

Subcommands: reflect, bass, endring, trace, experiment, report.  All
randomness derives from --seed, and identical configurations produce
byte-identical output files regardless of --threads.  Numbers with
possible denominators are emitted as "num/den" strings and field elements
as decimal-string arrays; no floating point appears in any output.
"""

import argparse
import csv
import io
import json
import os
import random
import sys
from fractions import Fraction

from . import __version__
from .curves import IsogenyChain, NotSupersingular
from .fields import NotPrime, TooSmall, make_field
from .pipeline import (
    DegenerateBasis,
    OracleMismatch,
    aggregate_rows,
    algorithm2_bass,
    algorithm3_endring,
    heuristic_endring,
    run_experiment,
    sample_curve_off_spine,
)
from .quatlin import gamma_to_hab, ldl_to_algebra
from .reflect import compute_reflection, verify_reflection
from .rng import derive_rng
from .trace import trd


def _frac_str(x) -> str:
    f = Fraction(x)
    return f"{f.numerator}/{f.denominator}"


def _write_output(text: str, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump_json(obj, path):
    _write_output(json.dumps(obj, sort_keys=True, indent=1) + "\n", path)


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("ENDRING_THREADS")
    if env:
        return int(env)
    return os.cpu_count() or 1


def cmd_reflect(args):
    rng = derive_rng(args.seed, "reflect", args.p, args.ell, args.d)
    E = sample_curve_off_spine(args.p, rng)
    alpha = compute_reflection(E, args.ell, args.d, rng, greedy=args.greedy)
    ok = verify_reflection(alpha, 5, rng)
    out = alpha.to_json()
    out["p"] = args.p
    out["selfcheck"] = ok
    if args.trace_walks:
        out["walks_tried"] = alpha.walks_tried
    _dump_json(out, args.output)
    return 0


def cmd_bass(args):
    rng = derive_rng(args.seed, "bass", args.p)
    E = sample_curve_off_spine(args.p, rng)
    res = algorithm2_bass(E, args.ell1, args.ell2, args.d, rng, greedy=args.greedy)
    out = {
        "p": args.p,
        "ell1": args.ell1,
        "ell2": args.ell2,
        "d": args.d,
        "k1": res.alpha1.k,
        "k2": res.alpha2.k,
        "trd_rho": str(res.trd_rho),
        "deg_rho": str(res.deg_rho),
        "disc_rho": str(res.disc_rho),
        "discrd_lambda": str(res.discrd_lambda),
        "gram": [[str(v) for v in row] for row in res.gram],
    }
    _dump_json(out, args.output)
    return 0


def cmd_endring(args):
    rng = derive_rng(args.seed, "endring", args.p, args.method)
    E = sample_curve_off_spine(args.p, rng)
    if args.method == "heuristic":
        res = heuristic_endring(E, rng, greedy=args.greedy)
    else:
        res = algorithm3_endring(E, rng, greedy=args.greedy)
    alg, L, c = ldl_to_algebra(res.gram)
    basis = [gamma_to_hab(L, c, row) for row in res.order.basis_rows()]
    from .quatlin import discrd as _discrd

    prov = dict(res.provenance)
    prov.pop("discrd_chain", None)
    out = {
        "p": args.p,
        "a": _frac_str(alg.a),
        "b": _frac_str(alg.b),
        "basis": [[_frac_str(v) for v in row] for row in basis],
        "gram": [[str(v) for v in row] for row in res.gram],
        "discrd": _discrd(res.model, res.order),
        "provenance": prov,
    }
    _dump_json(out, args.output)
    return 0


def cmd_trace(args):
    with open(args.chain) as fh:
        data = json.load(fh)
    p = int(data["p"])
    ctx = make_field(p)
    chain = IsogenyChain.from_json(ctx, data["chain"] if "chain" in data else data)
    rng = derive_rng(args.seed, "trace", p)
    t = trd(chain, rng, validate=True)
    _dump_json({"p": p, "degree": str(chain.formal_degree), "trd": str(t)}, args.output)
    return 0


_TRIAL_FIELDS = [
    "bits", "prime", "trial", "seed", "gcd_coprime", "generated",
    "reflections_used", "disc_rho_1", "disc_rho_2",
]


def _rows_to_csv(rows, kind, box) -> str:
    buf = io.StringIO()
    if kind == "quaternion":
        buf.write(f"# coordinate box over the Z+P basis: [-{box}, {box}]\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_TRIAL_FIELDS)
    for r in rows:
        w.writerow([r.bits, r.prime, r.trial, r.seed, r.gcd_ok, r.generated,
                    r.reflections_used, r.disc_rho_1, r.disc_rho_2])
    return buf.getvalue()


def _agg_to_csv(agg) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["bits", "trials", "freq_gcd", "freq_generate"])
    for r in agg:
        w.writerow([r["bits"], r["trials"], _frac_str(r["freq_gcd"]),
                    _frac_str(r["freq_generate"])])
    return buf.getvalue()


def cmd_experiment(args):
    from math import isqrt

    bits_list = _parse_bits(args)
    if not all(4 <= b <= 26 for b in bits_list):
        raise SystemExit("bit sizes outside the supported desk-scale range [4, 26]")
    box = None
    if args.kind == "quaternion":
        from .pipeline import first_prime_after

        box = isqrt(first_prime_after(1 << max(bits_list))) + 1
    progress = None
    if args.verbose:
        def progress(done, total):
            print(f"\r{done}/{total} trials", end="", file=sys.stderr, flush=True)
    rows = run_experiment(args.kind, bits_list, args.trials, args.seed,
                          threads=_threads(args), box=box, progress=progress)
    if args.verbose:
        print(file=sys.stderr)
    agg = aggregate_rows(rows)
    outdir = args.output or "."
    os.makedirs(outdir, exist_ok=True)
    base = f"experiment_{args.kind}"
    with open(os.path.join(outdir, base + "_trials.csv"), "w") as fh:
        fh.write(_rows_to_csv(rows, args.kind, box))
    agg_ser = [
        {"bits": r["bits"], "trials": r["trials"],
         "freq_gcd": _frac_str(r["freq_gcd"]),
         "freq_generate": _frac_str(r["freq_generate"])}
        for r in agg
    ]
    with open(os.path.join(outdir, base + "_aggregate.csv"), "w") as fh:
        fh.write(_agg_to_csv(agg))
    if args.figures:
        from .report import render_frequency_figure

        title = ("generation frequencies from walk-built endomorphisms"
                 if args.kind == "coprimality"
                 else "generation frequencies from random suborder elements")
        render_frequency_figure(agg_ser, title, os.path.join(outdir, base + ".png"))
    return 0


def cmd_report(args):
    rows = []
    with open(args.trials_csv) as fh:
        rdr = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rdr)
        assert header == _TRIAL_FIELDS, "unrecognized per-trial CSV schema"
        from .pipeline import ExperimentRow

        for rec in rdr:
            rows.append(ExperimentRow(int(rec[0]), int(rec[1]), int(rec[2]),
                                      int(rec[3]), int(rec[4]), int(rec[5]),
                                      int(rec[6]), int(rec[7]), int(rec[8])))
    agg = aggregate_rows(rows)
    outdir = args.output or "."
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "aggregate.csv"), "w") as fh:
        fh.write(_agg_to_csv(agg))
    agg_ser = [
        {"bits": r["bits"], "trials": r["trials"],
         "freq_gcd": _frac_str(r["freq_gcd"]),
         "freq_generate": _frac_str(r["freq_generate"])}
        for r in agg
    ]
    from .report import render_frequency_figure

    render_frequency_figure(agg_ser, args.title, os.path.join(outdir, "frequencies.png"))
    return 0


def _parse_bits(args):
    if args.bits:
        return [int(b) for b in args.bits.split(",")]
    return list(range(args.bits_lo, args.bits_hi + 1))


def build_parser():
    ap = argparse.ArgumentParser(prog="ssendo", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, p=True):
        if p:
            sp.add_argument("--p", type=int, required=True, help="odd prime > 3")
        sp.add_argument("--seed", type=int, default=0, help="64-bit master seed")
        sp.add_argument("-o", "--output", default=None, help="output path")
        sp.add_argument("--greedy", action="store_true",
                        help="accept walks at the first structured vertex")
        sp.add_argument("--threads", type=int, default=None)

    sp = sub.add_parser("reflect", help="compute one inseparable reflection")
    common(sp)
    sp.add_argument("--ell", type=int, required=True, choices=(2, 3, 5))
    sp.add_argument("--d", type=int, required=True, choices=(1, 2))
    sp.add_argument("--trace-walks", action="store_true")
    sp.set_defaults(fn=cmd_reflect)

    sp = sub.add_parser("bass", help="Bass suborder from two reflections")
    common(sp)
    sp.add_argument("--ell1", type=int, default=3)
    sp.add_argument("--ell2", type=int, default=5)
    sp.add_argument("--d", type=int, default=2)
    sp.set_defaults(fn=cmd_bass)

    sp = sub.add_parser("endring", help="endomorphism ring as a maximal order")
    common(sp)
    sp.add_argument("--method", choices=("heuristic", "enumerate"), default="heuristic")
    sp.set_defaults(fn=cmd_endring)

    sp = sub.add_parser("trace", help="reduced trace of a serialized chain")
    common(sp, p=False)
    sp.add_argument("--chain", required=True, help="chain JSON file (with p)")
    sp.set_defaults(fn=cmd_trace)

    sp = sub.add_parser("experiment", help="generation-frequency experiments")
    sp.add_argument("kind", choices=("coprimality", "quaternion"))
    sp.add_argument("--bits-lo", type=int, default=12)
    sp.add_argument("--bits-hi", type=int, default=20)
    sp.add_argument("--bits", default=None, help="explicit comma-separated bit sizes")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("-o", "--output", default=None, help="output directory")
    sp.add_argument("--figures", action="store_true",
                    help="render PNG figures next to the CSV output")
    sp.add_argument("--verbose", action="store_true")
    sp.set_defaults(fn=cmd_experiment)

    sp = sub.add_parser("report", help="re-aggregate a per-trial CSV and render figures")
    sp.add_argument("trials_csv")
    sp.add_argument("-o", "--output", default=None, help="output directory")
    sp.add_argument("--title", default="generation frequencies")
    sp.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (NotPrime, TooSmall, NotSupersingular, DegenerateBasis, OracleMismatch) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
