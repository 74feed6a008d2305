"""Command line entry point.

Every artifact starts with ``#`` header lines carrying the package version,
the resolved configuration and digests of input files, so reruns with the
same inputs produce identical bytes.  Execution-only options (worker count,
resume directory, output paths) are not echoed because they never change
the computed values.

Exit status: 0 success, 1 computation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__

PREC_ENV = "OMEGAPARITY_PREC"
DEFAULT_PREC = 64
EXECUTION_ONLY = {"workers", "resume_dir", "out", "normalized_out", "func_handler"}


class UsageError(Exception):
    pass


def default_precision() -> int:
    raw = os.environ.get(PREC_ENV)
    if raw is None:
        return DEFAULT_PREC
    try:
        prec = int(raw)
    except ValueError:
        raise UsageError(f"{PREC_ENV} must be an integer, got {raw!r}") from None
    if prec < 16:
        raise UsageError(f"{PREC_ENV} must be at least 16")
    return prec


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def header_lines(config: dict, inputs=()) -> list[str]:
    shown = {k: v for k, v in config.items() if k not in EXECUTION_ONLY and v is not None}
    lines = [f"omegaparity {__version__}",
             "config " + json.dumps(shown, sort_keys=True, default=str)]
    for p in inputs:
        lines.append(f"input {Path(p).name} sha256={file_digest(p)}")
    return lines


def write_table(path, header, columns, rows) -> None:
    """Write ``#`` header lines, a column line and comma separated rows."""
    text = "".join(f"# {h}\n" for h in header)
    text += ",".join(columns) + "\n"
    text += "".join(",".join(_fmt(v) for v in row) + "\n" for row in rows)
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def export_plot_data(rows, path, header=(), columns=("u", "value")) -> None:
    """Two-column CSV for plotting; refuses empty input."""
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to export")
    write_table(path, header, columns, rows)


# ------------------------------------------------------------------ helpers


def _zero_table(path, min_bits=64):
    from .zeros import default_table, default_table_path, load_zeros

    if path:
        return load_zeros(path, min_bits), [path]
    return default_table(), [default_table_path()]


def _u_values(args) -> list[float]:
    if args.u:
        return [float(u) for u in args.u]
    if args.u_range:
        a, b, n = args.u_range
        n = int(n)
        if n < 1:
            raise UsageError("--u-range needs at least one point")
        if n == 1:
            return [float(a)]
        return [float(a) + (float(b) - float(a)) * k / (n - 1) for k in range(n)]
    raise UsageError("give --u or --u-range")


def _residues_for(args, table, problem, T, line="half", indices=None):
    from .residues import ResidueSet, compute_residues

    if getattr(args, "residues", None):
        rs = ResidueSet.from_csv(args.residues)
        if rs.problem.value != problem.value:
            raise UsageError("residue file is for a different problem")
        return rs
    if indices is None:
        indices = [r.index for r in table.records if r.gamma <= T]
    return compute_residues(table, problem, indices=indices, prec=args.prec, line=line,
                            prime_bound=args.prime_bound, workers=args.workers)


# ---------------------------------------------------------------- commands


def cmd_zeros(args, config) -> int:
    from .zeros import generate_zeros, load_zeros, validate_zeros

    if args.action == "load":
        t = load_zeros(args.path, args.min_bits)
        rows = [(r.index, r.text, r.precision_bits) for r in t.records]
        write_table(args.out, header_lines(config, [args.path]), ("index", "gamma", "bits"), rows)
        return 0
    if args.action == "validate":
        t = load_zeros(args.path, args.min_bits)
        # validation is explicit about its range, so the height guard only
        # needs to cover the largest ordinate in the file
        ceiling = max(5000.0, math.ceil(t[t.count].gamma) + 1.0) if t.count else None
        rep = validate_zeros(t, args.tolerance, prec=args.prec, ceiling=ceiling)
        rows = [(e.index, e.gamma, repr(e.abs_zeta), int(e.passed)) for e in rep.entries]
        write_table(args.out, header_lines(config, [args.path]),
                    ("index", "gamma", "abs_zeta", "pass"), rows)
        return 0 if rep.passed else 1
    if args.action == "generate":
        if not args.out or args.out == "-":
            raise UsageError("zeros generate needs --out FILE")
        t = generate_zeros(args.tmax, args.digits)
        t.save(args.out)
        return 0
    raise UsageError(f"unknown zeros action {args.action}")


def cmd_sieve(args, config) -> int:
    from .sieve import Func, normalized_export, summatory

    func = Func.parse(args.func)
    stride = args.stride if args.stride else None
    series = summatory(args.xmax, args.block, func, stride, table_size=args.table_size,
                       workers=args.workers, resume_dir=args.resume_dir)
    hdr = header_lines(config)
    write_table(args.out, hdr, ("x", "S"), series.checkpoints)
    if args.normalized_out:
        export_plot_data(normalized_export(series), args.normalized_out, hdr,
                         ("u", "S_over_sqrt"))
    return 0


def cmd_beta(args, config) -> int:
    from mpmath import mp, nstr

    from . import density

    digits = 25
    if args.mode == "by-r":
        caps = density.DEFAULT_R_CAPS if not args.caps else _parse_caps(args.caps)
        b = density.beta_bounds_by_r(caps)
        rows = [("lower", nstr(b.lower, digits)), ("upper", nstr(b.upper, digits))]
    elif args.mode == "by-product":
        b = density.beta_bounds_by_product(args.B)
        rows = [("lower", nstr(b.lower, digits)), ("upper", nstr(b.upper, digits))]
    elif args.mode == "renyi":
        with mp.workprec(density.WORK_PREC):
            v, tail = density.renyi_R(args.z, args.prime_bound)
            rows = [("R", nstr(v, digits)), ("tail", nstr(tail, 5)),
                    ("beta", nstr((1 + v) / 2, digits)) if args.z == -1 else ("z", args.z)]
    elif args.mode == "empirical":
        v = density.empirical_beta(args.x, workers=args.workers)
        rows = [("beta_x", repr(v))]
    else:
        raise UsageError(f"unknown mode {args.mode}")
    write_table(args.out, header_lines(config), ("quantity", "value"), rows)
    return 0


def _parse_caps(text: str) -> dict[int, int]:
    caps = {}
    try:
        for part in text.split(","):
            r, cap = part.split(":")
            caps[int(r)] = int(float(cap))
    except ValueError:
        raise UsageError(f"bad --caps {text!r}, expected r:cap,...") from None
    return caps


def cmd_residues(args, config) -> int:
    from .residues import Problem, compute_residues

    table, inputs = _zero_table(args.zeros)
    problem = Problem.parse(args.problem)
    if args.T is not None:
        indices = [r.index for r in table.records if r.gamma < args.T]
    else:
        indices = range(1, (args.count or table.count) + 1)
    rs = compute_residues(table, problem, indices=indices, prec=args.prec,
                          prime_bound=args.prime_bound, line=args.line, workers=args.workers)
    if not args.out or args.out == "-":
        raise UsageError("residues needs --out FILE")
    rs.to_csv(args.out)
    body = Path(args.out).read_text()
    Path(args.out).write_text("".join(f"# {h}\n" for h in header_lines(config, inputs)) + body)
    return 0


def cmd_oscillate(args, config) -> int:
    from .oscillation import (BOUND_INDICES, KernelSpec, anderson_stark_bound, b_star,
                              explicit_estimate, select_gamma_prime, weight_residues)
    from .residues import Problem

    table, inputs = _zero_table(args.zeros)
    if getattr(args, "residues", None):
        inputs = list(inputs) + [args.residues]
    problem = Problem.parse(args.problem)
    if args.action == "bstar":
        us = _u_values(args)
        rs = _residues_for(args, table, problem, args.T)
        vals = b_star(problem, KernelSpec(args.kernel, args.T), us, table, rs)
        export_plot_data(zip(us, map(float, vals)), args.out, header_lines(config, inputs),
                         ("u", "bstar"))
        return 0
    if args.action == "estimate":
        us = _u_values(args)
        rs = _residues_for(args, table, problem, args.T)
        rq = None
        if args.include_quarter:
            rq = _residues_for(argparse.Namespace(**{**vars(args), "residues": None}), table,
                               problem, args.T, line="quarter")
        vals = explicit_estimate(problem, us, args.T, table, rs, args.include_quarter, rq)
        export_plot_data(zip(us, map(float, vals)), args.out, header_lines(config, inputs),
                         ("u", "estimate"))
        return 0
    if args.action == "bound":
        eps = Fraction(args.epsilon)
        T = float(table[args.m + 1].fraction - eps)
        kernel = KernelSpec(args.kernel, T)
        if args.indices == "fixed":
            chosen = list(BOUND_INDICES)
            if len(chosen) != args.n:
                raise UsageError(f"the printed index set has {len(chosen)} entries, not n={args.n}")
            rs = _residues_for(args, table, problem, T, indices=chosen)
        else:
            rs_all = _residues_for(args, table, problem, T, indices=range(1, args.m + 1))
            chosen = select_gamma_prime(rs_all, kernel, args.n)
            rs = rs_all.subset(sorted(chosen))
        w = weight_residues(rs, kernel)
        hi, lo = anderson_stark_bound(w, args.N)
        rows = [("limsup_lower_bound", repr(hi)), ("liminf_upper_bound", repr(lo)),
                ("n", len(w)), ("T", repr(T))]
        write_table(args.out, header_lines(config, inputs), ("quantity", "value"), rows)
        return 0
    raise UsageError(f"unknown oscillate action {args.action}")


def cmd_certify(args, config) -> int:
    from .independence import run_certification

    table, inputs = _zero_table(args.zeros, 64)
    selected = None
    if args.indices == "fixed":
        from .oscillation import BOUND_INDICES

        selected = list(BOUND_INDICES)
    cert = run_certification(args.problem, args.n, args.m, args.bits, Fraction(args.delta),
                             Fraction(args.epsilon), table=table, selected=selected,
                             workers=args.workers, resume_dir=args.resume_dir,
                             method=args.method)
    text = "".join(f"# {h}\n" for h in header_lines(config, inputs)) + cert.text()
    if args.out and args.out != "-":
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if not cert.failed else 1


def cmd_series(args, config) -> int:
    from .series import compute_a_sequence, fk_tail_coefficients

    if args.action == "a-sequence":
        seq = compute_a_sequence(args.K)
        write_table(args.out, header_lines(config), ("k", "a_k"),
                    list(enumerate(seq, start=1)))
        return 0
    if args.action == "fk-tail":
        ps = fk_tail_coefficients(args.k, args.K)
        write_table(args.out, header_lines(config), ("degree", "coefficient"),
                    list(enumerate(ps.coefficients)))
        return 0
    raise UsageError(f"unknown series action {args.action}")


# ------------------------------------------------------------------ parser


def _positive_int(text):
    try:
        v = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="omegaparity", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"omegaparity {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, prec=False):
        sp.add_argument("--out", default="-", help="output file (default stdout)")
        sp.add_argument("--workers", type=_positive_int, default=1)
        if prec:
            sp.add_argument("--prec", type=_positive_int, default=None,
                            help=f"working precision in bits (default ${PREC_ENV} or 64)")

    z = sub.add_parser("zeros", help="load, validate or generate zero tables")
    z.add_argument("action", choices=["load", "validate", "generate"])
    z.add_argument("path", nargs="?")
    z.add_argument("--min-bits", type=_positive_int, default=64)
    z.add_argument("--tolerance", type=float, default=1e-8)
    z.add_argument("--tmax", type=float, default=1000.0)
    z.add_argument("--digits", type=_positive_int, default=50)
    common(z, prec=True)
    z.set_defaults(func_handler=cmd_zeros)

    s = sub.add_parser("sieve", help="summatory function of xi, lambda or mu")
    s.add_argument("--func", required=True, choices=["xi", "lambda", "mu"])
    s.add_argument("--xmax", type=_positive_int, required=True)
    s.add_argument("--block", type=_positive_int, default=10_000_000)
    s.add_argument("--table-size", type=_positive_int, default=None)
    s.add_argument("--stride", type=_positive_int, default=None,
                   help="checkpoint every STRIDE integers (default: geometric ladder)")
    s.add_argument("--normalized-out", default=None)
    s.add_argument("--resume-dir", default=None)
    common(s)
    s.set_defaults(func_handler=cmd_sieve)

    b = sub.add_parser("beta", help="brackets and estimates for the parity density")
    b.add_argument("--mode", required=True, choices=["by-r", "by-product", "renyi", "empirical"])
    b.add_argument("--caps", default=None, help="per-r prime caps, e.g. 1:3e6,2:17500")
    b.add_argument("--B", type=_positive_int, default=10_000_000)
    b.add_argument("--z", type=float, default=-1.0)
    b.add_argument("--prime-bound", type=_positive_int, default=1_000_000)
    b.add_argument("--x", type=_positive_int, default=10**8)
    common(b)
    b.set_defaults(func_handler=cmd_beta)

    r = sub.add_parser("residues", help="residues at zeta zeros")
    r.add_argument("--problem", required=True, choices=["m", "l", "h"])
    r.add_argument("--line", default="half", choices=["half", "quarter"])
    r.add_argument("--zeros", default=None, help="zero table (default: bundled table)")
    r.add_argument("--T", type=float, default=None)
    r.add_argument("--count", type=_positive_int, default=None)
    r.add_argument("--prime-bound", type=_positive_int, default=100_000)
    common(r, prec=True)
    r.set_defaults(func_handler=cmd_residues)

    o = sub.add_parser("oscillate", help="sums over zeros and oscillation bounds")
    o.add_argument("action", choices=["bstar", "estimate", "bound"])
    o.add_argument("--problem", required=True, choices=["m", "l", "h"])
    o.add_argument("--kernel", default=None, choices=["fejer", "jp"])
    o.add_argument("--T", type=float, default=None)
    o.add_argument("--u", type=float, nargs="+", default=None)
    o.add_argument("--u-range", type=float, nargs=3, default=None, metavar=("A", "B", "N"))
    o.add_argument("--include-quarter", action="store_true")
    o.add_argument("--n", type=_positive_int, default=239)
    o.add_argument("--m", type=_positive_int, default=2365)
    o.add_argument("--N", type=_positive_int, default=3950)
    o.add_argument("--epsilon", default="1e-10")
    o.add_argument("--indices", default="fixed", choices=["fixed", "select"])
    o.add_argument("--zeros", default=None)
    o.add_argument("--residues", default=None, help="residue CSV instead of recomputing")
    o.add_argument("--prime-bound", type=_positive_int, default=100_000)
    common(o, prec=True)
    o.set_defaults(func_handler=cmd_oscillate)

    c = sub.add_parser("certify", help="lattice certification of weak independence")
    c.add_argument("--problem", required=True, choices=["m", "l", "h"])
    c.add_argument("--n", type=_positive_int, required=True)
    c.add_argument("--m", type=_positive_int, required=True)
    c.add_argument("--bits", type=_positive_int, required=True)
    c.add_argument("--delta", default="0.99")
    c.add_argument("--epsilon", default="1e-10")
    c.add_argument("--method", default="exact", choices=["exact", "fp"])
    c.add_argument("--indices", default="select", choices=["select", "fixed"])
    c.add_argument("--zeros", default=None)
    c.add_argument("--resume-dir", default=None)
    common(c)
    c.set_defaults(func_handler=cmd_certify)

    q = sub.add_parser("series", help="exponent sequence and F_k local factors")
    q.add_argument("action", choices=["a-sequence", "fk-tail"])
    q.add_argument("--K", type=_positive_int, required=True)
    q.add_argument("--k", type=_positive_int, default=6)
    common(q)
    q.set_defaults(func_handler=cmd_series)
    return p


def _resolve(args) -> dict:
    """Fill precision and kernel defaults and validate cross-option constraints."""
    if hasattr(args, "prec") and args.prec is None:
        args.prec = default_precision()
    if args.command == "oscillate":
        if args.kernel is None:
            args.kernel = "fejer" if args.action == "bstar" else "jp"
        if args.action in ("bstar", "estimate") and args.T is None:
            raise UsageError(f"oscillate {args.action} needs --T")
        if args.action == "estimate" and args.problem == "m":
            raise UsageError("explicit estimates exist for --problem l and h")
        if args.include_quarter and args.problem != "h":
            raise UsageError("--include-quarter applies to --problem h only")
        try:
            Fraction(args.epsilon)
        except ValueError:
            raise UsageError(f"bad --epsilon {args.epsilon!r}") from None
    if args.command == "certify":
        if args.m < args.n:
            raise UsageError("certify needs m >= n")
        try:
            d = Fraction(args.delta)
        except ValueError:
            raise UsageError(f"bad --delta {args.delta!r}") from None
        if not Fraction(1, 4) < d < 1:
            raise UsageError("--delta must lie in (1/4, 1)")
    if args.command == "zeros" and args.action in ("load", "validate") and not args.path:
        raise UsageError(f"zeros {args.action} needs a PATH")
    if args.command == "zeros" and args.action == "generate" and args.tmax > 1e4:
        raise UsageError("zero generation is limited to --tmax <= 10000")
    if args.command == "series" and args.action == "fk-tail" and not args.k < args.K:
        raise UsageError("fk-tail needs k < K")
    config = {k: v for k, v in sorted(vars(args).items())}
    config["func_handler"] = None
    return config


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _resolve(args)
        return args.func_handler(args, config)
    except UsageError as exc:
        print(f"omegaparity: usage error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # noqa: BLE001 - any failure of the computation itself
        print(f"omegaparity: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
