"""``skinny-qr`` command line: bench, lstsq, model, generate."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .bench import METHODS, GridConfig, report, rows_pass, run_grid
from .errors import MatrixFormatError
from .lstsq import METHODS as LSTSQ_METHODS
from .lstsq import solve_lstsq
from .matgen import SpectrumSpec, generate
from .matrix import matrix_read, matrix_write
from .perfmodel import (
    KERNELS,
    METHOD_KERNELS,
    composite_time,
    intensity,
    load_hardware,
    machine_balance,
    predict_time,
    roofline_rate,
)
from .plan import get_num_threads, set_num_threads


def _int_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _count(text: str) -> int:
    """Integer count; accepts ``8192000``, ``8.192e6`` and ``2**23``."""
    try:
        base, sep, exp = text.partition("**")
        v = float(base) ** int(exp) if sep else float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a count: {text!r}") from None
    if v != int(v):
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(v)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skinny-qr", description="Q-less QR of tall, very skinny matrices.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: CPU count)")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="run the constant-mn benchmark grid")
    b.add_argument("--mn-product", type=_count, default=2**23)
    b.add_argument("--cols", type=_int_list, default=(1, 8, 16, 32, 64))
    b.add_argument("--methods", type=_str_list, default=METHODS)
    b.add_argument("--kappa", type=float, default=1e6)
    b.add_argument("--decay", choices=("geometric", "linear"), default="geometric")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--reps", type=int, default=50)
    b.add_argument("--warmups", type=int, default=3)
    b.add_argument("--hw", default="h100", help="built-in device name or .hw file")
    b.add_argument("--out", default=None, help="results file (default: print only)")
    b.add_argument("--format", choices=("csv", "json", "text"), default="csv")
    b.add_argument("--threads", type=int, default=None, dest="bench_threads")
    b.add_argument("--quiet", action="store_true", help="do not print the table")

    ls = sub.add_parser("lstsq", help="solve min ||A x - b|| from .tskm files")
    ls.add_argument("--matrix", required=True)
    ls.add_argument("--rhs", required=True)
    ls.add_argument("--method", choices=LSTSQ_METHODS, default="tsqr")
    ls.add_argument("--out", default=None, help="write x as an n x 1 .tskm file")

    mo = sub.add_parser("model", help="Roofline prediction for one kernel or method")
    mo.add_argument("--hw", default="h100")
    what = mo.add_mutually_exclusive_group(required=True)
    what.add_argument("--kernel", choices=sorted(KERNELS))
    what.add_argument("--method", choices=sorted(METHOD_KERNELS))
    mo.add_argument("--m", type=_count, required=True)
    mo.add_argument("--n", type=int, required=True)

    g = sub.add_parser("generate", help="write a test matrix with a prescribed spectrum")
    g.add_argument("--m", type=_count, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--kappa", type=float, default=1.0)
    g.add_argument("--decay", choices=("geometric", "linear"), default="geometric")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    return p


def _bench(args) -> int:
    config = GridConfig(
        mn_product=args.mn_product,
        cols=args.cols,
        methods=args.methods,
        kappa=args.kappa,
        decay=args.decay,
        seed=args.seed,
        reps=args.reps,
        warmups=args.warmups,
        hw=args.hw,
    )
    on_row = (lambda rows: report(rows, args.out, args.format)) if args.out else None
    rows = run_grid(config, on_row)
    text = report(rows, args.out, args.format)
    if not args.quiet:
        sys.stdout.write(text if args.format == "text" else report(rows, None, "text"))
    for r in rows:
        if r["status"] != "ok":
            print(f"{r['method']} n={r['n']}: {r['status']}: {r['message']}", file=sys.stderr)
    return 0 if rows_pass(rows) else 1


def _lstsq(args) -> int:
    A = matrix_read(args.matrix)
    rhs = matrix_read(args.rhs)
    if rhs.shape[1] != 1:
        raise ValueError(f"{args.rhs}: right-hand side must have one column, got {rhs.shape[1]}")
    res = solve_lstsq(A, rhs[:, 0], args.method)
    np.set_printoptions(precision=17)
    print("x =", res.x)
    print(f"residual_norm = {res.residual_norm!r}")
    if args.out:
        matrix_write(args.out, res.x.reshape(-1, 1), label="x")
    return 0


def _model(args) -> int:
    hw = load_hardware(args.hw)
    m, n = args.m, args.n
    print(f"hardware        {hw.name}")
    print(f"bandwidth       {hw.mem_bandwidth:.4g} B/s")
    print(f"peak fp64       {hw.peak_fp64:.4g} flop/s")
    print(f"machine balance {machine_balance(hw):.4g} flop/B")
    if args.kernel:
        I = intensity(args.kernel, n)
        print(f"kernel          {args.kernel}")
        print(f"intensity       {I:.6g} flop/B")
        print(f"roofline rate   {roofline_rate(hw, I):.4g} flop/s")
        print(f"bytes           {KERNELS[args.kernel].bytes(m, n)}")
        print(f"flops           {KERNELS[args.kernel].flops(m, n)}")
        t = predict_time(hw, args.kernel, m, n)
    else:
        print(f"method          {args.method} = {' + '.join(METHOD_KERNELS[args.method])}")
        t = composite_time(hw, args.method, m, n)
    print(f"time            {t:.6g} s ({t * 1e3:.4g} ms)")
    return 0


def _generate(args) -> int:
    X = generate(args.m, args.n, SpectrumSpec(args.kappa, args.decay, args.seed))
    label = f"m={args.m} n={args.n} kappa={args.kappa:g} decay={args.decay} seed={args.seed}"
    matrix_write(args.out, X, label=label)
    print(f"wrote {args.out}: {args.m} x {args.n}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    threads = getattr(args, "bench_threads", None) or args.threads
    saved = get_num_threads()
    try:
        if threads is not None:
            set_num_threads(threads)
        handler = {"bench": _bench, "lstsq": _lstsq, "model": _model, "generate": _generate}[args.command]
        return handler(args)
    except (ValueError, OSError, MatrixFormatError, np.linalg.LinAlgError) as exc:
        print(f"skinny-qr {args.command}: error: {exc}", file=sys.stderr)
        return 2
    finally:
        set_num_threads(saved)


if __name__ == "__main__":
    sys.exit(main())
