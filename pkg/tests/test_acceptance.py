"""Acceptance criteria, one test each.

Every test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion (see conftest.py).
"""

from fractions import Fraction

import numpy as np
import pytest

from oracles import longdouble_normal_solve, numerical_rank, rel_fro, residual_longdouble
from skinny_qr import (
    BreakdownError,
    SpectrumSpec,
    cholqr2,
    generate,
    load_hardware,
    orthogonality_residual,
    reconstruct_q,
    reference_hhqr,
    solve_lstsq,
    svqb2,
    track,
    tsmmttsmm,
    tsmRttsmR,
    tsmttsm,
    tsqr_qless,
)
from skinny_qr.bench import parse_csv
from skinny_qr.cli import main
from skinny_qr.gram import OP_MATMUL, stream_transform
from skinny_qr.matrix import EPS
from skinny_qr.perfmodel import (
    KERNELS,
    composite_time,
    intensity_exact,
    machine_balance,
    predict_time,
    tsqr_blocked_flops,
)
from skinny_qr.plan import PanelPlan, gram_plan, tsqr_panel_rows, tsqr_plan

criterion = pytest.mark.criterion


@criterion(1, "roofline times for the Householder read+write table")
def test_model_reproduction():
    hw = load_hardware("h100")
    bad = []
    for mn, ms in ((8.192e6 * 8, 0.48), (8.192e7 * 8, 4.8), (8.192e8 * 8, 48.0)):
        for n in (8, 16, 32, 64):
            t = predict_time(hw, "hhqr_readwrite", int(mn) // n, n) * 1e3
            if abs(t - ms) > 0.02 * ms:
                bad.append((n, t, ms))
    assert not bad, bad


@criterion(2, "exact kernel intensities for n = 1..128")
def test_intensity_exactness():
    want = {
        "tsmttsm": Fraction(1, 4),
        "tsmRttsmR": Fraction(3, 8),
        "tsmmttsmm": Fraction(1, 2),
        "tsqr": Fraction(1, 4),
    }
    for kernel, per_n in want.items():
        for n in range(1, 129):
            assert intensity_exact(kernel, n) == per_n * n, (kernel, n)


@criterion(3, "measured counters equal the model closed forms")
def test_counter_formula_agreement():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(1, 65))
        m = int(rng.integers(n, min(10**6, 2_000_000 // n) + 1))
        X = np.asfortranarray(rng.standard_normal((m, n)))
        R = np.triu(rng.standard_normal((n, n))) + 2 * n * np.eye(n)
        B = rng.standard_normal((n, n))
        gp = gram_plan(m, n)
        tp = tsqr_plan(m, n)
        # the unblocked reference is slow; a leading slice is enough for counting
        mh = max(n, min(m, 200_000 // n))
        cases = {
            "tsmttsm": (m, lambda: tsmttsm(X, gp)),
            "tsmRttsmR": (m, lambda: tsmRttsmR(X, R, gp)),
            "tsmmttsmm": (m, lambda: tsmmttsmm(X, B, gp)),
            "tsqr": (m, lambda: tsqr_qless(X, tp)),
            "hhqr_readwrite": (mh, lambda: reference_hhqr(X[:mh])),
            "tsmm": (m, lambda: stream_transform(X, [(OP_MATMUL, B)], gp)),
        }
        for kernel, (rows, run) in cases.items():
            with track() as c:
                run()
            model = KERNELS[kernel]
            assert 8 * (c.large_reads + c.large_writes) == model.bytes(rows, n), (kernel, rows, n)
            if kernel == "tsqr":
                # per-panel count; tends to the 2mn^2 closed form
                assert c.flops == tsqr_blocked_flops(m, n, tp.panel_rows, tp.num_blocks), (m, n)
            else:
                assert c.flops == model.flops(rows, n), (kernel, rows, n)


@criterion(4, "tsqr, cholqr2 and reference Householder R agree within 1e-11")
def test_oracle_equivalence():
    rng = np.random.default_rng(4)
    worst = 0.0
    for i in range(50):
        n = int(rng.integers(1, 65))
        m = int(rng.integers(n, 5001))
        kappa = 1.0 if n == 1 else float(10 ** rng.uniform(0, 6))
        X = generate(m, n, SpectrumSpec(kappa, seed=i))
        Rt, Rc, Rh = tsqr_qless(X), cholqr2(X), reference_hhqr(X)
        worst = max(worst, rel_fro(Rt, Rh), rel_fro(Rc, Rh), rel_fro(Rt, Rc))
    assert worst <= 1e-11, worst


@criterion(5, "stability regimes: Gram methods to 1e7, tsqr at 1e12 and 1e14")
def test_stability_regimes():
    m = 10**5
    failures = []
    for kappa in (1e6, 1e7):
        for n in (8, 16, 32):
            X = generate(m, n, SpectrumSpec(kappa, seed=5))
            plan = gram_plan(m, n)
            _, passes = cholqr2(X, plan, return_passes=True)
            e_c = orthogonality_residual(reconstruct_q(X, *passes, plan=plan))
            res = svqb2(X, plan)
            e_s = orthogonality_residual(res.basis(X, plan), res.rank)
            if e_c > 1e-12:
                failures.append(f"cholqr2 kappa={kappa:g} n={n}: {e_c:.1e}")
            if e_s > 1e-12:
                failures.append(f"svqb2 kappa={kappa:g} n={n}: {e_s:.1e}")
    for kappa in (1e12, 1e14):
        for n in (8, 16, 32):
            X = generate(m, n, SpectrumSpec(kappa, seed=5))
            R = tsqr_qless(X)
            e_t = float(np.linalg.norm(tsmRttsmR(X, R) - np.eye(n), 2))
            if e_t > 1e-12:
                failures.append(f"tsqr kappa={kappa:g} n={n}: {e_t:.1e}")
            try:
                Rc = cholqr2(X)
            except BreakdownError:
                continue
            e_c = float(np.linalg.norm(tsmRttsmR(X, Rc) - np.eye(n), 2))
            if e_c <= 1e-12:
                failures.append(f"cholqr2 silently passed kappa={kappa:g} n={n}")
    assert not failures, "; ".join(failures)


@criterion(6, "single pass for tsqr, two for the Gram methods, modeled 2x ratio")
def test_single_pass_property():
    rng = np.random.default_rng(6)
    for m, n in ((10_000, 1), (33_333, 8), (5_001, 32), (4_096, 64)):
        X = rng.standard_normal((m, n))
        for fn, passes in ((tsqr_qless, 1), (cholqr2, 2), (svqb2, 2)):
            with track() as c:
                fn(X)
            assert c.large_reads == passes * m * n, (fn.__name__, m, n)
            assert c.large_writes == 0
    hw = load_hardware("h100")
    M = machine_balance(hw)
    checked = 0
    for n in range(1, 129):
        if max(n / 2, n / 4) < M:
            assert composite_time(hw, "svqb2", 10**7, n) / composite_time(hw, "tsqr", 10**7, n) == 2.0
            checked += 1
    assert checked > 0


@criterion(7, "svqb2 numerical rank and exact zero diagonals in tsqr")
def test_rank_handling():
    rng = np.random.default_rng(7)
    for i in range(20):
        n = int(rng.integers(2, 17))
        m = int(rng.integers(4 * n, 2000))
        X = rng.standard_normal((m, n))
        dropped = rng.choice(n, size=int(rng.integers(1, n)), replace=False)
        kept = [j for j in range(n) if j not in dropped]
        for j in dropped:
            if i % 2:
                X[:, j] = 0.0
            else:
                X[:, j] = X[:, rng.choice(kept)]
        res = svqb2(X)
        assert res.rank == numerical_rank(X) == len(kept), (i, res.rank)
        if i % 2:
            R = tsqr_qless(X, PanelPlan(3, 2 * n))
            assert all(R[j, j] == 0.0 for j in dropped), i


@criterion(8, "least squares against a normal-equations oracle")
def test_lstsq_correctness():
    rng = np.random.default_rng(8)
    for i in range(20):
        n = int(rng.integers(1, 33))
        m = int(rng.integers(n + 1, 10_001))
        kappa = 1.0 if n == 1 else float(10 ** rng.uniform(0, 3))
        A = generate(m, n, SpectrumSpec(kappa, seed=100 + i))
        rhs = rng.standard_normal(m)
        x_ref = longdouble_normal_solve(A, rhs).astype(float)
        for method in ("tsqr", "cholqr2", "svqb2"):
            x, res = solve_lstsq(A, rhs, method)
            assert np.linalg.norm(x - x_ref) <= 1e-9 * np.linalg.norm(x_ref), (i, method)
            direct = residual_longdouble(A, x, rhs)
            assert abs(res - direct) <= 1e-10 * direct, (i, method)


@criterion(9, "results independent of block count and panel height")
def test_plan_invariance():
    X = generate(20_000, 16, SpectrumSpec(1e4, seed=9))
    n = X.shape[1]
    ref = None
    for k in (1, 2, 7, 32):
        for b in (2 * n, 4 * n, tsqr_panel_rows(n)):
            R = tsqr_qless(X, PanelPlan(k, b))
            ref = R if ref is None else ref
            assert rel_fro(R, ref) <= 1e-12, (k, b)
    B = np.random.default_rng(9).standard_normal((n, n))
    b = gram_plan(*X.shape).panel_rows
    for fn, args in ((tsmttsm, ()), (tsmRttsmR, (np.triu(ref),)), (tsmmttsmm, (B,))):
        base = fn(X, *args, plan=PanelPlan(1, b))
        # trace(C) = ||Y||_F^2 for the transformed matrix Y the kernel reduces
        tol = 5 * n * EPS * np.trace(base)
        for k in (2, 7, 32):
            C = fn(X, *args, plan=PanelPlan(k, b))
            assert np.linalg.norm(C - base) <= tol, (fn.__name__, k)


@criterion(10, "default bench grid passes every residual threshold")
def test_cli_end_to_end(tmp_path):
    out = tmp_path / "results.csv"
    code = main(["bench", "--reps", "5", "--out", str(out), "--quiet"])
    rows = parse_csv(out.read_text())
    assert len(rows) == 5 * 4
    failing = [f"{r['method']} n={r['n']}: {r['message']}" for r in rows if r["status"] not in ("ok", "skipped")]
    assert code == 0 and not failing, "; ".join(failing)
