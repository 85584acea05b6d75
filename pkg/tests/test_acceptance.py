"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import time

import mpmath
import numpy as np
import pytest

from galerkin_pinv.cli import cmd_run, main
from galerkin_pinv.config import SCHEDULE_CAP_ENV, parse_config
from galerkin_pinv.diagnostics import (
    ProbeSet, check_graph_convergence, check_moving_target, check_mp_identities,
    check_projection_convergence, check_resolvent_consistency,
)
from galerkin_pinv.engine import DEFAULT_SCHEDULE, RunConfig, Verdict, run_best_approx
from galerkin_pinv.gallery import (
    GALLERY, CoeffVector, constant, harmonic, jacobi_free, jacobi_shifted, kernel_gap, linear,
    truncate,
)
from galerkin_pinv.linalg import eig_sym
from galerkin_pinv.report import render

LINEAR_CFG = "model = linear\ndata.decay.power = 2\n"
HARMONIC_CFG = "model = harmonic\ndata.coeffs = 1\n"


@pytest.fixture
def verdict_line(capsys, request):
    """Print one PASS/FAIL line for the criterion and fail the test on FAIL."""
    def _report(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        assert ok, detail
    return _report


@pytest.fixture(autouse=True)
def _no_cap(monkeypatch):
    monkeypatch.delenv(SCHEDULE_CAP_ENV, raising=False)


def _cfg_file(tmp_path, text):
    p = tmp_path / "exp.cfg"
    p.write_text(text)
    return str(p)


def test_c01_penrose_suite(verdict_line):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for i in range(100):
        dim = int(rng.integers(2, 65))
        if i % 2:
            m = rng.uniform(-1.0, 1.0, (dim, dim))
            a = np.triu(m) + np.triu(m, 1).T
        else:
            # exact kernel of random dimension
            q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
            mu = rng.uniform(0.1, 5.0, dim) * rng.choice([-1.0, 1.0], dim)
            mu[: int(rng.integers(0, dim))] = 0.0
            a = (q * mu) @ q.T
        r = check_mp_identities(a)
        worst = max(worst, r.max() / (1e-9 * dim))
    elapsed = time.perf_counter() - start
    verdict_line(1, worst < 1.0 and elapsed < 10.0,
                 f"worst residual / (1e-9 dim) = {worst:.3e}, {elapsed:.2f}s")


def test_c02_linear_stable(verdict_line, tmp_path, capsys):
    start = time.perf_counter()
    code = main(["run", _cfg_file(tmp_path, LINEAR_CFG), "--out", str(tmp_path / "r.csv")])
    elapsed = time.perf_counter() - start
    run = run_best_approx(linear(), CoeffVector.power(2.0))
    norm_err = float(np.abs(run.trace.norms - 1.0).max())
    with mpmath.workdps(40):
        tails = [float(mpmath.sqrt(mpmath.zeta(6, it.n + 1))) for it in run.iterates]
    oracle_err = max(abs(it.oracle_err - t) for it, t in zip(run.iterates, tails))
    ok = (norm_err <= 1e-14 and oracle_err <= 1e-12 and run.verdict is Verdict.CONVERGENT
          and code == 0 and elapsed < 5.0)
    verdict_line(2, ok, f"|norm-1| {norm_err:.1e}, oracle_err vs tail {oracle_err:.1e}, "
                        f"{run.verdict.value}, exit {code}, {elapsed:.2f}s")


def test_c03_harmonic_unstable(verdict_line, tmp_path, capsys):
    start = time.perf_counter()
    code = main(["run", _cfg_file(tmp_path, HARMONIC_CFG), "--out", str(tmp_path / "r.csv")])
    elapsed = time.perf_counter() - start
    run = run_best_approx(harmonic(), CoeffVector.basis(1))
    ns = np.array([r.n for r in run.trace.records], dtype=float)
    rel = float(np.abs(run.trace.norms / ns - 1.0).max())
    early = run_best_approx(harmonic(), CoeffVector.basis(1),
                            RunConfig(schedule=[n for n in DEFAULT_SCHEDULE if n <= 100]))
    ok = (rel <= 1e-12 and early.verdict is Verdict.DIVERGENT and code == 2 and elapsed < 5.0)
    verdict_line(3, ok, f"max |norm/n - 1| {rel:.1e}, verdict up to n=64 {early.verdict.value}, "
                        f"exit {code}, {elapsed:.2f}s")


def test_c04_kernel_case(verdict_line):
    start = time.perf_counter()
    run = run_best_approx(kernel_gap(), CoeffVector((7.0, 2.0)))
    elapsed = time.perf_counter() - start
    x_err = 0.0
    for it in run.iterates:
        target = np.zeros(it.n)
        target[1] = 1.0
        x_err = max(x_err, float(np.abs(it.x - target).max()))
    norm_err = float(np.abs(run.trace.norms - 0.5).max())
    ok = (x_err <= 1e-13 and norm_err == 0.0 and run.verdict is Verdict.CONVERGENT
          and min(DEFAULT_SCHEDULE) >= 2 and elapsed < 5.0)
    verdict_line(4, ok, f"max |x_n - e2| {x_err:.1e}, |norm - 1/2| {norm_err:.1e}, "
                        f"{run.verdict.value}, {elapsed:.2f}s")


def test_c05_jacobi_dichotomy(verdict_line):
    start = time.perf_counter()
    cfg = RunConfig(schedule=[n for n in DEFAULT_SCHEDULE if n <= 512])
    shifted = run_best_approx(jacobi_shifted(3.0), CoeffVector.basis(1), cfg)
    free = run_best_approx(jacobi_free(), CoeffVector.basis(1), cfg)
    odd = run_best_approx(jacobi_free(), CoeffVector.basis(1),
                          RunConfig(schedule=[n + 1 for n in cfg.schedule]))
    elapsed = time.perf_counter() - start
    # smallest |2 cos(k pi / (n+1))| for even n is 2 sin(pi / (2(n+1)))
    closed = np.array([1 / (2 * np.sin(np.pi / (2 * (r.n + 1)))) for r in free.trace.records])
    free_rel = float(np.abs(free.trace.norms / closed - 1).max())
    ok = (bool(np.all(shifted.trace.norms < 1.0)) and shifted.verdict is Verdict.CONVERGENT
          and free.verdict is Verdict.DIVERGENT and free_rel <= 1e-10
          and not odd.errors and len(odd.iterates) == len(cfg.schedule) and elapsed < 30.0)
    verdict_line(5, ok, f"Shifted(3) max norm {shifted.trace.norms.max():.12f} "
                        f"{shifted.verdict.value}; Free {free.verdict.value}, norm vs closed form "
                        f"{free_rel:.1e}; odd-n errors {len(odd.errors)}; {elapsed:.2f}s")


def test_c06_eigenvalue_oracle(verdict_line):
    worst = 0.0
    for n in (5, 50, 200):
        k = np.arange(1, n + 1)
        expected = np.sort(2 * np.cos(k * np.pi / (n + 1)))
        worst = max(worst, float(np.abs(eig_sym(truncate(jacobi_free(), n)).values - expected).max()))
    verdict_line(6, worst <= 1e-10, f"max eigenvalue error {worst:.1e} for n in 5, 50, 200")


def test_c07_resolvent_tail(verdict_line):
    u = CoeffVector.power(2.0, length=64)
    schedule = tuple(range(1, 64))
    table = check_resolvent_consistency(linear(), ProbeSet((("u", u),), (1j,)), schedule)
    res = [r for _, r in table.series("u", 1j)]
    with mpmath.workdps(40):
        oracle = [float(mpmath.sqrt(mpmath.fsum(abs(1 / ((1j - k) * k ** 2)) ** 2
                                                for k in range(n + 1, 65)))) for n in schedule]
    err = max(abs(a - b) for a, b in zip(res, oracle))
    decreasing = all(b < a for a, b in zip(res, res[1:]))
    verdict_line(7, err <= 1e-12 and decreasing,
                 f"max |residual - tail sum| {err:.1e} over n=1..63, strictly decreasing {decreasing}")


def _dense_graph_residual(model, j, n):
    a_n = truncate(model, n).entries
    u = np.zeros(n)
    u[j - 1] = 1.0
    au = a_n[:, j - 1].copy()  # n >= j + bandwidth keeps the column whole
    u_n = np.linalg.solve(1j * np.eye(n) - a_n, 1j * u - au)
    return float(np.linalg.norm(u_n - u) + np.linalg.norm(a_n @ u_n - au))


def test_c08_graph_lift(verdict_line):
    basis = ProbeSet(tuple((f"e{j}", CoeffVector.basis(j)) for j in (1, 2, 3)))
    final, diag_nonzero, oracle_err = 0.0, 0, 0.0
    for model in GALLERY.values():
        table = check_graph_convergence(model, basis, DEFAULT_SCHEDULE)
        final = max(final, table.max_final_residual)
        for row in table.rows:
            if model.kind == "diagonal":
                diag_nonzero += row.residual != 0.0
            else:
                j = int(row.probe_id[1:])
                oracle_err = max(oracle_err, abs(row.residual - _dense_graph_residual(model, j, row.n)))
    ok = final <= 1e-6 and diag_nonzero == 0 and oracle_err <= 1e-10
    verdict_line(8, ok, f"max final residual {final:.1e}, nonzero diagonal rows {diag_nonzero}, "
                        f"Jacobi vs dense solve {oracle_err:.1e}")


def test_c09_projection(verdict_line):
    vecs = (("e1", CoeffVector.basis(1)), ("e2", CoeffVector.basis(2)),
            ("x", CoeffVector.of([7.0, 2.0, 5.0])), ("pow:1:64", CoeffVector.power(1.0, length=64)))
    support = {pid: v.support for pid, v in vecs}
    table = check_projection_convergence(kernel_gap(), ProbeSet(vecs), DEFAULT_SCHEDULE)
    past = [r for r in table.rows if r.n >= support[r.probe_id.rsplit(":", 1)[0]]]
    worst = max(r.residual for r in past)
    verdict_line(9, worst <= 1e-12 and len(past) > 0,
                 f"max kernel/range residual past support {worst:.1e} over {len(past)} rows")


def test_c10_moving_target(verdict_line):
    one = check_moving_target(constant(1.0), CoeffVector.basis(1), 1.0, DEFAULT_SCHEDULE)
    two = check_moving_target(constant(1.0), CoeffVector.basis(1), 2.0, DEFAULT_SCHEDULE)
    err = max(abs(r.residual - 1.0 / r.n) for r in one.rows)
    rel = max(abs(b.residual / (2 * a.residual) - 1) for a, b in zip(one.rows, two.rows))
    verdict_line(10, err <= 1e-14 and rel <= 1e-12,
                 f"max |residual - 1/n| {err:.1e}, doubling relative error {rel:.1e}")


def test_c11_determinism(verdict_line, tmp_path):
    cfg = parse_config(LINEAR_CFG)
    reports = [render(cmd_run(cfg)[0], fmt) for fmt in ("csv", "csv", "json", "json")]
    path = _cfg_file(tmp_path, LINEAR_CFG)
    files = []
    for i in range(2):
        out = tmp_path / f"r{i}.csv"
        main(["run", path, "--out", str(out)])
        files.append(out.read_bytes())
    ok = reports[0] == reports[1] and reports[2] == reports[3] and files[0] == files[1]
    verdict_line(11, ok, "repeated cmd_run reports are byte-identical (csv, json, file output)")
