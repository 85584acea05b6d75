"""Finite-section checks of the convergence statements behind the stability criterion.

Each ``check_*`` evaluates one limit statement at every schedule point and
returns a :class:`ResidualTable`:

* resolvent consistency, ``R_lam(A_n) P_n u -> R_lam(A) u`` for non-real ``lam``;
* graph convergence, ``(u_n, A_n u_n) -> (u, A u)`` with the resolvent lift;
* moving targets, ``A_n y_n -> A y`` whenever ``y_n -> y``;
* kernel and range projections, ``P_{N(A_n)} -> P_{N(A)}`` and likewise for ranges.

``check_mp_identities`` verifies the Moore-Penrose structure of a single matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .engine import DEFAULT_SCHEDULE, graph_lift, lift_size, section_tolerance
from .errors import DomainViolation, NonRealRequired, ReferenceUnavailable, UnsupportedModel
from .gallery import DIAGONAL, CoeffVector, SpectralModel, apply, in_domain, truncate
from .linalg import ToleranceContext, as_sym, eig_sym, pinv_from_eig

REF_FACTOR = 4


@dataclass(frozen=True)
class ResidualRow:
    n: int
    probe_id: str
    lam: complex | None
    residual: float


@dataclass(frozen=True)
class ResidualTable:
    suite: str
    rows: tuple[ResidualRow, ...]
    skipped: tuple[str, ...] = ()

    def groups(self) -> dict[tuple[str, complex | None], list[ResidualRow]]:
        out: dict = {}
        for row in self.rows:
            out.setdefault((row.probe_id, row.lam), []).append(row)
        return out

    def series(self, probe_id: str, lam: complex | None = None) -> list[tuple[int, float]]:
        return [(r.n, r.residual) for r in self.groups().get((probe_id, lam), [])]

    @property
    def max_final_residual(self) -> float:
        finals = [rows[-1].residual for rows in self.groups().values()]
        return max(finals, default=0.0)

    @property
    def monotone_fraction(self) -> float:
        """Fraction of consecutive steps (within a probe) that do not increase."""
        steps = ok = 0
        for rows in self.groups().values():
            for a, b in zip(rows, rows[1:]):
                steps += 1
                ok += b.residual <= a.residual
        return 1.0 if steps == 0 else ok / steps

    def summary(self) -> dict[str, float]:
        return {
            "max_final_residual": self.max_final_residual,
            "monotone_fraction": self.monotone_fraction,
        }


def _table(suite: str, rows, skipped=()) -> ResidualTable:
    def key(r):
        lam = (0.0, 0.0) if r.lam is None else (r.lam.real, r.lam.imag)
        return (r.probe_id, lam, r.n)
    return ResidualTable(suite, tuple(sorted(rows, key=key)), tuple(skipped))


@dataclass(frozen=True)
class ProbeSet:
    vectors: tuple[tuple[str, CoeffVector], ...] = field(default_factory=lambda: DEFAULT_VECTORS)
    lambdas: tuple[complex, ...] = (1j, 2j, 1 + 1j)

    def __post_init__(self):
        lams = tuple(complex(z) for z in self.lambdas)
        for z in lams:
            if z.imag == 0:
                raise NonRealRequired(f"probe lambda {z} is real")
        object.__setattr__(self, "lambdas", lams)
        ids = [pid for pid, _ in self.vectors]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate probe ids in {ids}")


DEFAULT_VECTORS: tuple[tuple[str, CoeffVector], ...] = (
    ("e1", CoeffVector.basis(1)),
    ("e2", CoeffVector.basis(2)),
    ("e3", CoeffVector.basis(3)),
    ("pow:1:64", CoeffVector.power(1.0, length=64)),
    ("pow:2:64", CoeffVector.power(2.0, length=64)),
)


def _finite(pid: str, u: CoeffVector) -> CoeffVector:
    if not u.finite:
        raise DomainViolation(f"probe {pid} must be finitely supported")
    return u


def _diff_norm(a: np.ndarray, b: np.ndarray) -> float:
    m = max(a.size, b.size)
    return float(np.linalg.norm(np.pad(a, (0, m - a.size)) - np.pad(b, (0, m - b.size))))


def _jacobi_reference(model: SpectralModel, u: np.ndarray, lam: complex, size: int):
    """Solve ``(lam I - A_N) w = P_N u`` by banded elimination.

    Returns ``w`` and the bound ``|b_N w_N| / |Im lam|`` on ``||w - R_lam(A) u||``;
    the bound holds because ``(lam I - A)`` applied to ``w`` (zero-extended)
    differs from ``u`` only by ``-b_N w_N e_{N+1}``.
    """
    a = model.jacobi_diagonal(size)
    b = model.jacobi_offdiagonal(size)
    ab = np.zeros((3, size), dtype=complex)
    ab[0, 1:] = -b[:-1]
    ab[1] = lam - a
    ab[2, :-1] = -b[:-1]
    rhs = np.zeros(size, dtype=complex)
    rhs[:u.size] = u
    w = solve_banded((1, 1), ab, rhs)
    return w, abs(b[-1] * w[-1]) / abs(lam.imag)


def check_resolvent_consistency(model: SpectralModel, probes: ProbeSet | None = None,
                                schedule=None) -> ResidualTable:
    """Residuals ``||R_lam(A_n) P_n u - R_lam(A) u||`` over the schedule.

    The reference is exact for diagonal models. For Jacobi models it is a
    banded solve on a section ``REF_FACTOR`` times larger than the largest
    scheduled ``n``, certified by an a-posteriori bound.
    """
    probes = probes or ProbeSet()
    schedule = tuple(schedule or DEFAULT_SCHEDULE)
    vecs = [(pid, _finite(pid, u)) for pid, u in probes.vectors]

    refs: dict = {}
    bounds: dict = {}
    for pid, u in vecs:
        m = len(u.coeffs)
        for lam in probes.lambdas:
            if model.kind == DIAGONAL:
                refs[pid, lam] = u.head(m) * (1.0 / (lam - model.eigenvalues(m)))
            else:
                size = max(REF_FACTOR * max(schedule), m + 1)
                refs[pid, lam], bounds[pid, lam] = _jacobi_reference(model, u.head(m), lam, size)

    rows = []
    for n in schedule:
        eig = eig_sym(truncate(model, n))
        for pid, u in vecs:
            un = u.head(n)
            for lam in probes.lambdas:
                r_n = eig.apply(1.0 / (lam - eig.values), un)
                rows.append(ResidualRow(n, pid, lam, _diff_norm(r_n, refs[pid, lam])))

    table = _table("resolvent", rows)
    for (pid, lam), bound in bounds.items():
        reported = [r for r in table.groups()[pid, lam] if r.residual > 0]
        floor = 1e-14 * float(np.linalg.norm(refs[pid, lam]))
        smallest = min((r.residual for r in reported), default=0.0)
        if bound > max(0.1 * smallest, floor):
            raise ReferenceUnavailable(
                f"{model.name}: reference error bound {bound:.3e} for probe {pid}, lambda={lam} "
                f"is not below 1/10 of the smallest residual {smallest:.3e}"
            )
    return table


def check_graph_convergence(model: SpectralModel, probes: ProbeSet | None = None,
                            schedule=None) -> ResidualTable:
    """Residuals ``||u_n - u|| + ||A_n u_n - A u||`` for the resolvent lift ``u_n``.

    Sizes too small to hold ``(iI - A) u`` are skipped and listed in ``skipped``.
    """
    probes = probes or ProbeSet()
    schedule = tuple(schedule or DEFAULT_SCHEDULE)
    rows, skipped = [], []
    for pid, u in probes.vectors:
        _finite(pid, u)
        if not in_domain(model, u):
            raise DomainViolation(f"probe {pid} is not in D({model.name})")
        au = apply(model, u).head(max(schedule))
        need = lift_size(model, u)
        for n in schedule:
            if n < need:
                skipped.append(f"{pid}@{n}")
                continue
            u_n = graph_lift(model, u, n)
            a_n = truncate(model, n).entries
            res = _diff_norm(u_n, u.head(n)) + _diff_norm(a_n @ u_n, au[:n])
            rows.append(ResidualRow(n, pid, None, res))
    return _table("graph", rows, skipped)


def _kernel_limit(model: SpectralModel, x: CoeffVector) -> np.ndarray:
    m = len(x.coeffs)
    xs = x.head(m)
    return np.where(model.eigenvalues(m) == 0, xs, 0.0)


def check_projection_convergence(model: SpectralModel, probes: ProbeSet | None = None,
                                 schedule=None) -> ResidualTable:
    """Residuals of ``P_{N(A_n)} P_n x`` against ``P_{N(A)} x``, and the same for ranges.

    Probe ids are suffixed ``:kernel`` and ``:range``.
    """
    if model.kind != DIAGONAL:
        raise UnsupportedModel(f"{model.name}: no analytic kernel reference for Jacobi models")
    probes = probes or ProbeSet()
    schedule = tuple(schedule or DEFAULT_SCHEDULE)
    limits = {}
    for pid, x in probes.vectors:
        _finite(pid, x)
        pk = _kernel_limit(model, x)
        limits[pid] = (x.head(len(x.coeffs)), pk)

    rows = []
    for n in schedule:
        eig = eig_sym(truncate(model, n))
        res = pinv_from_eig(eig, section_tolerance(model, n))
        p_range = eig.reconstruct(res.retained.astype(float))
        p_kernel = np.eye(n) - p_range
        for pid, x in probes.vectors:
            full, pk = limits[pid]
            xn = x.head(n)
            rows.append(ResidualRow(n, f"{pid}:kernel", None, _diff_norm(p_kernel @ xn, pk)))
            rows.append(ResidualRow(n, f"{pid}:range", None, _diff_norm(p_range @ xn, full - pk)))
    return _table("projection", rows)


def check_moving_target(model: SpectralModel, y: CoeffVector, perturbation_scale: float = 1.0,
                        schedule=None, probe_id: str = "y") -> ResidualTable:
    """Residuals ``||A_n y_n - A y||`` for ``y_n = b_n + (scale/n) e_1``.

    ``b_n = P_n y`` for bounded models. Unbounded models use the graph lift of
    ``y`` instead, since ``A_n P_n y`` need not approach ``A y`` there; sizes
    too small for the lift are skipped.
    """
    if not perturbation_scale >= 0:
        raise ValueError("perturbation_scale must be non-negative")
    schedule = tuple(schedule or DEFAULT_SCHEDULE)
    _finite(probe_id, y)
    if not in_domain(model, y):
        raise DomainViolation(f"{probe_id} is not in D({model.name})")
    ay = apply(model, y)
    ay = ay.head(len(ay.coeffs))

    rows, skipped = [], []
    for n in schedule:
        a_n = truncate(model, n).entries
        if model.bounded:
            base = y.head(n)
        elif n >= lift_size(model, y):
            base = graph_lift(model, y, n)
        else:
            skipped.append(f"{probe_id}@{n}")
            continue
        m = max(n, ay.size)
        defect = np.pad(a_n @ base, (0, m - n)) - np.pad(ay, (0, m - ay.size))
        # perturbation term kept separate so the residual is homogeneous in the scale
        kick = np.pad((perturbation_scale / n) * a_n[:, 0], (0, m - n))
        rows.append(ResidualRow(n, probe_id, None, float(np.linalg.norm(defect + kick))))
    return _table("moving-target", rows, skipped)


@dataclass(frozen=True)
class MPResiduals:
    """Frobenius-norm residuals (upper bounds on the 2-norm residuals)."""

    range_left: float      # ||A A+ - P_R||
    range_right: float     # ||A+ A - P_R||
    kernel: float          # ||P_N A+||
    penrose1: float        # ||A A+ A - A||
    penrose2: float        # ||A+ A A+ - A+||
    penrose3: float        # ||(A A+)^T - A A+||
    penrose4: float        # ||(A+ A)^T - A+ A||
    rank: int
    norm_a: float
    norm_pinv: float

    NAMES = ("range_left", "range_right", "kernel", "penrose1", "penrose2", "penrose3", "penrose4")

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in self.NAMES}

    def max(self) -> float:
        return max(self.as_dict().values())


def check_mp_identities(a, tol: ToleranceContext | None = None) -> MPResiduals:
    a = as_sym(a)
    eig = eig_sym(a)
    res = pinv_from_eig(eig, tol)
    A, P = a.entries, res.matrix.entries
    pr = eig.reconstruct(res.retained.astype(float))
    pn = np.eye(a.dim) - pr
    ap, pa = A @ P, P @ A

    def fro(x):
        return float(np.linalg.norm(x))

    return MPResiduals(
        range_left=fro(ap - pr),
        range_right=fro(pa - pr),
        kernel=fro(pn @ P),
        penrose1=fro(ap @ A - A),
        penrose2=fro(pa @ P - P),
        penrose3=fro(ap.T - ap),
        penrose4=fro(pa.T - pa),
        rank=res.rank,
        norm_a=float(np.abs(eig.values).max()),
        norm_pinv=res.norm,
    )


def mp_identity_table(model: SpectralModel, schedule=None) -> ResidualTable:
    """``check_mp_identities`` on every scheduled section of ``model``."""
    rows = []
    for n in tuple(schedule or DEFAULT_SCHEDULE):
        r = check_mp_identities(truncate(model, n), section_tolerance(model, n))
        rows += [ResidualRow(n, name, None, v) for name, v in r.as_dict().items()]
    return _table("mp-identities", rows)
