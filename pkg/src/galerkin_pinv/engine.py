"""Pseudoinverse iterates ``x_n = A_n^dagger P_n y`` over a schedule of section sizes.

A run tracks ``||A_n^dagger||`` and its running supremum. Bounded pseudoinverse
norms are equivalent to strong convergence of ``A_n^dagger`` to a bounded
``A^dagger``, so the supremum trace is what the verdict is built on; the
iterates themselves only confirm it.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid, DomainViolation, GalerkinError, TruncationTooSmall
from .gallery import CoeffVector, SpectralModel, apply, in_domain, oracle_pinv_apply, truncate
from .linalg import PinvResult, ToleranceContext, eig_sym, pinv_from_eig, resolvent_from_eig

log = logging.getLogger(__name__)

DEFAULT_SCHEDULE = tuple(2 ** k for k in range(1, 11))


class Verdict(str, enum.Enum):
    CONVERGENT = "Convergent"
    DIVERGENT = "Divergent"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class RunConfig:
    schedule: tuple[int, ...] = DEFAULT_SCHEDULE
    divergence_threshold: float = 1e8
    plateau_ratio: float = 1.5
    residual_tol: float = 1e-6
    tolerance: ToleranceContext = field(default_factory=ToleranceContext)
    # use the model's analytic kernel dimension as exact_rank when available
    model_rank: bool = True

    def __post_init__(self):
        sched = tuple(int(n) for n in self.schedule)
        object.__setattr__(self, "schedule", sched)
        if not sched:
            raise ConfigInvalid("schedule is empty", "run.schedule")
        if sched[0] < 1:
            raise ConfigInvalid("schedule entries must be positive", "run.schedule")
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise ConfigInvalid(f"schedule {list(sched)} is not strictly increasing", "run.schedule")
        for name in ("divergence_threshold", "plateau_ratio", "residual_tol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigInvalid(f"must be a positive number, got {value}", f"run.{name}")

    def tolerance_for(self, model: SpectralModel, n: int) -> ToleranceContext:
        if not self.model_rank:
            return self.tolerance
        return section_tolerance(model, n, self.tolerance)


def section_tolerance(model: SpectralModel, n: int,
                      base: ToleranceContext | None = None) -> ToleranceContext:
    """Rank policy for the ``n``-section: the analytic kernel dimension when known."""
    base = base or ToleranceContext()
    if base.exact_rank is not None:
        return base
    kdim = model.kernel_dim(n)
    return base if kdim is None else ToleranceContext(base.rank_rel_tol, n - kdim)


@dataclass(frozen=True)
class StabilityRecord:
    n: int
    pinv_norm: float
    running_sup: float


@dataclass(frozen=True)
class StabilityTrace:
    records: tuple[StabilityRecord, ...]

    @classmethod
    def from_norms(cls, ns, norms) -> "StabilityTrace":
        sup, recs = 0.0, []
        for n, v in sorted(zip(ns, norms)):
            sup = max(sup, float(v))
            recs.append(StabilityRecord(int(n), float(v), sup))
        return cls(tuple(recs))

    @property
    def norms(self) -> np.ndarray:
        return np.array([r.pinv_norm for r in self.records])

    @property
    def sup(self) -> float:
        return self.records[-1].running_sup if self.records else 0.0


@dataclass(frozen=True)
class Iterate:
    n: int
    x: np.ndarray = field(repr=False)
    cauchy_gap: float
    oracle_err: float | None = None
    rank: int = 0


@dataclass(frozen=True)
class BestApproxRun:
    trace: StabilityTrace
    iterates: tuple[Iterate, ...]
    verdict: Verdict
    verdict_reason: str
    errors: tuple[tuple[int, str], ...] = ()


def stability_classify(trace: StabilityTrace, config: RunConfig) -> tuple[Verdict, str]:
    """Classify a norm trace alone.

    Divergent: the running supremum passes ``divergence_threshold`` or grows
    by 10x from the end of the first quarter of the schedule to its end.
    Convergent: supremum below threshold and the last half of the norms lies
    within ``plateau_ratio``. Anything else is Inconclusive.
    """
    recs = trace.records
    if not recs:
        raise ValueError("empty stability trace")
    sup = recs[-1].running_sup
    if sup >= config.divergence_threshold:
        return Verdict.DIVERGENT, f"sup ||A_n^+|| = {sup:.6g} exceeds {config.divergence_threshold:.6g}"
    q = max(1, len(recs) // 4)
    early = recs[q - 1].running_sup
    if early > 0 and sup >= 10 * early:
        return Verdict.DIVERGENT, (
            f"sup ||A_n^+|| grew {sup / early:.6g}x from n={recs[q - 1].n} to n={recs[-1].n}"
        )
    tail = trace.norms[len(recs) // 2:]
    hi, lo = float(tail.max()), float(tail.min())
    ratio = 1.0 if hi == 0 else (math.inf if lo == 0 else hi / lo)
    if ratio <= config.plateau_ratio:
        return Verdict.CONVERGENT, (
            f"sup ||A_n^+|| = {sup:.6g} with last-half max/min {ratio:.6g} <= {config.plateau_ratio:g}"
        )
    return Verdict.INCONCLUSIVE, (
        f"bounded so far (sup {sup:.6g}) but last-half max/min {ratio:.6g} > {config.plateau_ratio:g}"
    )


def _gap(a: np.ndarray, b: np.ndarray) -> float:
    m = max(a.size, b.size)
    return float(np.linalg.norm(np.pad(a, (0, m - a.size)) - np.pad(b, (0, m - b.size))))


def _oracle_err(x: np.ndarray, ref: CoeffVector) -> float:
    n = x.size
    return math.sqrt(float(np.sum((x - ref.head(n)) ** 2)) + ref.tail_sq(n))


def _solve_at(model: SpectralModel, y: CoeffVector, n: int, config: RunConfig):
    a_n = truncate(model, n)
    res: PinvResult = pinv_from_eig(eig_sym(a_n), config.tolerance_for(model, n))
    return res, res.apply(y.head(n))


def run_best_approx(model: SpectralModel, y: CoeffVector, config: RunConfig | None = None,
                    workers: int = 1) -> BestApproxRun:
    """Compute ``x_n = A_n^dagger P_n y`` for every ``n`` in the schedule and classify.

    A failure at one ``n`` is logged and recorded in ``errors``; the remaining
    sizes still run. ``workers > 1`` evaluates sizes concurrently; results are
    assembled in schedule order either way.
    """
    config = config or RunConfig()

    oracle = None
    if model.kind == "diagonal":
        ans = oracle_pinv_apply(model, y)
        if ans.exact:
            oracle = ans.value

    def job(n):
        try:
            return n, _solve_at(model, y, n, config), None
        except GalerkinError as exc:
            log.warning("n=%d skipped: %s", n, exc)
            return n, None, f"{type(exc).__name__}: {exc}"

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(job, config.schedule))
    else:
        results = [job(n) for n in config.schedule]
    results.sort(key=lambda r: r[0])

    ns, norms, iterates, errors = [], [], [], []
    prev = np.zeros(0)
    for n, out, err in results:
        if out is None:
            errors.append((n, err))
            continue
        res, x = out
        ns.append(n)
        norms.append(res.norm)
        # the first iterate is measured against x_0 = 0
        gap = _gap(x, prev)
        prev = x
        oerr = _oracle_err(x, oracle) if oracle is not None else None
        iterates.append(Iterate(n, x, gap, oerr, res.rank))

    trace = StabilityTrace.from_norms(ns, norms)
    if not iterates:
        return BestApproxRun(trace, (), Verdict.INCONCLUSIVE, "no schedule point succeeded",
                             tuple(errors))
    verdict, reason = stability_classify(trace, config)
    if verdict is Verdict.CONVERGENT and not iterates[-1].cauchy_gap < config.residual_tol:
        verdict = Verdict.INCONCLUSIVE
        reason = (f"stable ({reason}) but final Cauchy gap {iterates[-1].cauchy_gap:.6g} "
                  f">= {config.residual_tol:g}")
    if errors:
        reason += f"; {len(errors)} schedule point(s) failed"
    return BestApproxRun(trace, tuple(iterates), verdict, reason, tuple(errors))


def lift_size(model: SpectralModel, u: CoeffVector) -> int:
    """Smallest section size that holds ``(iI - A) u`` without loss."""
    return u.support + model.bandwidth


def graph_lift(model: SpectralModel, u: CoeffVector, n: int) -> np.ndarray:
    """``u_n = (iI - A_n)^{-1} P_n (iI - A) u`` as a complex vector of length ``n``.

    ``(u_n, A_n u_n)`` is an element of the graph of ``A_n`` approximating
    ``(u, A u)``. Evaluated in correction form
    ``u_n = P_n u + R_i(A_n) [P_n (iI - A) u - (iI - A_n) P_n u]``, which is the
    same vector but exact whenever ``A_n`` reproduces ``A`` on ``u``.
    """
    if not u.finite:
        raise DomainViolation("graph lift needs a finitely supported vector")
    if not in_domain(model, u):
        raise DomainViolation(f"vector is not in D({model.name})")
    need = lift_size(model, u)
    if n < need:
        raise TruncationTooSmall(f"n={n} truncates (iI - A)u; need n >= {need}")
    au = apply(model, u).head(n)
    pu = u.head(n)
    a_n = truncate(model, n)
    rhs = 1j * pu - au
    defect = rhs - (1j * pu - a_n.entries @ pu)
    if not np.any(defect):
        return pu.astype(complex)
    eig = eig_sym(a_n)
    return pu + resolvent_from_eig(eig, 1j).entries @ defect

