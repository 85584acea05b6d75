"""Self-adjoint model operators on l2 and their finite sections.

Two families are supported:

* diagonal operators ``A e_k = lambda_k e_k`` where ``lambda_k`` is an explicit
  prefix followed by a power-law tail ``coef * k**power``;
* Jacobi (symmetric tridiagonal) operators with diagonal ``a_k`` and
  off-diagonal ``b_k``, each an explicit prefix followed by a constant.

The section of size ``n`` is ``P_n A`` restricted to ``span{e_1..e_n}``, i.e.
the leading ``n x n`` block. Infinite vectors carry a symbolic power-law tail so
that domain questions are answered by series tests rather than by summing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import zeta

from .errors import DomainViolation, UnsupportedModel
from .linalg import SymMatrix


class Classification(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    STABLE_WITH_KERNEL = "StableWithKernel"
    UNKNOWN = "Unknown"


DIAGONAL = "diagonal"
JACOBI = "jacobi"


@dataclass(frozen=True)
class PowerDecay:
    """Tail ``x_k = scale * k**(-power)``."""

    power: float
    scale: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.power) and math.isfinite(self.scale)):
            raise ValueError("decay parameters must be finite")


@dataclass(frozen=True)
class CoeffVector:
    """Element of l2 in the canonical basis.

    ``x_k = coeffs[k-1]`` for ``k <= len(coeffs)``; beyond that ``x_k`` follows
    ``decay`` when present and is zero otherwise.
    """

    coeffs: tuple[float, ...] = ()
    decay: PowerDecay | None = None

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if not all(math.isfinite(c) for c in coeffs):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", coeffs)
        if self.decay is not None and self.decay.scale != 0 and not self.decay.power > 0.5:
            raise ValueError(f"decay power {self.decay.power} <= 1/2 is not square summable")

    @classmethod
    def basis(cls, j: int, scale: float = 1.0) -> "CoeffVector":
        if j < 1:
            raise ValueError("basis index starts at 1")
        return cls((0.0,) * (j - 1) + (float(scale),))

    @classmethod
    def of(cls, values) -> "CoeffVector":
        return cls(tuple(np.asarray(values, dtype=float).ravel()))

    @classmethod
    def power(cls, p: float, scale: float = 1.0, length: int | None = None) -> "CoeffVector":
        """``x_k = scale * k**-p``, infinite when ``length`` is None."""
        if length is None:
            return cls((), PowerDecay(p, scale))
        k = np.arange(1, length + 1, dtype=float)
        return cls.of(scale * k ** (-p))

    @property
    def finite(self) -> bool:
        return self.decay is None or self.decay.scale == 0

    @property
    def support(self) -> int:
        """Index of the last nonzero coordinate (0 for the zero vector)."""
        if not self.finite:
            raise ValueError("infinite tail has unbounded support")
        nz = np.flatnonzero(self.coeffs)
        return int(nz[-1]) + 1 if nz.size else 0

    def head(self, n: int) -> np.ndarray:
        """The first ``n`` coordinates, i.e. ``P_n x`` in the coordinates of ``X_n``."""
        out = np.zeros(n)
        m = min(n, len(self.coeffs))
        out[:m] = self.coeffs[:m]
        if not self.finite and n > len(self.coeffs):
            k = np.arange(len(self.coeffs) + 1, n + 1, dtype=float)
            out[len(self.coeffs):] = self.decay.scale * k ** (-self.decay.power)
        return out

    def tail_sq(self, n: int) -> float:
        """``sum_{k>n} x_k**2`` (Hurwitz zeta for the symbolic tail)."""
        m = len(self.coeffs)
        total = float(np.sum(np.square(self.coeffs[n:]))) if n < m else 0.0
        if not self.finite:
            start = max(n, m) + 1
            total += self.decay.scale ** 2 * float(zeta(2 * self.decay.power, start))
        return total

    def norm(self) -> float:
        return math.sqrt(self.tail_sq(0))


@dataclass(frozen=True)
class OracleAnswer:
    value: CoeffVector | float | None
    exact: bool
    description: str


@dataclass(frozen=True)
class SpectralModel:
    """Exact description of a self-adjoint operator on l2.

    Diagonal: ``lambda_k = prefix[k-1]`` for ``k <= len(prefix)``, else
    ``tail_coef * k**tail_power``. Jacobi: ``a_k`` from ``prefix`` then
    ``tail_coef``; ``b_k`` (coupling ``e_k`` and ``e_{k+1}``) from
    ``off_prefix`` then ``off_tail``.
    """

    name: str
    kind: str
    rule: str
    prefix: tuple[float, ...] = ()
    tail_coef: float = 0.0
    tail_power: float = 0.0
    off_prefix: tuple[float, ...] = ()
    off_tail: float = 0.0
    expected: Classification = Classification.UNKNOWN

    def __post_init__(self):
        if self.kind not in (DIAGONAL, JACOBI):
            raise ValueError(f"unknown model kind {self.kind!r}")
        for attr in ("prefix", "off_prefix"):
            vals = tuple(float(v) for v in getattr(self, attr))
            if not all(math.isfinite(v) for v in vals):
                raise ValueError(f"{attr} must be finite")
            object.__setattr__(self, attr, vals)
        if not all(math.isfinite(v) for v in (self.tail_coef, self.tail_power, self.off_tail)):
            raise ValueError("tail parameters must be finite")
        if self.kind == JACOBI and self.tail_power != 0:
            raise ValueError("Jacobi diagonal tail is constant")
        object.__setattr__(self, "expected", Classification(self.expected))

    @property
    def bandwidth(self) -> int:
        return 0 if self.kind == DIAGONAL else 1

    @property
    def bounded(self) -> bool:
        if self.kind == JACOBI:
            return True
        return self.tail_coef == 0 or self.tail_power <= 0

    def _seq(self, prefix, n: int, tail) -> np.ndarray:
        out = np.empty(n)
        m = min(n, len(prefix))
        out[:m] = prefix[:m]
        if n > m:
            k = np.arange(m + 1, n + 1, dtype=float)
            out[m:] = tail(k)
        return out

    def eigenvalues(self, n: int) -> np.ndarray:
        """``lambda_1..lambda_n`` of a diagonal model, in index order."""
        if self.kind != DIAGONAL:
            raise UnsupportedModel(f"{self.name}: eigenvalue rule only exists for diagonal models")
        if self.tail_power == 0:
            return self._seq(self.prefix, n, lambda k: np.full_like(k, self.tail_coef))
        return self._seq(self.prefix, n, lambda k: self.tail_coef * k ** self.tail_power)

    def jacobi_diagonal(self, n: int) -> np.ndarray:
        return self._seq(self.prefix, n, lambda k: np.full_like(k, self.tail_coef))

    def jacobi_offdiagonal(self, n: int) -> np.ndarray:
        """``b_1..b_n``; ``b_n`` couples ``e_n`` to ``e_{n+1}``."""
        return self._seq(self.off_prefix, n, lambda k: np.full_like(k, self.off_tail))

    @property
    def toeplitz(self) -> bool:
        return self.kind == JACOBI and not self.prefix and not self.off_prefix

    def section_eigenvalues(self, n: int) -> np.ndarray | None:
        """Closed-form ascending spectrum of the ``n x n`` section, when known."""
        if self.kind == DIAGONAL:
            return np.sort(self.eigenvalues(n))
        if self.toeplitz:
            k = np.arange(1, n + 1)
            return np.sort(self.tail_coef + 2 * abs(self.off_tail) * np.cos(k * np.pi / (n + 1)))
        return None

    def kernel_dim(self, n: int) -> int | None:
        """Exact kernel dimension of the ``n x n`` section, when known analytically."""
        if self.kind == DIAGONAL:
            return int(np.count_nonzero(self.eigenvalues(n) == 0))
        if not self.toeplitz:
            return None
        a, b = self.tail_coef, abs(self.off_tail)
        if b == 0:
            return n if a == 0 else 0
        if abs(a) >= 2 * b:
            return 0
        if a == 0:
            # cos(k pi/(n+1)) = 0 only at k = (n+1)/2
            return n % 2
        return None

    def rule_text(self) -> str:
        if self.kind == DIAGONAL:
            pre = ", ".join(_fmt(v) for v in self.prefix)
            tail = f"{_fmt(self.tail_coef)}*k^{_fmt(self.tail_power)}"
            return f"lambda = [{pre}] then {tail}" if pre else f"lambda_k = {tail}"
        a = ", ".join(_fmt(v) for v in self.prefix)
        b = ", ".join(_fmt(v) for v in self.off_prefix)
        a_txt = f"[{a}] then {_fmt(self.tail_coef)}" if a else _fmt(self.tail_coef)
        b_txt = f"[{b}] then {_fmt(self.off_tail)}" if b else _fmt(self.off_tail)
        return f"a_k = {a_txt}, b_k = {b_txt}"


def _fmt(v: float) -> str:
    return f"{v:g}"


def diagonal_model(name, prefix=(), coef=0.0, power=0.0, expected=Classification.UNKNOWN,
                   rule="custom") -> SpectralModel:
    return SpectralModel(name, DIAGONAL, rule, tuple(prefix), float(coef), float(power),
                         expected=expected)


def jacobi_model(name, diagonal=(), diagonal_tail=0.0, offdiagonal=(), offdiagonal_tail=1.0,
                 expected=Classification.UNKNOWN, rule="custom") -> SpectralModel:
    return SpectralModel(name, JACOBI, rule, tuple(diagonal), float(diagonal_tail), 0.0,
                         tuple(offdiagonal), float(offdiagonal_tail), expected)


def linear() -> SpectralModel:
    return diagonal_model("linear", (), 1.0, 1.0, Classification.STABLE, "linear")


def harmonic() -> SpectralModel:
    return diagonal_model("harmonic", (), 1.0, -1.0, Classification.UNSTABLE, "harmonic")


def kernel_gap() -> SpectralModel:
    return diagonal_model("kernel-gap", (0.0,), 1.0, 1.0, Classification.STABLE_WITH_KERNEL,
                          "kernel-gap")


def constant(c: float, name: str | None = None) -> SpectralModel:
    expected = Classification.STABLE_WITH_KERNEL if c == 0 else Classification.STABLE
    return diagonal_model(name or f"constant({_fmt(c)})", (), c, 0.0, expected)


def jacobi_free() -> SpectralModel:
    return jacobi_model("jacobi-free", (), 0.0, (), 1.0, Classification.UNSTABLE, "free")


def jacobi_shifted(c: float) -> SpectralModel:
    # spectrum of the full operator is [c-2, c+2]
    expected = Classification.STABLE if abs(c) > 2 else Classification.UNKNOWN
    return jacobi_model(f"jacobi-shifted({_fmt(c)})", (), c, (), 1.0, expected, "shifted")


GALLERY: dict[str, SpectralModel] = {
    m.name: m
    for m in (
        linear(),
        harmonic(),
        kernel_gap(),
        constant(1.0, "identity"),
        constant(0.0, "zero"),
        jacobi_free(),
        jacobi_shifted(3.0),
    )
}

# right-hand sides used by gallery runs when a config does not supply one
DEFAULT_DATA: dict[str, CoeffVector] = {
    "linear": CoeffVector.power(2.0),
    "harmonic": CoeffVector.basis(1),
    "kernel-gap": CoeffVector((7.0, 2.0)),
    "identity": CoeffVector((1.0, 0.5, 0.25)),
    "zero": CoeffVector.basis(1),
    "jacobi-free": CoeffVector.basis(1),
    "jacobi-shifted(3)": CoeffVector.basis(1),
}


def truncate(model: SpectralModel, n: int) -> SymMatrix:
    """Leading ``n x n`` section of ``model``."""
    if n < 1:
        raise ValueError("section size must be >= 1")
    if model.kind == DIAGONAL:
        return SymMatrix(np.diag(model.eigenvalues(n)))
    m = np.diag(model.jacobi_diagonal(n))
    if n > 1:
        b = model.jacobi_offdiagonal(n - 1)
        m += np.diag(b, 1) + np.diag(b, -1)
    return SymMatrix(m)


def apply(model: SpectralModel, x: CoeffVector) -> CoeffVector:
    """Exact ``A x``; Jacobi products grow the support by one coordinate."""
    if model.kind == JACOBI:
        if not x.finite:
            raise UnsupportedModel(f"{model.name}: Jacobi action needs a finitely supported vector")
        m = len(x.coeffs)
        if m == 0:
            return CoeffVector()
        xs = np.zeros(m + 2)
        xs[1:m + 1] = x.coeffs
        a = model.jacobi_diagonal(m + 1)
        b = model.jacobi_offdiagonal(m + 1)
        out = a * xs[1:]
        out[1:] += b[:m] * xs[1:m + 1]
        out[:m] += b[:m] * xs[2:m + 2]
        return CoeffVector.of(out)

    big = max(len(x.coeffs), len(model.prefix))
    if x.finite:
        m = len(x.coeffs)
        return CoeffVector.of(x.head(m) * model.eigenvalues(m))
    head = x.head(big) * model.eigenvalues(big)
    scale = model.tail_coef * x.decay.scale
    if scale == 0:
        return CoeffVector.of(head)
    p = x.decay.power - model.tail_power
    if not p > 0.5:
        raise DomainViolation(
            f"{model.name}: tail |lambda_k x_k| ~ k^{-p:g} is not square summable"
        )
    return CoeffVector(tuple(head), PowerDecay(p, scale))


def in_domain(model: SpectralModel, x: CoeffVector) -> bool:
    """True iff ``sum |(A x)_k|**2 < inf``, decided from the tail exponents."""
    if x.finite:
        return True
    if model.kind == JACOBI:
        raise UnsupportedModel(f"{model.name}: no analytic domain test for infinite tails")
    if model.tail_coef == 0:
        return True
    return 2 * (x.decay.power - model.tail_power) > 1


def oracle_pinv_apply(model: SpectralModel, y: CoeffVector) -> OracleAnswer:
    """Componentwise ``A^dagger y`` for diagonal models.

    Coordinates with ``lambda_k = 0`` are mapped to zero. When ``y`` lies
    outside ``D(A^dagger)`` the answer is inexact with ``value=None``.
    """
    if model.kind != DIAGONAL:
        raise UnsupportedModel(f"{model.name}: componentwise oracle needs a diagonal model")
    big = max(len(y.coeffs), len(model.prefix))
    lam = model.eigenvalues(big)
    yh = y.head(big)
    head = np.zeros(big)
    nz = lam != 0
    head[nz] = yh[nz] / lam[nz]
    if y.finite:
        m = len(y.coeffs)
        return OracleAnswer(CoeffVector.of(head[:m]), True, "componentwise y_k/lambda_k")
    if model.tail_coef == 0:
        return OracleAnswer(CoeffVector.of(head), True, "tail lies in the kernel and is dropped")
    p = y.decay.power + model.tail_power
    if not 2 * p > 1:
        return OracleAnswer(
            None, False,
            f"DomainViolation: |y_k/lambda_k| ~ k^{-p:g} is not square summable, y not in D(A^dagger)",
        )
    tail = PowerDecay(p, y.decay.scale / model.tail_coef)
    return OracleAnswer(CoeffVector(tuple(head), tail), True, "componentwise y_k/lambda_k")
