"""Dense real-symmetric kernels: eigendecomposition, pseudoinverse, resolvent, projections.

Every routine goes through one spectral factorization ``A = V diag(mu) V^T``.
Pseudoinverse, resolvent and the range/kernel projectors are all spectral
functions of ``A`` evaluated on that factorization, so one ``eig_sym`` call per
matrix serves every downstream quantity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IterationFailure, NonRealRequired, RankAmbiguity

# relative gap below which a forced rank cut is considered ambiguous
RANK_GAP_RTOL = 1e-14


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Real symmetric ``dim x dim`` matrix; symmetrized on construction."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        # (a + a.T)/2 is exactly symmetric: float addition commutes
        a = 0.5 * (a + a.T)
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def diag(cls, values) -> "SymMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def zeros(cls, dim: int) -> "SymMatrix":
        return cls(np.zeros((dim, dim)))

    @classmethod
    def identity(cls, dim: int) -> "SymMatrix":
        return cls(np.eye(dim))

    def __matmul__(self, other):
        other = other.entries if isinstance(other, SymMatrix) else other
        return self.entries @ other

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def as_sym(a) -> SymMatrix:
    return a if isinstance(a, SymMatrix) else SymMatrix(a)


@dataclass(frozen=True, eq=False)
class ComplexMatrix:
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        object.__setattr__(self, "entries", _frozen(a))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other):
        return self.entries @ other


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Ascending eigenvalues with orthonormal eigenvectors stored as columns."""

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=float)))
        object.__setattr__(self, "vectors", _frozen(np.asarray(self.vectors, dtype=float)))

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def reconstruct(self, weights=None) -> np.ndarray:
        """Return ``V diag(weights) V^T``; ``weights`` defaults to the eigenvalues."""
        w = self.values if weights is None else np.asarray(weights)
        return (self.vectors * w) @ self.vectors.T

    def apply(self, weights, x: np.ndarray) -> np.ndarray:
        """Apply the spectral function with eigenvalue weights ``weights`` to ``x``."""
        return self.vectors @ (np.asarray(weights) * (self.vectors.T @ x))


@dataclass(frozen=True)
class ToleranceContext:
    """Rank detection policy.

    ``rank_rel_tol=None`` means the default ``1e-12 * dim``. When ``exact_rank``
    is set, the ``exact_rank`` eigenvalues of largest modulus are retained and
    the tolerance is ignored.
    """

    rank_rel_tol: float | None = None
    exact_rank: int | None = None

    def __post_init__(self):
        if self.rank_rel_tol is not None and not self.rank_rel_tol > 0:
            raise ValueError("rank_rel_tol must be positive")
        if self.exact_rank is not None and self.exact_rank < 0:
            raise ValueError("exact_rank must be non-negative")

    def rel_tol(self, dim: int) -> float:
        return 1e-12 * dim if self.rank_rel_tol is None else self.rank_rel_tol


@dataclass(frozen=True, eq=False)
class PinvResult:
    matrix: SymMatrix
    rank: int
    sigma_min_pos: float
    norm: float
    decomposition: EigenDecomposition = field(repr=False)
    retained: np.ndarray = field(repr=False)

    def apply(self, y) -> np.ndarray:
        return self.matrix.entries @ np.asarray(y, dtype=float)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # first component clearly above roundoff is made positive
    big = np.abs(vectors) > 1e-10
    first = np.argmax(big, axis=0)
    signs = np.sign(vectors[first, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eig_sym(a) -> EigenDecomposition:
    """Symmetric eigendecomposition with ascending values and a fixed sign convention.

    Exactly diagonal input is handled without LAPACK so that the eigenvectors
    are exact permuted identity columns.
    """
    a = as_sym(a)
    m = a.entries
    d = np.diag(m)
    if np.count_nonzero(m - np.diag(d)) == 0:
        order = np.argsort(d, kind="stable")
        return EigenDecomposition(d[order], np.eye(a.dim)[:, order])
    try:
        values, vectors = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise IterationFailure(f"eigh failed for dim={a.dim}: {exc}") from exc
    return EigenDecomposition(values, _fix_signs(vectors))


def _retained_mask(values: np.ndarray, tol: ToleranceContext) -> np.ndarray:
    dim = values.shape[0]
    mags = np.abs(values)
    if tol.exact_rank is None:
        threshold = tol.rel_tol(dim) * max(1.0, float(mags.max(initial=0.0)))
        return mags > threshold

    k = tol.exact_rank
    if k > dim:
        raise ValueError(f"exact_rank={k} exceeds dimension {dim}")
    order = np.argsort(-mags, kind="stable")
    if 0 < k < dim:
        kept, dropped = mags[order[k - 1]], mags[order[k]]
        if kept - dropped <= RANK_GAP_RTOL * kept:
            raise RankAmbiguity(
                f"rank cut at {k} separates |mu|={kept:.3e} from |mu|={dropped:.3e}"
            )
    if k > 0 and mags[order[k - 1]] == 0.0:
        raise RankAmbiguity(f"exact_rank={k} would retain a zero eigenvalue")
    mask = np.zeros(dim, dtype=bool)
    mask[order[:k]] = True
    return mask


def pinv_from_eig(eig: EigenDecomposition, tol: ToleranceContext | None = None) -> PinvResult:
    tol = tol or ToleranceContext()
    mask = _retained_mask(eig.values, tol)
    inv = np.zeros_like(eig.values)
    inv[mask] = 1.0 / eig.values[mask]
    rank = int(mask.sum())
    if rank:
        sigma = float(np.abs(eig.values[mask]).min())
        norm = 1.0 / sigma
    else:
        sigma = norm = 0.0
    return PinvResult(SymMatrix(eig.reconstruct(inv)), rank, sigma, norm, eig, mask)


def pinv(a, tol: ToleranceContext | None = None) -> PinvResult:
    """Moore-Penrose inverse of a symmetric matrix by spectral inversion.

    Eigenvalues with ``|mu| > rank_rel_tol * max(1, max|mu|)`` are inverted,
    the rest are mapped to zero. ``norm`` is the operator 2-norm of the
    result, ``1 / min retained |mu|``.
    """
    return pinv_from_eig(eig_sym(a), tol)


def resolvent_from_eig(eig: EigenDecomposition, lam: complex) -> ComplexMatrix:
    lam = complex(lam)
    if lam.imag == 0:
        raise NonRealRequired(f"resolvent needs Im(lambda) != 0, got {lam}")
    return ComplexMatrix(eig.reconstruct(1.0 / (lam - eig.values)))


def resolvent(a, lam: complex) -> ComplexMatrix:
    """``(lam I - a)^{-1}`` for non-real ``lam``; its norm is at most ``1/|Im lam|``."""
    lam = complex(lam)
    if lam.imag == 0:
        raise NonRealRequired(f"resolvent needs Im(lambda) != 0, got {lam}")
    return resolvent_from_eig(eig_sym(a), lam)


def proj_range(a, tol: ToleranceContext | None = None) -> SymMatrix:
    eig = eig_sym(a)
    mask = _retained_mask(eig.values, tol or ToleranceContext())
    return SymMatrix(eig.reconstruct(mask.astype(float)))


def proj_kernel(a, tol: ToleranceContext | None = None) -> SymMatrix:
    # self-adjoint: kernel is the orthogonal complement of the range
    a = as_sym(a)
    return SymMatrix(np.eye(a.dim) - proj_range(a, tol).entries)


def op_norm(a) -> float:
    """Spectral norm of a symmetric matrix, i.e. its spectral radius."""
    return float(np.abs(eig_sym(a).values).max())
