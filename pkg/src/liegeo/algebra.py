"""Real matrix Lie algebra so(n) in the wedge basis.

Coordinates are the upper-triangular entries ``x_ij`` (i < j) in lexicographic
order, so ``X = sum_{i<j} x_ij e_ij`` with ``(e_ij)_ab = d_ia d_jb - d_ib d_ja``.
With the scalar product ``<X, Y> = -tr(XY)/2`` the wedge basis is orthonormal
and the product of two elements is the dot product of their coefficients.

Most functions come in two flavours: a typed one working on
:class:`AlgebraElement` / :class:`GroupElement` and an array one (suffix
``_arr``) that accepts coefficient arrays with arbitrary leading batch axes.
The integrators use the array versions.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch

ORTHO_TOL = 1e-9
EXPM_REPROJECT_TOL = 1e-12

_LABEL_RE = re.compile(r"^e_?\{?(\d+)[_,]?(\d+)?\}?$")


def dim_so(n: int) -> int:
    return n * (n - 1) // 2


@dataclass(frozen=True, eq=False)
class SoBasis:
    """Ordered wedge basis ``e_ij`` (1-based i < j) of so(n)."""

    n: int
    pairs: tuple = field(repr=False)
    matrices: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.pairs)

    def index(self, i: int, j: int) -> int:
        """Flat index of ``e_ij``; raises for i == j. Order of i, j is not checked here."""
        if i == j:
            raise ValueError("e_ii is zero")
        if i > j:
            i, j = j, i
        return self._index[(i, j)]

    def label(self, k: int) -> str:
        i, j = self.pairs[k]
        if self.n < 10:
            return f"e_{i}{j}"
        return f"e_{i}_{j}"

    @property
    def labels(self) -> list[str]:
        return [self.label(k) for k in range(self.dim)]

    @functools.cached_property
    def _index(self):
        return {p: k for k, p in enumerate(self.pairs)}

    def parse_label(self, label: str) -> tuple[int, float]:
        """Map ``"e_ij"`` to ``(flat index, sign)``; ``e_ji`` gives sign -1."""
        label = label.strip()
        m = _LABEL_RE.match(label)
        if m is None:
            raise ValueError(f"cannot parse basis label {label!r}")
        if m.group(2) is None:
            digits = m.group(1)
            if len(digits) != 2:
                raise ValueError(f"ambiguous basis label {label!r}; use e_i_j")
            i, j = int(digits[0]), int(digits[1])
        else:
            i, j = int(m.group(1)), int(m.group(2))
        if not (1 <= i <= self.n and 1 <= j <= self.n) or i == j:
            raise ValueError(f"basis label {label!r} out of range for so({self.n})")
        sign = 1.0 if i < j else -1.0
        return self.index(i, j), sign

    @functools.cached_property
    def structure_constants(self) -> np.ndarray:
        """``c[a, b, k]`` with ``[e_a, e_b] = sum_k c[a, b, k] e_k``, from matrix products."""
        E = self.matrices
        prod = np.einsum("aij,bjk->abik", E, E)
        comm = prod - prod.transpose(1, 0, 2, 3)
        iu = np.triu_indices(self.n, 1)
        return comm[:, :, iu[0], iu[1]]


@functools.lru_cache(maxsize=None)
def so_basis(n: int) -> SoBasis:
    if n < 2:
        raise ValueError("so(n) needs n >= 2")
    pairs = tuple((i + 1, j + 1) for i, j in zip(*np.triu_indices(n, 1)))
    mats = np.zeros((len(pairs), n, n))
    for k, (i, j) in enumerate(pairs):
        mats[k, i - 1, j - 1] = 1.0
        mats[k, j - 1, i - 1] = -1.0
    mats.setflags(write=False)
    return SoBasis(n=n, pairs=pairs, matrices=mats)


def n_from_dim(d: int) -> int:
    n = int(round((1 + np.sqrt(1 + 8 * d)) / 2))
    if dim_so(n) != d:
        raise DimensionMismatch(f"{d} is not the dimension of any so(n)")
    return n


# ---------------------------------------------------------------- array layer

@functools.lru_cache(maxsize=None)
def _triu(n: int):
    return np.triu_indices(n, 1)


@functools.lru_cache(maxsize=None)
def _flat_basis(n: int) -> np.ndarray:
    return so_basis(n).matrices.reshape(dim_so(n), n * n)


def to_matrix(coeffs, n: int | None = None) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    if n is None:
        n = n_from_dim(coeffs.shape[-1])
    if coeffs.shape[-1] != dim_so(n):
        raise DimensionMismatch(f"so({n}) needs {dim_so(n)} coefficients")
    return (coeffs @ _flat_basis(n)).reshape(coeffs.shape[:-1] + (n, n))


def to_coeffs(mats) -> np.ndarray:
    mats = np.asarray(mats, dtype=float)
    iu = _triu(mats.shape[-1])
    return mats[..., iu[0], iu[1]].copy()


def bracket_arr(x, y, n: int | None = None) -> np.ndarray:
    X = to_matrix(x, n)
    Y = to_matrix(y, n)
    return to_coeffs(X @ Y - Y @ X)


def orthogonality_defect(m) -> np.ndarray:
    m = np.asarray(m)
    eye = np.eye(m.shape[-1])
    return np.linalg.norm(np.swapaxes(m, -1, -2) @ m - eye, axis=(-2, -1))


def polar(m) -> np.ndarray:
    """Nearest orthogonal matrix (orthogonal polar factor); batched.

    Nearly orthogonal input takes two Newton-Schulz steps, which converge
    quadratically to the same factor; anything else goes through the SVD.
    """
    m = np.asarray(m, dtype=float)
    if np.all(orthogonality_defect(m) < 1e-4):
        for _ in range(2):
            m = 1.5 * m - 0.5 * m @ np.swapaxes(m, -1, -2) @ m
        return m
    u, _, vt = np.linalg.svd(m)
    return u @ vt


def expm_arr(x, n: int | None = None) -> np.ndarray:
    """exp of skew matrices given by coefficients; batched over leading axes."""
    X = to_matrix(x, n)
    G = scipy.linalg.expm(X)
    bad = orthogonality_defect(G) > EXPM_REPROJECT_TOL
    if np.any(bad):
        G = np.where(bad[..., None, None], polar(G), G)
    return G


def adjoint_arr(g, x) -> np.ndarray:
    g = np.asarray(g)
    X = to_matrix(x, g.shape[-1])
    return to_coeffs(g @ X @ np.swapaxes(g, -1, -2))


def ad_matrix_arr(x, n: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if n is None:
        n = n_from_dim(x.shape[-1])
    c = so_basis(n).structure_constants
    # column b is [x, e_b]
    return np.einsum("...a,abk->...kb", x, c)


def ad_diagonal(diag) -> np.ndarray:
    """Entrywise factors of ``ad_D`` for ``D = diag(diag)``, per flat index.

    ``[D, X]_ij = (d_i - d_j) X_ij``; the image is symmetric, so ``ad_D`` maps
    so(n) to symmetric matrices and the quotient ``ad_D^{-1} ad_B`` acts on
    each wedge coordinate by ``(b_i - b_j) / (d_i - d_j)``.
    """
    diag = np.asarray(diag, dtype=float)
    iu = np.triu_indices(len(diag), 1)
    return diag[iu[0]] - diag[iu[1]]


# ---------------------------------------------------------------- typed layer

@dataclass(frozen=True, eq=False)
class AlgebraElement:
    coeffs: np.ndarray
    n: int

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.shape[0] != dim_so(self.n):
            raise DimensionMismatch(
                f"so({self.n}) needs {dim_so(self.n)} coefficients, got {c.shape[0]}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @functools.cached_property
    def mat(self) -> np.ndarray:
        m = to_matrix(self.coeffs, self.n)
        m.setflags(write=False)
        return m

    @classmethod
    def from_matrix(cls, m, tol: float = 1e-12) -> "AlgebraElement":
        m = np.asarray(m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch("expected a square matrix")
        if np.linalg.norm(m + m.T) > tol * max(1.0, np.linalg.norm(m)):
            raise ValueError("matrix is not skew-symmetric")
        return cls(to_coeffs(m), m.shape[0])

    @classmethod
    def from_map(cls, n: int, coeff_map: dict) -> "AlgebraElement":
        basis = so_basis(n)
        c = np.zeros(basis.dim)
        for label, value in coeff_map.items():
            k, sign = basis.parse_label(label)
            c[k] += sign * float(value)
        return cls(c, n)

    @classmethod
    def zero(cls, n: int) -> "AlgebraElement":
        return cls(np.zeros(dim_so(n)), n)

    @classmethod
    def e(cls, n: int, i: int, j: int) -> "AlgebraElement":
        c = np.zeros(dim_so(n))
        k = so_basis(n).index(i, j)
        c[k] = 1.0 if i < j else -1.0
        return cls(c, n)

    def to_map(self, drop_zero: bool = True) -> dict:
        basis = so_basis(self.n)
        return {basis.label(k): float(v) for k, v in enumerate(self.coeffs)
                if v != 0.0 or not drop_zero}

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def _check(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        if other.n != self.n:
            raise DimensionMismatch(f"so({self.n}) vs so({other.n})")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgebraElement(self.coeffs + other.coeffs, self.n)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgebraElement(self.coeffs - other.coeffs, self.n)

    def __neg__(self):
        return AlgebraElement(-self.coeffs, self.n)

    def __mul__(self, scalar):
        if isinstance(scalar, (AlgebraElement, GroupElement)):
            return NotImplemented
        return AlgebraElement(float(scalar) * self.coeffs, self.n)

    __rmul__ = __mul__

    def __repr__(self):
        return f"AlgebraElement(n={self.n}, {self.to_map()})"


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Element of SO(n); construction checks orthogonality and orientation."""

    mat: np.ndarray
    tol: float = ORTHO_TOL

    def __post_init__(self):
        m = np.array(self.mat, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatch("expected a square matrix")
        defect = float(orthogonality_defect(m))
        if defect > self.tol:
            raise ValueError(f"orthogonality defect {defect:.3e} exceeds {self.tol:.1e}")
        if abs(np.linalg.det(m) - 1.0) > max(self.tol, 1e-9):
            raise ValueError("determinant is not +1")
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def identity(cls, n: int) -> "GroupElement":
        return cls(np.eye(n))

    @classmethod
    def random(cls, n: int, rng=None) -> "GroupElement":
        rng = np.random.default_rng(rng)
        x = rng.uniform(-1.0, 1.0, dim_so(n)) * np.pi
        return cls(expm_arr(x, n))

    def defect(self) -> float:
        return float(orthogonality_defect(self.mat))

    def inverse(self) -> "GroupElement":
        return GroupElement(self.mat.T, self.tol)

    def __matmul__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        if other.n != self.n:
            raise DimensionMismatch(f"SO({self.n}) vs SO({other.n})")
        return GroupElement(self.mat @ other.mat, max(self.tol, other.tol))


def _same_n(*elems):
    ns = {e.n for e in elems}
    if len(ns) != 1:
        raise DimensionMismatch(f"mixed sizes {sorted(ns)}")
    return ns.pop()


def bracket(X: AlgebraElement, Y: AlgebraElement) -> AlgebraElement:
    n = _same_n(X, Y)
    return AlgebraElement(to_coeffs(X.mat @ Y.mat - Y.mat @ X.mat), n)


def inner(X: AlgebraElement, Y: AlgebraElement) -> float:
    _same_n(X, Y)
    return float(X.coeffs @ Y.coeffs)


def trace_inner(X: AlgebraElement, Y: AlgebraElement) -> float:
    """``-tr(XY)/2`` evaluated on matrices; equals :func:`inner`."""
    _same_n(X, Y)
    return float(-0.5 * np.trace(X.mat @ Y.mat))


def expm(X: AlgebraElement) -> GroupElement:
    return GroupElement(expm_arr(X.coeffs, X.n))


def adjoint(g: GroupElement, X: AlgebraElement) -> AlgebraElement:
    n = _same_n(g, X)
    return AlgebraElement(to_coeffs(g.mat @ X.mat @ g.mat.T), n)


def ad_matrix(X: AlgebraElement) -> np.ndarray:
    """Matrix of ``Y -> [X, Y]`` in the wedge basis (d x d)."""
    return ad_matrix_arr(X.coeffs, X.n)


def random_element(n: int, rng=None, scale: float = 1.0) -> AlgebraElement:
    rng = np.random.default_rng(rng)
    return AlgebraElement(rng.uniform(-scale, scale, dim_so(n)), n)


def orthonormalize(vectors, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (rows) of the span of ``vectors`` (rows).

    Rank is decided by singular values relative to the largest one.
    """
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    if v.size == 0:
        return np.zeros((0, v.shape[-1]))
    _, s, vt = np.linalg.svd(v, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((0, v.shape[1]))
    r = int(np.sum(s > tol * s[0]))
    return vt[:r]


def null_space(m, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (rows) of the right null space of ``m``."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    _, s, vt = np.linalg.svd(m, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(m.shape[1])
    r = int(np.sum(s > tol * s[0]))
    return vt[r:]
