"""Manakov operators ``omega_ij = (b_i - b_j)/(a_i - a_j) x_ij`` on so(n).

Regular mode needs pairwise distinct ``a``. Singular mode allows repeated
entries of ``a`` as long as every block of equal ``a`` sits inside a block of
equal ``b``; the operator then vanishes on so(n)_a and the flow keeps the
so(n)_a component of the momentum fixed.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraElement, dim_so, so_basis, to_matrix
from .errors import InvalidParameters


def _blocks(values) -> list:
    """Groups of indices (0-based) sharing exactly equal values, in first-seen order."""
    groups: dict = {}
    for i, v in enumerate(values):
        groups.setdefault(float(v), []).append(i)
    return list(groups.values())


@dataclass(frozen=True, eq=False)
class ManakovData:
    a: tuple
    b: tuple
    mode: str = "regular"

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        b = tuple(float(v) for v in self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if len(a) != len(b) or len(a) < 2:
            raise InvalidParameters("a and b must have the same length n >= 2")
        if self.mode not in ("regular", "singular"):
            raise InvalidParameters(f"unknown mode {self.mode!r}")
        if self.mode == "regular" and len(set(a)) != len(a):
            raise InvalidParameters("regular mode needs pairwise distinct a_i")
        n = len(a)
        for i in range(n):
            for j in range(i + 1, n):
                if a[i] == a[j] and b[i] != b[j]:
                    raise InvalidParameters(
                        f"a_{i + 1} = a_{j + 1} but b_{i + 1} != b_{j + 1}: "
                        "so(n)_a must lie inside so(n)_b")

    @property
    def n(self) -> int:
        return len(self.a)

    @functools.cached_property
    def ratios(self) -> np.ndarray:
        """Per wedge coordinate: ``(b_i-b_j)/(a_i-a_j)``, or 0 where ``a_i = a_j``."""
        out = np.zeros(dim_so(self.n))
        for k, (i, j) in enumerate(so_basis(self.n).pairs):
            da = self.a[i - 1] - self.a[j - 1]
            if da != 0.0:
                out[k] = (self.b[i - 1] - self.b[j - 1]) / da
        out.setflags(write=False)
        return out

    @functools.cached_property
    def mask_so_a(self) -> np.ndarray:
        return np.array([self.a[i - 1] == self.a[j - 1] for i, j in so_basis(self.n).pairs])

    @functools.cached_property
    def mask_so_b(self) -> np.ndarray:
        return np.array([self.b[i - 1] == self.b[j - 1] for i, j in so_basis(self.n).pairs])

    @property
    def a_blocks(self) -> list:
        return [len(g) for g in _blocks(self.a)]

    @property
    def b_blocks(self) -> list:
        return [len(g) for g in _blocks(self.b)]

    def _rows(self, mask) -> np.ndarray:
        return np.eye(dim_so(self.n))[np.asarray(mask)]

    @property
    def so_a_basis(self) -> np.ndarray:
        return self._rows(self.mask_so_a)

    @property
    def so_b_basis(self) -> np.ndarray:
        return self._rows(self.mask_so_b)

    @property
    def d_basis(self) -> np.ndarray:
        """Basis of the distribution ``d``, the complement of so(n)_b."""
        return self._rows(~self.mask_so_b)

    @property
    def v_basis(self) -> np.ndarray:
        return self._rows(~self.mask_so_a)

    def is_positive(self) -> bool:
        r = self.ratios[~self.mask_so_b]
        return bool(np.all(r > 0))

    def metric(self, xi, eta) -> float:
        """``<ad_b^{-1} ad_a xi, eta>`` on ``d``; requires the positivity condition."""
        if not self.is_positive():
            raise InvalidParameters("ad_b ad_a^{-1} is not positive definite on d")
        xi = _coeffs(xi)
        eta = _coeffs(eta)
        m = ~self.mask_so_b
        return float(np.sum(xi[m] * eta[m] / self.ratios[m]))

    def omega_arr(self, x) -> np.ndarray:
        return self.ratios * np.asarray(x, dtype=float)

    def diag_a(self) -> np.ndarray:
        return np.diag(self.a)


def _coeffs(x) -> np.ndarray:
    return x.coeffs if isinstance(x, AlgebraElement) else np.asarray(x, dtype=float)


def manakov_omega(md: ManakovData, x) -> AlgebraElement:
    """Angular velocity ``ad_a^{-1} ad_b(x_v)``; zero on so(n)_a and on so(n)_b."""
    return AlgebraElement(md.omega_arr(_coeffs(x)), md.n)


def integral_labels(n: int) -> list:
    return [f"L{k}_{m}" for k in range(2, n + 1) for m in range(k + 1)]


def manakov_integrals_arr(a, x) -> np.ndarray:
    """Coefficients of ``lambda^m`` in ``tr((X + lambda diag(a))^k)``, k = 2..n, m = 0..k.

    The non-commutative power is expanded word by word: ``C[k][m]`` is the
    sum of all products of k letters from {X, D} containing D exactly m times,
    built from ``C[k][m] = C[k-1][m] X + C[k-1][m-1] D``.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    X = to_matrix(x, n)
    D = np.broadcast_to(np.diag(a), X.shape)
    eye = np.broadcast_to(np.eye(n), X.shape)
    words = [eye]  # C[0][0]
    out = []
    for k in range(1, n + 1):
        nxt = []
        for m in range(k + 1):
            term = np.zeros(X.shape)
            if m < k:
                term = term + words[m] @ X
            if m >= 1:
                term = term + words[m - 1] @ D
            nxt.append(term)
        words = nxt
        if k >= 2:
            out.extend(np.trace(w, axis1=-2, axis2=-1) for w in words)
    return np.stack(out, axis=-1)


def manakov_integrals(md: ManakovData, x) -> list:
    vals = manakov_integrals_arr(md.a, _coeffs(x))
    return [float(v) for v in vals]


def sr_manakov_hamiltonian(md: ManakovData, x) -> float:
    """``<ad_b ad_a^{-1}(x_v), x> / 2``."""
    x = _coeffs(x)
    return 0.5 * float(md.omega_arr(x) @ x)


@dataclass
class CoincidenceReport:
    max_deviation: float
    worst_monomial: str
    manakov_coeffs: dict
    chain_coeffs: dict


def _quadratic_coeffs(fn, n: int) -> dict:
    """Monomial coefficients of a quadratic form by polarization on basis vectors."""
    basis = so_basis(n)
    d = basis.dim
    eye = np.eye(d)
    diag = [fn(eye[k]) for k in range(d)]
    out = {}
    for k in range(d):
        out[f"{basis.label(k)}^2"] = diag[k]
        for l in range(k + 1, d):
            out[f"{basis.label(k)}*{basis.label(l)}"] = fn(eye[k] + eye[l]) - diag[k] - diag[l]
    return out


def chain_coincidence(md: ManakovData, srs) -> CoincidenceReport:
    """Largest coefficient gap between the Manakov and the chain Hamiltonians."""
    n = md.n
    if srs.filtration.n != n:
        raise InvalidParameters(f"Manakov data on so({n}) vs chain on so({srs.filtration.n})")
    cm = _quadratic_coeffs(lambda v: sr_manakov_hamiltonian(md, v), n)
    cs = _quadratic_coeffs(srs.hamiltonian, n)
    worst, dev = "", 0.0
    for key in cm:
        gap = abs(cm[key] - cs[key])
        if gap > dev:
            worst, dev = key, gap
    return CoincidenceReport(max_deviation=dev, worst_monomial=worst,
                             manakov_coeffs=cm, chain_coeffs=cs)
