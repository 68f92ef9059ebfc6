"""Closed-form solutions of chain flows as products of exponentials.

With ``v_k = (s_{k+1} - s_k) xbar_{g_k}`` and ``F_k = exp(t v_k)``:

* momentum:  ``x_i(t) = Ad_{F_0 F_1 ... F_{i-1}} xbar_i``
* group:     ``g(t) = gbar exp(t s_N xbar) F_{N-1}^T ... F_1^T F_0^T``

Everything accepts a scalar time or an array of times (leading output axis)
and coefficient arrays with batch axes. The ``F_k`` are built once per call
from one decomposition and reused by both formulas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraElement, GroupElement, adjoint_arr, expm_arr, to_coeffs
from .errors import InvalidMomentum, InvalidParameters
from .filtration import Filtration, SRStructure

MOMENTUM_TOL = 1e-12


def _factors(f: Filtration, s, xbar, t):
    """``(partials, F)`` with ``F[..., k, :, :] = exp(t v_k)``; t axes lead."""
    s = np.asarray(s, dtype=float)
    if s.shape != (f.length + 1,):
        raise InvalidParameters(f"need {f.length + 1} parameters s, got {s.shape}")
    xbar = np.asarray(xbar, dtype=float)
    t = np.asarray(t, dtype=float)
    partials = np.einsum("iab,...b->...ia", f.level_projectors, xbar)  # (B.., N+1, d)
    v = np.diff(s)[:, None] * partials[..., :-1, :]  # (B.., N, d)
    tv = np.multiply.outer(t, v)  # (T.., B.., N, d)
    F = expm_arr(tv, f.n)
    return partials, F


def _prefix_products(F):
    """``P[..., i] = F_0 F_1 ... F_{i-1}`` for i = 0..N (P_0 = Id)."""
    N = F.shape[-3]
    n = F.shape[-1]
    out = np.empty(F.shape[:-3] + (N + 1, n, n))
    out[..., 0, :, :] = np.eye(n)
    for i in range(N):
        out[..., i + 1, :, :] = out[..., i, :, :] @ F[..., i, :, :]
    return out


@dataclass(frozen=True, eq=False)
class ChainOperator:
    """``A^t_[i,j) = Ad_{exp(t v_i)} o ... o Ad_{exp(t v_{j-1})}`` for fixed data."""

    filtration: Filtration
    s: tuple
    xbar: AlgebraElement
    t: float

    def __post_init__(self):
        _, F = _factors(self.filtration, self.s, self.xbar.coeffs, self.t)
        object.__setattr__(self, "_F", F)

    @property
    def factors(self) -> list:
        return [GroupElement(Fk) for Fk in self._F]

    def group(self, i: int, j: int) -> np.ndarray:
        N = self.filtration.length
        if not 0 <= i <= j <= N:
            raise ValueError(f"need 0 <= i <= j <= {N}")
        out = np.eye(self.filtration.n)
        for k in range(i, j):
            out = out @ self._F[k]
        return out

    def apply(self, i: int, j: int, x: AlgebraElement) -> AlgebraElement:
        return AlgebraElement(adjoint_arr(self.group(i, j), x.coeffs), x.n)


def euler_solution_arr(f: Filtration, s, xbar, t) -> np.ndarray:
    """Momentum ``x(t)`` as coefficients; shape ``t.shape + xbar.shape``."""
    xbar = np.asarray(xbar, dtype=float)
    _, F = _factors(f, s, xbar, t)
    P = _prefix_products(F)  # (T.., B.., N+1, n, n)
    parts = f.decompose_arr(xbar)  # (B.., N+1, d)
    parts = np.broadcast_to(parts, P.shape[:-2] + parts.shape[-1:])
    return np.sum(adjoint_arr(P, parts), axis=-2)


def group_solution_arr(f: Filtration, s, gbar, xbar, t) -> np.ndarray:
    """Group curve ``g(t)``; shape ``t.shape + batch + (n, n)``."""
    s = np.asarray(s, dtype=float)
    xbar = np.asarray(xbar, dtype=float)
    t = np.asarray(t, dtype=float)
    _, F = _factors(f, s, xbar, t)
    lead = expm_arr(np.multiply.outer(t, s[-1] * xbar), f.n)
    out = lead
    for k in range(f.length - 1, -1, -1):
        out = out @ np.swapaxes(F[..., k, :, :], -1, -2)
    return np.asarray(gbar, dtype=float) @ out


def euler_solution(f: Filtration, s, xbar: AlgebraElement, t: float) -> AlgebraElement:
    """Solution of the chain Euler equations with ``x(0) = xbar``."""
    return AlgebraElement(euler_solution_arr(f, s, xbar.coeffs, float(t)), xbar.n)


def group_solution(f: Filtration, s, gbar: GroupElement | None, xbar: AlgebraElement,
                   t: float) -> GroupElement:
    """Reconstruction ``g' = g omega`` solved in closed form, ``g(0) = gbar``."""
    gm = np.eye(f.n) if gbar is None else gbar.mat
    return GroupElement(group_solution_arr(f, s, gm, xbar.coeffs, float(t)))


def sr_geodesic(srs: SRStructure, gbar: GroupElement | None, xbar: AlgebraElement,
                t: float) -> GroupElement:
    """Normal sub-Riemannian geodesic through ``gbar`` with initial momentum ``xbar``."""
    return group_solution(srs.filtration, srs.s, gbar, xbar, t)


def _check_homogeneous(srs: SRStructure, xbar):
    if 0 in srs.index_set:
        raise InvalidMomentum("homogeneous geodesics need 0 outside the index set")
    x = xbar.coeffs if isinstance(xbar, AlgebraElement) else np.asarray(xbar, dtype=float)
    k_part = srs.filtration.projectors[0] @ x
    if np.linalg.norm(k_part) > MOMENTUM_TOL * max(1.0, float(np.linalg.norm(x))):
        raise InvalidMomentum(
            f"momentum has a component {np.linalg.norm(k_part):.3e} along g_0 = Lie(K)")
    return x


def homogeneous_geodesic_arr(srs: SRStructure, xbar, t) -> np.ndarray:
    x = _check_homogeneous(srs, xbar)
    f = srs.filtration
    s = np.asarray(srs.s)
    t = np.asarray(t, dtype=float)
    _, F = _factors(f, s, x, t)
    out = expm_arr(np.multiply.outer(t, s[-1] * x), f.n)
    for k in range(f.length - 1, 0, -1):
        out = out @ np.swapaxes(F[..., k, :, :], -1, -2)
    return out


def homogeneous_geodesic(srs: SRStructure, xbar: AlgebraElement, t: float) -> GroupElement:
    """Representative in G of the geodesic on G/K from the origin (K-factor dropped)."""
    return GroupElement(homogeneous_geodesic_arr(srs, xbar, float(t)))


def quotient_map(space, g) -> np.ndarray:
    """Coset representative; ``("stiefel", k)`` or ``"stiefel(n,k)"`` keeps k columns.

    K is the block ``diag(Id_k, S)``, so right multiplication by K leaves the
    first k columns unchanged.
    """
    k = _stiefel_k(space)
    m = g.mat if isinstance(g, GroupElement) else np.asarray(g, dtype=float)
    if not 1 <= k < m.shape[-1]:
        raise InvalidParameters(f"cannot take {k} columns of an {m.shape[-1]}x{m.shape[-1]} matrix")
    return m[..., :, :k].copy()


def _stiefel_k(space) -> int:
    if isinstance(space, tuple) and len(space) == 2 and space[0] == "stiefel":
        return int(space[1])
    if isinstance(space, str) and space.startswith("stiefel(") and space.endswith(")"):
        args = [a.strip() for a in space[len("stiefel("):-1].split(",")]
        if len(args) == 2:
            return int(args[1])
    raise InvalidParameters(f"unsupported homogeneous space {space!r}")


def body_velocity(curve, t: float, h: float = 1e-5) -> np.ndarray:
    """Central-difference ``g(t)^{-1} g'(t)`` as wedge coefficients."""
    gp = curve(t + h)
    gm = curve(t - h)
    g0 = curve(t)
    return to_coeffs(g0.T @ (gp - gm) / (2 * h))
