"""Conserved quantities and a linear-algebra search for polynomial first integrals.

A polynomial ``P`` is a first integral of ``x' = F(x)`` iff the Lie derivative
``sum_k F_k dP/dx_k`` vanishes. For polynomial ``F`` this is a linear map on
coefficient vectors over a graded monomial basis, so integrals of bounded
degree form the null space of one matrix.

Convention: constants are always integrals and are left out, so kernel and
known-subspace dimensions count non-constant polynomials only.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraElement, GroupElement, adjoint, so_basis
from .errors import InvalidParameters, NumericalRankAmbiguous
from .flows import VectorFieldSpec

log = logging.getLogger(__name__)

RANK_TOL = 1e-9
# smallest kept singular value must clear the cut by this factor
GAP_FACTOR = 1e3


# ------------------------------------------------------------ conserved quantities

def casimirs_so4(x: AlgebraElement) -> tuple[float, float]:
    """Quadratic Casimirs ``I_1 = |x|^2`` and the Pfaffian ``I_2`` of so(4)."""
    if x.n != 4:
        raise InvalidParameters(f"so(4) Casimirs need n = 4, got {x.n}")
    x12, x13, x14, x23, x24, x34 = x.coeffs
    i1 = x12**2 + x13**2 + x14**2 + x23**2 + x24**2 + x34**2
    i2 = x12 * x34 - x13 * x24 + x14 * x23
    return float(i1), float(i2)


def momentum_map(g: GroupElement, x: AlgebraElement) -> AlgebraElement:
    """``Ad_g x``, the Noether momentum of the left action."""
    return adjoint(g, x)


# ---------------------------------------------------------------- polynomials

def monomials(m: int, degree: int, min_degree: int = 0) -> list:
    """Exponent tuples of total degree in ``[min_degree, degree]``, graded then lex."""
    out = []
    for deg in range(min_degree, degree + 1):
        for combo in itertools.combinations_with_replacement(range(m), deg):
            e = [0] * m
            for k in combo:
                e[k] += 1
            out.append(tuple(e))
    return out


def poly_degree(p: dict) -> int:
    return max((sum(e) for e, c in p.items() if c != 0.0), default=0)


def poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0.0) + c1 * c2
    return out


def poly_eval(p: dict, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    total = np.zeros(x.shape[:-1])
    for e, c in p.items():
        term = np.full(x.shape[:-1], c)
        for k, a in enumerate(e):
            if a:
                term = term * x[..., k] ** a
        total = total + term
    return total


def poly_str(p: dict, names) -> dict:
    """Coefficient map keyed by readable monomials, e.g. ``"x_23^2*x_34"``."""
    out = {}
    for e, c in sorted(p.items(), key=lambda kv: (sum(kv[0]), kv[0])):
        if c == 0.0:
            continue
        parts = []
        for k, a in enumerate(e):
            if a == 1:
                parts.append(names[k])
            elif a > 1:
                parts.append(f"{names[k]}^{a}")
        out["*".join(parts) or "1"] = float(c)
    return out


def quadratic_from_function(fn, m: int, clean: float = 1e-14) -> dict:
    """Coefficients of a polynomial of degree <= 2 from point evaluations."""
    eye = np.eye(m)
    f0 = float(fn(np.zeros(m)))
    out = {}
    if f0 != 0.0:
        out[(0,) * m] = f0
    fp = [float(fn(eye[k])) for k in range(m)]
    fm = [float(fn(-eye[k])) for k in range(m)]
    for k in range(m):
        e1 = tuple(int(v) for v in eye[k])
        e2 = tuple(2 * int(v) for v in eye[k])
        out[e1] = (fp[k] - fm[k]) / 2
        out[e2] = (fp[k] + fm[k]) / 2 - f0
        for l in range(k + 1, m):
            e = tuple(int(v) for v in eye[k] + eye[l])
            out[e] = float(fn(eye[k] + eye[l])) - (fp[k] + fm[k]) / 2 - (fp[l] + fm[l]) / 2 \
                - (fp[k] - fm[k]) / 2 - (fp[l] - fm[l]) / 2 + f0
    scale = max([abs(c) for c in out.values()] + [1.0])
    return {e: c for e, c in out.items() if abs(c) > clean * scale}


@dataclass(frozen=True, eq=False)
class PolySystem:
    """Polynomial vector field ``x_k' = rhs[k]`` with ``rhs[k]`` an exponent -> coeff map."""

    names: tuple
    rhs: tuple

    @property
    def m(self) -> int:
        return len(self.names)

    @property
    def degree(self) -> int:
        return max((poly_degree(p) for p in self.rhs), default=0)

    def __call__(self, x) -> np.ndarray:
        return np.stack([poly_eval(p, x) for p in self.rhs], axis=-1)

    @classmethod
    def from_function(cls, fn, names, check_points: int = 20, rng=0,
                      tol: float = 1e-12) -> "PolySystem":
        """Extract a vector field of degree <= 2 and verify it at random points."""
        m = len(names)
        rhs = tuple(quadratic_from_function(lambda v, k=k: fn(v)[k], m) for k in range(m))
        sys = cls(names=tuple(names), rhs=rhs)
        pts = np.random.default_rng(rng).uniform(-1.0, 1.0, (check_points, m))
        err = np.max(np.abs(sys(pts) - np.array([fn(p) for p in pts])))
        if err > tol:
            raise InvalidParameters(f"vector field is not polynomial of degree <= 2 (misfit {err:.2e})")
        return sys

    @classmethod
    def from_spec(cls, spec: VectorFieldSpec, **kw) -> "PolySystem":
        names = [lab.replace("e_", "x_") for lab in so_basis(spec.n).labels]
        return cls.from_function(lambda v: spec.rhs_arr(v)[0], names, **kw)

    @classmethod
    def zero(cls, m: int) -> "PolySystem":
        return cls(names=tuple(f"x{k + 1}" for k in range(m)), rhs=tuple({} for _ in range(m)))

    def restrict(self, keep) -> "PolySystem":
        """Restriction to the coordinate subspace where variables outside ``keep`` vanish.

        Raises if that subspace is not invariant.
        """
        keep = [self.names.index(k) if isinstance(k, str) else int(k) for k in keep]
        drop = [k for k in range(self.m) if k not in keep]

        def on_subspace(p):
            return {e: c for e, c in p.items() if all(e[k] == 0 for k in drop)}

        for k in drop:
            if on_subspace(self.rhs[k]):
                raise InvalidParameters(
                    f"subspace is not invariant: {self.names[k]}' does not vanish on it")
        rhs = tuple({tuple(e[j] for j in keep): c for e, c in on_subspace(self.rhs[k]).items()}
                    for k in keep)
        return PolySystem(names=tuple(self.names[k] for k in keep), rhs=rhs)

    def restrict_poly(self, p: dict, keep) -> dict:
        keep = [self.names.index(k) if isinstance(k, str) else int(k) for k in keep]
        drop = [k for k in range(self.m) if k not in keep]
        return {tuple(e[j] for j in keep): c for e, c in p.items()
                if all(e[k] == 0 for k in drop)}


def rank2_system(nu1: float = 1.0, nu2: float = 0.5) -> PolySystem:
    return PolySystem.from_spec(VectorFieldSpec.rank2(nu1, nu2))


def rank2_so3_system(nu1: float = 1.0, nu2: float = 0.5) -> PolySystem:
    return rank2_system(nu1, nu2).restrict(["x_23", "x_24", "x_34"])


def so4_known_integrals(nu1: float = 1.0, nu2: float = 0.5) -> dict:
    """``H_sR``, ``I_1``, ``I_2`` as polynomials in (x12, x13, x14, x23, x24, x34)."""
    spec = VectorFieldSpec.rank2(nu1, nu2)
    h = quadratic_from_function(spec.hamiltonian_arr, 6)
    i1 = quadratic_from_function(lambda v: float(np.sum(np.asarray(v) ** 2)), 6)
    i2 = quadratic_from_function(lambda v: v[0] * v[5] - v[1] * v[4] + v[2] * v[3], 6)
    return {"H": h, "I1": i1, "I2": i2}


# ------------------------------------------------------------- Lie derivative

@dataclass
class LieDerivative:
    matrix: np.ndarray
    domain: list
    codomain: list


def lie_derivative_matrix(sys: PolySystem, d: int, min_degree: int = 0) -> LieDerivative:
    """Matrix of ``P -> sum_k F_k dP/dx_k`` from monomials of degree <= d."""
    if d < 1:
        raise ValueError("degree bound must be >= 1")
    domain = monomials(sys.m, d, min_degree)
    codomain = monomials(sys.m, d + max(sys.degree - 1, 0))
    row = {e: i for i, e in enumerate(codomain)}
    L = np.zeros((len(codomain), len(domain)))
    for col, alpha in enumerate(domain):
        for k, ak in enumerate(alpha):
            if ak == 0:
                continue
            base = list(alpha)
            base[k] -= 1
            for beta, c in sys.rhs[k].items():
                e = tuple(b + x for b, x in zip(base, beta))
                L[row[e], col] += ak * c
    return LieDerivative(matrix=L, domain=domain, codomain=codomain)


def _null_space(L: np.ndarray):
    _, s, vt = np.linalg.svd(L, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(L.shape[1]), np.inf
    cut = RANK_TOL * s[0]
    r = int(np.sum(s > cut))
    kept_min = s[r - 1] / s[0] if r else np.inf
    dropped_max = s[r] / s[0] if r < s.size else 0.0
    if r and kept_min < GAP_FACTOR * RANK_TOL:
        raise NumericalRankAmbiguous(
            f"smallest retained singular value {kept_min:.2e} is too close to the cut",
            gap=kept_min / max(dropped_max, 1e-300))
    gap = kept_min / max(dropped_max, 1e-300)
    return vt[r:], gap


def _vec(p: dict, index: dict, size: int) -> np.ndarray:
    v = np.zeros(size)
    for e, c in p.items():
        if sum(e) == 0:
            continue
        if e not in index:
            raise InvalidParameters(f"monomial {e} exceeds the degree bound")
        v[index[e]] += c
    return v


def _products(polys, degree: int) -> list:
    """All products of one or more of ``polys`` with total degree <= degree."""
    degs = [poly_degree(p) for p in polys]
    out = []
    for r in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(range(len(polys)), r):
            if sum(degs[k] for k in combo) > degree:
                continue
            prod = polys[combo[0]]
            for k in combo[1:]:
                prod = poly_mul(prod, polys[k])
            out.append(prod)
    return out


def _span_rows(rows, size, tol=1e-10, absolute: bool = False) -> np.ndarray:
    if len(rows) == 0:
        return np.zeros((0, size))
    A = np.array(rows)
    _, s, vt = np.linalg.svd(A, full_matrices=False)
    cut = tol if absolute else tol * s[0]
    if s[0] <= cut or s[0] == 0.0:
        return np.zeros((0, size))
    return vt[: int(np.sum(s > cut))]


@dataclass
class IntegralBasis:
    degree: int
    kernel_dim: int
    known_dim: int
    new_integrals: list
    names: tuple
    per_degree: list = field(default_factory=list)
    kernel: np.ndarray | None = None
    domain: list | None = None
    gap: float = np.inf

    def report(self) -> dict:
        return {
            "degree": self.degree,
            "kernel_dim": self.kernel_dim,
            "known_dim": self.known_dim,
            "new_integrals": [poly_str(p, self.names) for p in self.new_integrals],
            "per_degree": self.per_degree,
        }

    def kernel_polynomials(self) -> list:
        return [{e: float(c) for e, c in zip(self.domain, v) if abs(c) > 1e-14}
                for v in self.kernel]


def _check_known(sys: PolySystem, known, d: int):
    for k, p in enumerate(known):
        deg = max(poly_degree(p), 1)
        L = lie_derivative_matrix(sys, max(deg, 1))
        v = np.zeros(len(L.domain))
        index = {e: i for i, e in enumerate(L.domain)}
        for e, c in p.items():
            v[index[e]] += c
        defect = float(np.linalg.norm(L.matrix @ v))
        if defect > 1e-9 * max(1.0, float(np.linalg.norm(v))):
            raise InvalidParameters(f"known polynomial #{k} is not an integral (defect {defect:.2e})")
        if poly_degree(p) > d:
            log.info("known polynomial #%d has degree above the bound and is ignored", k)


def search_integrals(sys: PolySystem, d: int, known=()) -> IntegralBasis:
    """Integrals of degree <= d not generated (as polynomials) by ``known``.

    Degrees are processed in increasing order. At each degree the kernel of
    the Lie derivative is compared with the span of all products of the known
    integrals and of integrals found at lower degree; a basis of the
    orthogonal complement is reported as new integrals.
    """
    known = [dict(p) for p in known]
    _check_known(sys, known, d)
    names = sys.names
    found: list = []
    per_degree = []
    kernel = None
    domain = None
    gap = np.inf
    for D in range(1, d + 1):
        ld = lie_derivative_matrix(sys, D, min_degree=1)
        domain = ld.domain
        index = {e: i for i, e in enumerate(domain)}
        kernel, gap_D = _null_space(ld.matrix)
        gap = min(gap, gap_D)
        gens = [p for p in known + found if 0 < poly_degree(p) <= D]
        span_all = _span_rows([_vec(p, index, len(domain)) for p in _products(gens, D)], len(domain))
        new_rows = kernel - (kernel @ span_all.T) @ span_all if span_all.shape[0] else kernel
        # kernel rows are orthonormal, so residual norms are on an absolute scale
        new_basis = _span_rows(new_rows, len(domain), tol=1e-6, absolute=True)
        for v in new_basis:
            # make the leading coefficient positive for reproducible output
            lead = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
            v = v * np.sign(lead)
            found.append({e: float(c) for e, c in zip(domain, v) if abs(c) > 1e-13})
        per_degree.append({"degree": D, "kernel_dim": int(kernel.shape[0]),
                           "generated_dim": int(span_all.shape[0]),
                           "new": int(new_basis.shape[0])})
        log.debug("degree %d: kernel %d, generated %d, new %d",
                  D, kernel.shape[0], span_all.shape[0], new_basis.shape[0])

    known_dim = _span_rows([_vec(p, {e: i for i, e in enumerate(domain)}, len(domain))
                            for p in _products([p for p in known if 0 < poly_degree(p) <= d], d)],
                           len(domain)).shape[0]
    return IntegralBasis(degree=d, kernel_dim=int(kernel.shape[0]), known_dim=int(known_dim),
                         new_integrals=found, names=names, per_degree=per_degree,
                         kernel=kernel, domain=domain, gap=float(gap))
