"""Chains of subalgebras of so(n) and the orthogonal splittings they induce.

Subspaces are stored as orthonormal row bases in wedge coordinates together
with dense orthogonal projectors; every example here lives in dimension <= 21.
"""

from __future__ import annotations

import functools
import itertools
import re
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    AlgebraElement,
    SoBasis,
    bracket_arr,
    dim_so,
    null_space,
    orthonormalize,
    so_basis,
    to_coeffs,
)
from .errors import (
    FiltrationError,
    InvalidStructure,
    LinearDependenceError,
    NotNestedError,
    NotStrictError,
    NotSubalgebraError,
    UnknownName,
)

RANK_TOL = 1e-10
CLOSURE_TOL = 1e-10


def _as_rows(vectors, n: int) -> np.ndarray:
    d = dim_so(n)
    rows = []
    for v in vectors:
        if isinstance(v, AlgebraElement):
            if v.n != n:
                raise FiltrationError(f"element of so({v.n}) in a chain of so({n})")
            rows.append(v.coeffs)
        elif isinstance(v, dict):
            rows.append(AlgebraElement.from_map(n, v).coeffs)
        else:
            a = np.asarray(v, dtype=float)
            if a.shape == (n, n):
                a = to_coeffs(a)
            if a.shape != (d,):
                raise FiltrationError(f"cannot interpret {v!r} as an element of so({n})")
            rows.append(a)
    return np.array(rows, dtype=float).reshape(len(rows), d)


def _residual(basis: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Component of ``v`` (rows) orthogonal to the row span of ``basis``."""
    if basis.shape[0] == 0:
        return v
    return v - (v @ basis.T) @ basis


def _closure_defect(basis: np.ndarray, n: int) -> float:
    k = basis.shape[0]
    if k < 2:
        return 0.0
    ii, jj = np.triu_indices(k, 1)
    br = bracket_arr(basis[ii], basis[jj], n)
    return float(np.max(np.linalg.norm(_residual(basis, br), axis=-1)))


def closure_defect(basis, n: int) -> float:
    """Largest norm of ``[u, v]`` off the span, over pairs of basis rows."""
    return _closure_defect(orthonormalize(basis, RANK_TOL), n)


@dataclass(frozen=True, eq=False)
class Filtration:
    """Validated strict chain ``g_0 < g_1 < ... < g_N = so(n)``."""

    ambient: SoBasis
    levels: tuple
    complements: tuple
    name: str = ""

    @property
    def n(self) -> int:
        return self.ambient.n

    @property
    def length(self) -> int:
        """Index ``N`` of the top level (number of levels minus one)."""
        return len(self.levels) - 1

    @property
    def dims(self) -> tuple:
        return tuple(b.shape[0] for b in self.levels)

    @property
    def complement_dims(self) -> tuple:
        return tuple(b.shape[0] for b in self.complements)

    @functools.cached_property
    def projectors(self) -> np.ndarray:
        """``(N+1, d, d)`` stack of orthogonal projectors onto each ``p_i``."""
        P = np.array([b.T @ b for b in self.complements])
        P.setflags(write=False)
        return P

    @functools.cached_property
    def level_projectors(self) -> np.ndarray:
        P = np.cumsum(self.projectors, axis=0)
        P.setflags(write=False)
        return P

    def decompose_arr(self, x) -> np.ndarray:
        """Parts ``x_i``, shape ``(..., N+1, d)``, for coefficient arrays ``x``."""
        return np.einsum("iab,...b->...ia", self.projectors, np.asarray(x, dtype=float))

    def level_basis(self, i: int) -> np.ndarray:
        return self.levels[i]

    def complement_basis(self, i: int) -> np.ndarray:
        return self.complements[i]


@dataclass(frozen=True, eq=False)
class Decomposition:
    parts: tuple
    partials: tuple

    @property
    def total(self) -> AlgebraElement:
        return self.partials[-1]


def make_filtration(ambient, chain, name: str = "") -> Filtration:
    """Validate a chain of spanning sets and build its orthogonal splitting.

    ``ambient`` is an :class:`SoBasis` or the integer n. Each element of
    ``chain`` is a list of algebra elements, coefficient vectors, skew
    matrices or ``{"e_ij": c}`` maps; the first level may be empty (g_0 = 0).
    If the last level is not all of so(n) the ambient algebra is appended.
    """
    if not isinstance(ambient, SoBasis):
        ambient = so_basis(int(ambient))
    n, d = ambient.n, ambient.dim
    raw = [_as_rows(level, n) for level in chain]
    if not raw:
        raise FiltrationError("empty chain")
    levels = []
    for i, rows in enumerate(raw):
        basis = orthonormalize(rows, RANK_TOL) if rows.shape[0] else np.zeros((0, d))
        if basis.shape[0] != rows.shape[0]:
            raise LinearDependenceError(
                f"level {i}: spanning set of {rows.shape[0]} vectors has rank {basis.shape[0]}",
                level=i)
        defect = _closure_defect(basis, n)
        if defect > CLOSURE_TOL:
            raise NotSubalgebraError(
                f"level {i} is not closed under the bracket (defect {defect:.2e})", level=i)
        if levels:
            prev = levels[-1]
            if prev.shape[0] and np.max(np.linalg.norm(_residual(basis, prev), axis=-1)) > CLOSURE_TOL:
                raise NotNestedError(f"level {i - 1} is not contained in level {i}", level=i)
            if basis.shape[0] <= prev.shape[0]:
                raise NotStrictError(
                    f"level {i} has dimension {basis.shape[0]}, not larger than level {i - 1}",
                    level=i)
        levels.append(basis)
    if levels[-1].shape[0] < d:
        levels.append(np.eye(d))

    complements = [levels[0]]
    for i in range(1, len(levels)):
        # orthonormal basis of g_i minus g_{i-1}
        comp = orthonormalize(_residual(levels[i - 1], levels[i]), RANK_TOL)
        complements.append(comp)
        levels[i] = np.vstack([levels[i - 1], comp])

    f = Filtration(ambient=ambient, levels=tuple(levels), complements=tuple(complements), name=name)
    defect = splitting_defect(f)
    if defect > CLOSURE_TOL:
        raise FiltrationError(f"[p_i, p_j] not contained in p_j (defect {defect:.2e})")
    return f


def splitting_defect(f: Filtration) -> float:
    """max over u in p_i, v in p_j (i < j, j >= 1) of |[u, v] - pr_{p_j}[u, v]|."""
    worst = 0.0
    for j in range(1, f.length + 1):
        pj = f.complements[j]
        Pj = f.projectors[j]
        for i in range(j):
            pi = f.complements[i]
            if not pi.shape[0]:
                continue
            u = np.repeat(pi, pj.shape[0], axis=0)
            v = np.tile(pj, (pi.shape[0], 1))
            br = bracket_arr(u, v, f.n)
            worst = max(worst, float(np.max(np.linalg.norm(br - br @ Pj, axis=-1))))
    return worst


def decompose(f: Filtration, x: AlgebraElement) -> Decomposition:
    parts_arr = f.decompose_arr(x.coeffs)
    parts = tuple(AlgebraElement(p, f.n) for p in parts_arr)
    partials = tuple(AlgebraElement(p, f.n) for p in np.cumsum(parts_arr, axis=0))
    return Decomposition(parts=parts, partials=partials)


# ------------------------------------------------------------------ hulls

@dataclass
class HullReport:
    basis: np.ndarray
    certificate: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]


def generate_hull(ambient, seed, names=None, tol: float = RANK_TOL) -> HullReport:
    """Bracket-generated subalgebra of a seed, with the words that grew it.

    Right-normed brackets ``[s, w]`` of seed elements ``s`` with words ``w``
    that added a direction in the previous round are tried until a round adds
    nothing. ``certificate`` lists ``(word, dimension after adding it)``.
    """
    if not isinstance(ambient, SoBasis):
        ambient = so_basis(int(ambient))
    n = ambient.n
    seed_rows = _as_rows(seed, n)
    if seed_rows.shape[0] == 0:
        raise ValueError("empty seed")
    if names is None:
        names = [f"v{k + 1}" for k in range(seed_rows.shape[0])]
    scale = max(float(np.max(np.linalg.norm(seed_rows, axis=1))), 1e-300)

    basis = np.zeros((0, ambient.dim))
    certificate = []

    def try_add(v, word):
        nonlocal basis
        norm = np.linalg.norm(v)
        if norm <= tol * scale * scale:
            return False
        r = _residual(basis, v)
        r = _residual(basis, r)
        rn = np.linalg.norm(r)
        if rn <= tol * norm:
            return False
        basis = np.vstack([basis, r / rn])
        certificate.append((word, basis.shape[0]))
        return True

    layer = []
    for name, v in zip(names, seed_rows):
        if try_add(v, name):
            layer.append((name, v))
    while layer and basis.shape[0] < ambient.dim:
        nxt = []
        for wname, w in layer:
            for sname, s in zip(names, seed_rows):
                v = bracket_arr(s, w, n)
                word = f"[{sname},{wname}]"
                if try_add(v, word):
                    nxt.append((word, v))
        layer = nxt
    return HullReport(basis=basis, certificate=certificate)


def lie_hull(ambient, seed, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (rows) of the smallest subalgebra containing ``seed``."""
    return generate_hull(ambient, seed, tol=tol).basis


def two_generator_seed(n: int) -> list:
    """Two generators of so(n): ``sum_{1<k<n} e_{k,k+1}`` and ``e_12``."""
    v1 = AlgebraElement.zero(n)
    for k in range(2, n):
        v1 = v1 + AlgebraElement.e(n, k, k + 1)
    return [v1, AlgebraElement.e(n, 1, 2)]


# ------------------------------------------------------------ isotropy, torus

def _partial(f: Filtration, i: int, x) -> np.ndarray:
    x = x.coeffs if isinstance(x, AlgebraElement) else np.asarray(x, dtype=float)
    return f.level_projectors[i] @ x


def _isotropy_rows(f: Filtration, i: int, xg: np.ndarray, within: int | None = None) -> np.ndarray:
    B = f.levels[i if within is None else within]
    if B.shape[0] == 0:
        return B
    images = bracket_arr(np.broadcast_to(xg, B.shape), B, f.n)  # rows [x, b_k]
    if not np.any(images):
        return B.copy()
    ker = null_space(images.T, RANK_TOL)  # combinations c with sum c_k [x, b_k] = 0
    return ker @ B


def isotropy(f: Filtration, level: int, x) -> np.ndarray:
    """Kernel of ``ad(x_{g_level})`` inside ``g_level`` (orthonormal rows)."""
    return _isotropy_rows(f, level, _partial(f, level, x))


def algebra_rank(basis: np.ndarray, n: int, rng=None, samples: int = 8) -> int:
    """Dimension of a maximal abelian subalgebra, grown greedily from a generic element.

    The centraliser of a generic element of a compact algebra is a Cartan
    subalgebra; the greedy pass only matters if it fails to be abelian.
    """
    if basis.shape[0] == 0:
        return 0
    rng = np.random.default_rng(rng)
    best = None
    for _ in range(samples):
        x = rng.uniform(-1.0, 1.0, basis.shape[0]) @ basis
        images = bracket_arr(np.broadcast_to(x, basis.shape), basis, n)
        cent = null_space(images.T, RANK_TOL) @ basis if np.any(images) else basis
        chosen = [x / np.linalg.norm(x)]
        for c in cent:
            trial = np.vstack(chosen + [c])
            if orthonormalize(trial, RANK_TOL).shape[0] == len(chosen):
                continue
            if np.all(np.linalg.norm(bracket_arr(np.broadcast_to(c, (len(chosen), c.size)),
                                                 np.array(chosen), n), axis=-1) < RANK_TOL):
                chosen.append(c)
        r = orthonormalize(np.array(chosen), RANK_TOL).shape[0]
        best = r if best is None else min(best, r)
    return best


def torus_dimension(f: Filtration, samples: int = 32, rng=None) -> int:
    """Generic value of ``rank g_0 + sum_i dim pr_{p_i}(g_i(x_{g_i}))`` by random sampling.

    Among the samples with minimal total isotropy dimension, the largest
    projected dimension is taken (ranks only drop on special sets).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(rng)
    d = f.ambient.dim
    best_key = None
    best_proj = 0
    for _ in range(samples):
        x = rng.uniform(-1.0, 1.0, d)
        iso_total = 0
        proj_total = 0
        for i in range(1, f.length + 1):
            xg = f.level_projectors[i] @ x
            iso_i = _isotropy_rows(f, i, xg)
            iso_prev = _isotropy_rows(f, i, xg, within=i - 1)
            iso_total += iso_i.shape[0] + iso_prev.shape[0]
            if iso_i.shape[0]:
                proj = iso_i @ f.complements[i].T
                proj_total += orthonormalize(proj, RANK_TOL).shape[0] if np.any(proj) else 0
        if best_key is None or iso_total < best_key:
            best_key, best_proj = iso_total, proj_total
        elif iso_total == best_key:
            best_proj = max(best_proj, proj_total)
    return algebra_rank(f.levels[0], f.n, rng) + best_proj


# ------------------------------------------------------------ SR structures

@dataclass(frozen=True, eq=False)
class SRStructure:
    """Filtration plus index set ``I`` and weights ``s`` (``s_i = 0`` off ``I``).

    ``require_distinct`` enforces ``s_i != s_{i-1}``; it can be switched off
    for chains where two consecutive levels both lie outside ``I``.
    """

    filtration: Filtration
    index_set: frozenset
    s: tuple
    require_distinct: bool = True

    def __post_init__(self):
        f = self.filtration
        N = f.length
        idx = frozenset(int(i) for i in self.index_set)
        s = tuple(float(v) for v in self.s)
        object.__setattr__(self, "index_set", idx)
        object.__setattr__(self, "s", s)
        if len(s) != N + 1:
            raise InvalidStructure(f"need {N + 1} parameters s_0..s_{N}, got {len(s)}")
        if not idx or not idx < frozenset(range(N + 1)):
            raise InvalidStructure("index set must be a nonempty proper subset of {0..N}")
        for i in range(N + 1):
            if i in idx and s[i] == 0.0:
                raise InvalidStructure(f"s_{i} must be nonzero for i in I")
            if i not in idx and s[i] != 0.0:
                raise InvalidStructure(f"s_{i} must vanish for i not in I")
        if self.require_distinct:
            for i in range(1, N + 1):
                if s[i] == s[i - 1]:
                    raise InvalidStructure(f"s_{i} == s_{i - 1}; the chain can be shortened")
        hull = lie_hull(f.ambient, self.distribution_basis)
        if hull.shape[0] != f.ambient.dim:
            raise InvalidStructure(
                f"distribution generates a subalgebra of dimension {hull.shape[0]} < {f.ambient.dim}")

    @property
    def distribution_basis(self) -> np.ndarray:
        f = self.filtration
        rows = [f.complements[i] for i in sorted(self.index_set)]
        return np.vstack(rows) if rows else np.zeros((0, f.ambient.dim))

    @property
    def distribution_projector(self) -> np.ndarray:
        return sum(self.filtration.projectors[i] for i in self.index_set)

    def hamiltonian(self, x) -> float:
        x = x.coeffs if isinstance(x, AlgebraElement) else np.asarray(x, dtype=float)
        parts = self.filtration.decompose_arr(x)
        return 0.5 * float(np.sum(np.asarray(self.s) * np.sum(parts * parts, axis=-1)))

    def metric(self, xi, eta) -> float:
        """Scalar product on the distribution: ``sum_{i in I} <xi_i, eta_i> / s_i``."""
        xi = xi.coeffs if isinstance(xi, AlgebraElement) else np.asarray(xi, dtype=float)
        eta = eta.coeffs if isinstance(eta, AlgebraElement) else np.asarray(eta, dtype=float)
        a = self.filtration.decompose_arr(xi)
        b = self.filtration.decompose_arr(eta)
        return float(sum(a[i] @ b[i] / self.s[i] for i in self.index_set))


# ------------------------------------------------------------------ catalog

def _e(n, i, j):
    return AlgebraElement.e(n, i, j)


def _block_so(n: int, indices) -> list:
    return [_e(n, i, j) for i, j in itertools.combinations(sorted(indices), 2)]


def _vec(n: int, *labels) -> AlgebraElement:
    out = AlgebraElement.zero(n)
    for lab in labels:
        sign = -1.0 if lab.startswith("-") else 1.0
        lab = lab.lstrip("+-")
        out = out + sign * _e(n, int(lab[0]), int(lab[1]))
    return out


def g2_vectors() -> dict:
    """P, Q, R vectors in so(7); P and Q span g2, P_0 and the Q's span su(3)."""
    n = 7
    P = [_vec(n, *p) for p in [("32", "67"), ("13", "57"), ("21", "74"), ("14", "72"),
                               ("51", "37"), ("35", "17"), ("43", "61")]]
    Q = [_vec(n, *q) for q in [("45", "67"), ("64", "57"), ("65", "74"), ("36", "72"),
                               ("26", "37"), ("35", "42"), ("43", "52")]]
    R = [_vec(n, *r) for r in [("71", "24", "35"), ("16", "25", "43"), ("51", "26", "73"),
                               ("14", "27", "36"), ("32", "45", "76"), ("31", "46", "57"),
                               ("21", "47", "65")]]
    return {"P": P, "Q": Q, "R": R}


def lanci_chain(n: int, parts) -> list:
    """Spanning sets of so(l1) < so(l1)+so(l2) < so(l1+l2) < ... < so(n)."""
    parts = [int(p) for p in parts]
    p = len(parts)
    if sum(parts) != n or parts[0] < 2 or any(l < 1 for l in parts) or not (1 < p < n):
        raise FiltrationError(
            f"invalid partition {parts} of {n}: need sum n, l1 >= 2, l_i >= 1, 1 < p < n")
    levels = []
    L = parts[0]
    levels.append(_block_so(n, range(1, L + 1)))
    for l in parts[1:]:
        if l >= 2:
            levels.append(_block_so(n, range(1, L + 1)) + _block_so(n, range(L + 1, L + l + 1)))
        L += l
        levels.append(_block_so(n, range(1, L + 1)))
    return levels


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    name: str
    filtration: Filtration
    index_set: frozenset
    s: tuple
    description: str = ""
    require_distinct: bool = True

    @property
    def structure(self) -> SRStructure:
        return SRStructure(self.filtration, self.index_set, self.s, self.require_distinct)


_LANCI_RE = re.compile(r"^lanci\(\s*(\d+)\s*;\s*([\d\s,]+)\)$")
_STIEFEL_RE = re.compile(r"^stiefel(-contact)?\(\s*(\d+)\s*\)$")

CATALOG_NAMES = (
    "so2-so3-so4",
    "so2-so2so2-so4",
    "u1-su2-u2-so4",
    "rank2-so3-so4",
    "su3-g2-so7",
    "lanci(n;l1,...,lp)",
    "stiefel(n)",
    "stiefel-contact(n)",
)


def _default_s(N: int, index_set) -> tuple:
    s = []
    k = 1
    for i in range(N + 1):
        if i in index_set:
            s.append(float(k))
            k += 1
        else:
            s.append(0.0)
    return tuple(s)


@functools.lru_cache(maxsize=64)
def catalog(name: str) -> CatalogEntry:
    """Named filtrations with a default index set and weights."""
    key = name.strip().replace(" ", "")
    if key == "so2-so3-so4":
        n = 4
        f = make_filtration(n, [[_e(n, 1, 2)], _block_so(n, [1, 2, 3])], name=key)
        return CatalogEntry(key, f, frozenset({1, 2}), (0.0, 1.0, 2.0), "so(2) < so(3) < so(4)")
    if key == "so2-so2so2-so4":
        n = 4
        f = make_filtration(n, [[_e(n, 1, 2)], [_e(n, 1, 2), _e(n, 3, 4)]], name=key)
        return CatalogEntry(key, f, frozenset({1, 2}), (0.0, 1.0, 2.0),
                            "so(2) < so(2)+so(2) < so(4)")
    if key == "u1-su2-u2-so4":
        n = 4
        u1 = [_vec(n, "12", "-34")]
        su2 = u1 + [_vec(n, "14", "-23"), _vec(n, "13", "24")]
        u2 = [_e(n, 1, 2), _e(n, 3, 4), _vec(n, "14", "-23"), _vec(n, "13", "24")]
        f = make_filtration(n, [u1, su2, u2], name=key)
        return CatalogEntry(key, f, frozenset({1, 3}), (0.0, 1.0, 0.0, 2.0),
                            "u(1) < su(2) < u(2) < so(4), d = p1 + p3")
    if key == "rank2-so3-so4":
        n = 4
        f = make_filtration(n, [[_vec(n, "23", "34")], _block_so(n, [2, 3, 4])], name=key)
        return CatalogEntry(key, f, frozenset({0, 2}), (2.0, 0.0, 1.0),
                            "span(e23+e34) < so(3) < so(4), d = p0 + p2")
    if key == "su3-g2-so7":
        v = g2_vectors()
        su3 = [v["P"][0]] + v["Q"]
        g2 = v["P"] + v["Q"]
        f = make_filtration(7, [su3, g2], name=key)
        return CatalogEntry(key, f, frozenset({1, 2}), (0.0, 1.0, 2.0), "su(3) < g2 < so(7)")
    m = _LANCI_RE.match(key)
    if m:
        n = int(m.group(1))
        parts = [int(t) for t in m.group(2).split(",") if t.strip()]
        f = make_filtration(n, lanci_chain(n, parts), name=key)
        idx = frozenset(range(1, f.length + 1))
        return CatalogEntry(key, f, idx, _default_s(f.length, idx), "natural chain of so(n)")
    m = _STIEFEL_RE.match(key)
    if m:
        n = int(m.group(2))
        if n < 4:
            raise FiltrationError("stiefel chains need n >= 4")
        k_block = _block_so(n, range(3, n + 1))
        if m.group(1):
            mid = k_block + [_e(n, 1, 2)]
            desc = "so(n-2) < so(2)+so(n-2) < so(n)"
        else:
            mid = _block_so(n, range(2, n + 1))
            desc = "so(n-2) < so(n-1) < so(n)"
        f = make_filtration(n, [k_block, mid], name=key)
        return CatalogEntry(key, f, frozenset({2}), (0.0, 0.0, 1.0), desc, require_distinct=False)
    raise UnknownName(f"unknown catalog entry {name!r}; known: {', '.join(CATALOG_NAMES)}")


def filtration_from_config(cfg: dict) -> Filtration:
    """Build a filtration from ``{"catalog": name}`` or ``{"n": n, "levels": [...]}``."""
    if "catalog" in cfg:
        extra = set(cfg) - {"catalog"}
        if extra:
            raise FiltrationError(f"unexpected keys with catalog: {sorted(extra)}")
        return catalog(cfg["catalog"]).filtration
    extra = set(cfg) - {"n", "levels", "name"}
    if extra:
        raise FiltrationError(f"unknown filtration keys: {sorted(extra)}")
    n = int(cfg["n"])
    return make_filtration(n, [list(level) for level in cfg["levels"]], name=cfg.get("name", ""))
