"""Euler / reconstruction vector fields and a fixed-step RK4 integrator.

All right-hand sides act on coefficient arrays of shape ``(..., d)`` so a
batch of initial conditions can be advanced together. The coupled system is
``x' = f(x)``, ``g' = g omega(x)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    AlgebraElement,
    GroupElement,
    adjoint_arr,
    bracket_arr,
    dim_so,
    polar,
    so_basis,
    to_matrix,
)
from .errors import IntegrationDiverged, InvalidParameters
from .filtration import Filtration, SRStructure
from .manakov import ManakovData, integral_labels, manakov_integrals_arr

log = logging.getLogger(__name__)

KINDS = ("general-bogoyavlensky", "sub-riemannian-chain", "manakov",
         "singular-manakov", "rank2-so4")
CHAIN_KINDS = ("general-bogoyavlensky", "sub-riemannian-chain")

DEFAULT_STEP = 1e-3
DEFAULT_T_END = 1.0


@dataclass(frozen=True, eq=False)
class VectorFieldSpec:
    kind: str
    n: int
    filtration: Filtration | None = None
    s: tuple | None = None
    a0: np.ndarray | None = None
    manakov: ManakovData | None = None
    nu: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameters(f"unknown vector field kind {self.kind!r}")
        if self.kind in CHAIN_KINDS:
            if self.filtration is None or self.s is None:
                raise InvalidParameters("chain fields need a filtration and s")
            # one weight vector, or one row per batched trajectory
            s_arr = np.asarray(self.s, dtype=float)
            if s_arr.ndim not in (1, 2) or s_arr.shape[-1] != self.filtration.length + 1:
                raise InvalidParameters(
                    f"need {self.filtration.length + 1} values of s, got shape {s_arr.shape}")
            if s_arr.ndim == 2 and self.kind == "general-bogoyavlensky":
                raise InvalidParameters("batched s is only supported without A_0")
            s = tuple(s_arr.tolist()) if s_arr.ndim == 1 else tuple(map(tuple, s_arr.tolist()))
            object.__setattr__(self, "s", s)
            if self.kind == "general-bogoyavlensky":
                k = self.filtration.dims[0]
                a0 = np.asarray(self.a0, dtype=float)
                if a0.shape != (k, k):
                    raise InvalidParameters(f"A_0 must be {k}x{k} in the g_0 basis")
                if not np.allclose(a0, a0.T, atol=1e-12):
                    raise InvalidParameters("A_0 must be symmetric")
                object.__setattr__(self, "a0", a0)
        elif self.kind in ("manakov", "singular-manakov"):
            if self.manakov is None:
                raise InvalidParameters("Manakov fields need ManakovData")
        elif self.kind == "rank2-so4":
            if self.n != 4 or self.nu is None or len(self.nu) != 2:
                raise InvalidParameters("rank2-so4 needs n = 4 and nu = (nu_1, nu_2)")
            object.__setattr__(self, "nu", tuple(float(v) for v in self.nu))

    # ---------------------------------------------------------------- builders

    @classmethod
    def chain(cls, filtration: Filtration, s, a0=None) -> "VectorFieldSpec":
        kind = "sub-riemannian-chain" if a0 is None else "general-bogoyavlensky"
        return cls(kind=kind, n=filtration.n, filtration=filtration, s=s, a0=a0)

    @classmethod
    def from_structure(cls, srs: SRStructure) -> "VectorFieldSpec":
        return cls.chain(srs.filtration, srs.s)

    @classmethod
    def manakov_field(cls, a, b, singular: bool = False) -> "VectorFieldSpec":
        md = ManakovData(tuple(a), tuple(b), "singular" if singular else "regular")
        return cls(kind="singular-manakov" if singular else "manakov", n=md.n, manakov=md)

    @classmethod
    def rank2(cls, nu1: float, nu2: float) -> "VectorFieldSpec":
        return cls(kind="rank2-so4", n=4, nu=(nu1, nu2))

    # ------------------------------------------------------------ evaluation

    def rhs_arr(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if self.kind in CHAIN_KINDS:
            return _rhs_chain_arr(self, x)
        if self.kind == "rank2-so4":
            return _rhs_rank2_arr(self.nu, x)
        if self.kind == "manakov":
            return _rhs_manakov_arr(self.manakov, x)
        return _rhs_singular_manakov_arr(self.manakov, x)

    def omega_arr(self, x) -> np.ndarray:
        return self.rhs_arr(x)[1]

    def hamiltonian_arr(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(self.omega_arr(x) * x, axis=-1)


def _a0_apply(spec: VectorFieldSpec, x0: np.ndarray) -> np.ndarray:
    B0 = spec.filtration.levels[0]
    return (x0 @ B0.T) @ spec.a0 @ B0


def _rhs_chain_arr(spec: VectorFieldSpec, x: np.ndarray):
    f = spec.filtration
    n = f.n
    s = np.asarray(spec.s)[..., None]  # (N+1, 1) or (B, N+1, 1)
    parts = f.decompose_arr(x)  # (..., N+1, d)
    general = spec.kind == "general-bogoyavlensky"
    weighted = s * parts
    if general:
        a0x0 = _a0_apply(spec, parts[..., 0, :])
        weighted[..., 0, :] = a0x0
    # w_i = s_i * (x_0 + ... + x_{i-1}) - (s_0 x_0 + ... + s_{i-1} x_{i-1}), with s_0 x_0 -> A_0 x_0
    cum_x = np.cumsum(parts, axis=-2) - parts
    cum_w = np.cumsum(weighted, axis=-2) - weighted
    w = s * cum_x - cum_w
    xdot_parts = bracket_arr(w, parts, n)
    if general:
        xdot_parts[..., 0, :] = bracket_arr(parts[..., 0, :], a0x0, n)
    xdot = np.sum(xdot_parts, axis=-2)
    omega = np.sum(weighted, axis=-2)
    return xdot, omega


def _rhs_rank2_arr(nu, x: np.ndarray):
    nu1, nu2 = nu
    x12, x13, x14, x23, x24, x34 = np.moveaxis(x, -1, 0)
    p = x23 + x34
    xdot = np.stack([
        -nu1 * x13 * p,
        nu1 * (x12 - x14) * p - nu2 * x12 * x23,
        nu1 * x13 * p - nu2 * x12 * x24,
        -nu1 * x24 * p + nu2 * x12 * x13,
        nu1 * (x23 - x34) * p + nu2 * x12 * x14,
        nu1 * x24 * p,
    ], axis=-1)
    zero = np.zeros_like(p)
    omega = np.stack([nu2 * x12, zero, zero, nu1 * p, zero, nu1 * p], axis=-1)
    return xdot, omega


def _rhs_manakov_arr(md: ManakovData, x: np.ndarray):
    omega = md.omega_arr(x)
    return bracket_arr(x, omega, md.n), omega


def _rhs_singular_manakov_arr(md: ManakovData, x: np.ndarray):
    mask_a = md.mask_so_a
    x_v = np.where(mask_a, 0.0, x)
    omega = md.omega_arr(x_v)
    xdot = bracket_arr(x, omega, md.n)  # [x_a + x_v, omega]
    xdot = np.where(mask_a, 0.0, xdot)
    return xdot, omega


def _elem(x) -> tuple[np.ndarray, int]:
    if isinstance(x, AlgebraElement):
        return x.coeffs, x.n
    x = np.asarray(x, dtype=float)
    return x, None


def rhs_chain(spec: VectorFieldSpec, x: AlgebraElement):
    """``(x', omega)`` for a chain field, built level by level from the splitting."""
    if spec.kind not in CHAIN_KINDS:
        raise InvalidParameters(f"{spec.kind} is not a chain field")
    xdot, omega = _rhs_chain_arr(spec, x.coeffs)
    return AlgebraElement(xdot, spec.n), AlgebraElement(omega, spec.n)


def rhs_rank2_so4(nu1: float, nu2: float, x: AlgebraElement):
    if x.n != 4:
        raise InvalidParameters("rank2-so4 field lives on so(4)")
    xdot, omega = _rhs_rank2_arr((nu1, nu2), x.coeffs)
    return AlgebraElement(xdot, 4), AlgebraElement(omega, 4)


def rhs_manakov(a, b, x: AlgebraElement):
    md = ManakovData(tuple(a), tuple(b), "regular")
    xdot, omega = _rhs_manakov_arr(md, x.coeffs)
    return AlgebraElement(xdot, md.n), AlgebraElement(omega, md.n)


def rhs_singular_manakov(a, b, x: AlgebraElement):
    md = ManakovData(tuple(a), tuple(b), "singular")
    xdot, omega = _rhs_singular_manakov_arr(md, x.coeffs)
    return AlgebraElement(xdot, md.n), AlgebraElement(omega, md.n)


# ------------------------------------------------------------------ monitors

def _mon_hamiltonian(spec, g, x):
    return {"H": spec.hamiltonian_arr(x)}


def _mon_casimir(spec, g, x):
    return {"norm2": np.sum(x * x, axis=-1)}


def _mon_casimirs_so4(spec, g, x):
    if spec.n != 4:
        raise InvalidParameters("casimirs_so4 monitor needs n = 4")
    x12, x13, x14, x23, x24, x34 = np.moveaxis(x, -1, 0)
    return {"I1": x12**2 + x13**2 + x14**2 + x23**2 + x24**2 + x34**2,
            "I2": x12 * x34 - x13 * x24 + x14 * x23}


def _mon_momentum(spec, g, x):
    phi = adjoint_arr(g, x)
    labels = so_basis(spec.n).labels
    return {f"Phi_{lab[2:]}": phi[..., k] for k, lab in enumerate(labels)}


def _mon_manakov(spec, g, x):
    if spec.manakov is None:
        raise InvalidParameters("manakov monitor needs a Manakov field")
    vals = manakov_integrals_arr(spec.manakov.a, x)
    return {lab: vals[..., k] for k, lab in enumerate(integral_labels(spec.n))}


def _mon_so_a(spec, g, x):
    if spec.manakov is None:
        raise InvalidParameters("so_a monitor needs a Manakov field")
    labels = so_basis(spec.n).labels
    return {f"xa_{labels[k][2:]}": x[..., k] for k in np.flatnonzero(spec.manakov.mask_so_a)}


MONITORS = {
    "hamiltonian": _mon_hamiltonian,
    "casimir": _mon_casimir,
    "casimirs_so4": _mon_casimirs_so4,
    "momentum_map": _mon_momentum,
    "manakov": _mon_manakov,
    "so_a": _mon_so_a,
}


def default_monitors(spec: VectorFieldSpec) -> list:
    out = ["hamiltonian", "casimir", "momentum_map"]
    if spec.n == 4:
        out.append("casimirs_so4")
    if spec.kind in ("manakov", "singular-manakov"):
        out.append("manakov")
    if spec.kind == "singular-manakov":
        out.append("so_a")
    return out


def evaluate_monitors(spec, names, g, x) -> dict:
    out = {}
    for name in names:
        if name not in MONITORS:
            raise InvalidParameters(f"unknown monitor {name!r}; known: {sorted(MONITORS)}")
        out.update(MONITORS[name](spec, g, x))
    return out


# ---------------------------------------------------------------- integrator

@dataclass
class Trajectory:
    times: np.ndarray
    g: np.ndarray
    x: np.ndarray
    n: int
    monitors: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.x.shape[-1] != dim_so(self.n) or self.g.shape[-2:] != (self.n, self.n):
            raise ValueError("state arrays do not match n")

    def __len__(self):
        return len(self.times)

    @property
    def states(self) -> list:
        return [(GroupElement(gk, tol=1e-6), AlgebraElement(xk, self.n))
                for gk, xk in zip(self.g, self.x)]

    def drift(self) -> dict:
        """Largest deviation of each monitor from its initial value."""
        return {k: float(np.max(np.abs(v - v[0]))) for k, v in self.monitors.items()}


def _steps(t_end: float, step: float) -> tuple[int, float]:
    if step <= 0:
        raise ValueError("step must be positive")
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    nsteps = max(1, int(round(t_end / step)))
    return nsteps, t_end / nsteps


def integrate_arr(spec: VectorFieldSpec, g0, x0, t_end: float = DEFAULT_T_END,
                  step: float = DEFAULT_STEP, record_every: int = 1,
                  reorthonormalize: bool = True):
    """Classical RK4 on ``(x, g)``; arrays may carry leading batch axes.

    The step is adjusted to ``t_end / round(t_end / step)`` so the grid ends
    exactly at ``t_end``. Returns ``(times, g_hist, x_hist)`` with the time
    axis first, sampled every ``record_every`` steps (plus the endpoint).
    """
    nsteps, h = _steps(t_end, step)
    x = np.array(x0, dtype=float)
    g = np.array(g0, dtype=float)
    g = np.broadcast_to(g, x.shape[:-1] + (spec.n, spec.n)).copy()

    def field_(x_, g_):
        xdot, om = spec.rhs_arr(x_)
        return xdot, g_ @ to_matrix(om, spec.n)

    def rk4(x_, g_):
        # overflow is reported below as divergence, not as a numpy warning
        with np.errstate(over="ignore", invalid="ignore"):
            k1x, k1g = field_(x_, g_)
            k2x, k2g = field_(x_ + 0.5 * h * k1x, g_ + 0.5 * h * k1g)
            k3x, k3g = field_(x_ + 0.5 * h * k2x, g_ + 0.5 * h * k2g)
            k4x, k4g = field_(x_ + h * k3x, g_ + h * k3g)
            return (x_ + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x),
                    g_ + (h / 6.0) * (k1g + 2 * k2g + 2 * k3g + k4g))

    times, gs, xs = [0.0], [g.copy()], [x.copy()]
    for k in range(1, nsteps + 1):
        x_new, g_new = rk4(x, g)
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(g_new))):
            raise IntegrationDiverged(f"non-finite state after t = {(k - 1) * h:.6g}",
                                      last_time=(k - 1) * h)
        if reorthonormalize:
            g_new = polar(g_new)
        x, g = x_new, g_new
        if k % record_every == 0 or k == nsteps:
            times.append(k * h)
            gs.append(g.copy())
            xs.append(x.copy())
    return np.array(times), np.array(gs), np.array(xs)


def integrate(spec: VectorFieldSpec, g0: GroupElement | None, x0: AlgebraElement,
              t_end: float = DEFAULT_T_END, step: float = DEFAULT_STEP,
              monitors=None, reorthonormalize: bool = True,
              record_every: int = 1) -> Trajectory:
    """Integrate one trajectory and evaluate the named monitors at every recorded step."""
    if x0.n != spec.n:
        raise InvalidParameters(f"x0 in so({x0.n}) for a field on so({spec.n})")
    g0m = np.eye(spec.n) if g0 is None else g0.mat
    times, gs, xs = integrate_arr(spec, g0m, x0.coeffs, t_end, step,
                                  record_every=record_every,
                                  reorthonormalize=reorthonormalize)
    names = default_monitors(spec) if monitors is None else list(monitors)
    mons = evaluate_monitors(spec, names, gs, xs)
    log.debug("integrated %s: %d steps, h=%g", spec.kind, len(times) - 1, times[1] - times[0])
    return Trajectory(times=times, g=gs, x=xs, n=spec.n, monitors=mons)


def taming_spec(srs: SRStructure, eps: float) -> VectorFieldSpec:
    """Riemannian chain field with weight ``eps`` on every complement outside the index set."""
    if eps <= 0:
        raise InvalidParameters("taming weight must be positive")
    s = tuple(srs.s[i] if i in srs.index_set else float(eps) for i in range(len(srs.s)))
    return VectorFieldSpec.chain(srs.filtration, s)
