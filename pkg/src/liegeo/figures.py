"""Built-in curve configurations for the `figure` command.

The rank-two so(4) curves start from fixed printed initial data. The u(2)
chain and Manakov curves share one representative initial momentum, so the
singular Manakov curve with ratio 1 retraces the first chain curve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraElement, GroupElement, so_basis
from .errors import UnknownName
from .filtration import SRStructure, catalog
from .flows import Trajectory, VectorFieldSpec, integrate

SQRT2 = np.sqrt(2.0)

# representative momentum for the u(2)-chain and Manakov curves
X_CHAIN = {"e_12": 0.3, "e_13": 0.8, "e_14": 0.5, "e_23": 0.2, "e_24": 0.6, "e_34": 0.4}
X_RANK2_FIRST = {"e_12": 1.0, "e_23": 0.5, "e_34": -0.5, "e_24": 1.0 / SQRT2}
X_RANK2_SECOND = {"e_23": 1.0 / SQRT2, "e_24": np.sqrt(3.0) / SQRT2}

PROJ_13_14_24 = ("e_13", "e_14", "e_24")
PROJ_23_24_34 = ("e_23", "e_24", "e_34")


@dataclass(frozen=True)
class FigureSetup:
    name: str
    spec: VectorFieldSpec
    x0: AlgebraElement
    projection: tuple
    t_end: float
    step: float
    monitors: tuple
    description: str


def _u2_chain(index_set, s) -> VectorFieldSpec:
    f = catalog("u1-su2-u2-so4").filtration
    return VectorFieldSpec.from_structure(SRStructure(f, frozenset(index_set), s))


def figure_setup(name: str) -> FigureSetup:
    x_chain = AlgebraElement.from_map(4, X_CHAIN)
    if name == "fig1-left":
        return FigureSetup(name, _u2_chain({1, 3}, (0.0, 1.0, 0.0, 1.0)), x_chain, PROJ_13_14_24,
                           20.0, 5e-3, ("hamiltonian", "casimirs_so4"),
                           "u(1) < su(2) < u(2) < so(4), d = p1 + p3, s = (0, 1, 0, 1)")
    if name == "fig1-right":
        return FigureSetup(name, _u2_chain({1, 2, 3}, (0.0, 1.0, 2.0, 1.0)), x_chain,
                           PROJ_13_14_24, 20.0, 5e-3, ("hamiltonian", "casimirs_so4"),
                           "u(1) < su(2) < u(2) < so(4), d = p1 + p2 + p3, s = (0, 1, 2, 1)")
    if name == "fig2-left":
        return FigureSetup(name, VectorFieldSpec.rank2(1.0, 0.5),
                           AlgebraElement.from_map(4, X_RANK2_FIRST), PROJ_23_24_34,
                           30.0, 5e-3, ("hamiltonian", "casimirs_so4"),
                           "rank-two so(4) system, nu = (1, 1/2), level I2 = -1/2")
    if name == "fig2-right":
        return FigureSetup(name, VectorFieldSpec.rank2(1.0, 0.5),
                           AlgebraElement.from_map(4, X_RANK2_SECOND), PROJ_23_24_34,
                           30.0, 5e-3, ("hamiltonian", "casimirs_so4"),
                           "rank-two so(4) system, nu = (1, 1/2), curve inside so(3)")
    if name == "fig3-left":
        return FigureSetup(name, VectorFieldSpec.manakov_field((1, 1, 3, 3), (2, 2, 4, 4), singular=True),
                           x_chain, PROJ_13_14_24, 20.0, 5e-3, ("manakov", "so_a"),
                           "singular Manakov, a = (1,1,3,3), b = (2,2,4,4)")
    if name == "fig3-right":
        return FigureSetup(name, VectorFieldSpec.manakov_field((1, 2, 3, 4), (1, 4, 9, 16)),
                           x_chain, PROJ_13_14_24, 20.0, 5e-3, ("manakov",),
                           "regular Manakov, a = (1,2,3,4), b = (1,4,9,16)")
    raise UnknownName(f"unknown figure {name!r}; known: {', '.join(FIGURE_NAMES)}")


FIGURE_NAMES = ("fig1-left", "fig1-right", "fig2-left", "fig2-right", "fig3-left", "fig3-right")


def compute_figure(name: str, t_end: float | None = None, step: float | None = None,
                   record_every: int = 2) -> tuple[FigureSetup, Trajectory, np.ndarray]:
    """Integrate a built-in setup; returns the setup, trajectory and (m, 3) projection."""
    fs = figure_setup(name)
    traj = integrate(fs.spec, GroupElement.identity(4), fs.x0,
                     t_end=fs.t_end if t_end is None else t_end,
                     step=fs.step if step is None else step,
                     monitors=fs.monitors, record_every=record_every)
    basis = so_basis(4)
    cols = [basis.parse_label(lab)[0] for lab in fs.projection]
    return fs, traj, traj.x[:, cols]
