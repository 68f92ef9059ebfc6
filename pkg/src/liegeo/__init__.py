"""Normal sub-Riemannian geodesics on SO(n) from chains of subalgebras."""

__version__ = "0.1.0"

from .algebra import (
    AlgebraElement,
    GroupElement,
    SoBasis,
    ad_matrix,
    adjoint,
    bracket,
    expm,
    inner,
    random_element,
    so_basis,
)
from .errors import (
    ConfigError,
    DimensionMismatch,
    FiltrationError,
    IntegrationDiverged,
    InvalidMomentum,
    InvalidParameters,
    InvalidStructure,
    LiegeoError,
    NumericalRankAmbiguous,
    UnknownName,
)
from .filtration import (
    Filtration,
    SRStructure,
    catalog,
    decompose,
    generate_hull,
    lie_hull,
    make_filtration,
    torus_dimension,
)
from .flows import (
    Trajectory,
    VectorFieldSpec,
    integrate,
    rhs_chain,
    rhs_manakov,
    rhs_rank2_so4,
    rhs_singular_manakov,
    taming_spec,
)
from .geodesics import (
    ChainOperator,
    euler_solution,
    group_solution,
    homogeneous_geodesic,
    quotient_map,
    sr_geodesic,
)
from .integrals import (
    IntegralBasis,
    PolySystem,
    casimirs_so4,
    lie_derivative_matrix,
    momentum_map,
    search_integrals,
)
from .manakov import (
    ManakovData,
    chain_coincidence,
    manakov_integrals,
    manakov_omega,
    sr_manakov_hamiltonian,
)

__all__ = [
    "__version__",
    "ad_matrix",
    "adjoint",
    "AlgebraElement",
    "bracket",
    "casimirs_so4",
    "catalog",
    "chain_coincidence",
    "ChainOperator",
    "ConfigError",
    "decompose",
    "DimensionMismatch",
    "euler_solution",
    "expm",
    "Filtration",
    "FiltrationError",
    "generate_hull",
    "group_solution",
    "GroupElement",
    "homogeneous_geodesic",
    "inner",
    "IntegralBasis",
    "integrate",
    "IntegrationDiverged",
    "InvalidMomentum",
    "InvalidParameters",
    "InvalidStructure",
    "lie_derivative_matrix",
    "lie_hull",
    "LiegeoError",
    "make_filtration",
    "manakov_integrals",
    "manakov_omega",
    "ManakovData",
    "momentum_map",
    "NumericalRankAmbiguous",
    "PolySystem",
    "quotient_map",
    "random_element",
    "rhs_chain",
    "rhs_manakov",
    "rhs_rank2_so4",
    "rhs_singular_manakov",
    "search_integrals",
    "so_basis",
    "SoBasis",
    "sr_geodesic",
    "sr_manakov_hamiltonian",
    "SRStructure",
    "taming_spec",
    "torus_dimension",
    "Trajectory",
    "UnknownName",
    "VectorFieldSpec",
]
