"""qshoot: bound-state spectroscopy by shooting with node counting.

Solves the reduced radial Schrödinger equation and N-channel coupled
systems for eigenvalues and wavefunctions, computes perturbative bound-state
masses, fits potential parameters, and evaluates potentials provided as
shared-library plugins with declared input/output shapes.
"""

from .backend import BACKEND, COMPILED_AVAILABLE
from .engine import (
    ChannelTrajectory,
    RadialFunction,
    RadialMesh,
    count_nodes,
    det_along,
    find_truncation_index,
    integrate_product,
    mesh_integral,
    normalize,
    propagate_coupled,
    propagate_radial,
)
from .potentials import (
    Constant,
    Cornell,
    Coulomb,
    HybridLog,
    LogChannel,
    DiagonalPlusCoupling,
    PluginPotential,
    PowerLaw,
    ScaledPotential,
    SumPotential,
    Tabulated,
    eval_matrix,
    eval_scalar,
    eval_tabulated,
    load_tabulated_csv,
)
from .shooting import (
    EigenSolution,
    ShootingConfig,
    ShootingProblem,
    bracket_transition,
    default_mesh,
    solve_eigen,
)
from .coupled import (
    CoupledProblem,
    CoupledSolution,
    extract_combination,
    series_initial_data,
    solve_coupled,
)
from .spectrum import (
    MassBreakdown,
    SpectrumModel,
    fit_parameters,
    mass_at_order,
    matrix_element,
    second_order_sum,
)
from .plugins import (
    FunctionShape,
    LoadedPlugin,
    PluginManifest,
    ScalarType,
    load_manifest,
    load_plugin,
    potential_from_plugin,
)

__version__ = "0.1.0"
