"""Fast excitation-free trap ramps for ion chains.

Designs trap-frequency trajectories that expand or compress a chain of
ions quickly without leaving motional energy behind, by steering the
chain's normal modes through auxiliary equations whose boundary values
pin the initial and final states.  A full classical simulation of the
Coulomb-coupled chain double-checks every design.
"""

__version__ = "0.1.0"

from .constants import (
    AMU,
    COULOMB_COEFF,
    E_CHARGE,
    EPSILON_0,
    HBAR,
    ISOTOPE_MASS_AMU,
    mass_kg,
)
from .errors import (
    ConfigError,
    DegenerateModesError,
    EquilibriumError,
    IntegrationError,
    InvalidProtocolError,
    IonCrossingError,
    IonRampError,
    SingularErmakovError,
)
from .chain_model import (
    Chain,
    EquilibriumGeometry,
    IonSpecies,
    NormalModeBasis,
    equilibrium_geometry,
    hessian,
    jacobi_eigh,
    normal_mode_basis,
    solve_equilibrium_u,
    spring_constant,
    two_ion_analytic,
)
from .protocol_design import (
    BoundarySpec,
    MomentumShift,
    ProtocolCurve,
    RhoAnsatz,
    build_extended_ansatz,
    cosine_ansatz,
    cosine_protocol,
    export_protocol_csv,
    linear_protocol,
    make_cosine_ansatz,
    make_smoothstep_ansatz,
    momentum_shifts,
    omega_from_rho,
    smoothstep_rho,
)
from .auxiliary_dynamics import (
    AuxiliaryTrajectory,
    ShootingResult,
    final_mode_excess,
    harmonic_excitation,
    integrate_auxiliary,
    integrate_ermakov,
    integrate_newton,
    mode_energy,
    optimize_free_params,
    shooting_objective,
)
from .lab_dynamics import (
    ExcitationReport,
    LabTrajectory,
    PhaseState,
    SweepRow,
    excitation_report,
    integrate_hamilton,
    make_protocol_family,
    potential_and_forces,
    simulate_protocol,
    sweep_tf,
)
from .config import RunConfig, load_config, config_hash

__all__ = [
    "AMU",
    "AuxiliaryTrajectory",
    "BoundarySpec",
    "COULOMB_COEFF",
    "Chain",
    "ConfigError",
    "DegenerateModesError",
    "E_CHARGE",
    "EPSILON_0",
    "EquilibriumError",
    "EquilibriumGeometry",
    "ExcitationReport",
    "HBAR",
    "ISOTOPE_MASS_AMU",
    "IntegrationError",
    "InvalidProtocolError",
    "IonCrossingError",
    "IonRampError",
    "IonSpecies",
    "LabTrajectory",
    "MomentumShift",
    "NormalModeBasis",
    "PhaseState",
    "ProtocolCurve",
    "RhoAnsatz",
    "RunConfig",
    "ShootingResult",
    "SingularErmakovError",
    "SweepRow",
    "build_extended_ansatz",
    "config_hash",
    "cosine_ansatz",
    "cosine_protocol",
    "equilibrium_geometry",
    "excitation_report",
    "export_protocol_csv",
    "final_mode_excess",
    "harmonic_excitation",
    "hessian",
    "integrate_auxiliary",
    "integrate_ermakov",
    "integrate_hamilton",
    "integrate_newton",
    "jacobi_eigh",
    "linear_protocol",
    "load_config",
    "make_cosine_ansatz",
    "make_protocol_family",
    "make_smoothstep_ansatz",
    "mass_kg",
    "mode_energy",
    "momentum_shifts",
    "normal_mode_basis",
    "omega_from_rho",
    "optimize_free_params",
    "potential_and_forces",
    "shooting_objective",
    "simulate_protocol",
    "smoothstep_rho",
    "solve_equilibrium_u",
    "spring_constant",
    "sweep_tf",
    "two_ion_analytic",
]
