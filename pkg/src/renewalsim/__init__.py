"""Age-renewal equation simulator for measure-valued initial data.

Measures are grid densities plus exact atoms; the equation is solved by
exact characteristics around a Volterra birth-trace solver, and the package
verifies the model's conservation, entropy-dissipation and long-time
convergence structure numerically.
"""

from .errors import (
    EntropyError,
    MeasureError,
    RenewalError,
    ScenarioError,
    SpectralError,
    TransportError,
)
from .measures import (
    HybridMeasure,
    angle_bracket,
    flat_distance,
    integrate,
    linear_combination,
    mollify,
    read_snapshot,
    shift_pushforward,
    total_variation,
    weighted_variation,
    write_snapshot,
)
from .spectral import (
    BirthLaw,
    SpectralData,
    eigen_N,
    eigen_phi,
    solve_lambda0,
    solve_spectral,
    stationary_measure,
)
from .transport import (
    Trajectory,
    birth_series,
    conserved_phi_mass,
    evolve,
    tail_phi_mass,
    unrenormalize,
)
from .entropy import (
    EntropyIntegrand,
    abs_shift,
    builtin_integrand,
    dissipation_J,
    gre_functional,
    jensen_defect,
    make_integrand,
    recession,
    verify_B_dominates_phi,
)
from .convergence import (
    BirthIntegralReport,
    DecayFit,
    MollificationReport,
    distance_to_equilibrium,
    fit_decay_rate,
    mk_sequence_check,
    reshetnyak_harness,
)
from .scenarios import Scenario, load_scenario, parse_scenario

__version__ = "0.1.0"
