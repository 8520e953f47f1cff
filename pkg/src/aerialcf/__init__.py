"""Simulator and optimizer for uplink cell-free aerial networks with
sub-THz HAPS backhauling."""

from .baselines import (
    Association,
    aerial_cellular_sinr,
    make_terrestrial,
    terrestrial_cellfree_sinr,
    terrestrial_max_min_power,
)
from .channel import (
    LinkGains,
    access_gain,
    backhaul_gain,
    compute_link_gains,
    los_probability,
    reference_gain,
    terrestrial_link_gains,
)
from .errors import (
    AerialCfError,
    DegenerateScenarioError,
    DomainError,
    GeometryError,
    SolverError,
    ValidationError,
)
from .expcli import ExperimentConfig, cdf_experiment, mc_validate, run
from .linkchain import EmpiricalSinr, estimate_empirical_sinr
from .optimizer import (
    BisectionState,
    OptimizationTrace,
    bcd_optimize,
    bisection_power,
    compile_placement_step,
    compile_power_feasibility,
    damped_position_update,
    sca_placement_step,
)
from .rate import (
    PowerAllocation,
    SinrReport,
    closed_form_sinr,
    min_sinr,
    rate_from_sinr,
)
from .scenario import (
    Environment,
    NetworkScenario,
    RadioParams,
    ScenarioConfig,
    build_scenario,
    load_environment,
)
from .socp import ConeProgram, SolveResult, check_point, solve

__version__ = "0.1.0"
