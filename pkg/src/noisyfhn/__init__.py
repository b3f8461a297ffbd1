"""
noisyfhn
========

Noise-induced oscillations in a stochastic slow-fast FitzHugh-Nagumo system
with cubic nonlinearity ``f(x) = -x (x - alpha)(x - beta)``.

Modules
-------
cubic           cubic model, stable/unstable branches, linearization
quasipotential  well depths V_pm(y), separatrix (y*, S), noise levels y_pm(c)
cycle           predicted noise-induced limit cycle (Psi, Phi) and its periods
sde             seeded Euler-Maruyama simulation and first-exit sampling
experiments     Monte Carlo verification scenarios and reports
io, cli         file emission and the ``noisyfhn`` command
"""
from .cubic import BranchTriple, CubicModel, EigenPair, branch_roots, linearized_eigenvalues
from .cycle import CycleSamples, CycleSpec, cycle_functions, make_cycle_spec, periods, phase_align
from .errors import DomainError, NumericalError
from .experiments import (
    ExitStudyConfig,
    ScanConfig,
    ScenarioConfig,
    VerificationReport,
    bifurcation_scan,
    exit_time_study,
    mean_exit_time_exact,
    state_occupation,
    verify,
)
from .quasipotential import (
    NoiseLevelData,
    PotentialFn,
    SeparatrixData,
    epsilon_for,
    level_crossings,
    noise_level,
    potential_table,
    separatrix_point,
    v_minus,
    v_plus,
    well_depths,
)
from .sde import (
    Basin,
    ExitSample,
    ExitSide,
    SimParams,
    Trajectory,
    derive_replica_seed,
    first_exit,
    first_exit_batch,
    simulate_frozen,
    simulate_frozen_rescaled,
    simulate_full,
    simulate_full_batch,
)

__version__ = "0.1.0"
