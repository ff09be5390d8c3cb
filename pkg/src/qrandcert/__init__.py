"""Certified randomness from quantum measurements.

Computes the probability with which an adversary holding classical side
information can guess measurement outcomes, and the min-entropy
H_min = -log2(G) certified against that adversary, at three levels of
device characterization: full tomographic knowledge of state and
measurements, a one-sided (steering) scenario with an untrusted measuring
device, and the fully device-independent regime where only observed
correlations are assumed.
"""

__version__ = "0.1.0"

from .moments import (
    di_guessing_from_functional,
    di_guessing_probability,
    steering_guessing_probability,
)
from .povm import analyze_povm, sic_povm, trine_povm
from .quantum import (
    BellFunctional,
    DensityMatrix,
    Measurement,
    Scenario,
    born_statistics,
    chsh,
    chsh3,
    min_entropy,
    werner_settings,
    werner_state,
)
from .sdp import BlockSDP, SdpInfeasibleError, SolverOptions, solve
from .sweep import SweepConfig, run_functional_sweep, run_sweep
from .tomographic import (
    DecompositionProblem,
    guessing_probability_multi,
    guessing_probability_single,
)
from .white_noise import check_uncertainty_saturation, optimize_gN
