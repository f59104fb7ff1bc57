"""Q-learning with clock-based learning rates on finite MDPs.

The package solves finite discounted MDPs exactly, certifies the
communicating property, simulates Q-learning under persistent or decaying
exploration with global, state and pair clocks, and checks the
Robbins-Monro behaviour of the effective per-pair learning rates.
"""

from .chains import (
    CommunicationCertificate,
    StationaryStrategy,
    brute_force_communicating,
    communication_certificate,
    induced_chain,
    is_communicating,
    is_irreducible,
    lemma1_exact_check,
    uniform_strategy,
    visit_rate_lower_bound,
)
from .exploration import Boltzmann, DecayingEps, EpsGreedy, Uniform, action_distribution
from .harness import ExperimentSpec, Tolerances, verify
from .kernel import BACKEND
from .mdp import Mdp, q_backup, solve_q, validate_mdp, value_from_q
from .qlearn import QLearnConfig, run
from .schedules import (
    GlobalClock,
    LocalPairClock,
    LogPowerProduct,
    PowerProduct,
    StateClock,
    diagonal_rm_verdict,
    rate,
    theorem2_admissible,
)

__version__ = "0.1.0"
