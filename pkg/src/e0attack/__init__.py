"""E0 as a difference system over GF(2), with a Gröbner-basis guess-and-determine attack."""

__version__ = "0.1.0"

from .poly import BoolPoly, Monomial, Stream, Var, anf_from_truth_table, c, d, u, x, y, z
from .order import MonomialOrder, normal_form
from .groebner import (GroebnerResult, IdealBasis, ResourceBudgetExceeded, Status, TooManySolutions,
                       buchberger, count_solutions, enumerate_solutions)
from .diffsys import DiffSystem, NotInvertible, StreamSpec, SystemState, invert, reverse_state
from .e0 import CipherState, Keystream, e0_inverse_system, e0_system, keystream, oracle_step
from .attack import (AttackConfig, AttackStats, CompiledAttack, GuessOutcome, build_g_polynomial,
                     build_instance, recover_initial_state, run_campaign, run_guess)
