"""
esolab: gain synthesis, simulation, and verification for high-gain
extended state observers driving sliding-mode output tracking of
n-th-order SISO uncertain systems.
"""

from .controller import (SlidingController, control_law, reaching_time_bound,
                         sliding_variable, switch)
from .errors import (ConfigError, DivergenceError, EsolabError,
                     EvaluationError, FactorizationError, ParseError,
                     ValidationError)
from .expr import Expression, evaluate, max_variable_index, parse, unparse
from .gains import (GainSet, LyapunovCertificate, ModalFactorization,
                    ObserverMatrix, PoleSet, build_observer_matrix,
                    companion_eigenvector, delta_bound, eigen_factorize,
                    expand_poles, hurwitz_check, solve_lyapunov)
from .observer import (DifferentiatorRun, ObserverConfig, observer_rhs,
                       run_differentiator)
from .plant import (Constant, PlantModel, Polynomial, ReferenceSignal,
                    Sinusoid, plant_rhs, reference_value)
from .sim import (ExperimentConfig, SteadyStateMetrics, SweepResult, SweepRow,
                  Trajectory, epsilon_sweep, estimate_m, rk4_step,
                  run_closed_loop, steady_state_metrics, true_errors)

__version__ = "0.1.0"
