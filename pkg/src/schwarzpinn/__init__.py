"""Overlapping Schwarz domain decomposition with PINN subdomain solvers.

The package couples small tanh networks (one per overlapping subdomain,
optionally plus one global coarse network) through Dirichlet interface
exchanges, and ships an experiment CLI for scalability studies on Poisson
and 1-D heat problems.
"""

from .backends import BACKEND
from .geometry import (Decomposition, Interface, Subdomain,
                       build_decomposition, composite_eval,
                       partition_of_unity, partition_weights)
from .mlp import (EvalJet, Mlp, ResidualTerm, load_checkpoint, loss_param_grad,
                  mlp_eval, mlp_eval_jet, mlp_init, save_checkpoint)
from .optim import AdamState, adam_init, adam_step, lr_schedule
from .problems import (FdSolution, PdeProblem, fd_heat_solve, heat_problem,
                       poisson_problem, relative_l2)
from .sampling import (PointSets, Rect, latin_hypercube, segment_lhs,
                       test_grid)
from .schwarz import (BlendSchedule, ErrorProbe, OuterTrace, RunState,
                      SamplingPlan, SolverConfig, initialize, make_probe,
                      outer_convergence_tests, plan_from_totals,
                      plan_per_subdomain, run_one_level, run_outer,
                      run_two_level, update_interfaces)
from .training import (LossBreakdown, TrainConfig, TrainResult,
                       assemble_terms, compute_losses, train_network)

__version__ = "0.1.0"
