"""Training of one network against its composite collocation loss.

The loss of a subdomain network is interior-residual + boundary + interface
terms; the coarse network swaps the interface term for a fine-coupling
penalty that pulls it toward the glued subdomain prediction at its interior
points.  All terms are mean-of-squares over fixed point sets.

Each epoch shuffles every active point set and sweeps mini-batches with
Adam; after every epoch the full-set loss is recorded and training stops
once the relative loss decrease over a trailing window falls below the
stabilization tolerance (a loss that rises over the window stops too), or
at the epoch cap.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .mlp import Mlp, ResidualTerm, loss_param_grad, term_losses
from .optim import AdamState, adam_step
from .problems import PdeProblem
from .sampling import PointSets


@dataclass
class LossBreakdown:
    m_omega: float = 0.0
    m_boundary: float = 0.0
    m_interface: float = 0.0
    m_fine: float = 0.0
    fine_penalty: float = 0.0
    epoch: int = 0

    @property
    def total(self) -> float:
        return (self.m_omega + self.m_boundary + self.m_interface
                + self.fine_penalty * self.m_fine)


@dataclass
class TrainConfig:
    stab_tol: float = 1e-3      # relative loss-decrease threshold
    window: int = 10            # epochs between the compared losses
    max_epochs: int = 200
    batch_size: int = 64
    lr0: float = 1e-2
    lr_decay: float = 0.95
    abs_stabilization: bool = False
    reset_optimizer: bool = False

    def __post_init__(self):
        if self.stab_tol <= 0:
            raise ValueError("stab_tol must be positive")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class TrainResult:
    epochs_run: int
    stop_reason: str            # "stabilized" | "max_epochs"
    final: LossBreakdown
    history: list[LossBreakdown] = field(default_factory=list)


def assemble_terms(problem: PdeProblem, points: PointSets,
                   interface_points: np.ndarray | None = None,
                   interface_values: np.ndarray | None = None,
                   fine_points: np.ndarray | None = None,
                   fine_targets: np.ndarray | None = None,
                   fine_penalty: float = 0.0) -> list[ResidualTerm]:
    """Build the residual terms of one network's loss.

    Interior and boundary terms always appear; an interface term appears
    when interface targets are given, a fine-coupling term when composite
    targets at coarse points are given.
    """
    terms = [ResidualTerm(points.interior, problem.source(points.interior),
                          c_value=problem.c_value, c_grad=problem.c_grad,
                          c_hess=problem.c_hess, label="interior")]
    bpts, btags = points.boundary_concat()
    if bpts.shape[0]:
        btarget = np.concatenate([
            problem.boundary(p, tag) for tag, p in points.boundary])
        terms.append(ResidualTerm(bpts, btarget, c_value=1.0, label="boundary"))
    if interface_points is not None and interface_points.shape[0]:
        if interface_values is None or len(interface_values) != len(interface_points):
            raise ValueError("interface targets misaligned with interface points")
        terms.append(ResidualTerm(interface_points, interface_values,
                                  c_value=1.0, label="interface"))
    if fine_points is not None and fine_points.shape[0]:
        if fine_targets is None or len(fine_targets) != len(fine_points):
            raise ValueError("fine-coupling targets misaligned with points")
        terms.append(ResidualTerm(fine_points, fine_targets, c_value=1.0,
                                  weight=fine_penalty, label="fine"))
    return terms


def compute_losses(net: Mlp, terms: list[ResidualTerm],
                   epoch: int = 0) -> LossBreakdown:
    """Full-set loss breakdown; missing optional terms report 0."""
    bd = LossBreakdown(epoch=epoch)
    values = term_losses(net, terms)
    for term, loss in zip(terms, values):
        if term.label == "interior":
            bd.m_omega = loss
        elif term.label == "boundary":
            bd.m_boundary = loss
        elif term.label == "interface":
            bd.m_interface = loss
        elif term.label == "fine":
            bd.m_fine = loss
            bd.fine_penalty = term.weight
    return bd


def _epoch_batches(terms, batch_size, rng):
    """Yield per-step term slices; the interior set fixes the step count.

    Every set is reshuffled each epoch and swept without replacement; sets
    smaller than the step count wrap around so no step sees an empty batch.
    """
    interior = next(t for t in terms if t.label == "interior")
    n_steps = max(1, -(-interior.points.shape[0] // batch_size))
    perms = {id(t): rng.permutation(t.points.shape[0]) for t in terms}
    sizes = {id(t): max(1, -(-t.points.shape[0] // n_steps)) for t in terms}
    sizes[id(interior)] = min(batch_size, interior.points.shape[0])
    for step in range(n_steps):
        batch = []
        for t in terms:
            perm = perms[id(t)]
            k = sizes[id(t)]
            idx = perm[np.arange(step * k, (step + 1) * k) % perm.size]
            batch.append(t.subset(idx))
        yield batch


def train_network(net: Mlp, adam: AdamState, terms: list[ResidualTerm],
                  config: TrainConfig, rng: np.random.Generator,
                  record_history: bool = True) -> TrainResult:
    """Run stabilization-stopped Adam epochs on one network's terms.

    The gradient skips zero-weight terms, so a fine-coupling term with
    penalty 0 cannot influence the parameter trajectory.
    """
    if config.reset_optimizer:
        adam.reset()
    adam.lr0 = config.lr0
    adam.lr_decay = config.lr_decay
    grad_terms = [t for t in terms if t.weight != 0.0]
    history = [compute_losses(net, terms, epoch=0)]
    if config.max_epochs == 0:
        return TrainResult(0, "max_epochs", history[0],
                           history if record_history else [])

    totals = [history[0].total]
    epochs_run = 0
    stop_reason = "max_epochs"
    for epoch in range(config.max_epochs):
        # the decay schedule restarts at lr0 every training round
        for batch in _epoch_batches(grad_terms, config.batch_size, rng):
            _, grad = loss_param_grad(net, batch)
            adam_step(adam, net.theta, grad, epoch=epoch)
        epochs_run = epoch + 1
        bd = compute_losses(net, terms, epoch=epochs_run)
        history.append(bd)
        totals.append(bd.total)
        if _stabilized(totals, epochs_run, config):
            stop_reason = "stabilized"
            break
    return TrainResult(epochs_run, stop_reason, history[-1],
                       history if record_history else [])


def _stabilized(totals: list[float], epoch: int, config: TrainConfig) -> bool:
    if epoch < config.window:
        return False
    cur = totals[epoch]
    prev = totals[epoch - config.window]
    if cur == 0.0:
        return True
    change = abs(prev - cur) if config.abs_stabilization else (prev - cur)
    return change / cur <= config.stab_tol


def history_to_csv(history: list[LossBreakdown], path) -> None:
    """Per-epoch loss stream for loss-curve plots."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "m_omega", "m_boundary", "m_interface",
                         "m_fine", "total"])
        for bd in history:
            writer.writerow([bd.epoch, bd.m_omega, bd.m_boundary,
                             bd.m_interface, bd.m_fine, bd.total])
