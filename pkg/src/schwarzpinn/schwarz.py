"""Outer Schwarz iterations over PINN subdomain solvers.

One outer iteration trains every subdomain network concurrently against
frozen interface targets, then (in two-level mode) trains a single global
coarse network that is pulled toward the glued subdomain prediction, then
recomputes the interface targets -- from neighbor networks alone in
one-level mode, or blended with the coarse network's trace in two-level
mode -- and finally runs the two outer convergence tests (networks and
interfaces, both all-quantified; either one stops the loop).

The coarse blending weight follows a geometric schedule over outer
iterations; with the weight identically zero and a zero fine-coupling
penalty, a two-level run reproduces the one-level run bit for bit on the
subdomain networks.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import backends
from .geometry import (Decomposition, Interface, Subdomain,
                       composite_eval, resolve_donors, side_segment)
from .mlp import Mlp, mlp_init
from .optim import AdamState, adam_init
from .problems import PdeProblem, relative_change, relative_l2
from .sampling import PointSets, latin_hypercube, segment_lhs, test_grid
from .training import (LossBreakdown, TrainConfig, TrainResult, assemble_terms,
                       train_network)


@dataclass
class BlendSchedule:
    """Coarse-trace weight at outer iteration k: initial * decay**k."""

    initial: float = 0.9
    decay: float = 0.8

    def __post_init__(self):
        if not 0.0 <= self.initial <= 1.0:
            raise ValueError("blend weight must start in [0, 1]")
        if not 0.0 < self.decay <= 1.0:
            raise ValueError("blend decay must be in (0, 1]")

    def value(self, k: int) -> float:
        return self.initial * self.decay ** k

    @classmethod
    def constant(cls, value: float) -> "BlendSchedule":
        return cls(initial=value, decay=1.0)


@dataclass
class SolverConfig:
    mode: str = "one_level"                 # "one_level" | "two_level"
    outer_max: int = 50
    outer_tol: float = 1e-2
    coarse_blend: BlendSchedule = field(default_factory=BlendSchedule)
    fine_penalty: float = 0.05
    fine_train: TrainConfig = field(default_factory=TrainConfig)
    coarse_train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    n_workers: int = 0                      # 0 = one per subdomain, capped
    target_error: float | None = None
    interface_init: str = "donor"           # "donor" | "zero"
    checkpoint_dir: str | None = None       # save all nets per iteration

    def __post_init__(self):
        if self.mode not in ("one_level", "two_level"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.outer_tol <= 0:
            raise ValueError("outer_tol must be positive")
        if isinstance(self.coarse_blend, (int, float)):
            self.coarse_blend = BlendSchedule.constant(float(self.coarse_blend))
        if self.fine_penalty < 0:
            raise ValueError("fine_penalty must be >= 0")


@dataclass
class SamplingPlan:
    """Resolved point counts: per subdomain, per edge, per interface."""

    interior: list[int]
    boundary: dict[tuple[int, str], int]
    interface: list[int]
    coarse_interior: int = 0
    coarse_boundary: int = 0


def split_proportional(total: int, lengths, minimum: int = 1) -> list[int]:
    """Integer split of ``total`` proportional to ``lengths``.

    Largest-remainder rounding; every part gets at least ``minimum`` even if
    that overshoots the total.
    """
    lengths = np.asarray(lengths, dtype=np.float64)
    k = lengths.size
    if k == 0:
        return []
    raw = total * lengths / lengths.sum()
    counts = np.maximum(np.floor(raw).astype(int), minimum)
    short = total - counts.sum()
    if short > 0:
        order = np.argsort(-(raw - np.floor(raw)))
        for i in range(short):
            counts[order[i % k]] += 1
    return counts.tolist()


def _seg_length(p0, p1) -> float:
    return float(np.hypot(p1[0] - p0[0], p1[1] - p0[1]))


def _constrained_sides(sub: Subdomain, problem: PdeProblem):
    return [s for s in sub.physical_sides if s in problem.constrained_edges]


def plan_from_totals(dec: Decomposition, problem: PdeProblem, n_interior: int,
                     n_boundary: int, n_interface: int,
                     coarse_interior: int = 0,
                     coarse_boundary: int = 0) -> SamplingPlan:
    """Distribute domain-total point counts over the decomposition.

    Interior points split evenly over subdomains, boundary points over the
    constrained physical edges proportionally to length, interface points
    evenly over interface segments.
    """
    n_sub = dec.n_subdomains
    interior = [max(1, n_interior // n_sub)] * n_sub
    edge_keys, edge_lens = [], []
    for sub in dec.subdomains:
        for side in _constrained_sides(sub, problem):
            p0, p1 = side_segment(sub.bounds, side)
            edge_keys.append((sub.id, side))
            edge_lens.append(_seg_length(p0, p1))
    counts = split_proportional(n_boundary, edge_lens)
    boundary = dict(zip(edge_keys, counts))
    n_itf = len(dec.interfaces)
    interface = [max(1, n_interface // n_itf)] * n_itf if n_itf else []
    return SamplingPlan(interior, boundary, interface,
                        coarse_interior, coarse_boundary)


def plan_per_subdomain(dec: Decomposition, problem: PdeProblem,
                       n_interior: int, n_boundary: int, n_interface: int,
                       coarse_interior: int = 0,
                       coarse_boundary: int = 0) -> SamplingPlan:
    """Fixed per-subdomain counts (weak-scaling setups).

    ``n_boundary`` and ``n_interface`` are budgets per subdomain, split over
    that subdomain's constrained edges / interface segments by length.
    """
    interior = [n_interior] * dec.n_subdomains
    boundary: dict[tuple[int, str], int] = {}
    interface = [0] * len(dec.interfaces)
    for sub in dec.subdomains:
        sides = _constrained_sides(sub, problem)
        if sides:
            lens = [_seg_length(*side_segment(sub.bounds, s)) for s in sides]
            for s, c in zip(sides, split_proportional(n_boundary, lens)):
                boundary[(sub.id, s)] = c
        own = [i for i, itf in enumerate(dec.interfaces)
               if itf.owner_id == sub.id]
        if own:
            lens = [_seg_length(dec.interfaces[i].p0, dec.interfaces[i].p1)
                    for i in own]
            for i, c in zip(own, split_proportional(n_interface, lens)):
                interface[i] = c
    return SamplingPlan(interior, boundary, interface,
                        coarse_interior, coarse_boundary)


# deterministic, mode-independent random streams; the subdomain training
# streams must not depend on whether a coarse network exists
def sample_rng(seed: int, sid: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, 0, sid]))


def net_seed(seed: int, sid: int) -> int:
    return int(np.random.SeedSequence([seed, 1, sid]).generate_state(1)[0])


def train_rng(seed: int, sid: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, 2, sid]))


def interface_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, 3, index]))


def coarse_rngs(seed: int):
    return (np.random.default_rng(np.random.SeedSequence([seed, 4])),
            int(np.random.SeedSequence([seed, 5]).generate_state(1)[0]),
            np.random.default_rng(np.random.SeedSequence([seed, 6])))


@dataclass
class CoarseLevel:
    points: PointSets
    net: Mlp
    adam: AdamState
    rng: np.random.Generator


@dataclass
class RunState:
    dec: Decomposition
    problem: PdeProblem
    config: SolverConfig
    adams: list[AdamState]
    rngs: list[np.random.Generator]
    coarse: CoarseLevel | None = None


def _sample_subdomain(sub: Subdomain, problem: PdeProblem, plan: SamplingPlan,
                      rng: np.random.Generator) -> PointSets:
    interior = latin_hypercube(plan.interior[sub.id], sub.bounds, rng)
    boundary = []
    for side in _constrained_sides(sub, problem):
        n = plan.boundary.get((sub.id, side), 0)
        if n > 0:
            p0, p1 = side_segment(sub.bounds, side)
            boundary.append((side, segment_lhs(n, p0, p1, rng)))
    return PointSets(interior=interior, boundary=boundary)


def _index_donors(itf: Interface) -> None:
    """Group interface points by donor so updates run batched per donor."""
    groups: dict[int, list[int]] = {}
    counts = np.zeros(len(itf.points))
    for p_idx, ids in enumerate(itf.donor_ids):
        counts[p_idx] = len(ids)
        for d in ids:
            groups.setdefault(int(d), []).append(p_idx)
    itf.donor_groups = {d: np.asarray(ix, dtype=np.int64)
                        for d, ix in groups.items()}
    itf.donor_counts = counts


def _sample_coarse(problem: PdeProblem, plan: SamplingPlan,
                   rng: np.random.Generator) -> PointSets:
    interior = latin_hypercube(plan.coarse_interior, problem.bounds, rng)
    sides = sorted(problem.constrained_edges)
    lens = [_seg_length(*side_segment(problem.bounds, s)) for s in sides]
    boundary = []
    for side, n in zip(sides, split_proportional(plan.coarse_boundary, lens)):
        p0, p1 = side_segment(problem.bounds, side)
        boundary.append((side, segment_lhs(n, p0, p1, rng)))
    return PointSets(interior=interior, boundary=boundary)


def initialize(dec: Decomposition, problem: PdeProblem, plan: SamplingPlan,
               fine_dims, config: SolverConfig,
               coarse_dims=None) -> RunState:
    """Sample all point sets, initialize networks, optimizers and the first
    interface targets (traces of the freshly initialized donor networks)."""
    seed = config.seed
    for sub in dec.subdomains:
        sub.points = _sample_subdomain(sub, problem, plan,
                                       sample_rng(seed, sub.id))
        sub.net = mlp_init(fine_dims, net_seed(seed, sub.id))
    adams = [adam_init(sub.net.n_params, config.fine_train.lr0,
                       config.fine_train.lr_decay) for sub in dec.subdomains]
    rngs = [train_rng(seed, sub.id) for sub in dec.subdomains]

    for idx, itf in enumerate(dec.interfaces):
        n = plan.interface[idx]
        itf.points = segment_lhs(n, itf.p0, itf.p1, interface_rng(seed, idx))
        itf.donor_ids = resolve_donors(dec, itf)
        _index_donors(itf)

    coarse = None
    if config.mode == "two_level":
        if coarse_dims is None:
            raise ValueError("two_level mode needs coarse network dims")
        if plan.coarse_interior < 1:
            raise ValueError("two_level mode needs coarse interior points")
        c_sample, c_net_seed, c_train = coarse_rngs(seed)
        c_net = mlp_init(coarse_dims, c_net_seed)
        coarse = CoarseLevel(
            points=_sample_coarse(problem, plan, c_sample),
            net=c_net,
            adam=adam_init(c_net.n_params, config.coarse_train.lr0,
                           config.coarse_train.lr_decay),
            rng=c_train)

    state = RunState(dec=dec, problem=problem, config=config, adams=adams,
                     rngs=rngs, coarse=coarse)
    if config.interface_init == "zero":
        for itf in dec.interfaces:
            itf.values = np.zeros(len(itf.points))
            itf.donor_values = np.zeros(len(itf.points))
    else:
        update_interfaces(dec, coarse_net=None, coarse_blend=0.0)
    return state


def update_interfaces(dec: Decomposition, coarse_net: Mlp | None,
                      coarse_blend: float) -> None:
    """Recompute every interface target from the current donor networks.

    Points covered by several donors (corner overlaps) average their
    traces.  With ``coarse_blend`` > 0 the stored target mixes the coarse
    network's trace in; the pure donor average is kept separately for the
    interface convergence test.
    """
    if not 0.0 <= coarse_blend <= 1.0:
        raise ValueError("coarse blend weight must lie in [0, 1]")
    if coarse_blend > 0.0 and coarse_net is None:
        raise ValueError("coarse blending requested without a coarse network")
    for itf in dec.interfaces:
        acc = np.zeros(len(itf.points))
        for donor_id, idx in itf.donor_groups.items():
            dnet = dec.subdomains[donor_id].net
            acc[idx] += backends.values_batch(
                dnet.theta, dnet.dims, np.ascontiguousarray(itf.points[idx]))
        donor_avg = acc / itf.donor_counts
        itf.donor_values = donor_avg
        if coarse_blend > 0.0:
            cvals = backends.values_batch(coarse_net.theta, coarse_net.dims,
                                          itf.points)
            itf.values = (coarse_blend * cvals
                          + (1.0 - coarse_blend) * donor_avg)
        else:
            itf.values = donor_avg.copy()


def outer_convergence_tests(net_preds, prev_net_preds, donor_vals,
                            prev_donor_vals, outer_tol: float):
    """All-quantified network and interface convergence flags.

    Without previous snapshots both flags are False by definition.
    """
    if prev_net_preds is None or prev_donor_vals is None:
        return False, False
    networks = all(relative_change(cur, prev) < outer_tol
                   for cur, prev in zip(net_preds, prev_net_preds))
    interfaces = all(relative_change(cur, prev) < outer_tol
                     for cur, prev in zip(donor_vals, prev_donor_vals))
    return networks, interfaces


@dataclass
class ErrorProbe:
    """Test points, reference values and per-subdomain restriction masks."""

    points: np.ndarray
    truth: np.ndarray
    masks: list[np.ndarray]


def make_probe(dec: Decomposition, problem: PdeProblem, n_points: int = 10_000,
               reference=None) -> ErrorProbe:
    pts = test_grid(problem.bounds, n_points)
    ref = reference if reference is not None else problem.analytic
    if ref is None:
        raise ValueError("problem has no analytic solution; pass a reference")
    truth = ref(pts)
    masks = [sub.bounds.contains(pts) for sub in dec.subdomains]
    return ErrorProbe(points=np.ascontiguousarray(pts), truth=truth,
                      masks=masks)


@dataclass
class OuterRow:
    iteration: int                      # 1-indexed
    global_error: float
    subdomain_errors: list[float]
    coarse_blend: float
    networks_converged: bool
    interfaces_converged: bool
    epochs: list[int]
    coarse_epochs: int
    final_losses: list[LossBreakdown]
    wall_time: float


@dataclass
class OuterTrace:
    rows: list[OuterRow] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def global_errors(self) -> list[float]:
        return [r.global_error for r in self.rows]

    def iterations_to(self, target: float) -> int | None:
        """First (1-indexed) outer iteration at or below ``target``."""
        for r in self.rows:
            if r.global_error <= target:
                return r.iteration
        return None

    def subdomain_error_curve(self, sid: int) -> list[float]:
        return [r.subdomain_errors[sid] for r in self.rows]

    def to_csv(self, path) -> None:
        """Deterministic columns only (wall time lives in the JSON dump)."""
        n_sub = len(self.rows[0].subdomain_errors) if self.rows else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "global_error"]
                       + [f"error_s{j}" for j in range(n_sub)]
                       + ["coarse_blend", "networks_converged",
                          "interfaces_converged"])
            for r in self.rows:
                w.writerow([r.iteration, repr(r.global_error)]
                           + [repr(e) for e in r.subdomain_errors]
                           + [repr(r.coarse_blend),
                              int(r.networks_converged),
                              int(r.interfaces_converged)])

    def to_json(self, path=None):
        doc = {"meta": self.meta, "rows": [asdict(r) for r in self.rows]}
        if path is not None:
            with open(path, "w") as fh:
                json.dump(doc, fh, indent=2)
        return doc


def _subdomain_terms(state: RunState, sub: Subdomain):
    itfs = state.dec.interfaces_of(sub.id)
    if itfs:
        pts = np.vstack([itf.points for itf in itfs])
        vals = np.concatenate([itf.values for itf in itfs])
    else:
        pts, vals = None, None
    return assemble_terms(state.problem, sub.points,
                          interface_points=pts, interface_values=vals)


def _train_all_subdomains(state: RunState) -> list[TrainResult]:
    cfg = state.config
    subs = state.dec.subdomains

    def work(sub: Subdomain) -> TrainResult:
        try:
            return train_network(sub.net, state.adams[sub.id],
                                 _subdomain_terms(state, sub),
                                 cfg.fine_train, state.rngs[sub.id],
                                 record_history=False)
        except FloatingPointError as exc:
            raise FloatingPointError(
                f"subdomain {sub.id}: {exc}") from exc

    workers = cfg.n_workers or min(len(subs), 4)
    if workers <= 1 or len(subs) == 1:
        return [work(s) for s in subs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(work, subs))


def _train_coarse(state: RunState) -> TrainResult:
    coarse = state.coarse
    fine_targets = composite_eval(state.dec, coarse.points.interior)
    terms = assemble_terms(state.problem, coarse.points,
                           fine_points=coarse.points.interior,
                           fine_targets=fine_targets,
                           fine_penalty=state.config.fine_penalty)
    return train_network(coarse.net, coarse.adam, terms,
                         state.config.coarse_train, coarse.rng,
                         record_history=False)


def run_outer(state: RunState, probe: ErrorProbe) -> OuterTrace:
    """Drive outer iterations until convergence, target error, or the cap."""
    cfg = state.config
    dec = state.dec
    two_level = cfg.mode == "two_level"
    trace = OuterTrace(meta={
        "mode": cfg.mode, "grid": list(dec.grid), "overlap": dec.overlap,
        "n_subdomains": dec.n_subdomains, "seed": cfg.seed,
        "problem": state.problem.name, "backend": backends.BACKEND,
    })
    prev_net_preds = None
    prev_donor_vals = None

    for k in range(cfg.outer_max):
        t0 = time.perf_counter()
        results = _train_all_subdomains(state)
        coarse_epochs = 0
        if two_level:
            coarse_epochs = _train_coarse(state).epochs_run
        blend = cfg.coarse_blend.value(k) if two_level else 0.0
        update_interfaces(dec, state.coarse.net if two_level else None, blend)

        net_preds = [backends.values_batch(s.net.theta, s.net.dims,
                                           s.points.interior)
                     for s in dec.subdomains]
        donor_vals = [itf.donor_values.copy() for itf in dec.interfaces]
        nets_ok, itfs_ok = outer_convergence_tests(
            net_preds, prev_net_preds, donor_vals, prev_donor_vals,
            cfg.outer_tol)
        prev_net_preds = net_preds
        prev_donor_vals = donor_vals

        pred = composite_eval(dec, probe.points)
        global_err = relative_l2(pred, probe.truth)
        sub_errs = []
        for s in dec.subdomains:
            mask = probe.masks[s.id]
            vals = backends.values_batch(
                s.net.theta, s.net.dims,
                np.ascontiguousarray(probe.points[mask]))
            sub_errs.append(relative_l2(vals, probe.truth[mask]))

        trace.rows.append(OuterRow(
            iteration=k + 1, global_error=global_err,
            subdomain_errors=sub_errs, coarse_blend=blend,
            networks_converged=nets_ok, interfaces_converged=itfs_ok,
            epochs=[r.epochs_run for r in results],
            coarse_epochs=coarse_epochs,
            final_losses=[r.final for r in results],
            wall_time=time.perf_counter() - t0))

        if cfg.checkpoint_dir is not None:
            _checkpoint_networks(state, k + 1)

        if nets_ok or itfs_ok:
            break
        if cfg.target_error is not None and global_err <= cfg.target_error:
            break
    return trace


def _checkpoint_networks(state: RunState, iteration: int) -> None:
    from pathlib import Path

    from .mlp import save_checkpoint

    out = Path(state.config.checkpoint_dir)
    out.mkdir(parents=True, exist_ok=True)
    for sub in state.dec.subdomains:
        save_checkpoint(sub.net, out / f"iter{iteration:03d}_s{sub.id}.json",
                        adam=state.adams[sub.id])
    if state.coarse is not None:
        save_checkpoint(state.coarse.net,
                        out / f"iter{iteration:03d}_coarse.json",
                        adam=state.coarse.adam)


def run_one_level(state: RunState, probe: ErrorProbe) -> OuterTrace:
    if state.config.mode != "one_level":
        raise ValueError("state was configured for two_level")
    return run_outer(state, probe)


def run_two_level(state: RunState, probe: ErrorProbe) -> OuterTrace:
    if state.config.mode != "two_level":
        raise ValueError("state was configured for one_level")
    return run_outer(state, probe)
