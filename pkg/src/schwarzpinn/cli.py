"""Config-driven experiment runner and result summarizer.

``schwarzpinn run config.json`` executes one named experiment over a list
of decompositions, modes and seeds, writing per-run convergence traces
(CSV + JSON), a summary table and a manifest into the output directory.
``schwarzpinn summarize`` rebuilds a summary table from saved trace JSONs.

Desk-scale defaults keep every experiment in the minutes range on a laptop
CPU.  ``--paper-scale`` switches the sampled point counts, network sizes
and training schedule to the full-size originals (expect long runtimes and
use a 4,000,000-point test grid).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, asdict
from pathlib import Path

from . import backends
from .geometry import build_decomposition
from .problems import fd_heat_solve, heat_problem, poisson_problem
from .schwarz import (BlendSchedule, OuterTrace, SolverConfig, initialize,
                      make_probe, plan_from_totals, plan_per_subdomain,
                      run_outer)
from .training import TrainConfig

EXPERIMENTS = ("strong_poisson", "weak_poisson", "coarse_influence",
               "heat_flow", "heat_strong", "single_pinn", "custom")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Fully explicit experiment description.

    Unset (None) fields are filled from the experiment's desk-scale
    defaults, or from the published full-size table when ``paper_scale``
    is set.
    Counts come in two flavors: domain totals (``n_interior`` etc.,
    distributed over the decomposition) or per-subdomain budgets
    (``n_interior_per_sub`` etc.); per-subdomain wins when both are set.
    """

    experiment: str = "custom"
    problem: str | None = None              # poisson_sin2x | poisson_sin2pix | heat
    decompositions: list | None = None      # [[nx, ny], ...]
    modes: list | None = None               # ["one_level", "two_level"]
    seeds: list | None = None
    out_dir: str = "runs"
    paper_scale: bool = False

    # sampling totals over the domain
    n_interior: int | None = None
    n_boundary: int | None = None
    n_interface: int | None = None
    # fixed per-subdomain budgets (weak scaling)
    n_interior_per_sub: int | None = None
    n_boundary_per_sub: int | None = None
    n_interface_per_sub: int | None = None
    overlap: float | None = None

    # subdomain network and training round
    fine_hidden: list | None = None         # hidden widths, e.g. [20, 20]
    batch_size: int | None = None
    stab_tol: float | None = None
    stab_window: int | None = None
    stab_mode: str | None = None            # "signed" (as published) | "abs"
    max_epochs: int | None = None
    lr0: float | None = None
    lr_decay: float | None = None

    # coarse level
    coarse_hidden: list | None = None
    n_coarse_interior: int | None = None
    n_coarse_boundary: int | None = None
    coarse_batch_size: int | None = None
    coarse_stab_tol: float | None = None
    coarse_max_epochs: int | None = None
    coarse_stab_tol_sweep: list | None = None   # coarse_influence only

    # coupling
    coarse_blend_initial: float | None = None
    coarse_blend_decay: float | None = None
    fine_penalty: float | None = None

    # outer loop and evaluation
    outer_max: int | None = None
    outer_tol: float | None = None
    error_target: float | None = None
    test_grid_points: int | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        doc = json.loads(text)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**doc)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; "
                              f"pick one of {EXPERIMENTS}")
        if self.problem is not None and self.problem not in (
                "poisson_sin2x", "poisson_sin2pix", "heat"):
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.modes is not None:
            bad = set(self.modes) - {"one_level", "two_level"}
            if bad:
                raise ConfigError(f"unknown modes {sorted(bad)}")
        if self.stab_mode is not None and self.stab_mode not in ("signed", "abs"):
            raise ConfigError("stab_mode must be 'signed' or 'abs'")
        for name in ("stab_tol", "coarse_stab_tol", "outer_tol",
                     "error_target", "lr0"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("lr_decay", "coarse_blend_decay"):
            v = getattr(self, name)
            if v is not None and not 0 < v <= 1:
                raise ConfigError(f"{name} must be in (0, 1]")
        if self.coarse_blend_initial is not None and not (
                0 <= self.coarse_blend_initial <= 1):
            raise ConfigError("coarse_blend_initial must be in [0, 1]")
        if self.decompositions is not None:
            for d in self.decompositions:
                if len(d) != 2 or min(d) < 1:
                    raise ConfigError(f"bad decomposition {d}")


_COMMON_DESK = dict(
    seeds=[0], modes=["one_level"], overlap=0.2, batch_size=64,
    stab_tol=1e-3, stab_window=20, stab_mode="signed", max_epochs=400,
    lr0=1e-2, lr_decay=0.999,
    coarse_hidden=[10], n_coarse_interior=144, n_coarse_boundary=12,
    coarse_batch_size=144, coarse_stab_tol=1e-3, coarse_max_epochs=400,
    coarse_blend_initial=0.9, coarse_blend_decay=0.8, fine_penalty=0.05,
    outer_max=30, outer_tol=1e-2, error_target=0.05, test_grid_points=10_000,
)

_DESK_DEFAULTS = {
    "single_pinn": dict(
        _COMMON_DESK, problem="poisson_sin2x", decompositions=[[1, 1]],
        n_interior=2500, n_boundary=400, n_interface=400,
        fine_hidden=[20, 20, 20], lr_decay=0.95, max_epochs=2000,
        outer_max=1),
    "strong_poisson": dict(
        _COMMON_DESK, problem="poisson_sin2x",
        decompositions=[[2, 2], [3, 3]], n_interior=1200, n_boundary=200,
        n_interface=400, fine_hidden=[20], lr_decay=0.999, max_epochs=150,
        error_target=0.10, outer_max=25),
    "weak_poisson": dict(
        _COMMON_DESK, problem="poisson_sin2pix",
        decompositions=[[3, 3], [4, 4]], modes=["one_level", "two_level"],
        n_interior_per_sub=144, n_boundary_per_sub=24, n_interface_per_sub=24,
        fine_hidden=[20, 20, 20], batch_size=36, stab_tol=1e-4,
        stab_window=50, stab_mode="abs", max_epochs=300, lr_decay=0.9995,
        outer_max=40),
    "coarse_influence": dict(
        _COMMON_DESK, problem="poisson_sin2pix", decompositions=[[4, 4]],
        modes=["two_level"], n_interior=1000, n_boundary=80, n_interface=80,
        fine_hidden=[20], coarse_stab_tol_sweep=[1e-2, 1e-3], outer_max=15,
        n_coarse_interior=200, n_coarse_boundary=10, coarse_batch_size=200),
    "heat_flow": dict(
        _COMMON_DESK, problem="heat", decompositions=[[1, 4]],
        modes=["one_level", "two_level"], overlap=0.05, n_interior=1000,
        n_boundary=200, n_interface=200, fine_hidden=[20],
        batch_size=64, stab_tol=1e-4, stab_window=50, stab_mode="abs",
        max_epochs=600, lr_decay=0.9995, n_coarse_interior=60,
        n_coarse_boundary=6, coarse_batch_size=60, coarse_max_epochs=600,
        outer_max=40, error_target=0.05),
    "heat_strong": dict(
        _COMMON_DESK, problem="heat", decompositions=[[1, 2], [1, 4]],
        modes=["one_level", "two_level"], overlap=0.05, n_interior=1000,
        n_boundary=200, n_interface=200, fine_hidden=[20],
        batch_size=64, stab_tol=1e-4, stab_window=50, stab_mode="abs",
        max_epochs=800, lr_decay=0.9995, n_coarse_interior=60,
        n_coarse_boundary=6, coarse_batch_size=60, coarse_max_epochs=800,
        outer_max=20, error_target=0.10),
    "custom": dict(_COMMON_DESK, problem="poisson_sin2x",
                   decompositions=[[2, 2]], n_interior=400, n_boundary=80,
                   n_interface=80, fine_hidden=[20]),
}

# full-size settings from the published experiment tables
_PAPER_OVERRIDES = {
    "single_pinn": dict(n_interior=2500, n_boundary=400, n_interface=400,
                        fine_hidden=[20, 20, 20], batch_size=64,
                        max_epochs=5000, lr_decay=0.95,
                        test_grid_points=4_000_000),
    "strong_poisson": dict(n_interior=2500, n_boundary=400, n_interface=400,
                           fine_hidden=[20, 20, 20], batch_size=64,
                           decompositions=[[1, 1], [2, 2], [3, 3], [4, 4]],
                           max_epochs=1000, outer_max=60,
                           error_target=0.05, test_grid_points=4_000_000),
    "weak_poisson": dict(n_interior_per_sub=144, n_boundary_per_sub=3,
                         n_interface_per_sub=3, fine_hidden=[20],
                         batch_size=64, n_coarse_interior=144,
                         n_coarse_boundary=4, coarse_batch_size=144,
                         decompositions=[[3, 3], [4, 4], [5, 5], [7, 7]],
                         max_epochs=2000, outer_max=80,
                         test_grid_points=4_000_000),
    "coarse_influence": dict(n_interior=1000, n_boundary=80, n_interface=80,
                             fine_hidden=[20], n_coarse_interior=200,
                             n_coarse_boundary=10, coarse_batch_size=200,
                             coarse_stab_tol_sweep=[1e-1, 1e-2, 1e-3],
                             max_epochs=2000, outer_max=40,
                             test_grid_points=4_000_000),
    "heat_flow": dict(n_interior=1000, n_boundary=200, n_interface=200,
                      batch_size=125, n_coarse_interior=60,
                      n_coarse_boundary=6, coarse_batch_size=60,
                      max_epochs=2000, outer_max=40, error_target=0.05,
                      test_grid_points=4_000_000),
    "heat_strong": dict(n_interior=1000, n_boundary=200, n_interface=200,
                        batch_size=125, decompositions=[[1, 2], [1, 4], [1, 8]],
                        n_coarse_interior=60, n_coarse_boundary=6,
                        coarse_batch_size=60, max_epochs=2000, outer_max=40,
                        error_target=0.05, test_grid_points=4_000_000),
    "custom": {},
}


def resolve_config(config: ExperimentConfig) -> ExperimentConfig:
    """Fill every None field from the experiment's default table."""
    config.validate()
    defaults = dict(_DESK_DEFAULTS[config.experiment])
    if config.paper_scale:
        defaults.update(_PAPER_OVERRIDES[config.experiment])
    resolved = dataclasses.replace(config)
    for name, value in defaults.items():
        if getattr(resolved, name) is None:
            setattr(resolved, name, value)
    resolved.validate()
    if resolved.n_interior is None and resolved.n_interior_per_sub is None:
        raise ConfigError("no interior point count configured")
    return resolved


def _make_problem(name: str):
    if name == "poisson_sin2x":
        return poisson_problem("sin2x")
    if name == "poisson_sin2pix":
        return poisson_problem("sin2pix")
    if name == "heat":
        return heat_problem()
    raise ConfigError(f"unknown problem {name!r}")


def _train_config(cfg: ExperimentConfig, coarse: bool) -> TrainConfig:
    absolute = cfg.stab_mode == "abs"
    if coarse:
        return TrainConfig(stab_tol=cfg.coarse_stab_tol,
                           window=cfg.stab_window,
                           max_epochs=cfg.coarse_max_epochs,
                           batch_size=cfg.coarse_batch_size,
                           lr0=cfg.lr0, lr_decay=cfg.lr_decay,
                           abs_stabilization=absolute)
    return TrainConfig(stab_tol=cfg.stab_tol, window=cfg.stab_window,
                       max_epochs=cfg.max_epochs, batch_size=cfg.batch_size,
                       lr0=cfg.lr0, lr_decay=cfg.lr_decay,
                       abs_stabilization=absolute)


def run_single(cfg: ExperimentConfig, grid, mode: str, seed: int,
               coarse_stab_tol: float | None = None,
               overlay_path=None) -> OuterTrace:
    """Execute one (decomposition, mode, seed) run and return its trace.

    ``overlay_path`` writes the sampled collocation points as a (x, y, tag)
    CSV for plotting the decomposition.
    """
    problem = _make_problem(cfg.problem)
    nx, ny = grid
    dec = build_decomposition(problem.bounds, nx, ny, cfg.overlap)
    if cfg.n_interior_per_sub is not None:
        plan = plan_per_subdomain(dec, problem, cfg.n_interior_per_sub,
                                  cfg.n_boundary_per_sub,
                                  cfg.n_interface_per_sub,
                                  cfg.n_coarse_interior,
                                  cfg.n_coarse_boundary)
    else:
        plan = plan_from_totals(dec, problem, cfg.n_interior, cfg.n_boundary,
                                cfg.n_interface, cfg.n_coarse_interior,
                                cfg.n_coarse_boundary)
    solver = SolverConfig(
        mode=mode, outer_max=cfg.outer_max, outer_tol=cfg.outer_tol,
        coarse_blend=BlendSchedule(cfg.coarse_blend_initial,
                                   cfg.coarse_blend_decay),
        fine_penalty=cfg.fine_penalty,
        fine_train=_train_config(cfg, coarse=False),
        coarse_train=_train_config(cfg, coarse=True),
        seed=seed, target_error=cfg.error_target)
    if coarse_stab_tol is not None:
        solver.coarse_train.stab_tol = coarse_stab_tol
    fine_dims = (2, *cfg.fine_hidden, 1)
    coarse_dims = (2, *cfg.coarse_hidden, 1) if mode == "two_level" else None
    state = initialize(dec, problem, plan, fine_dims, solver, coarse_dims)
    if overlay_path is not None:
        from .geometry import points_overlay_rows
        from .sampling import points_to_csv
        points_to_csv(overlay_path, points_overlay_rows(dec))
    reference = None
    if problem.analytic is None:
        reference = fd_heat_solve(problem, nx=100, nt=240).interp
    probe = make_probe(dec, problem, cfg.test_grid_points, reference)
    trace = run_outer(state, probe)
    trace.meta.update({
        "experiment": cfg.experiment, "decomposition": [nx, ny],
        "error_target": cfg.error_target,
        "coarse_stab_tol": coarse_stab_tol if coarse_stab_tol is not None
        else cfg.coarse_stab_tol,
    })
    return trace


def emit_summary(traces: list[OuterTrace], target: float) -> list[dict]:
    """One row per trace: first iteration at or below target, final error,
    total training epochs, wall time."""
    rows = []
    for trace in traces:
        it = trace.iterations_to(target)
        total_epochs = sum(sum(r.epochs) + r.coarse_epochs for r in trace.rows)
        rows.append({
            "experiment": trace.meta.get("experiment", ""),
            "problem": trace.meta.get("problem", ""),
            "decomposition": "x".join(map(str, trace.meta.get("grid", []))),
            "mode": trace.meta.get("mode", ""),
            "seed": trace.meta.get("seed", ""),
            "iterations_to_target": it if it is not None else "not_reached",
            "target": target,
            "final_error": trace.rows[-1].global_error if trace.rows else "",
            "iterations_run": len(trace.rows),
            "total_epochs": total_epochs,
            "wall_time": round(sum(r.wall_time for r in trace.rows), 3),
        })
    return rows


def write_summary_csv(rows: list[dict], path) -> None:
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)


def run_experiment(config: ExperimentConfig) -> Path:
    """Run every (decomposition, mode, seed) combination of the experiment.

    Returns the output directory.  A failed run is recorded in the manifest
    with its error; completed artifacts stay on disk.
    """
    cfg = resolve_config(config)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sweeps = (cfg.coarse_stab_tol_sweep
              if cfg.experiment == "coarse_influence"
              and cfg.coarse_stab_tol_sweep else [None])
    manifest = {"config": asdict(cfg), "backend": backends.BACKEND,
                "runs": [], "status": "ok"}
    traces = []
    problem = _make_problem(cfg.problem)
    for grid in cfg.decompositions:
        from .geometry import decomposition_to_json
        try:
            layout = build_decomposition(problem.bounds, grid[0], grid[1],
                                         cfg.overlap)
            decomposition_to_json(
                layout, out / f"decomposition_{grid[0]}x{grid[1]}.json")
        except ValueError:
            pass    # the per-run loop records the failure below
        for mode in cfg.modes:
            for seed in cfg.seeds:
                for ctol in sweeps:
                    label = (f"{cfg.experiment}_{cfg.problem}"
                             f"_{grid[0]}x{grid[1]}_{mode}_s{seed}")
                    if ctol is not None:
                        label += f"_ctol{ctol:g}"
                    entry = {"label": label, "decomposition": list(grid),
                             "mode": mode, "seed": seed}
                    overlay = (out / f"points_{grid[0]}x{grid[1]}_s{seed}.csv"
                               if mode == cfg.modes[0] and ctol == sweeps[0]
                               else None)
                    try:
                        t0 = time.perf_counter()
                        trace = run_single(cfg, grid, mode, seed, ctol,
                                           overlay_path=overlay)
                        trace.to_csv(out / f"trace_{label}.csv")
                        trace.to_json(out / f"trace_{label}.json")
                        traces.append(trace)
                        entry["status"] = "ok"
                        entry["wall_time"] = round(
                            time.perf_counter() - t0, 3)
                        entry["trace_csv"] = f"trace_{label}.csv"
                    except Exception as exc:   # record and keep going
                        entry["status"] = "failed"
                        entry["error"] = f"{type(exc).__name__}: {exc}"
                        manifest["status"] = "partial_failure"
                    manifest["runs"].append(entry)
    rows = emit_summary(traces, cfg.error_target)
    write_summary_csv(rows, out / "summary.csv")
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return out


def _load_traces(paths) -> list[OuterTrace]:
    from .schwarz import OuterRow
    traces = []
    for p in paths:
        doc = json.loads(Path(p).read_text())
        trace = OuterTrace(meta=doc["meta"])
        for r in doc["rows"]:
            r.pop("final_losses", None)
            trace.rows.append(OuterRow(final_losses=[], **r))
        traces.append(trace)
    return traces


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="schwarzpinn",
        description="Schwarz-PINN experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="JSON config file")
    p_run.add_argument("--paper-scale", action="store_true",
                       help="use full-size published settings")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--seed", type=int, default=None,
                       help="single seed override")

    p_sum = sub.add_parser("summarize", help="summarize saved trace JSONs")
    p_sum.add_argument("traces", nargs="+", help="trace .json files")
    p_sum.add_argument("--target", type=float, default=0.05)
    p_sum.add_argument("--out", default=None, help="write CSV here")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = ExperimentConfig.from_json(Path(args.config).read_text())
            if args.paper_scale:
                config.paper_scale = True
            if args.out is not None:
                config.out_dir = args.out
            if args.seed is not None:
                config.seeds = [args.seed]
            out = run_experiment(config)
            manifest = json.loads((out / "manifest.json").read_text())
            print(f"artifacts written to {out}")
            for entry in manifest["runs"]:
                print(f"  {entry['label']}: {entry['status']}")
            return 0 if manifest["status"] == "ok" else 1
        if args.command == "summarize":
            rows = emit_summary(_load_traces(args.traces), args.target)
            if args.out:
                write_summary_csv(rows, args.out)
            for row in rows:
                print(f"{row['decomposition']:>6} {row['mode']:<10} "
                      f"seed={row['seed']} -> "
                      f"iterations_to_target={row['iterations_to_target']} "
                      f"final_error={row['final_error']:.4g}")
            return 0
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr, indent=0)
        sys.stderr.write("\n")
        return 2
    except Exception as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr, indent=0)
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
