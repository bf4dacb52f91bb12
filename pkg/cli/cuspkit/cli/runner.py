"""Execution of one RunConfig: numerical work, CSV output and exit-code mapping."""
import json
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import yaml
from eliot import start_action, start_task
from pydantic import BaseModel, Field, ValidationError

from cuspkit.cli.csv_io import write_csv
from cuspkit.cli.run_config import RunCommand, RunConfig
from cuspkit.cuspfn import CuspSpec, cusp_value, irregular_g, strict_cusp, wronskian_check
from cuspkit.energyseries import build_series
from cuspkit.errors import CuspkitError, NonphysicalPotential
from cuspkit.parallel import ordered_map
from cuspkit.potential import PotentialModel, classify
from cuspkit.radial import RadialGrid, solve_regular
from cuspkit.rigidity import verify_fundamental
from cuspkit.separability import (
    density_radius_estimate,
    residual_scaling_fit,
    separability_report,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONPHYSICAL = 3
EXIT_NUMERICAL = 4


class RunOutcome(BaseModel):
    """What a run produced: exit code, one-line summary, written files and the error class on failure."""
    exit_code: int = EXIT_OK
    summary: str = ""
    outputs: List[Path] = Field(default_factory=list)
    error: Optional[str] = Field(default=None, description="Error class name when the run failed")
    message: Optional[str] = None


class RunContext(BaseModel):
    config: RunConfig
    model: Optional[PotentialModel] = None
    output_dir: Path
    threads: int = 1
    seed: Optional[int] = None

    def write(self, name: str, columns: List[str], rows: List[Dict[str, Any]]) -> Path:
        return write_csv(self.output_dir / name, columns, rows, self.config.digest())

    def grid_for(self, model: PotentialModel) -> RadialGrid:
        params = self.config.grid
        return RadialGrid.for_class(classify(model), params.r_max, free_scale=params.free_scale,
                                    n_log=params.n_log, n_lin=params.n_lin)


def _classify(ctx: RunContext) -> RunOutcome:
    short_range = classify(ctx.model)
    row = {
        "tag": str(short_range.tag),
        "dominant_alpha": short_range.dominant_alpha,
        "dominant_strength": short_range.dominant_strength,
        "gamma2": short_range.gamma2,
        "beta_alpha": short_range.beta_alpha,
        "dominant_fraction": short_range.dominant_fraction,
    }
    path = ctx.write("classify.csv", list(row), [row])
    return RunOutcome(summary=str(short_range.tag), outputs=[path])


def _cusp_eval(ctx: RunContext) -> RunOutcome:
    short_range = classify(ctx.model)
    spec = CuspSpec.from_class(short_range, ctx.config.l, free_scale=ctx.config.grid.free_scale)
    rows = []
    for r in ctx.config.radii:
        with start_action(action_type="cuspkit.cusp_eval.radius", r=r):
            f = cusp_value(spec, r)
            strict = strict_cusp(spec, r)
            g = irregular_g(spec, r)
            rows.append({
                "r": r, "f_cp": f.value, "log_abs_f_cp": f.log_abs, "logderiv_f_cp": f.logderiv,
                "log_abs_F_cp": strict.log_abs, "log_abs_g_cp": g.log_abs, "wronskian": wronskian_check(spec, r),
            })
    path = ctx.write("cusp_eval.csv", list(rows[0]), rows)
    return RunOutcome(summary=f"{short_range.tag}: evaluated f_cp at {len(rows)} radii", outputs=[path])


def _require_physical(model: PotentialModel) -> None:
    short_range = classify(model)
    if not short_range.is_physical:
        raise NonphysicalPotential(f"potential class {short_range.tag} has no physical cusp solution")


def _solve(ctx: RunContext) -> RunOutcome:
    short_range = classify(ctx.model)
    grid = ctx.grid_for(ctx.model)

    def one(energy: float):
        return solve_regular(ctx.model, ctx.config.l, energy, grid=grid,
                             free_scale=ctx.config.grid.free_scale, short_range=short_range)

    solutions = ordered_map(one, ctx.config.energies, n_jobs=ctx.threads)
    rows = [{"energy": sol.energy, **row} for sol in solutions for row in sol.rows()]
    path = ctx.write("solve.csv", ["energy", "r", "u", "du", "L", "R"], rows)
    return RunOutcome(summary=f"{short_range.tag}: solved {len(solutions)} energies on {len(grid.points)} points",
                      outputs=[path])


def _rigidity_check(ctx: RunContext) -> RunOutcome:
    columns = ["energy", "r", "prob_integral", "rigidity", "dL_de", "dR_de", "residual1", "residual2", "max_residual",
               "d_eps", "d_eps_refined"]
    rows = []
    worst = 0.0
    for energy in ctx.config.energies:
        with start_action(action_type="cuspkit.rigidity_check.energy", energy=energy):
            report = verify_fundamental(ctx.model, ctx.config.l, energy, ctx.config.radii,
                                        free_scale=ctx.config.grid.free_scale, n_jobs=ctx.threads)
        worst = max(worst, report.max_residual)
        rows.extend({"energy": energy, **row.model_dump(), "max_residual": report.max_residual,
                     "d_eps": report.d_eps, "d_eps_refined": report.d_eps_refined}
                    for row in report.rows)
    path = ctx.write("rigidity_check.csv", columns, rows)
    return RunOutcome(summary=f"max relative residual {worst:.3e}", outputs=[path])


def _energy_series(ctx: RunContext) -> RunOutcome:
    params = ctx.config.grid
    series = build_series(ctx.model, ctx.config.l, grid=ctx.grid_for(ctx.model), j_max=ctx.config.j_max,
                          free_scale=params.free_scale, r_max=params.r_max)
    rows = series.rows()
    path = ctx.write("energy_series.csv", list(rows[0]), rows)
    return RunOutcome(summary=f"energy series up to j={series.j_max} on {len(rows)} radii", outputs=[path])


def _separability(ctx: RunContext) -> RunOutcome:
    params = ctx.config.separability
    report = separability_report(params.particles)
    summary_row = report.model_dump(exclude={"spectators"})
    fit = residual_scaling_fit(params.particles, params.sweep)
    summary_row.update({"slope": fit.slope, "order": fit.order, "prefactor": fit.prefactor,
                        "predicted_prefactor": fit.predicted_prefactor})
    if params.density is not None:
        estimate, exact = density_radius_estimate(params.density, params.samples, seed=ctx.seed, n_jobs=ctx.threads)
        summary_row.update({"density_radius_estimate": estimate, "density_radius": exact})
    outputs = [
        ctx.write("separability.csv", list(summary_row), [summary_row]),
        ctx.write("separability_sweep.csv", ["r", "residual"],
                  [{"r": r, "residual": res} for r, res in zip(fit.radii, fit.residuals)]),
    ]
    return RunOutcome(summary=f"residual slope {fit.slope:.4f} (order {fit.order})", outputs=outputs)


HANDLERS: Dict[RunCommand, Callable[[RunContext], RunOutcome]] = {
    RunCommand.classify: _classify,
    RunCommand.cusp_eval: _cusp_eval,
    RunCommand.solve: _solve,
    RunCommand.rigidity_check: _rigidity_check,
    RunCommand.energy_series: _energy_series,
    RunCommand.separability: _separability,
}


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, NonphysicalPotential):
        return EXIT_NONPHYSICAL
    if isinstance(error, CuspkitError):
        return EXIT_NUMERICAL
    return EXIT_INVALID


def run(config: RunConfig, output_dir: Optional[Path] = None, threads: int = 1, seed: Optional[int] = None,
        base_dir: Path = Path(".")) -> RunOutcome:
    """
    Execute a validated config and map failures onto exit codes.

    Exit codes: 0 success; 2 invalid model files or inputs; 3 nonphysical
    potential for solve-type commands; 4 numerical failure.
    """
    command = RunCommand(config.command)
    target = Path(output_dir or config.output or "results")
    with start_task(action_type=f"cuspkit.{command}", config_sha256=config.digest()) as task:
        try:
            model = config.resolve_model(base_dir) if command.needs_potential else None
            if command.is_solve_type:
                _require_physical(model)
            ctx = RunContext(config=config, model=model, output_dir=target, threads=threads,
                             seed=seed if seed is not None else config.seed)
            outcome = HANDLERS[command](ctx)
        except (CuspkitError, ValidationError, FileNotFoundError, KeyError,
                json.JSONDecodeError, yaml.YAMLError, ValueError) as e:
            task.log(message_type="cuspkit.run.failed", error=type(e).__name__, detail=str(e))
            return RunOutcome(exit_code=exit_code_for(e), error=type(e).__name__, message=str(e),
                              summary=f"{type(e).__name__}: {e}")
        task.add_success_fields(outputs=[str(p) for p in outcome.outputs])
        return outcome
