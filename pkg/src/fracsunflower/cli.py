"""Command-line front end.

Exit codes: 0 ok, 1 regression failure, 2 divergence, 3 insufficient data,
64 usage error, 65 parameter outside its domain.

Output files go to ``--out``; relative paths (and the automatic file name
used when ``--out`` is omitted) resolve against ``$FRACSUNFLOWER_OUT`` when
that is set, otherwise the primary output is written to standard output.
"""

from __future__ import annotations

import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

import click

from . import __version__, chaos, recipes, solver, stability
from .bifurcation import BracketError, trace_curve

EXIT_OK = 0
EXIT_REGRESSION = 1
EXIT_DIVERGED = 2
EXIT_INSUFFICIENT = 3
EXIT_USAGE = 64
EXIT_DOMAIN = 65

OUT_ENV = "FRACSUNFLOWER_OUT"


class DomainError(Exception):
    def __init__(self, flag: str, message: str):
        super().__init__(f"--{flag}: {message}")
        self.flag = flag


class CommandExit(Exception):
    def __init__(self, code: int, message: str = ""):
        super().__init__(message)
        self.code = code


# -- helpers --------------------------------------------------------------------

def _positive(p: dict, *names):
    for name in names:
        v = p.get(name)
        if v is not None and not (math.isfinite(v) and v > 0):
            raise DomainError(name.replace("_", "-"), f"must be positive, got {v!r}")


def _order(p: dict):
    a = p.get("alpha")
    if a is not None and not (0.0 < a <= 1.0):
        raise DomainError("alpha", f"must lie in (0, 1], got {a!r}")


def _fraction(p: dict, name: str):
    v = p[name]
    if not 0.0 < v <= 1.0:
        raise DomainError(name, f"must lie in (0, 1], got {v!r}")


def _check_sim(p: dict):
    _positive(p, "l", "m", "tau", "T", "k", "sweeps")
    _order(p)
    if p["alpha"] >= 0.5 and p["x0prime"] is None:
        raise DomainError("x0prime", "is required when alpha >= 0.5")
    for name in ("history", "x0prime"):
        v = p[name]
        if v is not None and not math.isfinite(v):
            raise DomainError(name, f"must be finite, got {v!r}")


def _settings_line(command: str, p: dict) -> str:
    return "# " + json.dumps({"tool": f"fracsunflower {__version__}", "command": command,
                              "settings": p}, sort_keys=True)


def _resolve(out, default_name):
    base = os.environ.get(OUT_ENV)
    if out is None:
        if not base:
            return None
        out = default_name
    path = Path(out)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _emit(text: str, out, default_name: str):
    path = _resolve(out, default_name)
    if path is None:
        click.echo(text, nl=False)
    else:
        path.write_text(text)
        click.echo(f"wrote {path}", err=True)


def _auto_name(command: str, p: dict, ext: str) -> str:
    keys = [k for k in ("l", "m", "alpha", "tau") if p.get(k) is not None]
    return command + "_" + "_".join(f"{k}{p[k]:g}" for k in keys) + ext


def _simulate(command: str, p: dict) -> solver.Trajectory:
    _check_sim(p)
    try:
        return recipes.simulate(p)
    except solver.DivergenceError as exc:
        click.echo(f"diverged at step {exc.step} (t = {exc.step * exc.trajectory.h:.6g})", err=True)
        raise


# -- shared options -----------------------------------------------------------------

def _sim_options(command: str):
    d = recipes.DEFAULTS[command]
    opts = [
        click.option("--l", type=float, default=d["l"], show_default=True,
                     help="Coefficient l (dimensionless, > 0)."),
        click.option("--m", type=float, default=d["m"], show_default=True,
                     help="Coefficient m (dimensionless, > 0)."),
        click.option("--alpha", type=float, default=d["alpha"], show_default=True,
                     help="Fractional order in (0, 1]."),
        click.option("--tau", type=float, default=d["tau"], show_default=True,
                     help="Delay (time units, > 0)."),
        click.option("--history", type=float, default=d["history"], show_default=True,
                     help="Constant initial function on [-tau, 0] (radians)."),
        click.option("--x0prime", type=float, default=d["x0prime"], show_default=True,
                     help="Initial slope x'(0) (radians per time unit); used when alpha >= 0.5."),
        click.option("--k", type=int, default=d["k"], show_default=True,
                     help="Steps per delay; step size h = tau / k."),
        click.option("--T", "T", type=float, default=d["T"], show_default=True,
                     help="Final time (time units)."),
        click.option("--rhs", type=click.Choice(["sine", "linear-x1", "linear-x2"]),
                     default=d["rhs"], show_default=True,
                     help="Right-hand side: the sine model or its linearisation at 2n pi / (2n+1) pi."),
        click.option("--scheme", type=click.Choice(["npcm", "exact"]), default=d["scheme"],
                     show_default=True,
                     help="Corrector: 'npcm' one decomposition correction, 'exact' solves the step equation."),
        click.option("--sweeps", type=int, default=d["sweeps"], show_default=True,
                     help="Corrector sweeps per step (npcm only)."),
    ]

    def wrap(fn):
        for opt in reversed(opts):
            fn = opt(fn)
        return fn
    return wrap


def _out_option(what: str):
    return click.option("--out", type=click.Path(dir_okay=False), default=None,
                        help=f"{what} file (default: standard output, or an automatic name under ${OUT_ENV}).")


# -- commands -----------------------------------------------------------------------

@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="fracsunflower")
def cli():
    """Fractional-order sunflower equation: simulation, stability and chaos."""


@cli.command()
@_sim_options("simulate")
@_out_option("Trajectory CSV")
def simulate(out, **p):
    """Integrate the model and write a t,x CSV."""
    try:
        traj = _simulate("simulate", p)
    except solver.DivergenceError as exc:
        _emit(_settings_line("simulate", p) + "\n" + exc.trajectory.to_csv(), out,
              _auto_name("simulate", p, ".csv"))
        raise CommandExit(EXIT_DIVERGED)
    _emit(_settings_line("simulate", p) + "\n" + traj.to_csv(), out,
          _auto_name("simulate", p, ".csv"))


@cli.command()
@click.option("--l", type=float, required=True, help="Coefficient l (dimensionless, > 0).")
@click.option("--m", type=float, required=True, help="Coefficient m (dimensionless, > 0).")
@click.option("--alpha", type=float, required=True, help="Fractional order in (0, 1].")
@click.option("--equilibrium", type=click.Choice(["x1", "x2"]), default="x1", show_default=True,
              help="x1 = 2n pi, x2 = (2n+1) pi.")
@click.option("--tau", type=float, default=None,
              help="Delay (time units); required for x2, where the witness root depends on it.")
@click.option("--tmax", type=float, default=stability.DEFAULT_TMAX, show_default=True,
              help="Largest delay scanned for x1 (time units).")
@click.option("--grid", type=int, default=stability.DEFAULT_GRID, show_default=True,
              help="Uniform scan points on (0, tmax].")
@click.option("--dump-curve", type=click.Path(dir_okay=False), default=None,
              help="Also write the g(tau) curve as tau,g_tau CSV.")
@_out_option("Verdict JSON")
def classify(out, dump_curve, **p):
    """Classify the stability of an equilibrium and print a JSON verdict."""
    _positive(p, "l", "m", "tmax", "grid")
    _order(p)
    if p["equilibrium"] == "x2":
        if p["tau"] is None:
            raise click.UsageError("--tau is required with --equilibrium x2")
        _positive(p, "tau")
        verdict = stability.classify_x2(solver.SystemParams(p["l"], p["m"], p["alpha"], p["tau"]))
    else:
        if p["grid"] < 1000:
            raise DomainError("grid", "must be >= 1000")
        verdict = stability.classify_x1(p["l"], p["m"], p["alpha"], t_max=p["tmax"],
                                        grid_points=p["grid"])
    body = dict(verdict.to_dict(), tool=f"fracsunflower {__version__}", settings=p)
    text = json.dumps(body, indent=2, sort_keys=True) + "\n"
    click.echo(text, nl=False)
    path = _resolve(out, _auto_name("classify", p, ".json")) if out else None
    if path is not None:
        path.write_text(text)
    if dump_curve:
        path = _resolve(dump_curve, dump_curve)
        path.write_text(_settings_line("classify", p) + "\n"
                        + stability.curve_csv(p["l"], p["m"], p["alpha"], p["tmax"]))


@cli.command()
@click.option("--alpha", type=float, default=recipes.DEFAULTS["curve"]["alpha"], show_default=True,
              help="Fractional order, below 1/2.")
@click.option("--which", type=click.Choice(["h1", "h2"]), default="h2", show_default=True,
              help="h2: tangency (stable-for-all / switch); h1: escape (switch / single region).")
@click.option("--lrange", default=recipes.DEFAULTS["curve"]["lrange"], show_default=True,
              help="Range of l as lo:hi (dimensionless).")
@click.option("--points", type=int, default=8, show_default=True, help="Number of l samples.")
@click.option("--tmax", type=float, default=stability.DEFAULT_TMAX, show_default=True,
              help="Delay scan horizon (time units); h1 depends on it.")
@click.option("--workers", type=int, default=1, show_default=True,
              help="Processes; > 1 computes every point independently.")
@_out_option("Curve CSV")
def curve(out, **p):
    """Trace a regime boundary m = h(l) in the parameter plane."""
    _order(p)
    _positive(p, "tmax", "points", "workers")
    try:
        lo, hi = recipes.parse_lrange(p["lrange"])
    except ValueError as exc:
        raise click.UsageError(str(exc))
    if not 0 < lo < hi:
        raise DomainError("lrange", "must satisfy 0 < lo < hi")
    if p["alpha"] >= 0.5:
        raise DomainError("alpha", "curves exist only for alpha < 1/2")
    if p["which"] == "h1" and p["alpha"] < 0.4:
        raise DomainError("alpha", "h1 is traced only for 0.4 <= alpha < 1/2")
    if p["points"] < 2:
        raise DomainError("points", "must be >= 2")
    c = trace_curve(p["alpha"], (lo, hi), p["points"], which=p["which"], t_max=p["tmax"],
                    workers=p["workers"])
    _emit(_settings_line("curve", p) + "\n" + c.to_csv(), out,
          f"curve_{p['which']}_alpha{p['alpha']:g}.csv")


@cli.command("mle")
@_sim_options("mle")
@click.option("--tail", type=float, default=0.5, show_default=True,
              help="Fraction of the run (at the end) that is analysed.")
@click.option("--evolve", type=int, default=10, show_default=True,
              help="Evolution steps between neighbour checks (samples).")
@click.option("--threshold", type=float, default=0.1, show_default=True,
              help="Replacement distance as a fraction of the attractor extent.")
@click.option("--dim", type=int, default=3, show_default=True, help="Embedding dimension.")
@click.option("--lag", type=int, default=None, help="Embedding lag in samples [default: k/4].")
@click.option("--theiler", type=int, default=None, help="Theiler window in samples [default: k].")
@_out_option("Result JSON")
def mle_cmd(out, **p):
    """Largest Lyapunov exponent (per time unit) of the trajectory tail."""
    _fraction(p, "tail")
    _positive(p, "evolve", "threshold", "dim", "lag")
    if p["dim"] < 2:
        raise DomainError("dim", "must be >= 2")
    traj = _simulate("mle", p)
    part = solver.tail(traj, p["tail"])
    res = chaos.mle(part, recipes.embedding_for(p, traj), evolve_steps=p["evolve"],
                    replace_threshold=p["threshold"], transient_discarded=p["T"] * (1 - p["tail"]))
    body = dict(res.to_dict(), tool=f"fracsunflower {__version__}", settings=p)
    _emit(json.dumps(body, indent=2, sort_keys=True) + "\n", out, _auto_name("mle", p, ".json"))


@cli.command()
@_sim_options("cycles")
@click.option("--tail", type=float, default=0.5, show_default=True,
              help="Fraction of the run (at the end) that is analysed.")
@click.option("--window", type=int, default=16, show_default=True, help="Most recent maxima clustered.")
@click.option("--cluster-tol", type=float, default=None,
              help="Peak clustering gap (radians) [default: 1% of the tail's range].")
@click.option("--prominence", type=float, default=None,
              help="Minimum peak prominence (radians) [default: 10% of the tail's range].")
@_out_option("Result JSON")
def cycles(out, **p):
    """Multiplicity of the asymptotic n-cycle, or Aperiodic."""
    _fraction(p, "tail")
    _positive(p, "window", "cluster_tol", "prominence")
    part = solver.tail(_simulate("cycles", p), p["tail"])
    res = chaos.count_cycles(part, cluster_tol=p["cluster_tol"], window=p["window"],
                             min_prominence=p["prominence"])
    body = dict(res.to_dict(), tool=f"fracsunflower {__version__}", settings=p)
    _emit(json.dumps(body, indent=2, sort_keys=True) + "\n", out, _auto_name("cycles", p, ".json"))


@cli.command()
@_sim_options("attractor")
@click.option("--tail", type=float, default=1.0, show_default=True,
              help="Fraction of the run (at the end) that is kept.")
@_out_option("Pairs CSV")
def attractor(out, **p):
    """Delay-coordinate pairs (x(t - tau), x(t)) for plotting the attractor."""
    _fraction(p, "tail")
    traj = _simulate("attractor", p)
    part = solver.tail(traj, p["tail"]) if p["tail"] < 1 else traj
    try:
        pairs = solver.delayed_pairs(part)
    except ValueError as exc:
        raise chaos.InsufficientDataError(str(exc))
    _emit(_settings_line("attractor", p) + "\n" + solver.pairs_to_csv(pairs, traj.header()), out,
          _auto_name("attractor", p, ".csv"))


def _read_recipe_source(source: str) -> str:
    path = Path(source)
    if path.exists():
        return path.read_text()
    shipped = resources.files("fracsunflower") / "recipe_sets" / f"{source}.txt"
    if shipped.is_file():
        return shipped.read_text()
    raise click.UsageError(f"no recipe file {source!r} (and no shipped recipe set of that name)")


@cli.command()
@click.argument("recipe_file")
@click.option("--jobs", type=int, default=1, show_default=True, help="Recipes run in parallel.")
@_out_option("Report JSON")
def reproduce(recipe_file, jobs, out):
    """Run a recipe file (or a shipped set such as 'paper_examples') and compare results."""
    if jobs < 1:
        raise DomainError("jobs", "must be >= 1")
    try:
        items = recipes.parse_recipes(_read_recipe_source(recipe_file))
    except recipes.RecipeError as exc:
        raise CommandExit(EXIT_USAGE, f"malformed recipe file {recipe_file}: {exc}")
    outcomes = recipes.run_all(items, jobs=jobs)
    click.echo(recipes.format_table(outcomes), nl=False)
    if out:
        report = {"tool": f"fracsunflower {__version__}", "recipes": recipe_file,
                  "results": [o.to_dict() for o in outcomes]}
        _resolve(out, out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if not all(o.ok for o in outcomes):
        raise CommandExit(EXIT_REGRESSION)


# -- entry point ------------------------------------------------------------------

def main(argv=None) -> int:
    """Run the CLI and return the exit code (also used as the console script)."""
    try:
        rv = cli.main(args=argv, prog_name="fracsunflower", standalone_mode=False)
        code = rv if isinstance(rv, int) else EXIT_OK
    except click.exceptions.Exit as exc:
        code = exc.exit_code
    except click.UsageError as exc:
        exc.show()
        code = EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        code = EXIT_USAGE
    except click.Abort:
        click.echo("aborted", err=True)
        code = EXIT_USAGE
    except CommandExit as exc:
        if str(exc):
            click.echo(str(exc), err=True)
        code = exc.code
    except DomainError as exc:
        click.echo(f"error: {exc}", err=True)
        code = EXIT_DOMAIN
    except solver.DivergenceError:
        code = EXIT_DIVERGED
    except chaos.InsufficientDataError as exc:
        click.echo(f"insufficient data: {exc}", err=True)
        code = EXIT_INSUFFICIENT
    except (ValueError, ArithmeticError, BracketError) as exc:
        click.echo(f"error: {exc}", err=True)
        code = EXIT_DOMAIN
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
