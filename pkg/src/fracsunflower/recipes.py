"""Run recipes: named, hand-editable command invocations with expected values.

Text format, one recipe per block, blocks separated by blank lines::

    name = switch_alpha03
    command = classify
    l = 3
    m = 6
    alpha = 0.3
    expect.classification = StabilitySwitch
    expect.critical_delays = 0.567501, 10.133
    rtol.critical_delays = 1e-3

Keys ``expect.F``, ``rtol.F``, ``atol.F``, ``min.F`` and ``max.F`` set the
expected value, tolerances and bounds of an observed field ``F``; every
other key is a command parameter.  ``#`` starts a comment line.  A JSON file
holding a list of ``{"name", "command", "parameters", "expected",
"tolerances", "bounds"}`` objects is accepted as well.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import chaos, solver, stability
from .bifurcation import trace_curve

COMMANDS = ("simulate", "classify", "curve", "mle", "cycles", "attractor")

# every command's parameters and defaults; the CLI reads the same table
_SIM = {
    "l": 14.0, "m": 5.6, "alpha": 0.85, "tau": 4.0,
    "history": 6.9, "x0prime": 2.5, "k": 100, "T": 400.0,
    "rhs": "sine", "scheme": "npcm", "sweeps": 1,
}
DEFAULTS = {
    "simulate": dict(_SIM),
    "classify": {"l": 14.0, "m": 5.6, "alpha": 0.85, "equilibrium": "x1", "tau": None,
                 "tmax": stability.DEFAULT_TMAX, "grid": stability.DEFAULT_GRID},
    "curve": {"alpha": 0.4, "which": "h2", "lrange": "0.5:2", "points": 8,
              "tmax": stability.DEFAULT_TMAX, "workers": 1},
    "mle": dict(_SIM, tau=20.0, T=3000.0, tail=0.5, evolve=10, threshold=0.1,
                dim=3, lag=None, theiler=None),
    "cycles": dict(_SIM, tau=8.0, k=200, T=1500.0, tail=0.5, window=16,
                   cluster_tol=None, prominence=None),
    "attractor": dict(_SIM, tau=20.0, T=1000.0, tail=1.0),
}


class RecipeError(ValueError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass
class Recipe:
    name: str
    command: str
    parameters: dict = field(default_factory=dict)
    expected: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)  # field -> {"rtol": .., "atol": ..}
    bounds: dict = field(default_factory=dict)  # field -> {"min": .., "max": ..}
    line: int = 0


@dataclass
class Check:
    field: str
    ok: bool
    observed: object
    expected: str


@dataclass
class Outcome:
    name: str
    command: str
    ok: bool
    checks: list = field(default_factory=list)
    error: Optional[str] = None
    observed: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "command": self.command,
            "ok": self.ok,
            "error": self.error,
            "checks": [c.__dict__ for c in self.checks],
            "observed": self.observed,
        }


# -- parsing --------------------------------------------------------------------

def parse_value(text: str):
    s = text.strip()
    low = s.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    if "," in s:
        return [parse_value(part) for part in s.split(",")]
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def _finish(block: dict, start: int, seen: set) -> Recipe:
    params = dict(block["params"])
    name = params.pop("name", None)
    command = params.pop("command", None)
    if name is None:
        raise RecipeError("recipe has no 'name'", start)
    if command not in COMMANDS:
        raise RecipeError(f"unknown or missing command {command!r} in recipe {name!r}", start)
    name = str(name)
    if name in seen:
        raise RecipeError(f"duplicate recipe name {name!r}", start)
    seen.add(name)
    unknown = set(params) - set(DEFAULTS[command])
    if unknown:
        raise RecipeError(f"unknown parameter(s) {sorted(unknown)} for {command}", start)
    return Recipe(name, command, params, block["expected"], block["tol"], block["bounds"], start)


def parse_text(text: str) -> list[Recipe]:
    recipes: list[Recipe] = []
    seen: set = set()
    block = None
    start = 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            if not line and block is not None:
                recipes.append(_finish(block, start, seen))
                block = None
            continue
        if "=" not in line:
            raise RecipeError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise RecipeError("empty key", lineno)
        if block is None:
            block = {"params": {}, "expected": {}, "tol": {}, "bounds": {}}
            start = lineno
        prefix, _, fname = key.partition(".")
        if fname and prefix == "expect":
            block["expected"][fname] = parse_value(value)
        elif fname and prefix in ("rtol", "atol"):
            block["tol"].setdefault(fname, {})[prefix] = float(_number(value, lineno))
        elif fname and prefix in ("min", "max"):
            block["bounds"].setdefault(fname, {})[prefix] = float(_number(value, lineno))
        elif fname:
            raise RecipeError(f"unknown key prefix {prefix!r}", lineno)
        else:
            if key in block["params"]:
                raise RecipeError(f"key {key!r} given twice", lineno)
            block["params"][key] = parse_value(value)
    if block is not None:
        recipes.append(_finish(block, start, seen))
    return recipes


def _number(value, lineno):
    v = parse_value(value)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise RecipeError(f"tolerance/bound must be a number, got {value!r}", lineno)
    return v


def parse_json(text: str) -> list[Recipe]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RecipeError(exc.msg, exc.lineno) from None
    if not isinstance(data, list):
        raise RecipeError("JSON recipe file must hold a list", 1)
    recipes: list[Recipe] = []
    seen: set = set()
    for entry in data:
        if not isinstance(entry, dict):
            raise RecipeError("each JSON recipe must be an object", 1)
        block = {
            "params": dict(entry.get("parameters", {}), name=entry.get("name"),
                           command=entry.get("command")),
            "expected": dict(entry.get("expected", {})),
            "tol": {k: dict(v) for k, v in entry.get("tolerances", {}).items()},
            "bounds": {k: dict(v) for k, v in entry.get("bounds", {}).items()},
        }
        recipes.append(_finish(block, 0, seen))
    return recipes


def parse_recipes(text: str) -> list[Recipe]:
    if text.lstrip().startswith(("[", "{")):
        return parse_json(text)
    return parse_text(text)


# -- building library objects from parameters --------------------------------------

def merged(command: str, params: dict) -> dict:
    out = dict(DEFAULTS[command])
    out.update(params)
    return out


def build_simulation(p: dict):
    params = solver.SystemParams(float(p["l"]), float(p["m"]), float(p["alpha"]), float(p["tau"]))
    init = solver.InitialData(history_value=float(p["history"]),
                              x0_prime=None if p["x0prime"] is None else float(p["x0prime"]))
    config = solver.SolverConfig(k=int(p["k"]), T=float(p["T"]), scheme=str(p["scheme"]),
                                 corrector_sweeps=int(p["sweeps"]))
    return params, init, config, solver.RhsKind.parse(p["rhs"])


def simulate(p: dict) -> solver.Trajectory:
    params, init, config, rhs = build_simulation(p)
    return solver.integrate(params, init, config, rhs)


def parse_lrange(value) -> tuple[float, float]:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return float(value[0]), float(value[1])
    parts = str(value).split(":")
    if len(parts) != 2:
        raise ValueError(f"lrange must look like 'lo:hi', got {value!r}")
    return float(parts[0]), float(parts[1])


def embedding_for(p: dict, traj) -> chaos.EmbeddingConfig:
    base = chaos.default_embedding(traj)
    return chaos.EmbeddingConfig(
        dimension=int(p["dim"]),
        lag=base.lag if p["lag"] is None else int(p["lag"]),
        theiler_window=base.theiler_window if p["theiler"] is None else int(p["theiler"]),
    )


def observe(command: str, params: dict) -> dict:
    """Run ``command`` and return its observable fields (JSON-serialisable)."""
    p = merged(command, params)
    if command == "simulate":
        traj = simulate(p)
        x = traj.x[traj.origin:]
        return {"final": float(x[-1]), "min": float(x.min()), "max": float(x.max()),
                "samples": int(len(x))}
    if command == "classify":
        if p["equilibrium"] == "x2":
            if p["tau"] is None:
                raise ValueError("classify with equilibrium x2 needs tau")
            sp = solver.SystemParams(float(p["l"]), float(p["m"]), float(p["alpha"]), float(p["tau"]))
            verdict = stability.classify_x2(sp)
        else:
            verdict = stability.classify_x1(float(p["l"]), float(p["m"]), float(p["alpha"]),
                                            t_max=float(p["tmax"]), grid_points=int(p["grid"]))
        return verdict.to_dict()
    if command == "curve":
        curve = trace_curve(float(p["alpha"]), parse_lrange(p["lrange"]), int(p["points"]),
                            which=p["which"], t_max=float(p["tmax"]), workers=int(p["workers"]))
        return {"l": curve.l.tolist(), "m": curve.m.tolist(), "gaps": list(curve.gaps)}
    if command == "mle":
        traj = simulate(p)
        part = solver.tail(traj, float(p["tail"]))
        res = chaos.mle(part, embedding_for(p, traj), evolve_steps=int(p["evolve"]),
                        replace_threshold=float(p["threshold"]),
                        transient_discarded=float(p["T"]) * (1.0 - float(p["tail"])))
        return res.to_dict()
    if command == "cycles":
        part = solver.tail(simulate(p), float(p["tail"]))
        res = chaos.count_cycles(part, cluster_tol=p["cluster_tol"], window=int(p["window"]),
                                 min_prominence=p["prominence"])
        return res.to_dict()
    if command == "attractor":
        traj = simulate(p)
        pairs = solver.delayed_pairs(solver.tail(traj, float(p["tail"])) if p["tail"] < 1 else traj)
        return {"pairs": int(len(pairs)), "x_min": float(pairs[:, 1].min()),
                "x_max": float(pairs[:, 1].max()),
                "x_range": float(pairs[:, 1].max() - pairs[:, 1].min())}
    raise ValueError(f"unknown command {command!r}")


# -- comparison -----------------------------------------------------------------

def _lookup(observed: dict, fname: str):
    """Field value; ``m@X`` interpolates a traced curve at ``l = X``."""
    if "@" in fname:
        key, at = fname.split("@", 1)
        if "l" in observed and key in observed and len(observed["l"]) >= 2:
            return float(np.interp(float(at), observed["l"], observed[key]))
        raise KeyError(fname)
    return observed[fname]


def _close(obs, exp, rtol, atol) -> bool:
    if isinstance(obs, (list, tuple)) and not isinstance(exp, (list, tuple)):
        exp = [exp]  # a one-element list field written as a scalar
    if isinstance(exp, (list, tuple)):
        return (isinstance(obs, (list, tuple)) and len(obs) == len(exp)
                and all(_close(o, e, rtol, atol) for o, e in zip(obs, exp)))
    if isinstance(exp, bool) or isinstance(exp, str) or exp is None:
        return obs == exp
    if isinstance(obs, bool) or not isinstance(obs, (int, float)):
        return False
    return math.isfinite(obs) and abs(obs - exp) <= atol + rtol * abs(exp)


def compare(recipe: Recipe, observed: dict) -> list[Check]:
    checks = []
    for fname, exp in recipe.expected.items():
        tol = recipe.tolerances.get(fname, {})
        rtol, atol = tol.get("rtol", 1e-6), tol.get("atol", 0.0)
        try:
            obs = _lookup(observed, fname)
        except KeyError:
            checks.append(Check(fname, False, None, repr(exp)))
            continue
        desc = f"{exp!r} (rtol {rtol:g}, atol {atol:g})"
        checks.append(Check(fname, _close(obs, exp, rtol, atol), obs, desc))
    for fname, b in recipe.bounds.items():
        try:
            obs = _lookup(observed, fname)
        except KeyError:
            checks.append(Check(fname, False, None, repr(b)))
            continue
        lo, hi = b.get("min", -math.inf), b.get("max", math.inf)
        ok = isinstance(obs, (int, float)) and not isinstance(obs, bool) and lo <= obs <= hi
        checks.append(Check(fname, ok, obs, f"in [{lo:g}, {hi:g}]"))
    return checks


def run_recipe(recipe: Recipe) -> Outcome:
    try:
        observed = observe(recipe.command, recipe.parameters)
    except Exception as exc:  # reported as a failed row, not a crash
        return Outcome(recipe.name, recipe.command, False, error=f"{type(exc).__name__}: {exc}")
    checks = compare(recipe, observed)
    return Outcome(recipe.name, recipe.command, all(c.ok for c in checks), checks,
                   observed=observed)


def run_all(recipes: list[Recipe], jobs: int = 1) -> list[Outcome]:
    """Run every recipe; the result is ordered by recipe name."""
    if jobs > 1 and len(recipes) > 1:
        with ProcessPoolExecutor(min(jobs, len(recipes))) as ex:
            outcomes = list(ex.map(run_recipe, recipes))
    else:
        outcomes = [run_recipe(r) for r in recipes]
    return sorted(outcomes, key=lambda o: o.name)


def format_table(outcomes: list[Outcome]) -> str:
    rows = [("recipe", "command", "result", "detail")]
    for o in outcomes:
        if o.error:
            detail = o.error
        else:
            bad = [c for c in o.checks if not c.ok]
            detail = "; ".join(f"{c.field}={c.observed!r} want {c.expected}" for c in bad) \
                or f"{len(o.checks)} checks"
        rows.append((o.name, o.command, "PASS" if o.ok else "FAIL", detail))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = ["  ".join(r[i].ljust(widths[i]) for i in range(3)) + "  " + r[3] for r in rows]
    passed = sum(o.ok for o in outcomes)
    lines.append(f"{passed}/{len(outcomes)} passed")
    return "\n".join(lines) + "\n"
