"""Problem-file parsing, trace CSV, and report serialization.

Problem files are JSON.  Validation is strict: unknown keys are rejected,
every seed must be explicit, and all errors are collected with their
path, what was expected, and what was found before anything is built.
Floats serialize with 17 significant digits, which round-trips IEEE
doubles bit-exactly.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .engine import (
    LinearObjective,
    PerturbationSchedule,
    QuadraticObjective,
    RunConfig,
    SteeringSpec,
    Trace,
    WeightedL1Objective,
)
from .exceptions import ProblemFileError
from .problem import Problem
from .sets import AffineSubspace, Ball, Box, ConvexSet, HalfSpace, Hyperplane, LinearSubspace
from .strings import ControlSchedule, StringPlan

TRACE_HEADER = ["k", "max_residual", "step_norm", "e_k", "beta_v", "phi"]

CHECK_NAMES = ("fejer", "error_band", "perturbed_band", "weak_rate", "angle", "kappa")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# Validation helpers: collect messages, never raise until the end.


class _Val:
    def __init__(self):
        self.errors: list[str] = []

    def fail(self, path: str, expected: str, found) -> None:
        self.errors.append(f"at {path}: expected {expected}, found {found!r}")

    def obj(self, value, path, required, optional) -> dict | None:
        if not isinstance(value, dict):
            self.fail(path, "an object", value)
            return None
        allowed = set(required) | set(optional)
        for key in value:
            if key not in allowed:
                self.fail(f"{path}.{key}", "a known key", key)
        for key in required:
            if key not in value:
                self.fail(f"{path}.{key}", "a value (required key missing)", None)
        return value

    def num(self, value, path, nonneg=False, positive=False) -> float | None:
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not math.isfinite(value):
            self.fail(path, "a finite number", value)
            return None
        v = float(value)
        if nonneg and v < 0:
            self.fail(path, "a nonnegative number", value)
            return None
        if positive and v <= 0:
            self.fail(path, "a positive number", value)
            return None
        return v

    def integer(self, value, path, minimum=None) -> int | None:
        if not isinstance(value, int) or isinstance(value, bool):
            self.fail(path, "an integer", value)
            return None
        if minimum is not None and value < minimum:
            self.fail(path, f"an integer >= {minimum}", value)
            return None
        return value

    def vec(self, value, path, dim=None) -> list[float] | None:
        if not isinstance(value, list) or not value:
            self.fail(path, "a nonempty array of numbers", value)
            return None
        out = []
        for i, v in enumerate(value):
            n = self.num(v, f"{path}[{i}]")
            if n is None:
                return None
            out.append(n)
        if dim is not None and len(out) != dim:
            self.fail(path, f"a vector of dimension {dim}", f"dimension {len(out)}")
            return None
        return out

    def string(self, value, path, choices=None) -> str | None:
        if not isinstance(value, str):
            self.fail(path, "a string", value)
            return None
        if choices is not None and value not in choices:
            self.fail(path, f"one of {sorted(choices)}", value)
            return None
        return value

    def boolean(self, value, path) -> bool | None:
        if not isinstance(value, bool):
            self.fail(path, "a boolean", value)
            return None
        return value


# ---------------------------------------------------------------------------
# Set descriptors <-> dicts


def set_from_dict(d: dict) -> ConvexSet:
    kind = d["type"]
    if kind == "halfspace":
        return HalfSpace(normal=np.array(d["normal"], float), offset=d["offset"])
    if kind == "hyperplane":
        return Hyperplane(normal=np.array(d["normal"], float), offset=d["offset"])
    if kind == "box":
        return Box(lower=np.array(d["lower"], float), upper=np.array(d["upper"], float))
    if kind == "ball":
        return Ball(center=np.array(d["center"], float), radius=d["radius"])
    if kind == "affine":
        return AffineSubspace(basis=[np.array(v, float) for v in d["basis"]],
                              anchor=np.array(d["anchor"], float))
    if kind == "subspace":
        return LinearSubspace(basis=[np.array(v, float) for v in d["basis"]])
    raise ProblemFileError([f"at sets: unknown set type {kind!r}"])


def set_to_dict(s: ConvexSet) -> dict:
    if isinstance(s, HalfSpace):
        return {"type": "halfspace", "normal": s.normal.tolist(), "offset": s.offset}
    if isinstance(s, Hyperplane):
        return {"type": "hyperplane", "normal": s.normal.tolist(), "offset": s.offset}
    if isinstance(s, Box):
        return {"type": "box", "lower": s.lower.tolist(), "upper": s.upper.tolist()}
    if isinstance(s, Ball):
        return {"type": "ball", "center": s.center.tolist(), "radius": s.radius}
    if isinstance(s, LinearSubspace):
        return {"type": "subspace", "basis": s.basis.T.tolist()}
    if isinstance(s, AffineSubspace):
        return {"type": "affine", "basis": s.basis.T.tolist(), "anchor": s.anchor.tolist()}
    raise TypeError(f"unknown set class {type(s).__name__}")


_SET_FIELDS = {
    "halfspace": (("normal", "vec"), ("offset", "num")),
    "hyperplane": (("normal", "vec"), ("offset", "num")),
    "box": (("lower", "vec"), ("upper", "vec")),
    "ball": (("center", "vec"), ("radius", "nonneg")),
    "affine": (("basis", "mat"), ("anchor", "vec")),
    "subspace": (("basis", "mat"),),
}


def _validate_set(v: _Val, d, path: str, dim: int) -> dict | None:
    if not isinstance(d, dict) or "type" not in d:
        v.fail(path, "an object with a 'type' key", d)
        return None
    kind = v.string(d["type"], f"{path}.type", choices=set(_SET_FIELDS))
    if kind is None:
        return None
    fields = _SET_FIELDS[kind]
    v.obj(d, path, required=["type"] + [f for f, _ in fields], optional=[])
    out = {"type": kind}
    for name, ftype in fields:
        if name not in d:
            continue
        val = d[name]
        p = f"{path}.{name}"
        if ftype == "vec":
            out[name] = v.vec(val, p, dim=dim)
        elif ftype == "num":
            out[name] = v.num(val, p)
        elif ftype == "nonneg":
            out[name] = v.num(val, p, nonneg=True)
        elif ftype == "mat":
            if not isinstance(val, list) or not val:
                v.fail(p, "a nonempty array of vectors", val)
                out[name] = None
            else:
                out[name] = [v.vec(row, f"{p}[{i}]", dim=dim) for i, row in enumerate(val)]
    if any(x is None or (isinstance(x, list) and None in x) for x in out.values()):
        return None
    return out


# ---------------------------------------------------------------------------


@dataclass(eq=True)
class ProblemFile:
    """Validated, normalized problem-file contents (plain data only)."""

    version: int
    dimension: int
    sets: list = field(default_factory=list)
    witness: list | None = None
    schedule: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)
    perturbation: dict | None = None
    steering: dict | None = None
    analysis: dict | None = None

    # -- live object builders ------------------------------------------------

    def build_problem(self) -> Problem:
        sets = tuple(set_from_dict(d) for d in self.sets)
        w = np.array(self.witness, float) if self.witness is not None else None
        return Problem(sets=sets, witness=w)

    def build_schedule(self, seed_override: int | None = None) -> ControlSchedule:
        sc = self.schedule
        plans = tuple(
            StringPlan(strings=tuple(tuple(s) for s in p["strings"]),
                       weights=np.array(p["weights"], float))
            for p in sc["plans"]
        )
        seed = sc.get("seed")
        if seed_override is not None and seed is not None:
            seed = seed_override
        return ControlSchedule(
            kind=sc["kind"],
            plans=plans,
            declared_s=sc["s"],
            declared_omega_min=sc["omega_min"],
            declared_m=sc["max_string_length"],
            seed=seed,
        )

    def build_config(self) -> RunConfig:
        r = self.run
        return RunConfig(
            mode=r["mode"],
            x0=np.array(r["x0"], float),
            max_iter=r["max_iter"],
            stop_residual=r["stop_residual"],
            record_every=r["record_every"],
        )

    def build_perturbation(self, seed_override: int | None = None) -> PerturbationSchedule | None:
        if self.perturbation is None or self.perturbation["kind"] == "none":
            return PerturbationSchedule.none() if self.perturbation else None
        p = self.perturbation
        d = p["direction"]
        seed = d.get("seed", 0)
        if seed_override is not None and "seed" in d:
            seed = seed_override
        fixed = np.array(d["vector"], float) if d["kind"] == "fixed" else None
        if p["kind"] == "geometric":
            return PerturbationSchedule(kind="geometric", e0=p["e0"], ratio=p["ratio"],
                                        seed=seed, fixed_direction=fixed,
                                        direction_kind=d["kind"])
        return PerturbationSchedule(kind="explicit", values=tuple(p["values"]),
                                    seed=seed, fixed_direction=fixed,
                                    direction_kind=d["kind"])

    def build_steering(self) -> SteeringSpec | None:
        if self.steering is None:
            return None
        st = self.steering
        ob = st["objective"]
        if ob["kind"] == "quadratic":
            objective = QuadraticObjective(target=np.array(ob["target"], float))
        elif ob["kind"] == "weighted_l1":
            objective = WeightedL1Objective(weights=np.array(ob["weights"], float),
                                            target=np.array(ob["target"], float))
        else:
            objective = LinearObjective(cost=np.array(ob["cost"], float))
        return SteeringSpec(objective=objective, beta0=st["beta0"], ratio=st["ratio"],
                            normalize=st["normalize"], bound=st["bound"])

    def to_dict(self) -> dict:
        out = {
            "version": self.version,
            "dimension": self.dimension,
            "sets": self.sets,
            "schedule": self.schedule,
            "run": self.run,
        }
        if self.witness is not None:
            out["witness"] = self.witness
        if self.perturbation is not None:
            out["perturbation"] = self.perturbation
        if self.steering is not None:
            out["steering"] = self.steering
        if self.analysis is not None:
            out["analysis"] = self.analysis
        return out


def serialize_problem_file(pf: ProblemFile) -> str:
    return json.dumps(pf.to_dict(), indent=2, sort_keys=True) + "\n"


def parse_problem(source: str) -> ProblemFile:
    """Parse and validate problem-file text (or a path to it).

    Raises ProblemFileError carrying every schema and semantic violation
    found; nothing is built unless validation is clean.
    """
    text = source
    if "\n" not in source and source.strip().endswith(".json"):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(
            [f"at line {exc.lineno}, column {exc.colno}: invalid JSON: {exc.msg}"]
        ) from None

    v = _Val()
    top = v.obj(raw, "$", required=["version", "dimension", "sets", "schedule", "run"],
                optional=["witness", "perturbation", "steering", "analysis"])
    if top is None:
        raise ProblemFileError(v.errors)

    version = v.integer(raw.get("version"), "$.version", minimum=1)
    if version is not None and version != 1:
        v.fail("$.version", "version 1", version)
    dim = v.integer(raw.get("dimension"), "$.dimension", minimum=1)

    sets = []
    if not isinstance(raw.get("sets"), list) or not raw.get("sets"):
        v.fail("$.sets", "a nonempty array of set descriptors", raw.get("sets"))
    elif dim is not None:
        for i, d in enumerate(raw["sets"]):
            sd = _validate_set(v, d, f"$.sets[{i}]", dim)
            if sd is not None:
                sets.append(sd)
    M = len(raw.get("sets") or [])

    witness = None
    if "witness" in raw and dim is not None:
        witness = v.vec(raw["witness"], "$.witness", dim=dim)

    schedule = _parse_schedule(v, raw.get("schedule"), M)
    run = _parse_run(v, raw.get("run"), dim)
    pert = _parse_perturbation(v, raw.get("perturbation"), dim) if "perturbation" in raw else None
    steering = _parse_steering(v, raw.get("steering"), dim) if "steering" in raw else None
    analysis = _parse_analysis(v, raw.get("analysis"), dim) if "analysis" in raw else None

    _semantic_checks(v, run, pert, steering, analysis, sets)

    if v.errors:
        raise ProblemFileError(v.errors)
    return ProblemFile(version=version, dimension=dim, sets=sets, witness=witness,
                       schedule=schedule, run=run, perturbation=pert,
                       steering=steering, analysis=analysis)


def _parse_schedule(v: _Val, sc, M: int) -> dict:
    out = {}
    o = v.obj(sc, "$.schedule", required=["kind", "plans", "s", "omega_min", "max_string_length"],
              optional=["seed"])
    if o is None:
        return out
    kind = v.string(sc.get("kind"), "$.schedule.kind", choices={"fixed", "cyclic", "random"})
    out["kind"] = kind
    plans = []
    if not isinstance(sc.get("plans"), list) or not sc["plans"]:
        v.fail("$.schedule.plans", "a nonempty array of plans", sc.get("plans"))
    else:
        for i, p in enumerate(sc["plans"]):
            path = f"$.schedule.plans[{i}]"
            po = v.obj(p, path, required=["strings", "weights"], optional=[])
            if po is None:
                continue
            strings = []
            if not isinstance(p.get("strings"), list) or not p["strings"]:
                v.fail(f"{path}.strings", "a nonempty array of index strings", p.get("strings"))
            else:
                for j, s in enumerate(p["strings"]):
                    if not isinstance(s, list) or not s:
                        v.fail(f"{path}.strings[{j}]", "a nonempty array of set indices", s)
                        continue
                    idx = [v.integer(val, f"{path}.strings[{j}][{t}]", minimum=1)
                           for t, val in enumerate(s)]
                    if None not in idx:
                        for t, val in enumerate(idx):
                            if val > M:
                                v.fail(f"{path}.strings[{j}][{t}]",
                                       f"a set index in [1, {M}]", val)
                        strings.append(idx)
            weights = v.vec(p.get("weights"), f"{path}.weights")
            if weights is not None:
                if any(w <= 0 for w in weights):
                    v.fail(f"{path}.weights", "strictly positive weights", weights)
                elif abs(sum(weights) - 1.0) > 1e-12:
                    v.fail(f"{path}.weights", "weights must sum to 1", sum(weights))
                elif len(weights) != len(p.get("strings") or []):
                    v.fail(f"{path}.weights", "one weight per string", len(weights))
            plans.append({"strings": strings, "weights": weights})
    out["plans"] = plans
    out["s"] = v.integer(sc.get("s"), "$.schedule.s", minimum=1)
    out["omega_min"] = v.num(sc.get("omega_min"), "$.schedule.omega_min", positive=True)
    out["max_string_length"] = v.integer(sc.get("max_string_length"),
                                         "$.schedule.max_string_length", minimum=1)
    if kind == "random":
        if "seed" not in sc:
            v.fail("$.schedule.seed", "an explicit seed for a random schedule", None)
        else:
            out["seed"] = v.integer(sc["seed"], "$.schedule.seed")
    elif "seed" in sc:
        out["seed"] = v.integer(sc["seed"], "$.schedule.seed")
    return out


def _parse_run(v: _Val, r, dim) -> dict:
    o = v.obj(r, "$.run", required=["mode", "x0"],
              optional=["max_iter", "stop_residual", "record_every"])
    if o is None:
        return {}
    out = {
        "mode": v.string(r.get("mode"), "$.run.mode",
                         choices={"exact", "perturbed", "superiorized"}),
        "x0": v.vec(r.get("x0"), "$.run.x0", dim=dim),
        "max_iter": v.integer(r.get("max_iter", 100_000), "$.run.max_iter", minimum=1),
        "stop_residual": v.num(r.get("stop_residual", 1e-10), "$.run.stop_residual",
                               nonneg=True),
        "record_every": v.integer(r.get("record_every", 1), "$.run.record_every", minimum=1),
    }
    return out


def _parse_perturbation(v: _Val, p, dim) -> dict | None:
    o = v.obj(p, "$.perturbation", required=["kind"],
              optional=["e0", "ratio", "values", "direction"])
    if o is None:
        return None
    kind = v.string(p.get("kind"), "$.perturbation.kind",
                    choices={"none", "geometric", "explicit"})
    out = {"kind": kind}
    if kind == "none":
        v.obj(p, "$.perturbation", required=["kind"], optional=[])
        return out
    if kind == "geometric":
        out["e0"] = v.num(p.get("e0"), "$.perturbation.e0", nonneg=True)
        ratio = v.num(p.get("ratio"), "$.perturbation.ratio", nonneg=True)
        if ratio is not None and ratio >= 1.0:
            v.fail("$.perturbation.ratio",
                   "perturbation sequence must be summable (ratio < 1)", ratio)
        out["ratio"] = ratio
    elif kind == "explicit":
        vals = p.get("values")
        if not isinstance(vals, list):
            v.fail("$.perturbation.values", "an array of magnitudes", vals)
        else:
            out["values"] = [v.num(x, f"$.perturbation.values[{i}]", nonneg=True)
                             for i, x in enumerate(vals)]
    d = p.get("direction")
    do = v.obj(d, "$.perturbation.direction", required=["kind"], optional=["seed", "vector"])
    if do is not None:
        dk = v.string(d.get("kind"), "$.perturbation.direction.kind",
                      choices={"random_unit", "fixed"})
        dd = {"kind": dk}
        if dk == "random_unit":
            if "seed" not in d:
                v.fail("$.perturbation.direction.seed", "an explicit seed", None)
            else:
                dd["seed"] = v.integer(d["seed"], "$.perturbation.direction.seed")
        elif dk == "fixed":
            dd["vector"] = v.vec(d.get("vector"), "$.perturbation.direction.vector", dim=dim)
        out["direction"] = dd
    return out


def _parse_steering(v: _Val, st, dim) -> dict | None:
    o = v.obj(st, "$.steering", required=["objective", "beta0", "ratio"],
              optional=["normalize", "bound"])
    if o is None:
        return None
    ob = st.get("objective")
    obj_out = None
    oo = v.obj(ob, "$.steering.objective", required=["kind"],
               optional=["target", "weights", "cost"])
    if oo is not None:
        kind = v.string(ob.get("kind"), "$.steering.objective.kind",
                        choices={"quadratic", "weighted_l1", "linear"})
        obj_out = {"kind": kind}
        if kind == "quadratic":
            obj_out["target"] = v.vec(ob.get("target"), "$.steering.objective.target", dim=dim)
        elif kind == "weighted_l1":
            obj_out["weights"] = v.vec(ob.get("weights"), "$.steering.objective.weights", dim=dim)
            obj_out["target"] = v.vec(ob.get("target"), "$.steering.objective.target", dim=dim)
        elif kind == "linear":
            obj_out["cost"] = v.vec(ob.get("cost"), "$.steering.objective.cost", dim=dim)
    ratio = v.num(st.get("ratio"), "$.steering.ratio", positive=True)
    if ratio is not None and ratio >= 1.0:
        v.fail("$.steering.ratio", "steering coefficients must be summable (ratio < 1)", ratio)
    return {
        "objective": obj_out,
        "beta0": v.num(st.get("beta0"), "$.steering.beta0", nonneg=True),
        "ratio": ratio,
        "normalize": v.boolean(st.get("normalize", True), "$.steering.normalize"),
        "bound": v.num(st.get("bound", 1.0), "$.steering.bound", positive=True),
    }


def _parse_analysis(v: _Val, an, dim) -> dict | None:
    o = v.obj(an, "$.analysis", required=["checks"],
              optional=["kappa", "witnesses", "restart_indices", "functionals", "epsilon"])
    if o is None:
        return None
    out = {}
    checks = an.get("checks")
    if not isinstance(checks, list):
        v.fail("$.analysis.checks", "an array of check names", checks)
        out["checks"] = []
    else:
        out["checks"] = [c for c in
                         (v.string(c, f"$.analysis.checks[{i}]", choices=set(CHECK_NAMES))
                          for i, c in enumerate(checks))
                         if c is not None]
    if "kappa" in an:
        ko = v.obj(an["kappa"], "$.analysis.kappa",
                   required=["center", "radius", "samples", "seed"], optional=[])
        if ko is not None:
            out["kappa"] = {
                "center": v.vec(an["kappa"].get("center"), "$.analysis.kappa.center", dim=dim),
                "radius": v.num(an["kappa"].get("radius"), "$.analysis.kappa.radius",
                                positive=True),
                "samples": v.integer(an["kappa"].get("samples"), "$.analysis.kappa.samples",
                                     minimum=1),
                "seed": v.integer(an["kappa"].get("seed"), "$.analysis.kappa.seed"),
            }
    if "witnesses" in an:
        ws = an["witnesses"]
        if not isinstance(ws, list):
            v.fail("$.analysis.witnesses", "an array of points", ws)
        else:
            out["witnesses"] = [v.vec(w, f"$.analysis.witnesses[{i}]", dim=dim)
                                for i, w in enumerate(ws)]
    if "restart_indices" in an:
        ri = an["restart_indices"]
        if not isinstance(ri, list):
            v.fail("$.analysis.restart_indices", "an array of iteration indices", ri)
        else:
            out["restart_indices"] = [v.integer(i, f"$.analysis.restart_indices[{j}]", minimum=0)
                                      for j, i in enumerate(ri)]
    if "functionals" in an:
        fs = an["functionals"]
        if not isinstance(fs, list):
            v.fail("$.analysis.functionals", "an array of vectors", fs)
        else:
            out["functionals"] = [v.vec(f, f"$.analysis.functionals[{i}]", dim=dim)
                                  for i, f in enumerate(fs)]
    if "epsilon" in an:
        out["epsilon"] = v.num(an["epsilon"], "$.analysis.epsilon", positive=True)
    return out


def _semantic_checks(v: _Val, run, pert, steering, analysis, sets) -> None:
    mode = run.get("mode")
    if mode == "superiorized" and steering is None:
        v.fail("$.steering", "a steering section for superiorized mode", None)
    if mode == "exact" and pert is not None and pert.get("kind") != "none":
        v.fail("$.perturbation", "no perturbation in exact mode", pert.get("kind"))
    if mode == "exact" and steering is not None:
        v.fail("$.steering", "no steering outside superiorized mode", "steering")
    if mode == "perturbed" and steering is not None:
        v.fail("$.steering", "no steering outside superiorized mode", "steering")
    if analysis:
        checks = analysis.get("checks", [])
        if "error_band" in checks and mode != "exact":
            v.fail("$.analysis.checks", "error_band only on exact runs", mode)
        if "perturbed_band" in checks and mode == "exact":
            v.fail("$.analysis.checks", "perturbed_band only on inexact runs", mode)
        if ("error_band" in checks or "perturbed_band" in checks or "kappa" in checks) \
                and "kappa" not in analysis:
            v.fail("$.analysis.kappa", "a kappa estimation section for the enabled checks", None)
        if "angle" in checks and any(s.get("type") != "subspace" for s in sets):
            v.fail("$.analysis.checks", "angle requires all sets to be linear subspaces",
                   [s.get("type") for s in sets])
        if "weak_rate" in checks and mode == "exact":
            v.fail("$.analysis.checks", "weak_rate only on inexact runs", mode)


# ---------------------------------------------------------------------------
# Trace CSV


def write_trace_csv(trace: Trace, path) -> None:
    """Write one row per step k with the fixed six-column header.

    Absent columns (no perturbation, no steering, no step out of the
    final iterate) are emitted empty; floats use 17 significant digits.
    """
    K = trace.iterations_used
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for k in range(K + 1):
            row = [str(k), _fmt(trace.residual_max[k])]
            row.append(_fmt(trace.step_norms[k]) if k < K else "")
            row.append(_fmt(trace.applied_e[k]) if trace.applied_e is not None and k < K else "")
            row.append(_fmt(trace.beta_v[k]) if trace.beta_v is not None and k < K else "")
            row.append(_fmt(trace.phi[k]) if trace.phi is not None else "")
            w.writerow(row)


def read_trace_csv(path) -> dict:
    """Read a trace CSV back into column arrays (None where all-empty)."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != TRACE_HEADER:
            raise ProblemFileError([f"at {path}: expected header {TRACE_HEADER}, found {header}"])
        rows = list(reader)
    cols = {name: [] for name in TRACE_HEADER}
    for row in rows:
        for name, val in zip(TRACE_HEADER, row):
            cols[name].append(val)
    out = {"k": np.array([int(x) for x in cols["k"]])}
    for name in TRACE_HEADER[1:]:
        vals = cols[name]
        if all(v == "" for v in vals):
            out[name] = None
        else:
            out[name] = np.array([float(v) if v != "" else np.nan for v in vals])
    return out


def trace_csv_rows(trace: Trace) -> list[list[str]]:
    """The exact string rows write_trace_csv would emit (for comparisons)."""
    K = trace.iterations_used
    rows = []
    for k in range(K + 1):
        row = [str(k), _fmt(trace.residual_max[k])]
        row.append(_fmt(trace.step_norms[k]) if k < K else "")
        row.append(_fmt(trace.applied_e[k]) if trace.applied_e is not None and k < K else "")
        row.append(_fmt(trace.beta_v[k]) if trace.beta_v is not None and k < K else "")
        row.append(_fmt(trace.phi[k]) if trace.phi is not None else "")
        rows.append(row)
    return rows
