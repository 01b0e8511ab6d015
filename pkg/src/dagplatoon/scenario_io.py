"""JSON scenario files: parsing with strict validation, and serialization.

Layout (every section except ``vehicles``, ``topology`` and ``controller``
is optional)::

    {
      "name": "table1-pf",
      "vehicles": {"tau": [0.40, 0.55]}
                | {"count": 7, "formula": {"mass": [1500, 100], ...}, "estimate": {"mass": 1700, ...}}
                | {"explicit": [{"tau": 0.4, "plant": {...}, "estimate": {...}, "tau_estimate": 0.34}]}
                | "table1" | "table3",
      "topology": {"kind": "PF", "n": 7} | {"adjacency": [[0, 0], [1, 0]], "pinning": [1, 0]},
      "mask": [1, 1, 1],
      "controller": {"gains": [[3.0, 3.4, 2.0], ...] | "table1" | "table1_unstable"}
                  | {"synthesis": {"epsilon": 1.0 | [...], "alpha": "auto" | 1.5 | [...]},
                     "robust": {"k_s": 0.3}},
      "leader": "eq39" | "eq40" | {"p0": 0, "segments": [{"start": 0, "v": 10, "slope": 0}, ...]},
      "spacing": 20,
      "plant": "linear" | "nonlinear",
      "initial": {"speed": 20, "position": [...], "velocity": [...], "acceleration": [...]},
      "integrator": {"dt": 0.01, "horizon": 60, "method": "rk4" | "euler"},
      "outputs": {"delta": 0.1}
    }
"""

from __future__ import annotations

import json
from pathlib import Path

from . import presets
from .control import GainSet, SynthesisRecipe, resolve_alpha
from .dynamics import NonlinearParams, OutputMask, VehicleParams
from .graph import Topology, standard_topology
from .sim import NAMED_PROFILES, InitialOffsets, LeaderProfile, Scenario, Segment

NONLINEAR_KEYS = ("mass", "eta", "drag", "wheel_radius", "rolling")


class ScenarioError(ValueError):
    pass


def _keys(obj, where, allowed, required=()):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ScenarioError(f"{where}: missing key(s) {missing}")


def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _numbers(xs, where, n=None):
    if not isinstance(xs, list):
        raise ScenarioError(f"{where}: expected a list")
    if n is not None and len(xs) != n:
        raise ScenarioError(f"{where}: expected {n} entries, got {len(xs)}")
    return tuple(_number(x, f"{where}[{i}]") for i, x in enumerate(xs))


def _nonlinear(obj, where):
    _keys(obj, where, NONLINEAR_KEYS, NONLINEAR_KEYS)
    return NonlinearParams(**{k: _number(obj[k], f"{where}.{k}") for k in NONLINEAR_KEYS})


def _vehicles(obj):
    if obj == "table1":
        return presets.table1_vehicles()
    if obj == "table3":
        return presets.formula_vehicles(7)
    if isinstance(obj, str):
        raise ScenarioError(f"vehicles: unknown preset {obj!r}")
    _keys(obj, "vehicles", ("tau", "count", "formula", "estimate", "explicit"))
    forms = [k for k in ("tau", "formula", "explicit") if k in obj]
    if len(forms) != 1:
        raise ScenarioError("vehicles: give exactly one of 'tau', 'formula', 'explicit'")
    if "tau" in obj:
        if set(obj) != {"tau"}:
            raise ScenarioError("vehicles: 'tau' cannot be combined with other keys")
        return tuple(VehicleParams(t) for t in _numbers(obj["tau"], "vehicles.tau"))
    if "formula" in obj:
        _keys(obj, "vehicles", ("count", "formula", "estimate"), ("count", "formula", "estimate"))
        count = obj["count"]
        if not isinstance(count, int) or count < 1:
            raise ScenarioError("vehicles.count must be a positive integer")
        keys = NONLINEAR_KEYS + ("tau",)
        _keys(obj["formula"], "vehicles.formula", keys, keys)
        _keys(obj["estimate"], "vehicles.estimate", keys, keys)
        formulas = {k: _numbers(obj["formula"][k], f"vehicles.formula.{k}", 2) for k in keys}
        estimates = {k: _number(obj["estimate"][k], f"vehicles.estimate.{k}") for k in keys}
        return presets.formula_vehicles(count, formulas, estimates)
    if set(obj) != {"explicit"} or not isinstance(obj["explicit"], list):
        raise ScenarioError("vehicles.explicit must be a list and stand alone")
    out = []
    for i, v in enumerate(obj["explicit"]):
        w = f"vehicles.explicit[{i}]"
        _keys(v, w, ("tau", "plant", "estimate", "tau_estimate"), ("tau",))
        out.append(VehicleParams(
            _number(v["tau"], f"{w}.tau"),
            _nonlinear(v["plant"], f"{w}.plant") if "plant" in v else None,
            _nonlinear(v["estimate"], f"{w}.estimate") if "estimate" in v else None,
            _number(v["tau_estimate"], f"{w}.tau_estimate") if "tau_estimate" in v else None,
        ))
    return tuple(out)


def _topology(obj):
    _keys(obj, "topology", ("kind", "n", "adjacency", "pinning"))
    if "kind" in obj:
        _keys(obj, "topology", ("kind", "n"), ("kind", "n"))
        return standard_topology(obj["kind"], obj["n"])
    _keys(obj, "topology", ("adjacency", "pinning"), ("adjacency", "pinning"))
    return Topology(obj["adjacency"], obj["pinning"])


def _mask(obj):
    if not isinstance(obj, list) or len(obj) != 3:
        raise ScenarioError("mask: expected [c_p, c_v, c_a]")
    return OutputMask(*obj)


def _controller(obj, n, mask):
    _keys(obj, "controller", ("gains", "synthesis", "robust"))
    if ("gains" in obj) == ("synthesis" in obj):
        raise ScenarioError("controller: give exactly one of 'gains' or 'synthesis'")
    k_s = None
    if "robust" in obj:
        _keys(obj["robust"], "controller.robust", ("k_s",), ("k_s",))
        k_s = _number(obj["robust"]["k_s"], "controller.robust.k_s")
    if "gains" in obj:
        g = obj["gains"]
        if g in ("table1", "table1_unstable"):
            return GainSet(presets.table1_gains(g == "table1_unstable").k, mask), k_s
        if not isinstance(g, list):
            raise ScenarioError("controller.gains: expected a list of [k_p, k_v, k_a] rows or a preset name")
        return GainSet(tuple(_numbers(row, f"controller.gains[{i}]", 3) for i, row in enumerate(g)), mask), k_s
    syn = obj["synthesis"]
    _keys(syn, "controller.synthesis", ("epsilon", "alpha"), ("epsilon",))
    eps = syn["epsilon"]
    eps = _numbers(eps, "controller.synthesis.epsilon", n) if isinstance(eps, list) else (_number(eps, "controller.synthesis.epsilon"),) * n
    alpha = syn.get("alpha", "auto")
    if isinstance(alpha, list):
        if len(alpha) != n:
            raise ScenarioError(f"controller.synthesis.alpha: expected {n} entries")
        alpha = tuple(a if a == "auto" else _number(a, "controller.synthesis.alpha") for a in alpha)
    else:
        alpha = (alpha if alpha == "auto" else _number(alpha, "controller.synthesis.alpha"),) * n
    return SynthesisRecipe(eps, alpha), k_s


def _leader(obj):
    if isinstance(obj, str):
        if obj not in NAMED_PROFILES:
            raise ScenarioError(f"leader: unknown profile {obj!r}; known: {sorted(NAMED_PROFILES)}")
        return NAMED_PROFILES[obj]()
    _keys(obj, "leader", ("p0", "segments"), ("segments",))
    segs = []
    for i, s in enumerate(obj["segments"]):
        w = f"leader.segments[{i}]"
        _keys(s, w, ("start", "v", "slope"), ("start", "v"))
        segs.append(Segment(_number(s["start"], w + ".start"), _number(s["v"], w + ".v"), _number(s.get("slope", 0.0), w + ".slope")))
    return LeaderProfile(tuple(segs), _number(obj.get("p0", 0.0), "leader.p0"))


def scenario_from_dict(d: dict) -> Scenario:
    """Validate and build a Scenario; any problem raises ScenarioError."""
    try:
        _keys(d, "scenario", ("name", "vehicles", "topology", "mask", "controller", "leader", "spacing",
                              "plant", "initial", "integrator", "outputs"), ("vehicles", "topology", "controller"))
        vehicles = _vehicles(d["vehicles"])
        topology = _topology(d["topology"])
        mask = _mask(d.get("mask", [1, 1, 1]))
        controller, k_s = _controller(d["controller"], topology.n, mask)
        if isinstance(controller, SynthesisRecipe):
            for alpha, dp in zip(controller.alpha, topology.degree_plus_pin()):
                if dp > 0:
                    resolve_alpha(alpha, dp)
        kw = {}
        if "leader" in d:
            kw["leader"] = _leader(d["leader"])
        if "spacing" in d:
            kw["spacing"] = _number(d["spacing"], "spacing")
        if "plant" in d:
            kw["plant"] = d["plant"]
        if "initial" in d:
            init = d["initial"]
            _keys(init, "initial", ("speed", "position", "velocity", "acceleration"))
            offsets = {k: _numbers(v, f"initial.{k}", topology.n) for k, v in init.items() if k != "speed"}
            speed = _number(init["speed"], "initial.speed") if "speed" in init else None
            kw["initial"] = InitialOffsets(**offsets, speed=speed)
        if "integrator" in d:
            _keys(d["integrator"], "integrator", ("dt", "horizon", "method"))
            integ = d["integrator"]
            if "dt" in integ:
                kw["dt"] = _number(integ["dt"], "integrator.dt")
            if "horizon" in integ:
                kw["horizon"] = _number(integ["horizon"], "integrator.horizon")
            if "method" in integ:
                kw["integrator"] = integ["method"]
        if "outputs" in d:
            _keys(d["outputs"], "outputs", ("delta",))
            if "delta" in d["outputs"]:
                kw["delta"] = _number(d["outputs"]["delta"], "outputs.delta")
        if "name" in d:
            if not isinstance(d["name"], str):
                raise ScenarioError("name must be a string")
            kw["name"] = d["name"]
        return Scenario(vehicles, topology, controller, mask=mask, k_s=k_s, **kw)
    except ScenarioError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ScenarioError(str(exc)) from exc


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from exc
    return scenario_from_dict(data)


def _nl_dict(p: NonlinearParams):
    return {k: getattr(p, k) for k in NONLINEAR_KEYS}


def scenario_to_dict(s: Scenario) -> dict:
    if all(v.plant is None and v.estimate is None and v.tau_estimate is None for v in s.vehicles):
        vehicles = {"tau": [v.tau for v in s.vehicles]}
    else:
        rows = []
        for v in s.vehicles:
            row = {"tau": v.tau}
            if v.plant is not None:
                row["plant"] = _nl_dict(v.plant)
            if v.estimate is not None:
                row["estimate"] = _nl_dict(v.estimate)
            if v.tau_estimate is not None:
                row["tau_estimate"] = v.tau_estimate
            rows.append(row)
        vehicles = {"explicit": rows}
    t = s.topology
    if t.kind is not None:
        topology = {"kind": t.kind, "n": t.n}
    else:
        topology = {"adjacency": [list(r) for r in t.adjacency], "pinning": list(t.pinning)}
    if isinstance(s.controller, GainSet):
        controller = {"gains": [list(r) for r in s.controller.k]}
    else:
        controller = {"synthesis": {"epsilon": list(s.controller.epsilon), "alpha": list(s.controller.alpha)}}
    if s.k_s is not None:
        controller["robust"] = {"k_s": s.k_s}
    if s.leader.name in NAMED_PROFILES and NAMED_PROFILES[s.leader.name]() == s.leader:
        leader = s.leader.name
    else:
        leader = {"p0": s.leader.p0, "segments": [{"start": g.start, "v": g.v_base, "slope": g.slope} for g in s.leader.segments]}
    d = {
        "vehicles": vehicles,
        "topology": topology,
        "mask": [s.mask.c_p, s.mask.c_v, s.mask.c_a],
        "controller": controller,
        "leader": leader,
        "spacing": s.spacing,
        "plant": s.plant,
        "integrator": {"dt": s.dt, "horizon": s.horizon, "method": s.integrator},
        "outputs": {"delta": s.delta},
    }
    init = {k: list(getattr(s.initial, k)) for k in ("position", "velocity", "acceleration") if getattr(s.initial, k)}
    if s.initial.speed is not None:
        init = {"speed": s.initial.speed, **init}
    if init:
        d["initial"] = init
    if s.name is not None:
        d = {"name": s.name, **d}
    return d


def dump_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n")
