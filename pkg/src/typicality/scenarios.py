"""Declarative scenario configs: registries for processes, rules, sets and
functionals, and a runner producing a :class:`TestReport`.

A config is a JSON object with ``"schema": "typicality-scenario/1"``::

    {"schema": "typicality-scenario/1", "name": "circle-poisson-tn",
     "claim": "eq-4.1", "suite": "shift_invariance", "mode": "mc",
     "expect": "pass", "seed": 11, "n": 10000, "alpha": 0.01,
     "group": {"kind": "torus", "d": 1, "L": 10.0},
     "process": {"sampler": "palm_poisson", "intensity": 1.0},
     "rules": ["tn:-1", "tn:1"], "functionals": ["gap_vector"]}
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from . import simulate as sim
from . import verify
from .functionals import functional_from_descriptor
from .groups import FiniteSet, Group, group_from_descriptor
from .measures import Configuration, EmptyMark, FiniteLaw, GridField, PointMeasure
from .shifts import (
    ShiftRule,
    bernoulli_transport,
    circular_lex_rule,
    constant_rule,
    identity_rule,
    matching_rule,
    nearest_rule,
    tn_rule,
    two_point_stay_probabilities,
)
from .tree import tree_reverse_rule, tree_rule

SCHEMA = "typicality-scenario/1"
SUITES = (
    "mass_stationarity_exact",
    "mass_stationarity_mc",
    "shift_invariance",
    "shift_invariance_exact",
    "stationarity_exact",
    "stationarity",
    "typical_location_exact",
    "cox_reduction",
    "preservation",
    "preservation_exact",
    "reverse_pair",
    "kernel_identity",
)
EXACT_SUITES = {s for s in SUITES if s.endswith("_exact")} | {"kernel_identity"}
EXIT = {"pass": 0, "fail": 2, "inconclusive": 3}


class ConfigError(ValueError):
    """Malformed scenario config or unresolved registry name."""


# --------------------------------------------------------------------------
# processes


def _finite_config(g: Group, d: dict) -> Configuration:
    masses = d.get("masses")
    mu = PointMeasure.counting(g) if masses is None else PointMeasure.from_masses(g, masses)
    mark = EmptyMark() if d.get("field") is None else GridField(g, d["field"])
    return Configuration(mark, mu)


def build_law(g: Group, d: dict) -> FiniteLaw:
    """Finitely supported law on a finite group from a process descriptor."""
    if g.kind != "finite":
        raise ConfigError("exact laws need a finite group")
    kind = d.get("sampler")
    if kind == "uniform_translates":
        return sim.uniform_translates(g, d.get("masses"), d.get("field"), d.get("probs"))
    if kind == "palm_exact":
        return sim.palm_exact(build_law(g, d["base"]))
    if kind == "uniform_relocation":
        return sim.uniform_relocation(build_law(g, d["base"]))
    if kind == "finite_law":
        law = FiniteLaw((_finite_config(g, o), float(o["p"])) for o in d["outcomes"])
        if abs(law.total() - 1) > 1e-12:
            raise ConfigError("finite_law probabilities must sum to 1")
        return law
    if kind == "point_mass":
        return FiniteLaw([(_finite_config(g, d), 1.0)])
    raise ConfigError(f"unknown exact process {kind!r}")


def build_sampler(g: Group, d: dict) -> sim.ScenarioSampler:
    kind = d.get("sampler")
    p = {k: v for k, v in d.items() if k != "sampler"}
    try:
        if kind == "poisson":
            return sim.poisson_sampler(g, p.get("intensity", 1.0))
        if kind == "palm_poisson":
            off = p.get("offset")
            return sim.palm_poisson_sampler(g, p.get("intensity", 1.0), None if off is None else np.asarray(off, float))
        if kind == "window_palm_poisson":
            return sim.window_palm_poisson_sampler(p.get("half_width", 8.0), p.get("intensity", 1.0), g.d)
        if kind == "bump_density":
            return sim.bump_density_sampler(g, **p)
        if kind == "uniform_density":
            return sim.uniform_density_sampler(g, p.get("level", 1.0))
        if kind == "palm":
            off = p.get("offset")
            base = build_sampler(g, p["base"])
            return sim.palm_sampler(base, p.get("mass_bound"), None if off is None else np.asarray(off, float))
        if kind == "cox":
            return sim.cox_sampler(build_sampler(g, p["base"]), p.get("keep_driver", False))
        if kind == "iid_field":
            return sim.iid_field_sampler(g, p.get("grid", 16))
        if kind == "bump_field":
            return sim.bump_field_sampler(g, p.get("grid", 16), p.get("height", 3.0))
        if kind in ("uniform_translates", "palm_exact", "uniform_relocation", "finite_law", "point_mass"):
            return sim.finite_law_sampler(kind, build_law(g, d))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad parameters for process {kind!r}: {exc}") from exc
    raise ConfigError(f"unknown process {kind!r}")


def build_configuration(g: Group, d: dict) -> Configuration:
    """A single fixed configuration (``{"atoms": [...], "weights": [...]}``)."""
    if g.kind == "finite":
        return _finite_config(g, d)
    atoms = np.asarray(d["atoms"], dtype=float).reshape(-1, g.d)
    return Configuration(EmptyMark(), PointMeasure(g, atoms, d.get("weights")))


# --------------------------------------------------------------------------
# rules, sets, functionals


def rule_from_descriptor(desc) -> ShiftRule:
    """Resolve ``"tn:2"``, ``"nearest"``, ``{"name": "tree", "margin": 1}``,
    ``{"name": "bernoulli", "base": "constant:1", "p_table": {...}}`` etc."""
    if isinstance(desc, str):
        name, _, arg = desc.partition(":")
        desc = {"name": name, **({"arg": arg} if arg else {})}
    d = dict(desc)
    name = d.pop("name", None)
    try:
        if name == "tn":
            return tn_rule(int(d.get("n", d.get("arg"))))
        if name == "nearest":
            return nearest_rule()
        if name == "identity":
            return identity_rule()
        if name == "constant":
            t = d.get("t", d.get("arg"))
            return constant_rule(int(t) if isinstance(t, str) else t)
        if name == "mutual_nearest":
            return matching_rule()
        if name == "circular_lex":
            return circular_lex_rule(False)
        if name == "circular_lex_reverse":
            return circular_lex_rule(True)
        if name == "tree":
            return tree_rule(float(d.get("margin", 0.0)))
        if name == "tree_reverse":
            return tree_reverse_rule(float(d.get("margin", 0.0)))
        if name == "bernoulli":
            base = rule_from_descriptor(d["base"])
            if "balance" in d:
                table = two_point_stay_probabilities(*d["balance"])
            else:
                table = {float(k): float(v) for k, v in d.get("p_table", {}).items()} or float(d["p"])
            return bernoulli_transport(base, table)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for rule {name!r}: {exc}") from exc
    raise ConfigError(f"unknown rule {name!r}")


def sets_from_descriptor(g: Group, desc) -> list:
    if desc is None or desc == "all_nonempty":
        if g.kind != "finite":
            raise ConfigError("all_nonempty needs a finite group")
        return verify.all_nonempty_subsets(g)
    if desc == "whole":
        return [g.full_set()]
    out = []
    for item in desc:
        if g.kind == "finite":
            out.append(FiniteSet(g, item))
        elif "centered" in item:
            a = float(item["centered"])
            out.append(g.box(np.full(g.d, -a / 2), np.full(g.d, a)))
        else:
            out.append(g.box(np.asarray(item["corner"], float), np.asarray(item["extent"], float)))
    return out


def _shifts(g: Group, ts):
    if ts is None:
        return list(g.elements()) if g.kind == "finite" else [np.full(g.d, 0.5), np.full(g.d, g.L / 3)]
    return [int(t) for t in ts] if g.kind == "finite" else [np.asarray(t, float).reshape(g.d) for t in ts]


# --------------------------------------------------------------------------
# configs


def validate(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if cfg.get("schema") != SCHEMA:
        raise ConfigError(f"config schema must be {SCHEMA!r}")
    for key in ("name", "claim", "suite", "group", "process"):
        if key not in cfg:
            raise ConfigError(f"config is missing {key!r}")
    if cfg["suite"] not in SUITES:
        raise ConfigError(f"unknown suite {cfg['suite']!r}")
    if cfg.get("expect", "pass") not in ("pass", "fail"):
        raise ConfigError("expect must be 'pass' or 'fail'")
    mode = cfg.get("mode", "exact" if cfg["suite"] in EXACT_SUITES else "mc")
    if mode not in ("exact", "mc"):
        raise ConfigError("mode must be 'exact' or 'mc'")
    if mode == "mc" and "seed" not in cfg:
        raise ConfigError("seed is mandatory in mc mode")
    return cfg


def load_config(source) -> dict:
    """Read a config from a path, a shipped scenario name, or a dict."""
    if isinstance(source, dict):
        return validate(source)
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {source}: {exc}") from exc
    else:
        shipped = shipped_configs()
        if source not in shipped:
            raise ConfigError(f"unknown scenario {source!r}")
        return shipped[source]
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {source}: {exc}") from exc
    return validate(cfg)


def shipped_configs() -> dict:
    out = {}
    for entry in sorted(resources.files("typicality").joinpath("scenarios").iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".json"):
            cfg = validate(json.loads(entry.read_text()))
            out[cfg["name"]] = cfg
    return out


def load_claims() -> dict:
    return json.loads(resources.files("typicality").joinpath("claims.json").read_text())


def run_scenario(cfg: dict, seed: int | None = None, n: int | None = None) -> verify.TestReport:
    """Execute the suite of a validated config."""
    cfg = validate(cfg)
    g = group_from_descriptor(cfg["group"])
    seed = cfg.get("seed") if seed is None else seed
    rng = np.random.default_rng(seed)
    n = int(cfg.get("n", 10_000)) if n is None else n
    alpha = float(cfg.get("alpha", 0.01))
    tol = float(cfg.get("tol", verify.EXACT_TOL))
    claim = cfg["claim"]
    suite = cfg["suite"]
    proc = cfg["process"]
    fs = [functional_from_descriptor(f, g) for f in cfg.get("functionals", [])]
    rules = [rule_from_descriptor(r) for r in cfg.get("rules", [])]

    if suite == "mass_stationarity_exact":
        rep = verify.mass_stationarity_test_exact(build_law(g, proc), sets_from_descriptor(g, cfg.get("sets")), tol, claim)
    elif suite == "mass_stationarity_mc":
        rep = verify.mass_stationarity_test_mc(build_sampler(g, proc), sets_from_descriptor(g, cfg.get("sets")), fs, n,
                                               alpha, rng, claim)
    elif suite == "shift_invariance":
        rep = verify.shift_invariance_suite(rules, build_sampler(g, proc), fs, n, alpha, rng, cfg.get("background"),
                                            claim, max_loss_rate=float(cfg.get("max_loss_rate", verify.MAX_LOSS_RATE)))
    elif suite == "shift_invariance_exact":
        rep = verify.shift_invariance_exact(rules, build_law(g, proc), tol, claim)
    elif suite == "stationarity_exact":
        rep = verify.stationarity_test_exact(build_law(g, proc), _shifts(g, cfg.get("shifts")), tol, claim)
    elif suite == "stationarity":
        rep = verify.stationarity_test(build_sampler(g, proc), _shifts(g, cfg.get("shifts")), fs, n, alpha, rng, claim)
    elif suite == "typical_location_exact":
        law = build_law(g, proc)
        moved = sim.uniform_relocation(law)
        children = [verify.stationarity_test_exact(moved, None, tol, claim=f"{claim}:S^-1X stationary"),
                    verify.law_equality_exact(moved, law, tol, claim=f"{claim}:S^-1X =D X")]
        rep = verify.TestReport(claim, "exact", [], verify.worst(c.verdict for c in children), tolerance=tol,
                                children=children)
    elif suite == "cox_reduction":
        rep = verify.cox_reduction_test(build_sampler(g, proc), n, alpha, rng, claim=claim)
    elif suite == "preservation":
        rep = verify.preservation_test(rules, build_sampler(g, proc), n, rng, claim)
    elif suite == "preservation_exact":
        rep = verify.preservation_exact(rules, build_configuration(g, proc), tol, claim)
    elif suite == "reverse_pair":
        if len(rules) != 2:
            raise ConfigError("reverse_pair needs exactly two rules")
        rep = verify.reverse_pair_test(rules[0], rules[1], build_sampler(g, proc), n, rng, claim=claim)
    elif suite == "kernel_identity":
        rep = verify.kernel_identity_test(build_law(g, proc), _shifts(g, cfg.get("shifts")), None, tol, claim)
    else:  # pragma: no cover - validate() guards this
        raise ConfigError(f"unknown suite {suite!r}")

    rep.seed = seed
    rep.scenario = {
        "name": cfg["name"],
        "claim": claim,
        "suite": suite,
        "expect": cfg.get("expect", "pass"),
        "description": cfg.get("description", ""),
        "group": cfg["group"],
        "process": proc,
        "n": None if suite in EXACT_SUITES else n,
        **({"sampler": rep.scenario} if rep.scenario else {}),
    }
    return rep


def exit_code(verdict: str, expect: str = "pass", score: bool = False) -> int:
    """Raw exit code of a verdict; with ``score`` an expected failure that
    was detected counts as success and an unexpected pass as failure."""
    if score and expect == "fail" and verdict in ("pass", "fail"):
        return EXIT["fail" if verdict == "pass" else "pass"]
    return EXIT[verdict]
