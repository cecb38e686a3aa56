"""Run configuration, experiment dispatch and report emission.

A run is described by one YAML document::

    field:     {kind: step, b0: 1.0, radius: 1.0}
    potential: {kind: indicator_disk, radius: 1.0}
    command:   {name: scan, lams: [100, 200, 400]}
    grid:      {variable: auto}
    output:    {dir: out, prefix: run}
    seed: 0

Unknown keys are rejected with their key path.  Every report embeds the
fully resolved configuration, so rerunning that embedded document
reproduces the CSV output.
"""
from __future__ import annotations

import copy
import csv
from dataclasses import dataclass, field
import io
import json
import math
import os
import time

import numpy as np
import yaml

from . import __version__
from .bs_bounds import assemble_radial_bound, block_counts
from .counting import CountOptions, count_total, fit_exponent, weak_coupling_threshold
from .errors import ConfigError, PreconditionError
from .field import FieldProfile, check_flux_assumption
from .hardy import WEIGHTS, hardy_constant, hardy_trail
from .potential import AngularFactor, PotentialProfile, THEOREM_NORMS, bound_rhs, make_U_beta, weight_profile

COMMANDS = ("count", "scan", "threshold", "hardy", "bounds", "bs", "assumption")

# per-block schema: key -> (type(s), default); ``None`` default means optional
_NUM = (int, float)
FIELD_KEYS = {"kind": (str, "zero"), "b0": (_NUM, None), "radius": (_NUM, None), "breaks": (list, None),
              "values": (list, None), "r": (list, None), "b": (list, None), "flux": (_NUM, None)}
POTENTIAL_KEYS = {"kind": (str, "indicator_disk"), "radius": (_NUM, None), "height": (_NUM, None),
                  "breaks": (list, None), "values": (list, None), "sigma": (_NUM, None), "r": (list, None),
                  "v": (list, None), "expr": (str, None), "support": (_NUM, None),
                  "singular_origin": (bool, None), "beta": (_NUM, None), "eps": (_NUM, None),
                  "scale": (_NUM, 1.0), "angular": (dict, None)}
ANGULAR_KEYS = {"breaks": (list, None), "values": (list, None)}
COMMAND_KEYS = {"name": (str, "count"), "lam": (_NUM, None), "lams": (list, None), "fit_window": (list, None),
                "min_count": (int, 10), "lam_hi": (_NUM, None), "rel": (_NUM, 1e-3), "levels": (list, None),
                "weight": (str, None), "m_max": (int, None), "domain": (_NUM + (list,), 20.0),
                "h": (_NUM, 0.02), "refine": (str, None), "steps": (int, 2), "theorem": (str, None),
                "a": (_NUM, None), "mode": (str, "auto"), "r_trunc": (_NUM, 1e4), "form": (str, "exact"),
                "dominance": (bool, False), "eps": (_NUM, None), "r_max": (_NUM, 100.0), "shift": (str, None),
                "channels": (list, None)}
GRID_KEYS = {"variable": (str, "auto"), "r_min": (_NUM, None), "r_max": (_NUM, None), "n_base": (int, None),
             "level0": (int, None), "max_level": (int, None), "fixed_level": (int, None),
             "max_doublings": (int, None), "need": (int, None), "bracket": (bool, None), "method": (str, None),
             "workers": (int, None)}
OUTPUT_KEYS = {"dir": (str, "out"), "prefix": (str, "run"), "csv": (bool, True), "json": (bool, True)}
TOP_KEYS = {"field": FIELD_KEYS, "potential": POTENTIAL_KEYS, "command": COMMAND_KEYS, "grid": GRID_KEYS,
            "output": OUTPUT_KEYS}


# -- configuration ------------------------------------------------------------

def _check_block(block, schema, path):
    if block is None:
        block = {}
    if not isinstance(block, dict):
        raise ConfigError(f"{path} must be a mapping", path)
    out = {}
    for k, v in block.items():
        if k not in schema:
            raise ConfigError(f"unknown key {path}.{k}", f"{path}.{k}")
        typ, _ = schema[k]
        if v is not None and not (isinstance(v, typ) and not (isinstance(v, bool) and typ in (_NUM, int))):
            raise ConfigError(f"{path}.{k} has the wrong type ({type(v).__name__})", f"{path}.{k}")
        out[k] = v
    for k, (_, default) in schema.items():
        if k not in out and default is not None:
            out[k] = default
    return out


def validate_config(raw) -> dict:
    """Resolved configuration dictionary (defaults filled in) or :class:`ConfigError`."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping", "")
    cfg = {}
    for k in raw:
        if k not in TOP_KEYS and k != "seed":
            raise ConfigError(f"unknown key {k}", k)
    for k, schema in TOP_KEYS.items():
        cfg[k] = _check_block(raw.get(k), schema, k)
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer", "seed")
    cfg["seed"] = seed
    if cfg["potential"].get("angular") is not None:
        cfg["potential"]["angular"] = _check_block(cfg["potential"]["angular"], ANGULAR_KEYS, "potential.angular")
    if cfg["command"]["name"] not in COMMANDS:
        raise ConfigError(f"command.name must be one of {COMMANDS}", "command.name")
    # build once so semantic errors surface with their paths
    build_field(cfg["field"])
    build_potential(cfg["potential"])
    return cfg


def load_config(path) -> dict:
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}", "") from exc
    return validate_config(raw or {})


def _set_path(tree, dotted, value):
    keys = dotted.split(".")
    node = tree
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {dotted} crosses a scalar", dotted)
    node[keys[-1]] = value


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``key.path=value`` strings (values parsed as YAML scalars or lists)."""
    raw = copy.deepcopy(raw)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value", item)
        key, val = item.split("=", 1)
        _set_path(raw, key.strip(), yaml.safe_load(val))
    return raw


def _need(block, key, path):
    if block.get(key) is None:
        raise ConfigError(f"missing {path}.{key}", f"{path}.{key}")
    return block[key]


def build_field(fb: dict) -> FieldProfile:
    kind = fb.get("kind", "zero")
    try:
        if kind == "step":
            return FieldProfile.step(_need(fb, "b0", "field"), _need(fb, "radius", "field"))
        if kind == "piecewise":
            return FieldProfile.piecewise(_need(fb, "breaks", "field"), _need(fb, "values", "field"))
        if kind == "sampled":
            return FieldProfile.sampled(_need(fb, "r", "field"), _need(fb, "b", "field"))
        if kind == "aharonov-bohm":
            return FieldProfile.aharonov_bohm(_need(fb, "flux", "field"))
        if kind == "zero":
            return FieldProfile.zero()
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"field: {exc}", "field") from exc
    raise ConfigError(f"unknown field kind {kind!r}", "field.kind")


def build_potential(pb: dict) -> PotentialProfile:
    kind = pb.get("kind", "indicator_disk")
    ang = None
    try:
        if pb.get("angular"):
            ang = AngularFactor(tuple(pb["angular"]["breaks"]), tuple(pb["angular"]["values"]))
        if kind == "indicator_disk":
            pot = PotentialProfile.indicator_disk(pb.get("radius", 1.0), pb.get("height", 1.0), ang)
        elif kind == "steps":
            pot = PotentialProfile.steps(_need(pb, "breaks", "potential"), _need(pb, "values", "potential"), ang)
        elif kind == "v_sigma":
            pot = PotentialProfile.v_sigma(_need(pb, "sigma", "potential"))
        elif kind == "w_sigma":
            pot = PotentialProfile.w_sigma(_need(pb, "sigma", "potential"))
        elif kind == "sampled":
            pot = PotentialProfile.sampled(_need(pb, "r", "potential"), _need(pb, "v", "potential"), ang)
        elif kind == "expression":
            pot = PotentialProfile.expression(_need(pb, "expr", "potential"), _need(pb, "support", "potential"),
                                              pb.get("singular_origin", False))
        elif kind == "u_beta":
            pot = make_U_beta(_need(pb, "beta", "potential"))
        elif kind == "zero":
            pot = PotentialProfile.zero()
        elif kind in WEIGHTS:
            pot = weight_profile(kind, pb.get("eps", 1.0))
        else:
            raise ConfigError(f"unknown potential kind {kind!r}", "potential.kind")
    except (ValueError, KeyError, SyntaxError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"potential: {exc}", "potential") from exc
    scale = pb.get("scale", 1.0)
    return pot.scaled(scale) if scale != 1.0 else pot


def count_options(gb: dict, budget=None) -> CountOptions:
    kw = {k: v for k, v in gb.items() if v is not None}
    if "variable" in kw and kw["variable"] not in ("auto", "r", "t", "s", "si", "log", "loglog", "loglog-origin"):
        raise ConfigError(f"unknown grid.variable {kw['variable']!r}", "grid.variable")
    return CountOptions(budget=budget, **kw)


# -- reports ------------------------------------------------------------------

@dataclass
class RunReport:
    config: dict
    command: str
    result: dict
    rows: list
    columns: list
    converged: bool
    wall_clock: float
    partial: bool = False
    version: str = __version__
    notes: list = field(default_factory=list)

    def as_dict(self):
        return {"version": self.version, "command": self.command, "converged": self.converged,
                "partial": self.partial, "wall_clock": self.wall_clock, "notes": list(self.notes),
                "config": self.config, "result": self.result}

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()

    def json_text(self) -> str:
        return json.dumps(_plain(self.as_dict()), indent=2, sort_keys=True)

    def write(self, out_dir=None):
        """Write ``<prefix>.csv`` and ``<prefix>.json``; returns the paths written."""
        ob = self.config["output"]
        out_dir = out_dir or ob["dir"]
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        if ob.get("csv", True):
            p = os.path.join(out_dir, ob["prefix"] + ".csv")
            with open(p, "w") as fh:
                fh.write(self.csv_text())
            paths.append(p)
        if ob.get("json", True):
            p = os.path.join(out_dir, ob["prefix"] + ".json")
            with open(p, "w") as fh:
                fh.write(self.json_text())
            paths.append(p)
        return paths


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


# -- commands -----------------------------------------------------------------

def _count_rows(rep):
    return [[rep.lam, m, n, rep.total, rep.converged] for m, n in sorted(rep.per_channel.items())]


def _provenance(cfg):
    return {"field": cfg["field"], "potential": cfg["potential"]}


def _cmd_count(cfg, fld, pot, opts, deadline):
    cb = cfg["command"]
    lam = float(_need(cb, "lam", "command"))
    if cb.get("channels") is not None:
        opts = opts.replace(channels=tuple(cb["channels"]))
    rep = count_total(fld, pot, lam, opts, cb.get("shift"))
    res = rep.as_dict()
    return res, _count_rows(rep), ["lam", "m", "count", "total", "converged"], rep.converged, False


def _cmd_scan(cfg, fld, pot, opts, deadline):
    cb = cfg["command"]
    lams = [float(x) for x in _need(cb, "lams", "command")]
    if any(b <= a for a, b in zip(lams[:-1], lams[1:])):
        raise ConfigError("command.lams must be increasing", "command.lams")
    if cb.get("channels") is not None:
        opts = opts.replace(channels=tuple(cb["channels"]))
    rows, totals, done, conv = [], [], [], True
    partial = False
    for lam in lams:
        if deadline is not None:
            left = deadline - time.monotonic()
            if left <= 0:
                partial = True
                break
            opts = opts.replace(budget=left)
        rep = count_total(fld, pot, lam, opts, cb.get("shift"))
        rows += [[lam, m, n, rep.total, lam and rep.total / lam, rep.converged]
                 for m, n in sorted(rep.per_channel.items())]
        totals.append(rep.total)
        done.append(lam)
        conv = conv and rep.converged
    res = {"lams": done, "totals": totals, "n_over_lam": [n / l if l else 0.0 for n, l in zip(totals, done)]}
    try:
        sig, c, resid = fit_exponent((done, totals), cb.get("fit_window"), cb.get("min_count", 10))
        res["fit"] = {"sigma": sig, "c": c, "residual": resid}
    except PreconditionError as exc:
        res["fit"] = None
        res["fit_note"] = str(exc)
    res["provenance"] = _provenance(cfg)
    return res, rows, ["lam", "m", "count", "total", "n_over_lam", "converged"], conv and not partial, partial


def _cmd_threshold(cfg, fld, pot, opts, deadline):
    cb = cfg["command"]
    lam_hi = float(_need(cb, "lam_hi", "command"))
    levels = cb.get("levels") or [None]
    rows, out = [], []
    for lvl in levels:
        tr = weak_coupling_threshold(fld, pot, lam_hi, opts, rel=cb.get("rel", 1e-3), level=lvl)
        out.append({"level": lvl, "lam_star": tr.lam_star, "bracket": list(tr.bracket)})
        rows += [[lvl if lvl is not None else "", lam, n] for lam, n in tr.trail]
    stars = [o["lam_star"] for o in out]
    res = {"thresholds": out}
    if len(stars) > 1 and stars[-1] > 0:
        res["relative_spread"] = (max(stars) - min(stars)) / stars[-1]
    return res, rows, ["level", "lam", "total"], True, False


def _cmd_hardy(cfg, fld, pot, opts, deadline):
    cb = cfg["command"]
    weight = _need(cb, "weight", "command")
    dom = cb.get("domain", 20.0)
    dom = tuple(dom) if isinstance(dom, list) else dom
    res_h = hardy_constant(fld, weight, cb.get("m_max"), dom, cb.get("h", 0.02))
    rows = [[m, v] for m, v in sorted(res_h.channels.items())]
    res = res_h.as_dict()
    if cb.get("refine"):
        res["trail"] = hardy_trail(fld, weight, dom, cb.get("h", 0.02), cb.get("steps", 2), cb["refine"])
    return res, rows, ["channel", "constant"], True, False


def _cmd_bounds(cfg, fld, pot, opts, deadline):
    cb = cfg["command"]
    thm = _need(cb, "theorem", "command")
    if thm not in THEOREM_NORMS:
        raise ConfigError(f"command.theorem must be one of {sorted(THEOREM_NORMS)}", "command.theorem")
    params = {"a": cb["a"]} if cb.get("a") is not None else {}
    lams = cb.get("lams") or [cb.get("lam", 1.0)]
    rows, per = [], []
    for lam in lams:
        rep = bound_rhs(thm, pot.scaled(float(lam)), params)
        per.append({"lam": float(lam), **rep.as_dict()})
        rows += [[float(lam), k, v, rep.rhs_value] for k, v in rep.components.items()]
    res = {"theorem": thm, "bounds": per, "provenance": _provenance(cfg)}
    return res, rows, ["lam", "norm", "value", "rhs"], True, False


def _cmd_bs(cfg, fld, pot, opts, deadline):
    cb = cfg["command"]
    lam = float(_need(cb, "lam", "command"))
    asm = assemble_radial_bound(fld, pot, lam, cb.get("mode", "auto"), cb.get("r_trunc", 1e4),
                                cb.get("form", "exact"))
    res = asm.as_dict()
    rows = [[lam, k, v, "", ""] for k, v in asm.blocks.items()]
    if cb.get("dominance"):
        dom = block_counts(fld, pot, lam, cb.get("mode", "auto"))
        res["dominance"] = {k: {"bound": b, "count_lower": lo, "count_upper": hi} for k, (b, lo, hi) in dom.items()}
        rows += [[lam, k, b, lo, hi] for k, (b, lo, hi) in dom.items()]
    return res, rows, ["lam", "block", "bound", "count_lower", "count_upper"], True, False


def _cmd_assumption(cfg, fld, pot, opts, deadline):
    cb = cfg["command"]
    rep = check_flux_assumption(fld, float(_need(cb, "eps", "command")), cb.get("r_max", 100.0))
    res = rep.as_dict()
    rows = [[k, json.dumps(_plain(v))] for k, v in res.items()]
    return res, rows, ["key", "value"], True, False


_DISPATCH = {"count": _cmd_count, "scan": _cmd_scan, "threshold": _cmd_threshold, "hardy": _cmd_hardy,
             "bounds": _cmd_bounds, "bs": _cmd_bs, "assumption": _cmd_assumption}


def run(config, budget: float | None = None) -> RunReport:
    """Validate ``config`` (raw or resolved), dispatch its command and collect the report."""
    cfg = validate_config(config)
    np.random.seed(cfg["seed"])
    fld = build_field(cfg["field"])
    pot = build_potential(cfg["potential"])
    opts = count_options(cfg["grid"], budget)
    t0 = time.monotonic()
    deadline = t0 + budget if budget else None
    name = cfg["command"]["name"]
    res, rows, cols, conv, partial = _DISPATCH[name](cfg, fld, pot, opts, deadline)
    notes = ["budget exhausted: partial results"] if partial else []
    return RunReport(cfg, name, _plain(res), rows, cols, bool(conv), time.monotonic() - t0, partial,
                     notes=notes)


def compare(count_report: RunReport, bound_report: RunReport) -> list:
    """Rows ``(lam, N, rhs, N / rhs)``: the empirical constant of a bound.

    Both reports must come from the same field and potential; couplings are
    matched exactly.  Rows with ``N = 0`` have ratio 0.
    """
    if count_report.command not in ("count", "scan") or bound_report.command != "bounds":
        raise PreconditionError("compare needs a count/scan report and a bounds report")
    if _provenance(count_report.config) != _provenance(bound_report.config):
        raise PreconditionError("reports were computed for different fields or potentials")
    if count_report.command == "count":
        counts = {float(count_report.result["lam"]): count_report.result["total"]}
    else:
        counts = dict(zip(map(float, count_report.result["lams"]), count_report.result["totals"]))
    out = []
    for b in bound_report.result["bounds"]:
        lam = float(b["lam"])
        if lam not in counts:
            continue
        n, rhs = counts[lam], b["rhs_value"]
        ratio = 0.0 if n == 0 else (n / rhs if rhs > 0 else math.inf)
        out.append({"lam": lam, "count": n, "rhs": rhs, "ratio": ratio})
    if not out:
        raise PreconditionError("no common coupling values")
    return out


def dump_config(cfg: dict) -> str:
    return yaml.safe_dump(_plain(cfg), sort_keys=True)
