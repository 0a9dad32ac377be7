"""Command-line front-end: ``limterp <subcommand> [flags]``.

Settings come from, in increasing priority: built-in defaults, a flat
``key = value`` config file (``--config``), the environment
(LIMTERP_PPD, LIMTERP_DECADES, LIMTERP_THREADS) and explicit flags.

Exit status: 0 when the report passes, 2 when a mathematical precondition
rejects the input (q outside the id's range, inadmissible weight, bad
expression), 1 otherwise (internal error or a report that did not pass).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import lab
from . import transforms as tr
from .couples import CoupleError, StepFunction, StepFunctionCouple, couple_from_dict
from .norms import NormSpec, WindowError, norm_value, parse_interval
from .report import FORMATS, Table, render, write_atomic
from .sv import CATALOG, LogGrid, SvDomainError, parse, property_suite
from .transforms import PreconditionError

COMMANDS = ("sv-check", "transform", "norm", "theorem", "corollary", "density", "identity103")
ENV_KEYS = {"ppd": "LIMTERP_PPD", "decades": "LIMTERP_DECADES", "threads": "LIMTERP_THREADS"}
EXIT_PASS, EXIT_FAIL, EXIT_PRECONDITION = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = ""
    id: str = ""
    q: str = ""
    w: str = ""
    a: str = ""
    b: str = ""
    couple: str = "base"
    decades: int = 40
    ppd: int = 32
    seed: int = 0
    samples: int = 50
    bound: float = 100.0
    stability: bool = True
    threads: int = 1
    method: str = "K"
    theta: float = 0.0
    interval: str = "full"
    f: str = ""
    stages: str = "a_from_b"
    eps: float = 0.5
    truncations: str = ""
    kind: str = "a_from_b"
    out: str = ""
    format: str = "json"

    def to_text(self):
        """Flat config text; ``parse_config_text`` reads it back to an equal config."""
        lines = [f"{f.name} = {_dump_value(getattr(self, f.name))}" for f in fields(self)]
        return "\n".join(lines) + "\n"

    @property
    def q_value(self):
        return parse_q(self.q)

    @property
    def grid(self):
        return LogGrid.centered(self.decades, self.ppd)


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _dump_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _coerce(key, text, where):
    key = key.strip().replace("-", "_")
    if key not in _FIELDS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    kind = _FIELDS[key].type
    text = text.strip()
    try:
        if kind == "bool":
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return key, low in ("true", "1", "yes")
        if kind == "int":
            return key, int(text)
        if kind == "float":
            return key, float(text)
    except ValueError:
        raise ConfigError(f"{where}: {key} expects {kind}, got {text!r}") from None
    return key, text


def parse_q(text):
    """'2', '3/2', 'inf' -> float."""
    t = str(text).strip().lower().replace("∞", "inf")
    if not t:
        raise ConfigError("q is required")
    try:
        if "/" in t:
            num, den = t.split("/", 1)
            v = float(num) / float(den)
        else:
            v = float(t)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot read q from {text!r}") from None
    if not (v >= 1):
        raise PreconditionError(f"q must lie in [1, inf], got {text}", "q-range")
    return v


def parse_config_text(text, source="<config>"):
    """Key/value pairs from config text; '#' starts a comment."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected 'key = value', got {raw.strip()!r}")
        k, v = line.split("=", 1)
        key, val = _coerce(k, v, f"{source}:{n}")
        out[key] = val
    return out


def _env_overrides(environ):
    out = {}
    for key, var in ENV_KEYS.items():
        if environ.get(var):
            out.update([_coerce(key, environ[var], f"${var}")])
    return out


def build_config(args, environ=None):
    """Defaults < config file < environment < flags."""
    environ = os.environ if environ is None else environ
    values = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        values.update(parse_config_text(text, args.config))
    values.update(_env_overrides(environ))
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    values["command"] = args.command
    cfg = RunConfig(**values)
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}")
    if cfg.format not in FORMATS:
        raise ConfigError(f"--format must be one of {FORMATS}, got {cfg.format!r}")
    for text in (cfg.w, cfg.a, cfg.b):
        if text:
            parse(text)
    if cfg.out:
        d = os.path.dirname(os.path.abspath(cfg.out))
        if not os.path.isdir(d) or not os.access(d, os.W_OK):
            raise ConfigError(f"output directory {d} is not writable")
    if cfg.command in ("theorem", "corollary", "density"):
        if not cfg.id:
            raise ConfigError(f"{cfg.command} needs --id")
        allowed = {"theorem": lab.EQUIVALENCE_IDS + lab.RESTRICTED_IDS, "corollary": lab.COROLLARY_IDS,
                   "density": lab.DENSITY_IDS}[cfg.command]
        if cfg.id not in allowed:
            raise ConfigError(f"--id {cfg.id} is not a {cfg.command} id; choose from {', '.join(allowed)}")
        if cfg.q:
            lab.check_q(cfg.id, cfg.q_value)
    if cfg.samples < 1:
        raise ConfigError("--samples must be at least 1")
    LogGrid.centered(cfg.decades, cfg.ppd)
    return cfg


def parse_couple(text):
    """'base', 'base:N:SPAN', 'tail', 'step', a JSON object, or @path to one."""
    t = text.strip()
    if t.startswith("@"):
        with open(t[1:], encoding="utf-8") as fh:
            return couple_from_dict(json.load(fh))
    if t.startswith("{"):
        return couple_from_dict(json.loads(t))
    if t == "step":
        return StepFunctionCouple()
    if t == "tail":
        return lab.diagonal_tail_family()[0]
    if t == "base" or t.startswith("base:"):
        parts = t.split(":")[1:]
        n = int(parts[0]) if parts else 8
        span = float(parts[1]) if len(parts) > 1 else 6.0
        return lab.base_couple(n, span)
    raise ConfigError(f"unknown couple {text!r}")


def parse_element(text, couple):
    t = text.strip()
    if not t:
        raise ConfigError("norm needs --f")
    if isinstance(couple, StepFunctionCouple):
        d = json.loads(t)
        return StepFunction(np.array(d["breaks"]), np.array(d["values"]))
    f = np.array([float(x) for x in t.split(",")])
    if f.size != couple.n:
        raise ConfigError(f"--f has {f.size} coordinates, the couple has {couple.n}")
    return f


def _weight(cfg, *names):
    for n in names:
        v = getattr(cfg, n)
        if v:
            return parse(v)
    return None


# ---------------------------------------------------------------------------
# subcommands


def cmd_sv_check(cfg):
    exprs = [parse(cfg.w)] if cfg.w else [parse(s) for s in CATALOG]
    rows, ok = [], True
    for e in exprs:
        for c in property_suite(e, cfg.ppd, eps=cfg.eps):
            rows.append((e.to_str(), c.name, c.passed, c.value, c.refined))
            ok &= c.passed
    meta = {"eps": cfg.eps, "ppd": cfg.ppd, "decades": cfg.decades}
    return Table("sv-check", meta, ("weight", "check", "pass", "value", "refined"), rows, bool(ok))


def cmd_transform(cfg):
    w = _weight(cfg, "w", "b", "a")
    if w is None:
        raise ConfigError("transform needs --w")
    q = cfg.q_value if cfg.q else 2.0
    stages = [s.strip() for s in cfg.stages.split(",") if s.strip()]
    for s in stages:
        if s not in tr.STAGES:
            raise ConfigError(f"unknown stage {s!r}; choose from {', '.join(tr.STAGES)}")
        w = tr.STAGES[s](w, q)
    t = cfg.grid.t
    vals = w(t)
    ok = bool(np.all(np.isfinite(vals)) and np.all(vals > 0))
    meta = {"q": lab._fmt_q(q), "stages": stages, "weight": w.to_str()}
    return Table("transform", meta, ("t", "value"), list(zip(t.tolist(), vals.tolist())), ok)


def cmd_norm(cfg):
    w = _weight(cfg, "w", "b", "a")
    if w is None:
        raise ConfigError("norm needs --w")
    q = cfg.q_value if cfg.q else 2.0
    couple = parse_couple(cfg.couple)
    f = parse_element(cfg.f, couple)
    spec = NormSpec(q, w, cfg.method, couple, parse_interval(cfg.interval), cfg.theta)
    v = norm_value(spec, f, cfg.grid)
    meta = {"spec": spec.to_dict()}
    return Table("norm", meta, ("method", "q", "weight", "value"),
                 [(cfg.method, lab._fmt_q(q), w.to_str(), float(v))], bool(math.isfinite(v)))


def cmd_theorem(cfg):
    q = cfg.q_value
    couple = parse_couple(cfg.couple)
    w = _weight(cfg, "w", "b", "a")
    kw = dict(weight=w, couple=couple, samples=cfg.samples, seed=cfg.seed, ppd=cfg.ppd, bound=cfg.bound,
              check_stability=cfg.stability, decades=cfg.decades)
    if cfg.id in lab.RESTRICTED_IDS:
        return lab.run_restricted(cfg.id, q, **kw)
    return lab.run_equivalence(cfg.id, q, **kw)


def cmd_corollary(cfg):
    return lab.run_corollary(cfg.id, cfg.q_value, weight=_weight(cfg, "w", "b", "a"),
                             couple=parse_couple(cfg.couple), samples=cfg.samples, seed=cfg.seed, ppd=cfg.ppd,
                             bound=cfg.bound, check_stability=cfg.stability, decades=cfg.decades)


def cmd_density(cfg):
    kw = {}
    if cfg.truncations:
        kw["truncations"] = tuple(int(x) for x in cfg.truncations.split(","))
    return lab.run_density(cfg.id, cfg.q_value if cfg.q else None, weight=_weight(cfg, "w", "b", "a"),
                           ppd=cfg.ppd, decades=cfg.decades, **kw)


def cmd_product_identity(cfg):
    q = cfg.q_value if cfg.q else 2.0
    if cfg.kind == "a_from_b":
        b = _weight(cfg, "b", "w") or parse("broken(one, pow(ell, -1))")
        a = _weight(cfg, "a") or tr.a_from_b(b, q)
    elif cfg.kind == "b_from_a":
        a = _weight(cfg, "a", "w") or parse("broken(ell, one)")
        b = _weight(cfg, "b") or tr.b_from_a(a, q)
    else:
        raise ConfigError(f"--kind must be a_from_b or b_from_a, got {cfg.kind!r}")
    xs = np.logspace(-4, 4, 9)
    rep = tr.check_product_identity(a, b, q, xs, cfg.kind)
    rows = [(x, v, rep.constant, abs(v / rep.constant - 1.0)) for x, v in zip(rep.xs, rep.values)]
    meta = {"q": lab._fmt_q(q), "a": a.to_str(), "b": b.to_str(), "identity": cfg.kind,
            "constant": rep.constant, "max_rel_error": rep.max_rel_error, "rel_std": rep.rel_std}
    return Table("product-identity", meta, ("x", "value", "constant", "rel_error"), rows, rep.passed)


HANDLERS = {
    "sv-check": cmd_sv_check, "transform": cmd_transform, "norm": cmd_norm, "theorem": cmd_theorem,
    "corollary": cmd_corollary, "density": cmd_density, "identity103": cmd_product_identity,
}


def run_command(cfg, stdout=None):
    """Run one configured command; returns (exit status, report)."""
    stdout = stdout or sys.stdout
    # the lab reads the thread count from the environment; cfg already folds it in
    os.environ["LIMTERP_THREADS"] = str(max(1, cfg.threads))
    report = HANDLERS[cfg.command](cfg)
    text = render(report, cfg.format)
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        stdout.write(text)
    passed = report.passed
    return (EXIT_PASS if passed else EXIT_FAIL), report


# ---------------------------------------------------------------------------
# argument parsing


def _common(p):
    g = p.add_argument_group("common")
    g.add_argument("--config", help="flat key = value file; flags override it")
    g.add_argument("--q", help="exponent: 1, 2, 3/2, inf ...")
    g.add_argument("--w", help="weight expression, e.g. 'broken(one,pow(ell,-1))'")
    g.add_argument("--a", help="weight a (J side)")
    g.add_argument("--b", help="weight b (K side)")
    g.add_argument("--couple", help="base, base:N:SPAN, tail, step, JSON object or @file.json")
    g.add_argument("--decades", type=int, help="grid span in decades (default 40)")
    g.add_argument("--ppd", type=int, help="grid points per decade (default 32)")
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int)
    g.add_argument("--out", help="output file; stdout when omitted")
    g.add_argument("--format", choices=FORMATS)


def make_parser():
    epilog = "theorem ids (id, q-range, comparison):\n" + lab.theorem_table()
    parser = argparse.ArgumentParser(
        prog="limterp", description="Limiting interpolation experiments on diagonal and step couples.",
        epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("sv-check", help="membership and property suite for a weight (or the catalog)")
    _common(p)
    p.add_argument("--eps", type=float)

    p = sub.add_parser("transform", help="sample a transformed weight on the grid")
    _common(p)
    p.add_argument("--stages", help="comma-separated: " + ",".join(tr.STAGES))

    p = sub.add_parser("norm", help="one K or J norm of an element")
    _common(p)
    p.add_argument("--method", choices=("K", "J"))
    p.add_argument("--theta", type=float)
    p.add_argument("--interval", help="full, upper, lower or (0,inf), (1,inf), (0,1)")
    p.add_argument("--f", help="comma-separated coordinates (JSON breaks/values for the step couple)")

    for name, ids in (("theorem", lab.EQUIVALENCE_IDS + lab.RESTRICTED_IDS), ("corollary", lab.COROLLARY_IDS)):
        p = sub.add_parser(name, help=f"equivalence run for {', '.join(ids)}",
                           epilog=lab.theorem_table(), formatter_class=argparse.RawDescriptionHelpFormatter)
        _common(p)
        p.add_argument("--id", choices=ids)
        p.add_argument("--samples", type=int)
        p.add_argument("--bound", type=float)
        p.add_argument("--no-stability", dest="stability", action="store_false", default=None,
                       help="skip the doubled-sample and refined-grid reruns")

    p = sub.add_parser("density", help="truncation errors for " + ", ".join(lab.DENSITY_IDS))
    _common(p)
    p.add_argument("--id", choices=lab.DENSITY_IDS)
    p.add_argument("--truncations", help="comma-separated N values")

    p = sub.add_parser("identity103", help="exact product identity for a dual weight pair")
    _common(p)
    p.add_argument("--kind", choices=("a_from_b", "b_from_a"))
    return parser


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        status, report = run_command(cfg)
    except (PreconditionError, SvDomainError) as exc:
        cond = getattr(exc, "condition", "")
        print(f"limterp: precondition rejected{f' ({cond})' if cond else ''}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (ConfigError, CoupleError, WindowError) as exc:
        print(f"limterp: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except Exception as exc:
        print(f"limterp: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if status != EXIT_PASS:
        print(f"limterp: {cfg.command} report did not pass", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
