"""Command-line front end.

Exit codes: 0 success, 1 numeric or criterion failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, HeatCtlError

log = logging.getLogger("heatctl")

COMMANDS = ("check", "kernel", "transform", "solve", "map", "synth", "reproduce")

# key -> (type(s), default)
SCHEMA = {
    "preset": ((str, type(None)), "example1"),
    "rho": ((str, type(None)), None),
    "kappa": ((str, type(None)), None),
    "gamma": ((str, type(None)), None),
    "truncation_X": ((float, type(None)), None),
    "horizon": (float, 20.0),
    "T": ((float, type(None)), None),
    "h": (float, 0.02),
    "tol": (float, 1e-12),
    "volterra_steps": (int, 200),
    "n_times": (int, 11),
    "n_x": (int, 2001),
    "x_max": (float, 20.0),
    "initial": (str, "0"),
    "control": (str, "0"),
    "direction": (str, "forward"),
    "target": (str, "0"),
    "N": (list, [1, 2, 4, 8]),
    "mu": (float, 0.0),
    "level": (int, 2),
    "length": (float, 12.0),
    "example": (int, 1),
    "output": (str, "out"),
}
DEFAULT_T = 1.0
EXPRESSIONS = ("rho", "kappa", "gamma", "initial", "control", "target")
POSITIVE = ("horizon", "T", "h", "tol", "length", "x_max")


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: v for k, (_, v) in SCHEMA.items()})

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None

    @property
    def horizon_T(self) -> float:
        return DEFAULT_T if self.values["T"] is None else self.values["T"]

    @classmethod
    def load(cls, path: Optional[str] = None, overrides=()) -> "RunConfig":
        raw = {}
        if path:
            try:
                raw = json.loads(Path(path).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            if not isinstance(raw, dict):
                raise ConfigError("config file must hold a JSON object")
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            key, text = item.split("=", 1)
            try:
                raw[key.strip()] = json.loads(text)
            except json.JSONDecodeError:
                raw[key.strip()] = text
        cfg = cls()
        cfg.values.update(validate(raw))
        return cfg


def validate(raw: dict) -> dict:
    out = {}
    for key, val in raw.items():
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key {key!r}")
        types, _ = SCHEMA[key]
        types = types if isinstance(types, tuple) else (types,)
        if float in types and isinstance(val, int) and not isinstance(val, bool):
            val = float(val)
        if key in EXPRESSIONS and isinstance(val, (int, float)) and not isinstance(val, bool):
            val = repr(val)
        if isinstance(val, bool) or not isinstance(val, types):
            names = "/".join(t.__name__ for t in types)
            raise ConfigError(f"{key} must be {names}, got {val!r}")
        if key in POSITIVE and val is not None and not val > 0:
            raise ConfigError(f"{key} must be positive")
        out[key] = val
    if out.get("mu", 0.0) < 0:
        raise ConfigError("mu must be nonnegative")
    if "N" in out and (not out["N"] or not all(isinstance(n, int) and n >= 1 for n in out["N"])):
        raise ConfigError("N must be a nonempty list of positive integers")
    for key in ("n_times", "n_x", "volterra_steps"):
        if key in out and out[key] < 2:
            raise ConfigError(f"{key} must be at least 2")
    if "direction" in out and out["direction"] not in ("forward", "inverse"):
        raise ConfigError("direction must be 'forward' or 'inverse'")
    if "example" in out and out["example"] not in (1, 2):
        raise ConfigError("example must be 1 or 2")
    exprs = [out.get(k) for k in ("rho", "kappa", "gamma")]
    if any(e is not None for e in exprs):
        if not all(e is not None for e in exprs):
            raise ConfigError("rho, kappa and gamma must be given together")
        out.setdefault("preset", None)
        if out["preset"] is not None:
            raise ConfigError("give either a preset or coefficient expressions, not both")
    return out


# output helpers

def _write_csv(path: Path, header, columns):
    cols = [np.asarray(c, float) for c in columns]
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow(["%.17g" % v for v in row])
    return path.name


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n",
                    encoding="utf-8")
    return path.name


def _manifest(out: Path, plots):
    _write_json(out / "plot_manifest.json", {"plots": plots})


def _expr(src: str):
    from .exprparse import CompiledExpr
    try:
        return CompiledExpr(src)
    except HeatCtlError as exc:
        raise ConfigError(f"bad expression {src!r}: {exc}") from exc


def _fn_x(src):
    e = _expr(src)
    return lambda x: np.asarray(e(x), float) * np.ones(np.shape(x))


def _fn_t(src):
    e = _expr(src)
    return lambda t: np.asarray(e(0.0, t), float) * np.ones(np.shape(t))


def _coeffs(cfg: RunConfig):
    from .coeffs import from_expressions, preset
    kw = dict(horizon=cfg.horizon)
    if cfg.truncation_X is not None:
        kw["truncation_X"] = cfg.truncation_X
    if cfg.preset is not None and cfg.rho is None:
        try:
            return preset(cfg.preset, **kw)
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    for src in (cfg.rho, cfg.kappa, cfg.gamma):
        _expr(src)
    return from_expressions(cfg.rho, cfg.kappa, cfg.gamma, **kw)


def _context(cfg):
    from .transforms import TransformContext
    return TransformContext.build(_coeffs(cfg), h=cfg.h, tol=cfg.tol)


# subcommands

def cmd_check(cfg, out: Path) -> int:
    from .coeffs import validate_assumptions
    rep = validate_assumptions(_coeffs(cfg))
    _write_json(out / "check_report.json", rep.to_dict())
    return 0 if rep.all_passed else 1


def cmd_kernel(cfg, out: Path) -> int:
    from .kernels import lk_residual
    ctx = _context(cfg)
    b = ctx.K.boundary()
    dK = ctx.dK
    name = _write_csv(out / "kernel_boundary.csv", ["x", "K", "K_y1"], [b.nodes, b.values, dK.values])
    _write_json(out / "kernel_report.json", {
        "h": ctx.K.h, "Xi": ctx.K.Xi, "sweeps": len(ctx.K.residuals),
        "picard_residuals": ctx.K.residuals, "pde_residual": ctx.K.pde_residual,
        "lk_residual": lk_residual(ctx.K, ctx.L), "bounds": ctx.bounds.to_dict(),
        "K_00": float(b.values[0])})
    _manifest(out, [{"file": name, "x": "x", "y": ["K", "K_y1"], "title": "kernel on y1 = 0"}])
    return 0


def cmd_transform(cfg, out: Path) -> int:
    from .numerics import SampledFunction
    from .transforms import apply_That, apply_Tr, norm_H1, norm_HH1
    ctx = _context(cfg)
    psi = SampledFunction(ctx.lam_grid(), _fn_x(cfg.initial)(ctx.lam))
    Tp = apply_Tr(ctx, psi)
    W = apply_That(ctx, psi)
    name = _write_csv(out / "transform.csv", ["lambda", "psi", "Tr_psi", "x", "That_psi"],
                      [ctx.lam, psi.values, Tp.values, W.nodes, W.values])
    _write_json(out / "transform_report.json", {
        "norm_psi": norm_H1(psi), "norm_That_psi": norm_HH1(ctx, W),
        "tail_error_bound": Tp.meta["tail_error_bound"]})
    _manifest(out, [{"file": name, "x": "lambda", "y": ["psi", "Tr_psi"], "title": "Tr"},
                    {"file": name, "x": "x", "y": ["That_psi"], "title": "That"}])
    return 0


def cmd_solve(cfg, out: Path) -> int:
    from .heat import ControlSignal, boundary_trace, solve_heat_line
    from .numerics import GridSpec, SampledFunction
    xs = np.linspace(0.0, cfg.x_max, cfg.n_x)
    Z0 = SampledFunction(GridSpec(xs), _fn_x(cfg.initial)(xs))
    tu = np.linspace(0.0, cfg.horizon_T, 4 * cfg.volterra_steps + 1)
    u = ControlSignal.from_function(_fn_t(cfg.control), tu)
    ts = np.linspace(0.0, cfg.horizon_T, cfg.n_times)
    states = solve_heat_line(Z0, u, ts, x=xs)
    tcol = np.repeat(ts, xs.size)
    xcol = np.tile(xs, ts.size)
    zcol = np.concatenate([s.field.values for s in states])
    name = _write_csv(out / "solve_states.csv", ["t", "x", "Z"], [tcol, xcol, zcol])
    traces = [boundary_trace(s) for s in states[1:]]
    _write_json(out / "solve_report.json", {"times": ts, "trace_Zx_0": [None] + traces})
    _manifest(out, [{"file": name, "x": "x", "y": ["Z"], "group": "t", "title": "Z(x, t)"}])
    return 0


def cmd_map(cfg, out: Path) -> int:
    from .controlmap import map_control_forward, map_control_inverse, volterra_time_grid
    from .heat import ControlSignal
    from .numerics import SampledFunction
    ctx = _context(cfg)
    ts = volterra_time_grid(cfg.horizon_T, steps=cfg.volterra_steps)
    u_in = ControlSignal.from_function(_fn_t(cfg.control), ts)
    Z0 = SampledFunction(ctx.lam_grid(), _fn_x(cfg.initial)(ctx.lam))
    if cfg.direction == "forward":
        u_out = map_control_forward(ctx, u_in, Z0, times=ts)
        cols = ["t", "u110", "u_rkg"]
    else:
        u_out = map_control_inverse(ctx, u_in, Z0=Z0, times=ts)
        cols = ["t", "u_rkg", "u110"]
    name = _write_csv(out / f"map_{cfg.direction}.csv", cols, [ts, u_in.values, u_out.values])
    meta = {k: v for k, v in u_out.meta.items() if k != "history"}
    _write_json(out / f"map_{cfg.direction}_report.json",
                {"direction": cfg.direction, "sup_in": u_in.sup_norm(),
                 "sup_out": u_out.sup_norm(), **meta})
    _manifest(out, [{"file": name, "x": "t", "y": cols[1:], "title": f"{cfg.direction} map"}])
    return 0


def cmd_synth(cfg, out: Path) -> int:
    from .numerics import SampledFunction
    from .synth import SynthesisSpec, lift_synthesis, synthesize_piecewise
    from .transforms import apply_That
    target = _fn_x(cfg.target)
    rows = []
    best = None
    ctx = _context(cfg)
    WT = apply_That(ctx, SampledFunction(ctx.lam_grid(), target(ctx.lam)))
    for N in cfg.N:
        spec = SynthesisSpec(N, cfg.horizon_T, target, mu=cfg.mu, length=cfg.length, level=cfg.level)
        u, ZT = synthesize_piecewise(spec)
        lifted, W, res_w = lift_synthesis(ctx, u, ZT, W_target=WT)
        rows.append({"N": N, "level": cfg.level, "amplitudes": u.values,
                     "residual_Z": u.meta["residual"], "residual_W": res_w,
                     "condition": u.meta["cond"]})
        best = (ZT, u)
    ZT, u = best
    x = ZT.field.nodes
    name = _write_csv(out / "synth_profiles.csv", ["x", "target", "achieved"],
                      [x, target(x), ZT.field.values])
    _write_json(out / "synth_report.json", {"T": cfg.horizon_T, "runs": rows})
    _manifest(out, [{"file": name, "x": "x", "y": ["target", "achieved"],
                     "title": f"terminal state, N={cfg.N[-1]}"}])
    return 0


def cmd_reproduce(cfg, out: Path) -> int:
    from .reproduce import reproduce
    kw = dict(h=cfg.h, tol=cfg.tol)
    if cfg.T is not None:
        kw["T"] = cfg.T
    v = reproduce(cfg.example, **kw)
    _write_json(out / f"reproduce_example{cfg.example}.json", v.to_dict())
    for c in v.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.value:.6g} (limit {c.tolerance:.6g})")
    return 0 if v.passed else 1


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="heatctl", description="Boundary control of the "
                                "variable-coefficient heat equation via transformation operators")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON config file")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (value parsed as JSON when possible)")
        s.add_argument("-o", "--output", help="output directory")
        if name == "reproduce":
            s.add_argument("example", nargs="?", type=int, choices=(1, 2))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.set)
    if args.output:
        overrides.append(f"output={json.dumps(args.output)}")
    if getattr(args, "example", None):
        overrides.append(f"example={args.example}")
    try:
        cfg = RunConfig.load(args.config, overrides)
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return HANDLERS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (HeatCtlError, ArithmeticError, ValueError, RuntimeError) as exc:
        _write_json(out / "error.json", {"error": type(exc).__name__, "message": str(exc),
                                         "command": args.command})
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
