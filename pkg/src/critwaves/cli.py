"""Command-line front end.

Subcommands: ``dispersion-scan``, ``kernel-find``, ``wave-linear``,
``wave-continue`` and ``export``.  Every subcommand accepts ``--config FILE``
(JSON); explicit flags override config entries.  Exit codes: 0 success,
2 validation, 3 construction or solver failure, 4 I/O.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys

import numpy as np

from . import dispersion as dsp
from .continuation import KernelDimensionError, NewtonError, branch_1d, branch_mixed
from .fields import ModalField, SpectralField, stagnation_and_streamlines
from .flatten import DomainError, WaveState
from .grid import Grid
from .laminar import TrivialFlow, choose_lambda, critical_layer_count, kernel_mode

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


class ValidationError(ValueError):
    pass


class NonFiniteError(RuntimeError):
    pass


# serialization --------------------------------------------------------------

def _fmt(v: float) -> str:
    if not math.isfinite(v):
        raise NonFiniteError(f"non-finite value {v!r} in output")
    return format(v + 0.0, ".17g")


def to_json(obj, indent: int = 1, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join("" if v is None else (str(v) if isinstance(v, (int, str)) else _fmt(float(v)))
                           for v in row) + "\n")
    return buf.getvalue()


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


# configuration --------------------------------------------------------------

def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError:
        raise
    except ValueError as exc:
        raise ValidationError(f"config: invalid JSON in {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ValidationError("config: top level must be a JSON object")
    return cfg


def _merge(args, cfg):
    out = dict(cfg)
    for key, val in vars(args).items():
        if val is not None and key not in ("command", "config", "func"):
            out[key] = val
    return out


def _num(cfg, key, default=None, required=False, positive=False, integer=False):
    v = cfg.get(key, default)
    if v is None:
        if required:
            raise ValidationError(f"{key}: missing required value")
        return None
    try:
        v = int(v) if integer else float(v)
    except (TypeError, ValueError):
        raise ValidationError(f"{key}: expected a number, got {v!r}") from None
    if not math.isfinite(v):
        raise ValidationError(f"{key}: must be finite")
    if positive and not v > 0:
        raise ValidationError(f"{key}: must be positive")
    return v


def _num_list(cfg, key):
    v = cfg.get(key)
    if v is None:
        return None
    if not isinstance(v, (list, tuple)):
        v = [v]
    try:
        out = [float(x) for x in v]
    except (TypeError, ValueError):
        raise ValidationError(f"{key}: expected numbers, got {v!r}") from None
    if not all(math.isfinite(x) for x in out):
        raise ValidationError(f"{key}: values must be finite")
    return out


def _wavenumbers(cfg):
    ks = _num_list(cfg, "k")
    if ks is None:
        raise ValidationError("k: missing required value")
    k2 = _num(cfg, "k2")
    if k2 is not None and len(ks) == 1:
        ks = ks + [k2]
    if len(ks) not in (1, 2):
        raise ValidationError(f"k: expected one or two wavenumbers, got {len(ks)}")
    if not all(k > 0 for k in ks):
        raise ValidationError("k: wavenumbers must be positive")
    return ks


def _flow_params(cfg) -> dsp.FlowParams:
    lam = cfg.get("lambda", cfg.get("lam"))
    vals = {"mu": _num(cfg, "mu", required=True), "alpha": _num(cfg, "alpha", required=True),
            "lambda": _num({"lambda": lam}, "lambda", required=True),
            "kappa": _num(cfg, "kappa", 1.0, positive=True)}
    try:
        return dsp.FlowParams.from_dict(vals)
    except dsp.PreconditionError as exc:
        raise ValidationError(f"params: {exc}") from exc


def _grid(cfg, kappa) -> Grid:
    nx = _num(cfg, "nx", 64, integer=True)
    ns = _num(cfg, "ns", 48, integer=True)
    try:
        return Grid(nx, ns, kappa)
    except ValueError as exc:
        raise ValidationError(f"grid: {exc}") from exc


def _format(cfg, allowed=("csv", "json")):
    fmt = cfg.get("format", allowed[0])
    if fmt not in allowed:
        raise ValidationError(f"format: expected one of {allowed}, got {fmt!r}")
    return fmt


# commands -------------------------------------------------------------------

def cmd_dispersion_scan(cfg):
    lo = _num(cfg, "from", required=True)
    hi = _num(cfg, "to", required=True)
    num = _num(cfg, "num", 200, integer=True)
    if not hi > lo:
        raise ValidationError(f"from/to: empty range [{lo}, {hi}]")
    if num < 2:
        raise ValidationError("num: need at least 2 samples")
    fmt = _format(cfg)
    k = _num(cfg, "k")
    if k is not None:
        if not (lo > 0 and k > 0):
            raise ValidationError("from: a t-scan needs t > 0 and k > 0")
        var, sweep, regime = "t", (lambda v: dsp.h(v, k)), (lambda v: dsp.theta(-v, k).regime)
    else:
        alpha = _num(cfg, "alpha", required=True)
        if not alpha < 0:
            raise ValidationError("alpha: must be strictly negative")
        if not lo > 0:
            raise ValidationError("from: wavenumbers must be positive")
        var, sweep = "k", (lambda v: dsp.lhs_dispersion(alpha, v))
        regime = lambda v: dsp.theta(alpha, v).regime  # noqa: E731
    rhs = None
    if all(cfg.get(key) is not None for key in ("mu", "alpha")) and cfg.get("lambda", cfg.get("lam")) is not None:
        rhs = dsp.rhs_dispersion(_flow_params(cfg))
    rows = []
    for v in np.linspace(lo, hi, num):
        v = float(v)
        try:
            val, pole = sweep(v), 0
        except dsp.PoleError:
            val, pole = None, 1
        rows.append((v, val, pole, regime(v)))
    header = [var, "lhs" if var == "k" else "h", "pole", "regime"]
    if fmt == "csv":
        text = csv_text(header, rows)
    else:
        recs = [dict(zip(header, r)) for r in rows]
        text = to_json({"rows": recs, "rhs": rhs}) + "\n"
    _write(cfg.get("out"), text)
    return EXIT_OK


def kernel_artifact(cfg) -> dict:
    ks = _wavenumbers(cfg)
    kappa = _num(cfg, "kappa", 1.0, positive=True)
    strategy = cfg.get("strategy", "below")
    lam = cfg.get("lambda", cfg.get("lam"))
    lam = None if lam is None else _num({"lambda": lam}, "lambda")
    warns = []
    if len(ks) == 2:
        k1, k2 = sorted(ks)
        alpha, a = dsp.find_alpha_two_modes(k1, k2, math.pi / 2 if lam is None else lam, strategy)
        if lam is None:
            lam = choose_lambda(alpha, a, require_cot_nonpositive=(strategy == "inside"))
    else:
        k1 = ks[0]
        alpha = _num(cfg, "alpha", -k1 * k1 - 2.0 * math.pi ** 2)
        if not alpha < 0:
            raise ValidationError("alpha: must be strictly negative")
        lam = math.pi / 2 if lam is None else lam
        a = dsp.lhs_dispersion(alpha, k1)
    mu = dsp.solve_mu(a, alpha, lam)
    params = dsp.FlowParams(mu, alpha, lam, kappa)
    k_max = dsp.exhaustive_k_max(alpha, a, kappa)
    rep = dsp.kernel_report(params, k_max, _num(cfg, "tol", dsp.DEFAULT_TOL, positive=True))
    if rep.dimension != len(ks):
        warns.append(f"kernel dimension {rep.dimension} differs from the {len(ks)} requested modes")
    layers = critical_layer_count(TrivialFlow.from_params(params))
    return {"mu": mu, "alpha": alpha, "lambda": lam, "kappa": kappa, "a": a, "k": sorted(ks),
            "strategy": strategy if len(ks) == 2 else None, "critical_layers": layers,
            "kernel_report": rep.as_dict(), "warnings": warns + list(rep.warnings)}


def cmd_kernel_find(cfg):
    art = kernel_artifact(cfg)
    _write(cfg.get("out"), to_json(art) + "\n")
    return EXIT_OK


def _field_tables(wf, grid):
    xs, ss = grid.x, grid.s
    X, S = np.meshgrid(xs, ss, indexing="ij")
    eta = wf.eta(xs)
    Y = wf.y_of(X, S)
    psi = wf.psi_hat(X, S)
    u = wf.u_minus_c(X, S)
    v = wf.v(X, S)
    surface = [(x, e) for x, e in zip(xs, eta)]
    field = [(X[i, j], Y[i, j], S[i, j], psi[i, j], u[i, j], v[i, j])
             for i in range(grid.nx) for j in range(grid.ns)]
    return surface, field


def write_field_outputs(wf, grid, out_dir, fmt="csv", levels=None):
    """Write ``surface``, ``field`` and ``contours.json`` for a sampler; return the streamline report."""
    surface, field = _field_tables(wf, grid)
    rep = stagnation_and_streamlines(wf, levels=levels)
    tables = {"surface": (["x", "eta"], surface),
              "field": (["x", "y", "s", "psi", "u_minus_c", "v"], field)}
    texts = {}
    for name, (hdr, rows) in tables.items():
        if fmt == "csv":
            texts[f"{name}.csv"] = csv_text(hdr, rows)
        else:
            texts[f"{name}.json"] = to_json({h: [r[i] for r in rows] for i, h in enumerate(hdr)}) + "\n"
    texts["contours.json"] = to_json([{"level": c.level, "x": c.x, "y": c.y} for c in rep.contours]) + "\n"
    for name, text in texts.items():
        _write(os.path.join(out_dir, name), text)
    return rep


def _report_dict(rep):
    return {"stagnation_points": [list(p) for p in rep.stagnation_points],
            "critical_layer_bands": [list(b) for b in rep.bands],
            "warnings": list(rep.warnings)}


def _out_dir(cfg):
    out = cfg.get("out")
    if out is None:
        raise ValidationError("out: an output directory is required")
    return out


def cmd_wave_linear(cfg):
    params = _flow_params(cfg)
    ks = _wavenumbers(cfg)
    grid = _grid(cfg, params.kappa)
    fmt = _format(cfg)
    out = _out_dir(cfg)
    if len(ks) == 1:
        t = _num_list(cfg, "t")
        if not t or len(t) != 1:
            raise ValidationError("t: wave-linear needs exactly one amplitude")
        amps = t
    else:
        amps = _mixed_targets(cfg)
        if len(amps) != 1:
            raise ValidationError("t1/t2: wave-linear needs exactly one amplitude pair")
        amps = list(amps[0][:2])
    flow = TrivialFlow.from_params(params)
    modes = [(kernel_mode(k, params.alpha), t) for k, t in zip(ks, amps)]
    try:
        wf = ModalField(flow, modes)
    except DomainError as exc:
        raise ValidationError(f"t: {exc}") from exc
    rep = write_field_outputs(wf, grid, out, fmt)
    summary = {"params": params.as_dict(), "k": ks, "amplitudes": amps,
               "surface_coefficients": [float(c) for c in wf.coefficients], **_report_dict(rep)}
    _write(os.path.join(out, "wave.json"), to_json(summary) + "\n")
    return EXIT_OK


def _mixed_targets(cfg):
    t1, t2 = _num_list(cfg, "t1"), _num_list(cfg, "t2")
    r, ups = _num_list(cfg, "r"), _num_list(cfg, "upsilon")
    if t1 is not None or t2 is not None:
        if t1 is None or t2 is None or len(t1) != len(t2):
            raise ValidationError("t1/t2: need equally many values of both")
        return [(a, b, None) for a, b in zip(t1, t2)]
    if r is not None and ups is not None:
        if len(r) == 1:
            r = r * len(ups)
        if len(r) != len(ups):
            raise ValidationError("r/upsilon: need one r or one per upsilon")
        return [(a * math.cos(u), a * math.sin(u), (a, u)) for a, u in zip(r, ups)]
    raise ValidationError("t1/t2: mixed waves need --t1/--t2 or --r/--upsilon")


def _branch_json(points, params, ks):
    return {"params_star": params.as_dict(), "k": ks,
            "points": [p.as_dict(include_state=True) for p in points]}


def cmd_wave_continue(cfg):
    params = _flow_params(cfg)
    ks = _wavenumbers(cfg)
    grid = _grid(cfg, params.kappa)
    fmt = _format(cfg)
    out = _out_dir(cfg)
    tol = _num(cfg, "tol", 1e-10, positive=True)
    if len(ks) == 1:
        ts = _num_list(cfg, "t")
        if not ts:
            raise ValidationError("t: wave-continue needs at least one amplitude")
        if any(abs(b) < abs(a) for a, b in zip(ts, ts[1:])):
            raise ValidationError("t: amplitudes must be sorted by |t| ascending")
        points = branch_1d(params, ks[0], ts, tol, grid)
    else:
        targets = _mixed_targets(cfg)
        polar = all(t[2] is not None for t in targets)
        tg = [t[2] for t in targets] if polar else [t[:2] for t in targets]
        points = branch_mixed(params, ks[0], ks[1], tg, tol, polar=polar, grid=grid)
    _write(os.path.join(out, "branch.json"), to_json(_branch_json(points, params, ks)) + "\n")
    rep = write_field_outputs(SpectralField(points[-1].state), grid, out, fmt)
    _write(os.path.join(out, "wave.json"),
           to_json({"params": points[-1].params.as_dict(), "amplitudes": points[-1].amplitudes,
                    **_report_dict(rep)}) + "\n")
    return EXIT_OK


def load_branch_point(path, index=-1):
    with open(path) as fh:
        data = json.load(fh)
    try:
        pts = data["points"]
        rec = pts[index]
        st = rec["state"]
    except (KeyError, IndexError, TypeError) as exc:
        raise ValidationError(f"branch: no stored state for point {index}") from exc
    params = dsp.FlowParams.from_dict(rec["params"])
    grid = Grid(int(st["nx"]), int(st["ns"]), float(st["kappa"]))
    return WaveState(np.array(st["eta"], float), np.array(st["phi_hat"], float), params, grid), rec


def cmd_export(cfg):
    path = cfg.get("branch")
    if path is None:
        raise ValidationError("branch: path to a branch JSON is required")
    index = _num(cfg, "point", -1, integer=True)
    fmt = _format(cfg)
    out = _out_dir(cfg)
    state, rec = load_branch_point(path, index)
    rep = write_field_outputs(SpectralField(state), state.grid, out, fmt)
    _write(os.path.join(out, "wave.json"),
           to_json({"params": rec["params"], "amplitudes": rec["amplitudes"], **_report_dict(rep)}) + "\n")
    return EXIT_OK


# parser ---------------------------------------------------------------------

def _add_flow(p):
    p.add_argument("--mu", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--lambda", dest="lambda", type=float)
    p.add_argument("--kappa", type=float)


def _add_grid(p):
    p.add_argument("--nx", type=int)
    p.add_argument("--ns", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="critwaves", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dispersion-scan", help="tabulate the dispersion left side over k or t = |alpha|")
    _add_flow(p)
    p.add_argument("--k", type=float, help="scan t = |alpha| for this wavenumber instead of k")
    p.add_argument("--from", dest="from", type=float)
    p.add_argument("--to", type=float)
    p.add_argument("--num", type=int)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_dispersion_scan)

    p = sub.add_parser("kernel-find", help="construct parameters with a one- or two-mode kernel")
    _add_flow(p)
    p.add_argument("--k", type=float, nargs="+")
    p.add_argument("--k2", type=float)
    p.add_argument("--strategy", choices=("below", "inside"))
    p.add_argument("--tol", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_kernel_find)

    for name, func, hlp in (("wave-linear", cmd_wave_linear, "linear superposition of kernel modes"),
                            ("wave-continue", cmd_wave_continue, "Newton continuation of a branch or sheet")):
        p = sub.add_parser(name, help=hlp)
        _add_flow(p)
        _add_grid(p)
        p.add_argument("--k", type=float, nargs="+")
        p.add_argument("--k2", type=float)
        p.add_argument("--t", type=float, nargs="+")
        p.add_argument("--t1", type=float, nargs="+")
        p.add_argument("--t2", type=float, nargs="+")
        p.add_argument("--r", type=float, nargs="+")
        p.add_argument("--upsilon", type=float, nargs="+")
        p.add_argument("--tol", type=float)
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--out")
        p.set_defaults(func=func)

    p = sub.add_parser("export", help="write field artifacts for one stored branch point")
    p.add_argument("branch", nargs="?")
    p.add_argument("--point", type=int)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)

    for action in sub.choices.values():
        action.add_argument("--config", help="JSON file with default values for the flags")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _merge(args, _load_config(args.config))
        return args.func(cfg)
    except (ValidationError, dsp.PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NewtonError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (dsp.DispersionError, KernelDimensionError, DomainError, NonFiniteError,
            ZeroDivisionError) as exc:
        print(f"construction failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
