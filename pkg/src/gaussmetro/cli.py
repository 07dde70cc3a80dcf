"""Command-line interface: ``gaussmetro {qfi,sensitivity,sweep,figure,oracle-check}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import config as cfgmod
from . import fock
from .elements import Loss, PhaseShifter, apply, propagate_with_derivative
from .errors import ConfigError, GaussMetroError, PhysicsError
from .estimation import (
    detection_noise,
    detector_sensitivity,
    generalized_homodyne,
    homodyne_detector,
    m_detection,
    number_detector_at,
    qcrb,
    qfi,
    sld,
)
from .figures import FIGURES, build, fmt, to_csv, write_svg
from .optimize import SweepResult, parallel_map
from .state import mean_photon_numbers

logger = logging.getLogger("gaussmetro")


def _round(x):
    """12 significant digits, recursively, so JSON output is stable."""
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    if isinstance(x, (float, np.floating)):
        # JSON has no infinity; a blind point is reported as null
        return float(fmt(float(x))) if np.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def _complex_matrix(M) -> dict:
    M = np.asarray(M)
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def _dump_json(obj) -> str:
    return json.dumps(_round(obj), indent=2, sort_keys=True) + "\n"


def _emit(text: str, out_dir, filename: str):
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, filename), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(v if isinstance(v, str) else fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _load(args):
    cfg = cfgmod.load(args.config)
    opts = cfgmod.eval_options(cfg)
    if args.phi is not None:
        opts["phi"] = args.phi
    if getattr(args, "oracle", False):
        opts["oracle"] = True
    if getattr(args, "dims", None) is not None:
        opts["dims"] = args.dims
    return cfg, cfgmod.to_pipeline(cfg), opts


def photon_budget(pipeline, phi: float) -> dict:
    """Mean photon numbers entering the phase element and at the output."""
    state = pipeline.input_state()
    at_phase = None
    for el in pipeline.elements:
        if isinstance(el, PhaseShifter) and el.is_carrier and at_phase is None:
            at_phase = mean_photon_numbers(state)
        state = apply(el, state, phi)
    out = mean_photon_numbers(state)
    return {
        "at_phase": list(at_phase),
        "total_at_phase": float(np.sum(at_phase)),
        "output": list(out),
        "total_output": float(np.sum(out)),
    }


def _oracle(fn, opts):
    """Run an oracle computation at the requested truncation, or escalate when none is set."""
    if opts.get("dims") is not None:
        return fn(opts["dims"]), opts["dims"]
    return fock.escalate(fn)


def qfi_report(pipeline, opts) -> dict:
    phi = float(opts["phi"])
    state, deriv = propagate_with_derivative(pipeline, phi)
    L = sld(state, deriv)
    F = qfi(state, deriv)
    report = {
        "phi": phi,
        "F": F,
        "qcrb": qcrb(F) if F > 0 else None,
        "M_detection": {"A": _complex_matrix(L.A), "b": _complex_matrix(L.b)},
        "photon_budget": photon_budget(pipeline, phi),
    }
    if opts.get("oracle"):
        F_or, dims = _oracle(lambda d: fock.qfi_fock(pipeline, phi, d), opts)
        report["oracle"] = {"F": F_or, "rel_dev": abs(F_or - F) / max(abs(F), 1e-300), "dims": dims}
    return report


def cmd_qfi(args) -> int:
    _, pipeline, opts = _load(args)
    report = qfi_report(pipeline, opts)
    if args.format == "csv":
        row = [report["phi"], report["F"], report["qcrb"] if report["qcrb"] is not None else float("nan")]
        header = ["phi", "F", "qcrb"]
        if "oracle" in report:
            header += ["F_oracle", "rel_dev"]
            row += [report["oracle"]["F"], report["oracle"]["rel_dev"]]
        _emit(_csv(header, [row]), args.out, "qfi.csv")
    else:
        _emit(_dump_json(report), args.out, "qfi.json")
    return 0


def _loss_pair(pipeline):
    """Transmissivities of the first two-mode loss after the phase, for the generalized homodyne."""
    seen = False
    for el in pipeline.elements:
        if isinstance(el, PhaseShifter) and el.is_carrier:
            seen = True
        elif seen and isinstance(el, Loss) and el.modes == 2:
            return el.xi
    return (1.0, 1.0)


def detectors_for(pipeline, state, deriv) -> dict:
    dets = {"M": m_detection(state, deriv)}
    for k in range(1, pipeline.mode_count + 1):
        dets[f"p{k}"] = homodyne_detector(k, pipeline.mode_count)
        dets[f"n{k}"] = number_detector_at(k, state)
    if pipeline.mode_count == 2:
        xi1, xi2 = _loss_pair(pipeline)
        if xi1 + xi2 > 0:
            dets["gho"] = generalized_homodyne(xi1, xi2)
    return dets


def sensitivity_report(pipeline, opts) -> dict:
    phi = float(opts["phi"])
    state, deriv = propagate_with_derivative(pipeline, phi)
    F = qfi(state, deriv)
    rows = {}
    if opts.get("oracle"):
        out_state, dims = _oracle(lambda d: fock.evolve(pipeline, phi, d).check("output"), opts)
    for name, det in detectors_for(pipeline, state, deriv).items():
        try:
            d2 = detector_sensitivity(det, state, deriv)
        except PhysicsError:
            d2 = None
        rows[name] = {"dphi2": d2, "variance": detection_noise(det, state)}
        if opts.get("oracle"):
            _, var = fock.observable_stats(det, out_state)
            rows[name]["oracle_variance"] = var
    return {"phi": phi, "F": F, "qcrb2": 1 / F if F > 0 else None, "detectors": rows}


def cmd_sensitivity(args) -> int:
    _, pipeline, opts = _load(args)
    report = sensitivity_report(pipeline, opts)
    if args.format == "csv":
        header = ["detector", "dphi2", "variance"]
        rows = []
        for name, r in report["detectors"].items():
            rows.append([name, r["dphi2"] if r["dphi2"] is not None else "blind", r["variance"]])
        _emit(_csv(header, rows), args.out, "sensitivity.csv")
    else:
        _emit(_dump_json(report), args.out, "sensitivity.json")
    return 0


def sweep(cfg: dict, path: str, lo: float, hi: float, points: int, scale: str = "linear") -> SweepResult:
    """Evaluate QFI and detector sensitivities along one configuration field."""
    if points < 1:
        raise PhysicsError("a sweep needs at least one point")
    if scale == "log":
        if lo <= 0 or hi <= 0:
            raise PhysicsError("log sweeps need positive bounds")
        grid = np.logspace(np.log10(lo), np.log10(hi), points)
    else:
        grid = np.linspace(lo, hi, points)
    if points == 1:
        grid = np.array([lo])
    configs = [cfgmod.set_path(cfg, path, float(x)) for x in grid]
    opts = cfgmod.eval_options(cfg)

    def row(c):
        pipeline = cfgmod.to_pipeline(c)
        phi = float(cfgmod.eval_options(c)["phi"])
        state, deriv = propagate_with_derivative(pipeline, phi)
        F = qfi(state, deriv)
        dets = {}
        for name in ("p1", "p2") if pipeline.mode_count == 2 else ("p1",):
            try:
                dets[f"dphi2_{name}"] = detector_sensitivity(homodyne_detector(int(name[1]), pipeline.mode_count), state, deriv)
            except PhysicsError:
                dets[f"dphi2_{name}"] = np.inf
        return F, dets

    results = parallel_map(row, configs)
    F = np.array([r[0] for r in results])
    dphi = np.where(F > 0, 1 / np.sqrt(np.where(F > 0, F, 1.0)), np.inf)
    det_cols = {}
    # blind detectors are dropped rather than reported as infinities
    for key in results[0][1]:
        col = np.array([r[1][key] for r in results])
        if np.all(np.isfinite(col)):
            det_cols[key] = col
    return SweepResult(path, grid, F, dphi, det_cols, {"scale": scale, "phi": opts["phi"]})


def cmd_sweep(args) -> int:
    cfg = cfgmod.load(args.config)
    if args.phi is not None:
        cfg = dict(cfg)
        cfg["eval"] = dict(cfg.get("eval", {}), phi=args.phi)
        cfgmod.validate(cfg)
    result = sweep(cfg, args.axis, args.lo, args.hi, args.points, args.scale)
    cols = result.columns()
    if args.format == "json":
        _emit(_dump_json({k: list(v) for k, v in cols.items()}), args.out, "sweep.json")
    else:
        header = list(cols)
        rows = np.column_stack([cols[k] for k in header])
        _emit(_csv(header, rows), args.out, "sweep.csv")
    return 0


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got '{item}'")
        try:
            num = float(value)
            out[key] = int(num) if num.is_integer() and "." not in value and "e" not in value.lower() else num
        except ValueError:
            raise ConfigError(f"--set {key}: '{value}' is not a number") from None
    return out


def cmd_figure(args) -> int:
    names = FIGURES if args.name == "all" else (args.name,)
    kw = _overrides(args.set)
    for name in names:
        try:
            table = build(name, **kw)
        except TypeError as exc:
            raise ConfigError(f"{name}: {exc}") from None
        if args.format == "json":
            text = _dump_json({"name": name, "params": table.params,
                               "columns": list(table.columns), "rows": table.rows.tolist()})
            _emit(text, args.out, f"{name}.json")
        else:
            _emit(to_csv(table), args.out, f"{name}.csv")
        if args.svg:
            if not args.out:
                raise GaussMetroError("--svg needs --out")
            write_svg(table, os.path.join(args.out, f"{name}.svg"))
    return 0


def cmd_oracle_check(args) -> int:
    _, pipeline, opts = _load(args)
    phi = float(opts["phi"])
    state, deriv = propagate_with_derivative(pipeline, phi)
    F = qfi(state, deriv)

    def both(d):
        return fock.qfi_fock(pipeline, phi, d), fock.evolve(pipeline, phi, d).check("output")

    (F_or, out_state), dims = _oracle(both, opts)
    rows = [["F", F, F_or, abs(F_or - F) / max(abs(F), 1e-300)]]
    for name, det in detectors_for(pipeline, state, deriv).items():
        var = detection_noise(det, state)
        _, var_or = fock.observable_stats(det, out_state)
        rows.append([f"var_{name}", var, var_or, abs(var_or - var) / max(abs(var), 1e-300)])
    if args.format == "json":
        text = _dump_json({"dims": dims, "phi": phi,
                           "checks": {r[0]: {"gaussian": r[1], "oracle": r[2], "rel_dev": r[3]} for r in rows}})
        _emit(text, args.out, "oracle_check.json")
    else:
        _emit(_csv(["quantity", "gaussian", "oracle", "rel_dev"], rows), args.out, "oracle_check.csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaussmetro", description="Gaussian phase-estimation toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="pipeline JSON file")
            p.add_argument("--phi", type=float, default=None, help="operating phase (rad)")
        p.add_argument("--out", default=None, help="output directory (default: stdout)")

    p = sub.add_parser("qfi", help="QFI, QCRB and the optimal detector")
    common(p)
    p.add_argument("--oracle", action="store_true", help="also run the Fock-space oracle")
    p.add_argument("--dims", type=int, default=None, help="oracle truncation per mode")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_qfi)

    p = sub.add_parser("sensitivity", help="error-propagation sensitivity of standard detectors")
    common(p)
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--dims", type=int, default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("sweep", help="sweep one configuration field")
    common(p)
    p.add_argument("--axis", required=True, help="dotted field path, e.g. input.alpha or elements.2.xi")
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--scale", choices=("linear", "log"), default="linear")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="write the tables behind a figure")
    p.add_argument("name", choices=FIGURES + ("all",))
    common(p, config=False)
    p.add_argument("--svg", action="store_true", help="also write an SVG line plot")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a figure parameter, e.g. --set xi=0.9 (repeatable)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("oracle-check", help="compare the Gaussian engine with the Fock-space oracle")
    common(p)
    p.add_argument("--dims", type=int, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except GaussMetroError as exc:
        sys.stderr.write(f"gaussmetro: error: {exc}\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
