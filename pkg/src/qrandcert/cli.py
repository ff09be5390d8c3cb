"""Command-line driver.

Subcommands: ``sweep`` (three-level visibility sweep), ``functional``
(randomness from a Bell value alone), ``white-noise`` (optimal guessing of
white noise for N settings), ``povm`` (rank bounds for a POVM described in
a config file), and ``solve`` (raw SDPA-format file passthrough).

Exit codes: 0 success, 2 partial failures (some grid points or a
non-definitive solve), 3 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from importlib import resources

import numpy as np
import yaml

from . import povm as povm_mod
from . import sdp, white_noise
from .quantum import Measurement
from .sdp import SdpInfeasibleError, SolverOptions
from .sweep import (
    CSV_HEADER,
    FUNCTIONAL_CSV_HEADER,
    LEVELS,
    SweepConfig,
    _fmt,
    run_functional_sweep,
    run_sweep,
)

PRESETS = ("fig2", "fig3", "sic", "trine")

_SWEEP_KEYS = {"mode", "grid", "target", "level", "levels", "seed", "out",
               "svg", "jobs", "solver"}
_POVM_KEYS = {"kind", "d_s", "builtin", "bloch", "effects"}

_PAULI = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with the config-error exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(3)


def _resolve_config(name: str) -> str:
    """A filesystem path, or the bare name of a bundled preset."""
    if os.path.exists(name):
        return name
    stem = name[:-4] if name.endswith(".cfg") else name
    if stem in PRESETS:
        return str(resources.files("qrandcert").joinpath(f"presets/{stem}.cfg"))
    raise ConfigError(f"config file {name!r} not found "
                      f"(bundled presets: {', '.join(PRESETS)})")


def _load_yaml(path: str) -> dict:
    try:
        with open(path) as handle:
            doc = yaml.safe_load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return doc


def _parse_grid_string(text: str) -> list:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"grid must be START:STEP:END, got {text!r}")
    try:
        start, step, end = (float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"non-numeric grid component in {text!r}") from exc
    return _grid_points(start, step, end)


def _grid_points(start: float, step: float, end: float) -> list:
    if end < start:
        raise ConfigError("grid end must not precede start")
    if start == end:
        return [round(start, 12)]
    if step <= 0:
        raise ConfigError("grid step must be positive")
    n = int(np.floor((end - start) / step + 1e-9))
    return [round(start + k * step, 12) for k in range(n + 1)]


def _grid_from_value(value) -> list:
    if isinstance(value, str):
        return _parse_grid_string(value)
    if isinstance(value, dict):
        unknown = set(value) - {"start", "step", "end"}
        if unknown:
            raise ConfigError(f"unknown grid keys {sorted(unknown)}")
        try:
            return _grid_points(float(value["start"]), float(value["step"]),
                                float(value["end"]))
        except KeyError as exc:
            raise ConfigError(f"grid section missing {exc}") from exc
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    raise ConfigError("grid must be START:STEP:END, a {start,step,end} "
                      "section, or a list of values")


def _solver_from_value(value) -> SolverOptions:
    if not isinstance(value, dict):
        raise ConfigError("solver section must be a mapping")
    allowed = {"gap_tol", "feas_tol", "max_iterations"}
    unknown = set(value) - allowed
    if unknown:
        raise ConfigError(f"unknown solver options {sorted(unknown)}")
    kwargs = {k: (int(v) if k == "max_iterations" else float(v))
              for k, v in value.items()}
    return SolverOptions(**kwargs)


def _sweep_config(args, functional: bool) -> SweepConfig:
    doc = {}
    if args.config:
        doc = _load_yaml(_resolve_config(args.config))
        unknown = set(doc) - _SWEEP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")

    mode = doc.get("mode", "CHSH" if functional else "full_statistics")
    if functional and mode not in ("CHSH", "CHSH3"):
        raise ConfigError("functional sweep needs mode CHSH or CHSH3")
    if not functional and mode != "full_statistics":
        raise ConfigError(f"the sweep subcommand runs full_statistics mode; "
                          f"config requests {mode!r} (use `functional`)")

    if args.grid is not None:
        grid = _parse_grid_string(args.grid)
    elif "grid" in doc:
        grid = _grid_from_value(doc["grid"])
    else:
        grid = _grid_points(0.0, 0.05, 1.0)

    target = doc.get("target")
    if target is not None:
        if (not isinstance(target, (list, tuple)) or len(target) != 2):
            raise ConfigError("target must be a [alice, bob] setting pair")
        target = (int(target[0]), int(target[1]))

    levels = doc.get("levels", list(LEVELS))
    if not isinstance(levels, (list, tuple)):
        raise ConfigError("levels must be a list")

    solver = _solver_from_value(doc["solver"]) if "solver" in doc else None

    try:
        return SweepConfig(
            grid=grid,
            target=target,
            level=args.level if args.level else int(doc.get("level", 2)),
            levels=tuple(levels),
            mode=mode,
            seed=args.seed if args.seed is not None else int(doc.get("seed", 0)),
            out=args.out or doc.get("out"),
            svg=args.svg or doc.get("svg"),
            jobs=args.jobs if args.jobs else int(doc.get("jobs", os.cpu_count() or 1)),
            solver=solver,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _emit(rows, config, functional: bool) -> int:
    if not config.out:
        header = FUNCTIONAL_CSV_HEADER if functional else CSV_HEADER
        print(header)
        for r in rows:
            if functional:
                print(",".join([_fmt(r.V), _fmt(r.functional_value),
                                _fmt(r.g_di), _fmt(r.hmin_di), r.status]))
            else:
                print(",".join(r.csv_fields()))
    failures = sum(r.status != "ok" for r in rows)
    if failures:
        print(f"{failures} of {len(rows)} grid points failed", file=sys.stderr)
        return 2
    if config.out:
        print(f"wrote {config.out} ({len(rows)} rows)")
    if config.svg:
        print(f"wrote {config.svg}")
    return 0


def cmd_sweep(args) -> int:
    config = _sweep_config(args, functional=False)
    rows = run_sweep(config)
    return _emit(rows, config, functional=False)


def cmd_functional(args) -> int:
    config = _sweep_config(args, functional=True)
    rows = run_functional_sweep(config)
    return _emit(rows, config, functional=True)


def cmd_white_noise(args) -> int:
    for n in args.settings:
        if not 2 <= n <= 12:
            raise ConfigError(f"settings count {n} outside the supported 2..12")
    print("N  g_N          H_min[bits]  ensemble")
    for n in args.settings:
        value, ensemble = white_noise.optimize_gN(
            n, restarts=args.restarts, seed=args.seed or 0)
        bits = -np.log2(value)
        parts = [
            f"w={w:.6f} n=({d[0]:+.6f},{d[1]:+.6f},{d[2]:+.6f})"
            for d, w in zip(ensemble.directions, ensemble.weights)
        ]
        print(f"{n}  {value:.9f}  {bits:.9f}  " + "; ".join(parts))
    return 0


def _povm_from_config(doc: dict) -> tuple:
    unknown = set(doc) - _POVM_KEYS
    if unknown:
        raise ConfigError(f"unknown povm config keys {sorted(unknown)}")
    if doc.get("kind", "povm") != "povm":
        raise ConfigError("povm config must declare kind: povm")
    d_s = int(doc.get("d_s", 2))
    forms = [k for k in ("builtin", "bloch", "effects") if k in doc]
    if len(forms) != 1:
        raise ConfigError("povm config needs exactly one of builtin | bloch | effects")
    if "builtin" in doc:
        name = doc["builtin"]
        if name == "sic":
            return povm_mod.sic_povm(), 2
        if name == "trine":
            return povm_mod.trine_povm(), 2
        raise ConfigError(f"unknown builtin POVM {name!r} (sic, trine)")
    if "bloch" in doc:
        if d_s != 2:
            raise ConfigError("bloch form describes qubit effects (d_s: 2)")
        effects = []
        for item in doc["bloch"]:
            direction = np.asarray(item["direction"], dtype=float)
            if direction.shape != (3,):
                raise ConfigError("bloch direction must have three components")
            if item.get("normalize", True):
                norm = np.linalg.norm(direction)
                if norm < 1e-12:
                    raise ConfigError("bloch direction must be nonzero")
                direction = direction / norm
            weight = float(item["weight"])
            effects.append(weight * 0.5 * (np.eye(2) + np.einsum(
                "i,ijk->jk", direction, _PAULI)))
        return Measurement(effects, kind="povm"), 2
    matrices = []
    for raw in doc["effects"]:
        rows = []
        for raw_row in raw:
            row = []
            for entry in raw_row:
                if isinstance(entry, (list, tuple)):
                    if len(entry) != 2:
                        raise ConfigError("complex entries are [re, im] pairs")
                    row.append(complex(float(entry[0]), float(entry[1])))
                else:
                    row.append(complex(float(entry)))
            rows.append(row)
        matrices.append(np.array(rows, dtype=complex))
    return Measurement(matrices, kind="povm"), d_s


def cmd_povm(args) -> int:
    doc = _load_yaml(_resolve_config(args.config))
    try:
        measurement, d_s = _povm_from_config(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad povm config: {exc}") from exc
    analysis = povm_mod.analyze_povm(measurement, d_s)
    print(f"system dimension     : {analysis.d_s}")
    print(f"effect ranks         : {list(analysis.ranks)}")
    print(f"rank sum             : {analysis.sum_ranks}")
    print(f"G lower bound        : {analysis.guessing_lower_bound:.9f}")
    print(f"H_min upper bound    : {analysis.min_entropy_upper_bound:.9f} bits")
    print(f"decomposition value  : {analysis.decomposition_value:.9f}")
    if analysis.ancilla_dim is not None:
        print(f"ancilla dimension    : {analysis.ancilla_dim}")
    print(f"hidden dimension     : {analysis.hidden_dim}")
    if args.verify:
        report = povm_mod.verify_povm_vs_sdp(measurement, d_s)
        print(f"SDP guessing value   : {report.sdp_guessing:.9f}")
        print(f"SDP H_min            : {report.sdp_min_entropy:.9f} bits")
        print(f"bound respected      : {report.bound_respected}")
        if not report.bound_respected:
            return 2
    return 0


def cmd_solve(args) -> int:
    try:
        problem = sdp.read_sdpa(args.file)
    except OSError as exc:
        raise ConfigError(f"cannot read SDPA file: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"malformed SDPA file: {exc}") from exc
    options = SolverOptions()
    if args.max_iterations:
        options = SolverOptions(max_iterations=args.max_iterations)
    try:
        solution = sdp.solve(problem, options)
    except SdpInfeasibleError as exc:
        print(f"status      : infeasible ({exc})")
        return 0
    print(f"status      : {solution.status}")
    print(f"primal value: {solution.primal_value:.12g}")
    print(f"dual value  : {solution.dual_value:.12g}")
    print(f"duality gap : {solution.duality_gap:.3e}")
    print(f"iterations  : {solution.iterations}")
    return 0 if solution.status == "optimal" else 2


def _add_sweep_flags(parser):
    parser.add_argument("--config", help="config file path or bundled preset name")
    parser.add_argument("--out", help="CSV output path (stdout when omitted)")
    parser.add_argument("--svg", help="also render an SVG line chart here")
    parser.add_argument("--level", type=int, choices=(1, 2),
                        help="moment hierarchy level (default 2)")
    parser.add_argument("--grid", help="visibility grid START:STEP:END")
    parser.add_argument("--seed", type=int, help="random seed (default 0)")
    parser.add_argument("--jobs", type=int,
                        help="worker processes (default: hardware threads)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qrandcert",
                     description="Certified randomness bounds for quantum "
                                 "measurement outcomes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="three-level visibility sweep (CSV/SVG)")
    _add_sweep_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("functional",
                       help="randomness certified from a Bell value alone")
    _add_sweep_flags(p)
    p.set_defaults(func=cmd_functional)

    p = sub.add_parser("white-noise",
                       help="optimal guessing probability of white noise")
    p.add_argument("settings", nargs="*", type=int, default=[2, 3, 4],
                   help="numbers of measurement settings (default: 2 3 4)")
    p.add_argument("--restarts", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_white_noise)

    p = sub.add_parser("povm", help="rank bounds for a POVM config")
    p.add_argument("config", help="POVM config path or preset (sic, trine)")
    p.add_argument("--verify", action="store_true",
                   help="cross-check the bound with the tomographic SDP")
    p.set_defaults(func=cmd_povm)

    p = sub.add_parser("solve", help="solve a problem in SDPA sparse format")
    p.add_argument("file")
    p.add_argument("--max-iterations", type=int)
    p.set_defaults(func=cmd_solve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
