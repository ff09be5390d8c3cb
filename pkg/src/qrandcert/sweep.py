"""Visibility sweeps over the two-qubit scenario at all characterization
levels, with deterministic CSV output and optional plots.

Each grid point evaluates the requested bounds on the Werner family: the
tomographic value from the explicit state and target measurement, the
one-sided value with Bob's operators trusted, and the device-independent
value from the observed table (or from a Bell-functional value alone in
the functional modes).
"""

from __future__ import annotations

import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import moments, tomographic
from .quantum import (
    Scenario,
    born_statistics,
    chsh,
    chsh3,
    min_entropy,
    product_measurement,
    werner_settings,
    werner_state,
)
from .sdp import SdpInfeasibleError, SolverOptions

logger = logging.getLogger(__name__)

LEVELS = ("tomographic", "one_sided", "device_independent")
MODES = ("full_statistics", "CHSH", "CHSH3")
CSV_HEADER = "V,G_tomo,Hmin_tomo,G_1sdi,Hmin_1sdi,G_di,Hmin_di,status"
FUNCTIONAL_CSV_HEADER = "V,functional_value,G_di,Hmin_di,status"

ROOT8 = float(2.0 * np.sqrt(2.0))

DEFAULT_TARGETS = {"full_statistics": (2, 1), "CHSH": (2, 1), "CHSH3": (2, 3)}


def _quantize(x):
    """Round-trip floats through the CSV precision so emitted and in-memory
    values match bit for bit."""
    return None if x is None else float(f"{float(x):.12g}")


def _fmt(x):
    return "" if x is None else f"{x:.12g}"


@dataclass
class SweepConfig:
    grid: list
    target: tuple | None = None
    level: int = 2
    levels: tuple = LEVELS
    mode: str = "full_statistics"
    seed: int = 0
    out: str | None = None
    svg: str | None = None
    jobs: int = 1
    solver: SolverOptions | None = None

    def __post_init__(self):
        grid = [float(v) for v in self.grid]
        if not grid:
            raise ValueError("empty visibility grid")
        if any(not 0.0 <= v <= 1.0 for v in grid):
            raise ValueError("visibilities must lie in [0, 1]")
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise ValueError("visibility grid must be sorted ascending")
        self.grid = grid
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {MODES}")
        levels = tuple(self.levels)
        if self.mode == "full_statistics":
            if not levels:
                raise ValueError("at least one characterization level required")
            unknown = set(levels) - set(LEVELS)
            if unknown:
                raise ValueError(f"unknown levels {sorted(unknown)}")
        else:
            levels = ("device_independent",)
        self.levels = levels
        if self.target is None:
            self.target = DEFAULT_TARGETS[self.mode]
        self.target = (int(self.target[0]), int(self.target[1]))
        if self.level not in (1, 2):
            raise ValueError("hierarchy level must be 1 or 2")
        if self.jobs < 1:
            raise ValueError("jobs must be positive")


@dataclass
class SweepRow:
    V: float
    g_tomo: float | None = None
    hmin_tomo: float | None = None
    g_1sdi: float | None = None
    hmin_1sdi: float | None = None
    g_di: float | None = None
    hmin_di: float | None = None
    functional_value: float | None = None
    status: str = "ok"
    detail: dict = field(default_factory=dict)

    def csv_fields(self):
        return [
            _fmt(self.V), _fmt(self.g_tomo), _fmt(self.hmin_tomo),
            _fmt(self.g_1sdi), _fmt(self.hmin_1sdi),
            _fmt(self.g_di), _fmt(self.hmin_di), self.status,
        ]


def _pair(g, failures, label):
    """Quantized (G, Hmin) with sanity screening for one level."""
    if not 0.25 - 1e-6 <= g <= 1.0 + 1e-6:
        failures.append(f"{label}:out_of_range")
        return None, None
    g = min(max(g, 2.0 ** -52), 1.0)
    return _quantize(g), _quantize(min_entropy(g) + 0.0)


def _compute_point(args):
    """One grid point; module-level so worker processes can receive it."""
    (v, mode, target, level, levels, solver) = args
    alice, bob = werner_settings()
    row = SweepRow(V=_quantize(v))
    failures = []
    if mode == "full_statistics":
        stats = born_statistics(werner_state(v), alice, bob)
        if "tomographic" in levels:
            try:
                g = tomographic.guessing_probability_single(
                    werner_state(v),
                    product_measurement(alice[target[0] - 1], bob[target[1] - 1]),
                    solver,
                )
                row.g_tomo, row.hmin_tomo = _pair(g, failures, "tomo")
            except Exception as exc:  # keep sweeping, mark the row
                logger.error("tomographic point V=%.4f failed: %s", v, exc)
                failures.append("tomo:error")
        if "one_sided" in levels:
            try:
                scenario = Scenario(
                    parties=2, observed_statistics=stats,
                    characterization="one_sided", known_side=bob,
                )
                g, sol = moments.steering_guessing_probability(
                    scenario, target, level=level, options=solver,
                    return_solution=True,
                )
                row.detail["one_sided"] = (sol.status, float(sol.duality_gap))
                row.g_1sdi, row.hmin_1sdi = _pair(g, failures, "1sdi")
            except Exception as exc:
                logger.error("one-sided point V=%.4f failed: %s", v, exc)
                failures.append("1sdi:error")
        if "device_independent" in levels:
            try:
                scenario = Scenario(
                    parties=2, observed_statistics=stats,
                    characterization="device_independent",
                )
                g, sol = moments.di_guessing_probability(
                    scenario, target, level=level, options=solver,
                    return_solution=True,
                )
                row.detail["device_independent"] = (sol.status, float(sol.duality_gap))
                row.g_di, row.hmin_di = _pair(g, failures, "di")
            except Exception as exc:
                logger.error("device-independent point V=%.4f failed: %s", v, exc)
                failures.append("di:error")
        # The device-independent optimum upper-bounds the one-sided one (its
        # feasible set is strictly larger), so whichever certificate is
        # tighter is also valid for the more-constrained level.  Near V=1 the
        # one-sided solve stalls at the degenerate boundary and this recovers
        # the sharper bound.
        if (row.g_di is not None and row.g_1sdi is not None
                and row.g_1sdi > row.g_di):
            row.g_1sdi, row.hmin_1sdi = row.g_di, row.hmin_di
        ordered = [x for x in (row.g_tomo, row.g_1sdi, row.g_di) if x is not None]
        if any(b < a - 1e-6 for a, b in zip(ordered, ordered[1:])):
            failures.append("ordering_violation")
    else:
        functional = chsh() if mode == "CHSH" else chsh3()
        value = (ROOT8 if mode == "CHSH" else ROOT8 + 1.0) * v
        row.functional_value = _quantize(value)
        try:
            g, sol = moments.di_guessing_from_functional(
                functional, value, target, level=level, options=solver,
                return_solution=True,
            )
            row.detail["device_independent"] = (sol.status, float(sol.duality_gap))
            row.g_di, row.hmin_di = _pair(g, failures, "di")
        except SdpInfeasibleError as exc:
            logger.error("functional point V=%.4f infeasible: %s", v, exc)
            failures.append("di:infeasible")
        except Exception as exc:
            logger.error("functional point V=%.4f failed: %s", v, exc)
            failures.append("di:error")
    if failures:
        row.status = ";".join(failures)
    return row


def _run_points(config: SweepConfig):
    args = [
        (v, config.mode, config.target, config.level, config.levels,
         config.solver)
        for v in config.grid
    ]
    if config.jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            rows = list(pool.map(_compute_point, args))
    else:
        rows = [_compute_point(a) for a in args]
    return rows


def _write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(rows, path, header=CSV_HEADER):
    if header == CSV_HEADER:
        lines = [header] + [",".join(r.csv_fields()) for r in rows]
    else:
        lines = [header] + [
            ",".join([_fmt(r.V), _fmt(r.functional_value), _fmt(r.g_di),
                      _fmt(r.hmin_di), r.status])
            for r in rows
        ]
    _write_atomic(path, "\n".join(lines) + "\n")


def read_csv(path):
    """Parse an emitted sweep CSV back into rows (values bit-identical)."""
    with open(path) as handle:
        lines = [ln.rstrip("\n") for ln in handle if ln.strip()]
    header, rows = lines[0], []
    functional = header == FUNCTIONAL_CSV_HEADER

    def num(s):
        return None if s == "" else float(s)

    for line in lines[1:]:
        parts = line.split(",")
        if functional:
            rows.append(SweepRow(
                V=num(parts[0]), functional_value=num(parts[1]),
                g_di=num(parts[2]), hmin_di=num(parts[3]), status=parts[4],
            ))
        else:
            rows.append(SweepRow(
                V=num(parts[0]), g_tomo=num(parts[1]), hmin_tomo=num(parts[2]),
                g_1sdi=num(parts[3]), hmin_1sdi=num(parts[4]),
                g_di=num(parts[5]), hmin_di=num(parts[6]), status=parts[7],
            ))
    return rows


def run_sweep(config: SweepConfig):
    """Full-statistics sweep; returns rows and writes CSV/SVG when asked."""
    if config.mode != "full_statistics":
        raise ValueError("run_sweep handles full_statistics; "
                         "use run_functional_sweep for functional modes")
    rows = _run_points(config)
    if config.out:
        write_csv(rows, config.out)
    if config.svg:
        from .plotting import render_sweep
        render_sweep(rows, config.svg)
    return rows


def run_functional_sweep(config: SweepConfig):
    """Bell-functional sweep (device-independent column only)."""
    if config.mode not in ("CHSH", "CHSH3"):
        raise ValueError("functional sweep requires mode CHSH or CHSH3")
    rows = _run_points(config)
    if config.out:
        write_csv(rows, config.out, header=FUNCTIONAL_CSV_HEADER)
    if config.svg:
        from .plotting import render_functional_sweep
        render_functional_sweep(rows, config.svg, label=config.mode)
    return rows
