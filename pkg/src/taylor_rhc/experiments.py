"""(tau, T) sweeps of the receding-horizon error, rho tables, monotonicity checks and table I/O."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, RhcError
from .model import BilinearSystem, ControlSignal, l2_norm, system_from_dict, system_to_dict
from .ocp import SolverOptions, reference_solution
from .rhc import RhcConfig, run_rhc
from .riccati import solve_are
from .taylor import TerminalPenalty, solve_cubic_term

log = logging.getLogger(__name__)

__all__ = [
    "PENALTY_KINDS",
    "DEFAULT_GRID",
    "SweepSpec",
    "SweepTable",
    "Violation",
    "MonotonicityReport",
    "run_sweep",
    "rho_table",
    "rho_variation",
    "monotonicity_report",
    "format_value",
    "to_csv",
    "from_csv",
    "to_markdown",
    "export",
    "read_table",
]

# k is the order label used for the tables: k=1 means no terminal cost
PENALTY_KINDS = {1: "zero", 2: "taylor2", 3: "taylor3"}
DEFAULT_GRID = tuple(round(0.1 + 0.3 * i, 1) for i in range(10))
ERROR_MARK = "ERR"


def _ascending(values, name):
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty 1-D list")
    if np.any(np.diff(v) <= 0):
        raise InvalidInputError(f"{name} must be strictly ascending")
    return v


@dataclass(frozen=True, eq=False)
class SweepSpec:
    system: BilinearSystem
    y0: np.ndarray
    tau_values: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_GRID))
    T_values: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_GRID))
    penalties: tuple = (1, 2, 3)
    L: float = 5.0
    opts: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        object.__setattr__(self, "y0", np.asarray(self.y0, dtype=float))
        if self.y0.shape != (self.system.n,):
            raise InvalidInputError(f"y0 must have length {self.system.n}")
        object.__setattr__(self, "tau_values", _ascending(self.tau_values, "tau_values"))
        object.__setattr__(self, "T_values", _ascending(self.T_values, "T_values"))
        ks = tuple(int(k) for k in self.penalties)
        bad = [k for k in ks if k not in PENALTY_KINDS]
        if bad or not ks:
            raise InvalidInputError(f"penalties must be drawn from {sorted(PENALTY_KINDS)}, got {list(self.penalties)}")
        object.__setattr__(self, "penalties", ks)

    def cells(self):
        """Index pairs (i, j) with tau_i <= T_j, row-major."""
        return [(i, j) for i, tau in enumerate(self.tau_values) for j, T in enumerate(self.T_values)
                if tau <= T + 1e-12]

    @classmethod
    def from_config(cls, cfg: dict) -> SweepSpec:
        sweep = cfg.get("sweep", {})
        kw = {}
        if "tau_values" in sweep:
            kw["tau_values"] = sweep["tau_values"]
        if "T_values" in sweep:
            kw["T_values"] = sweep["T_values"]
        if "penalties" in sweep:
            kw["penalties"] = tuple(sweep["penalties"])
        return cls(system=system_from_dict(cfg["system"]), y0=cfg["y0"], L=float(cfg.get("L", 5.0)),
                   opts=SolverOptions.from_config(cfg.get("solver")), **kw)

    def to_config(self) -> dict:
        return {
            "system": system_to_dict(self.system),
            "y0": self.y0.tolist(),
            "L": self.L,
            "solver": {"grad_tol": self.opts.grad_tol, "max_iters": self.opts.max_iters,
                       "lbfgs_memory": self.opts.lbfgs_memory, "h": self.opts.h},
            "sweep": {"tau_values": self.tau_values.tolist(), "T_values": self.T_values.tolist(),
                      "penalties": list(self.penalties)},
        }


@dataclass(frozen=True, eq=False)
class SweepTable:
    """tau rows by T columns. Absent cells (tau > T) and failed cells hold NaN.

    ``errors`` maps (i, j) of failed cells to a message; ``meta`` carries the
    penalty label, the quantity tabulated ("error" or "rho"), lambda, and the
    reference certificate.
    """

    tau_values: np.ndarray
    T_values: np.ndarray
    values: np.ndarray
    errors: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        tau = np.asarray(self.tau_values, dtype=float)
        T = np.asarray(self.T_values, dtype=float)
        v = np.array(self.values, dtype=float)
        if v.shape != (tau.size, T.size):
            raise InvalidInputError(f"values must have shape {(tau.size, T.size)}, got {v.shape}")
        v[~self.present_mask(tau, T)] = np.nan
        for a, name in ((tau, "tau_values"), (T, "T_values"), (v, "values")):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @staticmethod
    def present_mask(tau, T) -> np.ndarray:
        return np.asarray(tau)[:, None] <= np.asarray(T)[None, :] + 1e-12

    @property
    def mask(self) -> np.ndarray:
        return self.present_mask(self.tau_values, self.T_values)

    @property
    def kind(self) -> str:
        return self.meta.get("kind", "error")

    @property
    def k(self):
        return self.meta.get("k")

    def cell(self, tau: float, T: float) -> float:
        i = _index(self.tau_values, tau, "tau")
        j = _index(self.T_values, T, "T")
        if not self.mask[i, j]:
            raise InvalidInputError(f"cell (tau={tau}, T={T}) is not part of the table")
        return float(self.values[i, j])

    def n_cells(self) -> int:
        return int(np.count_nonzero(self.mask))

    def with_values(self, values, errors=None, **meta) -> SweepTable:
        return SweepTable(self.tau_values, self.T_values, values,
                          dict(self.errors if errors is None else errors), {**self.meta, **meta})


def _index(grid, x, name):
    hits = np.flatnonzero(np.abs(grid - x) <= 1e-9 * max(1.0, abs(x)))
    if hits.size == 0:
        raise InvalidInputError(f"{name}={x} is not on the table grid")
    return int(hits[0])


def _penalties(system: BilinearSystem, ks) -> tuple[dict, float]:
    ric = solve_are(system)
    out = {}
    for k in ks:
        if k == 1:
            out[k] = TerminalPenalty.zero()
        elif k == 2:
            out[k] = TerminalPenalty.taylor2(ric)
        else:
            out[k] = TerminalPenalty.taylor3(ric, solve_cubic_term(system, ric))
    return out, ric.lam


def _run_cell(task):
    # top-level so it pickles for worker processes
    system, y0, cfg = task
    try:
        return run_rhc(system, y0, cfg).u.values, None
    except (RhcError, FloatingPointError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def run_sweep(spec: SweepSpec, jobs: int = 1) -> dict:
    """One reference solution, then one receding-horizon run per (k, tau, T) cell.

    Returns ``{k: SweepTable}`` of L2(0, L) control errors. A failing cell is
    recorded as NaN plus an entry in ``errors``; the sweep carries on.
    """
    phis, lam = _penalties(spec.system, spec.penalties)
    ref = reference_solution(spec.system, spec.y0, spec.L, spec.opts)
    log.info("reference on (0, %g): cost %.6e, certificate %.2e", spec.L, ref.cost.total, ref.certificate)

    cells = spec.cells()
    tasks, keys = [], []
    for k in spec.penalties:
        for i, j in cells:
            cfg = RhcConfig(float(spec.tau_values[i]), float(spec.T_values[j]), phis[k], spec.L, spec.opts)
            tasks.append((spec.system, spec.y0, cfg))
            keys.append((k, i, j))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_cell, tasks, chunksize=1))
    else:
        outcomes = [_run_cell(t) for t in tasks]

    shape = (spec.tau_values.size, spec.T_values.size)
    vals = {k: np.full(shape, np.nan) for k in spec.penalties}
    errs = {k: {} for k in spec.penalties}
    for (k, i, j), (u_vals, msg) in zip(keys, outcomes):
        if msg is not None:
            log.warning("cell k=%d tau=%g T=%g failed: %s", k, spec.tau_values[i], spec.T_values[j], msg)
            errs[k][(i, j)] = msg
            continue
        vals[k][i, j] = l2_norm(ControlSignal(ref.u.grid, u_vals) - ref.u)

    return {
        k: SweepTable(spec.tau_values, spec.T_values, vals[k], errs[k],
                      {"kind": "error", "k": k, "penalty": PENALTY_KINDS[k], "lambda": lam,
                       "reference_certificate": ref.certificate, "L": spec.L})
        for k in spec.penalties
    }


def rho_table(table: SweepTable, lam: float, k: int) -> SweepTable:
    """rho = ln(error) + (k+1) lam T - lam tau; non-positive errors give undefined cells."""
    if table.kind != "error":
        raise InvalidInputError("rho is defined from an error table")
    v = table.values
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.log(v) + (k + 1) * lam * table.T_values[None, :] - lam * table.tau_values[:, None]
    errors = dict(table.errors)
    for i, j in zip(*np.nonzero(table.mask & ~(v > 0))):
        if (int(i), int(j)) not in errors:
            errors[(int(i), int(j))] = "undefined: error is not positive"
        rho[i, j] = np.nan
    return table.with_values(rho, errors, kind="rho", k=k, **{"lambda": lam})


def rho_variation(rho: SweepTable, min_tau: float = 0.4) -> float:
    """max - min of the defined rho cells with tau >= min_tau."""
    rows = rho.tau_values >= min_tau - 1e-12
    sel = rho.values[rows]
    sel = sel[np.isfinite(sel)]
    if sel.size == 0:
        return math.nan
    return float(sel.max() - sel.min())


@dataclass(frozen=True)
class Violation:
    """One broken ordering: ``first`` was expected to be >= ``second``.

    ``axis`` is "T" (along a row), "tau" (down a column) or "k" (across tables).
    """

    axis: str
    k: object
    tau: tuple
    T: tuple
    first: float
    second: float

    @property
    def magnitude(self) -> float:
        return self.second - self.first

    def describe(self) -> str:
        if self.axis == "T":
            where = f"k={self.k} tau={self.tau[0]:g}: T={self.T[0]:g} -> {self.T[1]:g}"
            return f"{where} grows {self.first:.3e} -> {self.second:.3e}"
        if self.axis == "tau":
            where = f"k={self.k} T={self.T[0]:g}: tau={self.tau[0]:g} -> {self.tau[1]:g}"
            return f"{where} shrinks {self.second:.3e} -> {self.first:.3e}"
        where = f"tau={self.tau[0]:g} T={self.T[0]:g}: k={self.k[0]} -> {self.k[1]}"
        return f"{where} grows {self.first:.3e} -> {self.second:.3e}"


@dataclass(frozen=True)
class MonotonicityReport:
    violations: list
    below_floor: list
    floor: float

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list:
        out = [v.describe() for v in self.violations]
        if self.below_floor:
            out.append(f"({len(self.below_floor)} further inversions with both values <= {self.floor:g})")
        return out


def monotonicity_report(tables, floor: float = 0.0) -> MonotonicityReport:
    """Check error tables: non-increasing in T, non-decreasing in tau, non-increasing in k.

    ``tables`` is one SweepTable or a mapping {k: SweepTable}. Inversions where
    both values are <= ``floor`` are listed separately in ``below_floor``.
    """
    if isinstance(tables, SweepTable):
        tables = {tables.k: tables}
    found = []
    for k, t in tables.items():
        v = t.values
        nr, nc = v.shape
        for i in range(nr):
            for j in range(nc - 1):
                a, b = v[i, j], v[i, j + 1]
                if np.isfinite(a) and np.isfinite(b) and b > a:
                    found.append(Violation("T", k, (t.tau_values[i],) * 2, (t.T_values[j], t.T_values[j + 1]), a, b))
        for j in range(nc):
            for i in range(nr - 1):
                a, b = v[i + 1, j], v[i, j]
                if np.isfinite(a) and np.isfinite(b) and b > a:
                    found.append(Violation("tau", k, (t.tau_values[i], t.tau_values[i + 1]), (t.T_values[j],) * 2, a, b))

    ks = sorted(tables)
    for lo, hi in zip(ks, ks[1:]):
        a_t, b_t = tables[lo], tables[hi]
        if not (np.array_equal(a_t.tau_values, b_t.tau_values) and np.array_equal(a_t.T_values, b_t.T_values)):
            raise InvalidInputError("tables for different penalties use different grids")
        for i, j in zip(*np.nonzero(a_t.mask)):
            a, b = a_t.values[i, j], b_t.values[i, j]
            if np.isfinite(a) and np.isfinite(b) and b > a:
                found.append(Violation("k", (lo, hi), (a_t.tau_values[i],) * 2, (a_t.T_values[j],) * 2, a, b))

    real = [v for v in found if max(v.first, v.second) > floor]
    small = [v for v in found if max(v.first, v.second) <= floor]
    return MonotonicityReport(real, small, floor)


# ---- table I/O ----

def format_value(x: float, kind: str = "error") -> str:
    """Two significant digits: ``4.3e+0`` for errors, ``-0.1`` for rho."""
    if not math.isfinite(x):
        return ERROR_MARK
    if kind == "rho":
        s = f"{x:.1f}"
        return "0.0" if s == "-0.0" else s
    mant, exp = f"{x:.1e}".split("e")
    return f"{mant}e{int(exp):+d}"


def _axis(x: float) -> str:
    s = f"{x:.1f}"
    return s if float(s) == x else repr(float(x))


def _header(table: SweepTable):
    return ["tau\\T"] + [_axis(T) for T in table.T_values]


def to_csv(table: SweepTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_header(table))
    for i, tau in enumerate(table.tau_values):
        row = [_axis(tau)]
        for j in range(table.T_values.size):
            if not table.mask[i, j]:
                row.append("")
            elif (i, j) in table.errors or not math.isfinite(table.values[i, j]):
                row.append(ERROR_MARK)
            else:
                row.append(format_value(table.values[i, j], table.kind))
        w.writerow(row)
    return buf.getvalue()


def from_csv(text: str, kind: str = "error", k=None) -> SweepTable:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or len(rows[0]) < 2:
        raise InvalidInputError("table CSV needs a header row with T values")
    try:
        T = [float(x) for x in rows[0][1:]]
        tau = [float(r[0]) for r in rows[1:]]
    except ValueError as exc:
        raise InvalidInputError(f"bad table axis: {exc}") from None
    vals = np.full((len(tau), len(T)), np.nan)
    errors = {}
    for i, r in enumerate(rows[1:]):
        if len(r) != len(T) + 1:
            raise InvalidInputError(f"row {i + 1} has {len(r) - 1} cells, expected {len(T)}")
        for j, c in enumerate(r[1:]):
            c = c.strip()
            if c == ERROR_MARK:
                errors[(i, j)] = "marked as failed"
            elif c:
                vals[i, j] = float(c)
    return SweepTable(tau, T, vals, errors, {"kind": kind, "k": k})


def to_markdown(table: SweepTable) -> str:
    head = _header(table)
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for i, tau in enumerate(table.tau_values):
        cells = [_axis(tau)]
        for j in range(table.T_values.size):
            if not table.mask[i, j]:
                cells.append("")
            elif (i, j) in table.errors or not math.isfinite(table.values[i, j]):
                cells.append(ERROR_MARK)
            else:
                cells.append(format_value(table.values[i, j], table.kind))
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def export(table: SweepTable, path, fmt: str = "csv") -> Path:
    """Write ``table`` as CSV or Markdown; raises OSError if the file cannot be written."""
    if fmt not in ("csv", "md"):
        raise InvalidInputError(f"unknown table format {fmt!r}")
    path = Path(path)
    text = to_csv(table) if fmt == "csv" else to_markdown(table)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
    return path


def read_table(path, kind: str = "error", k=None) -> SweepTable:
    return from_csv(Path(path).read_text(), kind=kind, k=k)
