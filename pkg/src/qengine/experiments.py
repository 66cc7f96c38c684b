"""Parameter sweeps over the local, global and exact descriptions, figure
presets, and deterministic CSV/JSON emission."""
from __future__ import annotations

import csv
import dataclasses
import functools
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exact import (DEFAULT_HORIZON_FACTOR, DEFAULT_N, DEFAULT_OMEGA_CUT, DEFAULT_SAMPLES,
                    DEFAULT_WINDOW_FRACTION, exact_steady_report)
from .gaussian import two_mode_fidelity
from .global_me import global_report
from .local_me import local_report
from .model import EngineParams, toml_loads
from .qubits import QubitMachineParams, density_fidelity, qubit_steady
from .report import BASE_COLUMNS, CHANNEL_COLUMNS, EXACT_COLUMNS

OSCILLATOR_METHODS = ("exact", "global", "local")
QUBIT_METHODS = ("global", "local")
EXACT_ONLY_VARIABLES = ("n", "omega_cut")

OSCILLATOR_COLUMNS = (("sweep", "value") + BASE_COLUMNS + CHANNEL_COLUMNS + EXACT_COLUMNS
                      + ("fidelity_vs_exact", "error"))

_BASIS = ("00", "01", "10", "11")
RHO_COLUMNS = tuple(
    col
    for i in range(4) for j in range(i, 4)
    for col in ((f"rho_{_BASIS[i]}_{_BASIS[j]}",) if i == j else
                (f"rho_{_BASIS[i]}_{_BASIS[j]}_re", f"rho_{_BASIS[i]}_{_BASIS[j]}_im"))
)
QUBIT_COLUMNS = (("sweep", "value", "method", "omega", "g", "kappa_c", "kappa_h", "kT_c", "kT_h",
                  "J_h", "J_c", "fidelity_local_global") + RHO_COLUMNS + ("error",))


@dataclass(frozen=True)
class ExactOptions:
    n: int = DEFAULT_N
    omega_cut: float = DEFAULT_OMEGA_CUT
    horizon_factor: float = DEFAULT_HORIZON_FACTOR
    window_fraction: float = DEFAULT_WINDOW_FRACTION
    samples: int = DEFAULT_SAMPLES
    max_points: int = 12  # exact runs on an evenly spaced subset of each sweep
    clip_to_recurrence: bool = False

    def __post_init__(self):
        if self.n < 1 or self.omega_cut <= 0 or self.horizon_factor <= 0:
            raise ValueError("exact options: n, omega_cut and horizon_factor must be positive")
        if not 0 < self.window_fraction <= 1:
            raise ValueError("exact options: window_fraction must lie in (0, 1]")
        if self.samples < 2 or self.max_points < 1:
            raise ValueError("exact options: need samples >= 2 and max_points >= 1")


@dataclass(frozen=True)
class Sweep:
    variable: str
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError(f"sweep over {self.variable!r} has no values")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError(f"sweep over {self.variable!r} must be strictly increasing")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class Scenario:
    name: str
    params: EngineParams | QubitMachineParams
    methods: tuple
    sweeps: tuple
    exact: ExactOptions = field(default_factory=ExactOptions)

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(sorted(set(self.methods))))
        object.__setattr__(self, "sweeps", tuple(self.sweeps))
        if not self.sweeps:
            raise ValueError("scenario needs at least one sweep")
        allowed = QUBIT_METHODS if self.is_qubit else OSCILLATOR_METHODS
        bad = [m for m in self.methods if m not in allowed]
        if bad or not self.methods:
            raise ValueError(f"methods must be a nonempty subset of {allowed}, got {self.methods}")
        names = set(self.params.to_dict())
        for sw in self.sweeps:
            if sw.variable in EXACT_ONLY_VARIABLES and not self.is_qubit:
                if "exact" not in self.methods:
                    raise ValueError(f"sweeping {sw.variable!r} needs the exact method")
            elif sw.variable not in names:
                raise ValueError(f"unknown sweep variable {sw.variable!r}")

    @property
    def is_qubit(self) -> bool:
        return isinstance(self.params, QubitMachineParams)

    @property
    def columns(self) -> tuple:
        return QUBIT_COLUMNS if self.is_qubit else OSCILLATOR_COLUMNS


@dataclass
class Table:
    columns: tuple
    rows: list

    @property
    def error_count(self) -> int:
        return sum(1 for r in self.rows if r.get("error"))

    def select(self, **match) -> list:
        return [r for r in self.rows if all(r.get(k) == v for k, v in match.items())]


def exact_subset(n_values: int, max_points: int) -> set:
    """Indices of an evenly spaced subset that always keeps both ends."""
    k = min(n_values, max_points)
    if k == 1:
        return {0}
    return {int(i) for i in np.round(np.linspace(0, n_values - 1, k))}


@functools.lru_cache(maxsize=512)
def _exact_cached(p: EngineParams, opts: ExactOptions):
    return exact_steady_report(p, n=opts.n, omega_cut=opts.omega_cut,
                               horizon_factor=opts.horizon_factor,
                               window_fraction=opts.window_fraction, samples=opts.samples,
                               clip_to_recurrence=opts.clip_to_recurrence)


def _error_row(base: dict, method: str, err: Exception) -> dict:
    row = dict(base, method=method)
    row["error"] = f"{type(err).__name__}: {err}"
    return row


def _oscillator_point(sc: Scenario, sweep: Sweep, value: float, with_exact: bool) -> list:
    opts = sc.exact
    if sweep.variable in EXACT_ONLY_VARIABLES:
        opts = dataclasses.replace(opts, **{sweep.variable: int(value) if sweep.variable == "n" else value})
        p = sc.params
    else:
        p = None
    base = {"sweep": sweep.variable, "value": value}
    try:
        if p is None:
            p = sc.params.replace(**{sweep.variable: value})
    except ValueError as err:
        return [_error_row({**base, **sc.params.to_dict(), sweep.variable: value}, m, err)
                for m in sc.methods]
    base.update(p.to_dict())

    reports, rows = {}, []
    for method in sc.methods:
        if method == "exact" and not with_exact:
            continue
        try:
            if method == "local":
                reports[method] = local_report(p)
            elif method == "global":
                reports[method] = global_report(p)
            else:
                reports[method] = _exact_cached(p, opts)
        except (ValueError, ArithmeticError, RuntimeError) as err:
            rows.append(_error_row(base, method, err))
    exact = reports.get("exact")
    for method, rep in reports.items():
        row = {**base, **rep.row()}
        fid = ""
        if exact is not None and method != "exact":
            try:
                fid = two_mode_fidelity(rep.covariance, exact.covariance)
            except ValueError as err:
                row["error"] = f"fidelity: {err}"
        row["fidelity_vs_exact"] = fid
        rows.append(row)
    return rows


def _rho_entries(rho: np.ndarray) -> dict:
    out = {}
    for i in range(4):
        for j in range(i, 4):
            name = f"rho_{_BASIS[i]}_{_BASIS[j]}"
            if i == j:
                out[name] = float(rho[i, i].real)
            else:
                out[name + "_re"] = float(rho[i, j].real)
                out[name + "_im"] = float(rho[i, j].imag)
    return out


def _qubit_point(sc: Scenario, sweep: Sweep, value: float) -> list:
    base = {"sweep": sweep.variable, "value": value}
    try:
        p = sc.params.replace(**{sweep.variable: value})
    except ValueError as err:
        d = {**sc.params.to_dict(), sweep.variable: value}
        return [_error_row({**base, "omega": d["omega"], "g": d["g"]}, m, err) for m in sc.methods]
    base.update(omega=p.omega, g=p.g, kappa_c=p.kappa_c, kappa_h=p.kappa_h, kT_c=p.kT_c, kT_h=p.kT_h)
    states, rows = {}, []
    for method in sc.methods:
        try:
            states[method] = qubit_steady(p, method)
        except (ValueError, ArithmeticError, RuntimeError) as err:
            rows.append(_error_row(base, method, err))
    fid = ""
    if len(states) == 2:
        fid = density_fidelity(states["local"].rho, states["global"].rho)
    for method, st in states.items():
        rows.append({**base, "method": method, "J_h": st.J_h, "J_c": st.J_c,
                     "fidelity_local_global": fid, **_rho_entries(st.rho)})
    return rows


def run_scenario(sc: Scenario, jobs: int = 1) -> Table:
    """One row per (sweep value, method), sorted by sweep, value, then method."""
    tasks = []
    for k, sw in enumerate(sc.sweeps):
        if sc.is_qubit:
            tasks += [(k, functools.partial(_qubit_point, sc, sw, v)) for v in sw.values]
            continue
        if sw.variable in EXACT_ONLY_VARIABLES:
            subset = set(range(len(sw.values)))
        else:
            subset = exact_subset(len(sw.values), sc.exact.max_points)
        tasks += [(k, functools.partial(_oscillator_point, sc, sw, v, i in subset))
                  for i, v in enumerate(sw.values)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda t: (t[0], t[1]()), tasks))
    else:
        results = [(k, fn()) for k, fn in tasks]
    rows = [(k, row) for k, rs in results for row in rs]
    rows.sort(key=lambda kr: (kr[0], kr[1]["value"], kr[1]["method"]))
    columns = sc.columns
    return Table(columns, [{c: r.get(c, "") for c in columns} for _, r in rows])


def _format(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def render(table: Table, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([_format(row.get(c, "")) for c in table.columns])
        return buf.getvalue()
    if fmt == "json":
        rows = [{c: _jsonable(row.get(c, "")) for c in table.columns} for row in table.rows]
        return json.dumps({"columns": list(table.columns), "rows": rows}, indent=1) + "\n"
    raise ValueError(f"unknown format {fmt!r} (expected csv or json)")


def emit(table: Table, fmt: str = "csv", path=None) -> str:
    """Render ``table`` and write it to ``path`` (if given); returns the text."""
    text = render(table, fmt)
    if path is not None:
        path = Path(path)
        try:
            path.write_text(text)
        except OSError as err:
            raise OSError(f"cannot write {path}: {err.strerror or err}") from err
    return text


# presets ---------------------------------------------------------------------

def default_g_grid(omega_c: float = 1.0, num: int = 60, lo: float = 1e-3, hi: float = 0.5) -> tuple:
    return tuple(float(v) for v in np.geomspace(lo, hi, num) * omega_c)


def _engine(**kw) -> EngineParams:
    base = dict(omega_c=1.0, omega_h=1.0, g=0.1, kappa_c=0.05, kappa_h=0.05, kT_c=0.5, kT_h=5.0)
    base.update(kw)
    return EngineParams(**base)


def _kT_grid() -> tuple:
    return tuple(float(v) for v in np.linspace(0.5, 5.0, 10))


def _presets() -> dict:
    g_grid = Sweep("g", default_g_grid())
    all3 = OSCILLATOR_METHODS
    out = {
        "fig2": Scenario("fig2", _engine(kT_h=0.5), all3, (g_grid,)),
        "fig3": Scenario("fig3", _engine(), all3, (g_grid,)),
        "fig4": Scenario("fig4", _engine(omega_h=2.0), all3, (g_grid,)),
        "fig5": Scenario("fig5", _engine(omega_h=2.0), all3, (g_grid,)),
        "fig6a": Scenario("fig6a", _engine(), all3, (Sweep("kT_h", _kT_grid()),)),
        "fig6b": Scenario("fig6b", _engine(omega_h=2.0), all3, (Sweep("kT_h", _kT_grid()),)),
        "fig6a_inset": Scenario("fig6a_inset", _engine(g=0.5), all3, (Sweep("kT_h", _kT_grid()),)),
        "fig6b_inset": Scenario("fig6b_inset", _engine(omega_h=2.0, g=0.5), all3,
                                (Sweep("kT_h", _kT_grid()),)),
        "fig7": Scenario("fig7", _engine(kT_h=1.0), all3,
                         (Sweep("omega_h", tuple(float(v) for v in np.linspace(1.0, 2.0, 21))),)),
        "fig8": Scenario("fig8", QubitMachineParams.from_kappas(1.0, 0.1, 0.005, 0.005, 0.5, 5.0),
                         QUBIT_METHODS, (Sweep("g", default_g_grid(lo=1e-4)),)),
        "figA1": Scenario("figA1", _engine(), ("exact", "local"),
                          (Sweep("n", (100, 200, 400)),
                           Sweep("omega_cut", (1.0, 1.5, 2.0, 3.0, 4.0, 5.0))),
                          ExactOptions(clip_to_recurrence=True)),
    }
    return out


PRESETS = _presets()


def get_preset(name: str) -> Scenario:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None


# config files ----------------------------------------------------------------

def _sweep_from_mapping(d: dict) -> Sweep:
    var = d["variable"]
    if "values" in d:
        return Sweep(var, tuple(d["values"]))
    start, stop, num = float(d["start"]), float(d["stop"]), int(d["num"])
    spacing = d.get("spacing", "linear")
    if spacing == "log":
        vals = np.geomspace(start, stop, num)
    elif spacing == "linear":
        vals = np.linspace(start, stop, num)
    else:
        raise ValueError(f"spacing must be 'linear' or 'log', got {spacing!r}")
    return Sweep(var, tuple(float(v) for v in vals))


def scenario_from_mapping(d: dict) -> Scenario:
    kind = d.get("kind", "oscillators")
    params = dict(d["params"])
    if kind == "qubits":
        if "kappa_c" in params or "kappa_h" in params:
            p = QubitMachineParams.from_kappas(params["omega"], params["g"], params["kappa_c"],
                                               params["kappa_h"], params["kT_c"], params["kT_h"])
        else:
            p = QubitMachineParams(**params)
        default_methods = QUBIT_METHODS
    elif kind == "oscillators":
        p = EngineParams.from_mapping(params)
        default_methods = OSCILLATOR_METHODS
    else:
        raise ValueError(f"kind must be 'oscillators' or 'qubits', got {kind!r}")
    sweeps = d.get("sweeps") or ([d["sweep"]] if "sweep" in d else [])
    exact = ExactOptions(**d.get("exact", {}))
    return Scenario(d.get("name", "custom"), p, tuple(d.get("methods", default_methods)),
                    tuple(_sweep_from_mapping(s) for s in sweeps), exact)


def load_scenario(path) -> Scenario:
    path = Path(path)
    text = path.read_text()
    data = json.loads(text) if path.suffix.lower() == ".json" else toml_loads(text)
    return scenario_from_mapping(data)


def resolve_scenario(name_or_path: str) -> Scenario:
    if name_or_path in PRESETS:
        return PRESETS[name_or_path]
    path = Path(name_or_path)
    if path.exists():
        return load_scenario(path)
    raise KeyError(f"{name_or_path!r} is neither a preset ({', '.join(sorted(PRESETS))}) "
                   "nor an existing config file")


def with_exact_overrides(sc: Scenario, **overrides) -> Scenario:
    changes = {k: v for k, v in overrides.items() if v is not None}
    if not changes:
        return sc
    return dataclasses.replace(sc, exact=dataclasses.replace(sc.exact, **changes))


def second_law_violations(table: Table) -> list:
    """Oscillator rows with P > 0, J_h > 0 and efficiency at or above Carnot,
    checking the per-channel efficiencies of global rows too."""
    bad = []
    for row in table.rows:
        if row.get("error") or "J_h" not in row or row.get("eta") in ("", None):
            continue
        carnot = 1 - row["kT_c"] / row["kT_h"]
        if isinstance(row["eta"], float) and row["P"] > 0 and row["J_h"] > 0 and row["eta"] >= carnot:
            bad.append((row, "eta"))
        if row["method"] == "global":
            for sign in ("plus", "minus"):
                jh = row[f"J_h_{sign}"]
                if jh > 0 and row[f"eta_{sign}"] > 0 and row[f"eta_{sign}"] >= carnot:
                    bad.append((row, f"eta_{sign}"))
    return bad

