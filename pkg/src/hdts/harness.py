"""Experiment configuration, the Monte Carlo driver and CSV output.

Every replication ``r`` draws from streams keyed by ``(seed, r, slot)`` only,
so results do not depend on the number of workers or on scheduling.
Slot 0 holds the data, slot ``1 + k`` the bootstrap for the ``k``-th block
size (or the selector and final band for Table 2).
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import itertools
import json
import os
import subprocess
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hdts.dgp import DgpConfig, ErrorCase, Model, simulate
from hdts.exceptions import ConfigError, InvalidBlockSize
from hdts.gausslab import ArchFig1, GaussianAnalog, MaxStatSample, estimate_kolmogorov_distance, max_stat_draws, pp_curve
from hdts.numerics import RngStream, check_series
from hdts.procedures import bandedness_test, uniform_confidence_band, white_noise_test

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXPERIMENTS = ("Table1", "Table2", "Table3", "Fig1", "Custom")
PROCEDURES = ("band", "white_noise", "bandedness", "select", "gauss")
_DEFAULT_PROCEDURE = {"Table1": "band", "Table2": "select", "Table3": "white_noise", "Fig1": "gauss"}
_REPS_PER_TASK = 25


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat description of one experiment.

    List-valued fields span the grid of data-generating cells; each model
    only varies over the parameters it uses (``rho`` and ``error_cases`` for
    ``Var1``, ``beta0`` for ``ArchFig1``).
    """

    experiment: str = "Custom"
    procedure: str | None = None
    models: tuple[str, ...] = ("Var1",)
    n: int = 120
    p: tuple[int, ...] = (500,)
    rho: tuple[float, ...] = (0.2,)
    error_cases: tuple[str, ...] = ("i",)
    beta0: tuple[float, ...] = (0.0,)
    burn_in: int = 200
    block_sizes: tuple[int, ...] = (10,)
    lags: int = 1
    iota: int = 1
    alphas: tuple[float, ...] = (0.10, 0.05)
    mc_reps: int = 500
    b_reps: int = 199
    seed: int = 20140101
    workers: int = 1
    b_int: int = 6
    b_outer: int = 500
    candidates: tuple[int, ...] = (4, 6, 8, 10, 12, 15, 20)
    grid_size: int = 199
    data_path: str | None = None

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if str(f.type).startswith("tuple") and not isinstance(value, tuple):
                value = tuple(value) if isinstance(value, (list, np.ndarray)) else (value,)
                object.__setattr__(self, f.name, value)
        if self.procedure is None:
            object.__setattr__(self, "procedure", _DEFAULT_PROCEDURE.get(self.experiment, "band"))
        validate_config(self)

    @property
    def resolved_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def to_dict(self) -> dict:
        return {f.name: _jsonable(getattr(self, f.name)) for f in dataclasses.fields(self)}

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form, excluding ``workers``."""
        payload = {k: v for k, v in self.to_dict().items() if k != "workers"}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _jsonable(value):
    return list(value) if isinstance(value, tuple) else value


def validate_config(cfg: ExperimentConfig):
    """Raise :class:`ConfigError` naming the first offending field."""
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"must be one of {EXPERIMENTS}, got {cfg.experiment!r}")
    if cfg.procedure not in PROCEDURES:
        raise ConfigError("procedure", f"must be one of {PROCEDURES}, got {cfg.procedure!r}")
    for name in ("n", "mc_reps", "b_reps", "b_outer", "grid_size", "lags", "iota"):
        if not isinstance(getattr(cfg, name), (int, np.integer)) or getattr(cfg, name) < 1:
            raise ConfigError(name, "must be a positive integer")
    if cfg.burn_in < 0:
        raise ConfigError("burn_in", "must be non-negative")
    if cfg.workers < 0:
        raise ConfigError("workers", "must be non-negative (0 = all cores)")
    if not isinstance(cfg.seed, (int, np.integer)) or not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed", "must be a 64-bit unsigned integer")
    for name in ("models", "p", "alphas", "block_sizes"):
        if not getattr(cfg, name):
            raise ConfigError(name, "must be non-empty")
    for m in cfg.models:
        try:
            Model(m)
        except ValueError:
            raise ConfigError("models", f"unknown model {m!r}; choose from {[x.value for x in Model]}") from None
    for c in cfg.error_cases:
        try:
            ErrorCase.parse(c)
        except ValueError:
            raise ConfigError("error_cases", f"unknown error case {c!r}") from None
    if any(not 0.0 <= r < 1.0 for r in cfg.rho):
        raise ConfigError("rho", "values must lie in [0, 1)")
    if any(not 0.0 <= b < 1.0 for b in cfg.beta0):
        raise ConfigError("beta0", "values must lie in [0, 1)")
    if any(p < 1 for p in cfg.p):
        raise ConfigError("p", "values must be positive")
    if any(not 0.0 < a < 1.0 for a in cfg.alphas):
        raise ConfigError("alphas", "values must lie in (0, 1)")
    if cfg.procedure == "gauss":
        return
    rows = cfg.n - cfg.lags if cfg.procedure == "white_noise" else cfg.n
    if cfg.procedure == "white_noise" and rows < 1:
        raise ConfigError("lags", f"must be below n = {cfg.n}")
    if cfg.procedure == "select":
        if cfg.b_int < 1 or cfg.n % cfg.b_int:
            raise ConfigError("b_int", f"must divide n = {cfg.n}")
        if not cfg.candidates or any(c < 1 or cfg.n // c < 2 for c in cfg.candidates):
            raise ConfigError("candidates", f"each candidate must leave at least two blocks in n = {cfg.n}")
    elif any(not 1 <= b <= rows for b in cfg.block_sizes):
        raise ConfigError("block_sizes", f"each block size must lie in [1, {rows}]")
    if cfg.procedure == "bandedness" and any(cfg.iota >= p for p in cfg.p):
        raise ConfigError("iota", "must be below every p")


_FIELD_NAMES = {f.name for f in dataclasses.fields(ExperimentConfig)}


def config_from_mapping(data: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Build a config from a flat mapping; unknown keys are errors."""
    for key in data:
        if key not in _FIELD_NAMES:
            raise ConfigError(key, "unknown configuration key")
    values = dataclasses.asdict(base) if base is not None else {}
    values.update(data)
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from None


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read a flat TOML (``.toml``) or JSON file."""
    path = Path(path)
    raw = path.read_bytes()
    try:
        data = tomllib.loads(raw.decode()) if path.suffix.lower() == ".toml" else json.loads(raw)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict) or any(isinstance(v, dict) for v in data.values()):
        raise ConfigError("config", "the config file must be a flat key-value table")
    return config_from_mapping(data, base)


_TABLE1 = dict(
    experiment="Table1", models=("Var1",), n=120, rho=(0.2, 0.5), error_cases=("i", "ii", "iii"),
    block_sizes=(4, 6, 8, 10, 12, 15, 20), alphas=(0.10, 0.05),
)
_TABLE2 = dict(experiment="Table2", models=("Var1",), n=120, b_int=6, b_outer=500, alphas=(0.05,))
_TABLE3 = dict(
    experiment="Table3", models=("IidMaCov", "MArch", "Var1"), n=60, rho=(0.3,), error_cases=("ii",),
    block_sizes=(1, 2, 3, 4, 5, 6), alphas=(0.10, 0.05),
)
_FIG1 = dict(experiment="Fig1", models=("ArchFig1",), n=60, beta0=(0.0, 0.2, 0.5))

PRESETS: dict[str, ExperimentConfig] = {
    "table1-mini": ExperimentConfig(**_TABLE1, p=(500,), mc_reps=500, b_reps=199),
    "table1": ExperimentConfig(**_TABLE1, p=(500, 1000), mc_reps=5000, b_reps=499),
    "table2-mini": ExperimentConfig(**_TABLE2, p=(500,), rho=(0.2,), error_cases=("i",), mc_reps=200, b_reps=199),
    "table2": ExperimentConfig(**_TABLE2, p=(500,), rho=(0.2, 0.5), error_cases=("i", "ii", "iii"), mc_reps=200, b_reps=499),
    "table3-mini": ExperimentConfig(**_TABLE3, p=(30,), lags=1, mc_reps=1000, b_reps=199),
    "table3": ExperimentConfig(**_TABLE3, p=(30, 50), lags=1, mc_reps=5000, b_reps=499),
    "table3-L3": ExperimentConfig(**_TABLE3, p=(30, 50), lags=3, mc_reps=5000, b_reps=499),
    "fig1-mini": ExperimentConfig(**_FIG1, p=(100, 500), mc_reps=2000),
    "fig1": ExperimentConfig(**_FIG1, p=(100, 300, 500), mc_reps=5000),
}


@dataclass(frozen=True)
class Cell:
    model: str
    p: int
    rho: float = 0.0
    error_case: str = "CommonFactor"
    beta0: float = 0.0

    @property
    def label(self) -> str:
        parts = [self.model]
        if self.model == "Var1":
            parts += [f"rho={self.rho:g}", f"case={ErrorCase(self.error_case).roman}"]
        if self.model == "ArchFig1":
            parts.append(f"beta0={self.beta0:g}")
        parts.append(f"p={self.p}")
        return "|".join(parts)

    def dgp(self, n: int, burn_in: int) -> DgpConfig:
        return DgpConfig(Model(self.model), n, self.p, self.rho, ErrorCase(self.error_case), self.beta0, burn_in)


def experiment_cells(cfg: ExperimentConfig) -> list[Cell]:
    """The data-generating cells, in table column order."""
    cells = []
    for model in cfg.models:
        for p in cfg.p:
            if model == "Var1":
                for rho, case in itertools.product(cfg.rho, cfg.error_cases):
                    cells.append(Cell(model, p, rho=rho, error_case=ErrorCase.parse(case).value))
            elif model == "ArchFig1":
                cells.extend(Cell(model, p, beta0=b) for b in cfg.beta0)
            else:
                cells.append(Cell(model, p))
    return cells


@dataclass(frozen=True)
class ResultRow:
    cell: str
    b_n: str
    alpha: float
    mc_reps: int
    hits: int

    @property
    def percent(self) -> float:
        return 100.0 * self.hits / self.mc_reps

    @property
    def se(self) -> float:
        """Binomial Monte Carlo standard error, in percentage points."""
        phat = self.hits / self.mc_reps
        return float(np.sqrt(phat * (1.0 - phat) / self.mc_reps) * 100.0)


@dataclass
class ResultTable:
    """Coverage (band, select) or rejection (tests) percentages."""

    rows: list[ResultRow] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    header = ("cell", "b_n", "alpha", "mc_reps", "hits", "percent", "se")

    def records(self):
        for r in self.rows:
            yield (r.cell, r.b_n, repr(r.alpha), r.mc_reps, r.hits, f"{r.percent:.1f}", repr(r.se))

    def lookup(self, cell: str, b_n, alpha: float) -> ResultRow:
        for r in self.rows:
            if r.cell == cell and r.b_n == str(b_n) and np.isclose(r.alpha, alpha):
                return r
        raise KeyError((cell, b_n, alpha))


@dataclass(frozen=True)
class GaussLabRow:
    cell: str
    n: int
    p: int
    beta0: float
    reps: int
    kolmogorov: float
    max_pp_deviation: float


@dataclass
class GaussLabTable:
    rows: list[GaussLabRow] = field(default_factory=list)
    curves: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    header = ("cell", "n", "p", "beta0", "reps", "kolmogorov", "max_pp_deviation")

    def records(self):
        for r in self.rows:
            yield (r.cell, r.n, r.p, repr(r.beta0), r.reps, repr(r.kolmogorov), repr(r.max_pp_deviation))


# --- per-replication work ----------------------------------------------------


def _band_hits(X, cfg: ExperimentConfig, rep: int) -> np.ndarray:
    out = np.zeros((len(cfg.block_sizes), len(cfg.alphas)), dtype=bool)
    truth = np.zeros(X.shape[1])
    for k, b_n in enumerate(cfg.block_sizes):
        stream = RngStream.for_replication(cfg.seed, rep, 1 + k)
        band = uniform_confidence_band(X, b_n, cfg.b_reps, cfg.alphas[0], stream)
        out[k] = [band.at_alpha(a).contains(truth) for a in cfg.alphas]
    return out


def _test_hits(X, cfg: ExperimentConfig, rep: int) -> np.ndarray:
    out = np.zeros((len(cfg.block_sizes), len(cfg.alphas)), dtype=bool)
    for k, b_n in enumerate(cfg.block_sizes):
        stream = RngStream.for_replication(cfg.seed, rep, 1 + k)
        if cfg.procedure == "white_noise":
            res = white_noise_test(X, cfg.lags, b_n, cfg.b_reps, cfg.alphas[0], stream)
        else:
            res = bandedness_test(X, cfg.iota, b_n, cfg.b_reps, cfg.alphas[0], stream)
        out[k] = [res.at_alpha(a).reject for a in cfg.alphas]
    return out


def _select_hits(X, cfg: ExperimentConfig, rep: int) -> tuple[np.ndarray, list[int]]:
    from hdts.blocksize import select_block_size

    out = np.zeros((1, len(cfg.alphas)), dtype=bool)
    chosen = []
    for a_idx, alpha in enumerate(cfg.alphas):
        report = select_block_size(
            X, cfg.b_int, cfg.candidates, cfg.b_outer, cfg.b_reps, alpha,
            RngStream.for_replication(cfg.seed, rep, 1 + 2 * a_idx),
        )
        band = uniform_confidence_band(
            X, report.chosen, cfg.b_reps, alpha, RngStream.for_replication(cfg.seed, rep, 2 + 2 * a_idx)
        )
        out[0, a_idx] = band.contains(np.zeros(X.shape[1]))
        chosen.append(report.chosen)
    return out, chosen


def _run_reps(cfg: ExperimentConfig, cell: Cell, start: int, stop: int):
    """Indicator arrays ``(stop - start, n_rows, n_alphas)`` plus per-rep extras."""
    hits, extras = [], []
    dgp = cell.dgp(cfg.n, cfg.burn_in)
    for rep in range(start, stop):
        X = simulate(dgp, RngStream.for_replication(cfg.seed, rep, 0))
        if cfg.procedure == "band":
            hits.append(_band_hits(X, cfg, rep))
        elif cfg.procedure == "select":
            h, chosen = _select_hits(X, cfg, rep)
            hits.append(h)
            extras.append(chosen)
        else:
            hits.append(_test_hits(X, cfg, rep))
    return np.array(hits), extras


def _gauss_chunk(cfg: ExperimentConfig, cell: Cell, side: str, start: int, stop: int) -> np.ndarray:
    gen = ArchFig1(cell.beta0, cfg.burn_in) if side == "X" else GaussianAnalog()
    # X and Y streams are shared by every cell: matched seeds across (p, beta0)
    stream = RngStream.for_replication(cfg.seed, 0, 0 if side == "X" else 1)
    return max_stat_draws(gen, cfg.n, cell.p, stream, start, stop)


def _map(tasks, workers: int):
    """Apply ``fn(*args)`` for each task, in order, optionally in a process pool."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*args) for fn, *args in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *args) for fn, *args in tasks]
        return [f.result() for f in futures]


def _chunks(total: int, size: int):
    return [(lo, min(lo + size, total)) for lo in range(0, total, size)]


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ResultTable | GaussLabTable:
    """Run every Monte Carlo replication and aggregate.

    ``workers`` overrides ``cfg.workers``; the output never depends on it.
    """
    started = time.perf_counter()
    n_workers = cfg.resolved_workers if workers is None else (workers if workers > 0 else os.cpu_count() or 1)
    if cfg.procedure == "gauss":
        table = _run_gauss(cfg, n_workers)
    elif cfg.data_path is not None:
        table = _run_on_data(cfg)
    else:
        table = _run_tables(cfg, n_workers)
    table.meta.update(
        seed=cfg.seed,
        config_hash=cfg.config_hash(),
        config=cfg.to_dict(),
        git_hash=_git_hash(),
        wall_time_s=time.perf_counter() - started,
        workers=n_workers,
    )
    return table


def _run_tables(cfg: ExperimentConfig, workers: int) -> ResultTable:
    cells = experiment_cells(cfg)
    spans = _chunks(cfg.mc_reps, _REPS_PER_TASK)
    tasks = [(_run_reps, cfg, cell, lo, hi) for cell in cells for lo, hi in spans]
    results = _map(tasks, workers)
    table = ResultTable()
    chosen_by_cell = {}
    b_labels = ["auto"] if cfg.procedure == "select" else [str(b) for b in cfg.block_sizes]
    for c_idx, cell in enumerate(cells):
        parts = results[c_idx * len(spans) : (c_idx + 1) * len(spans)]
        hits = np.concatenate([h for h, _ in parts]).sum(axis=0)
        for k, b_label in enumerate(b_labels):
            for a_idx, alpha in enumerate(cfg.alphas):
                table.rows.append(ResultRow(cell.label, b_label, float(alpha), cfg.mc_reps, int(hits[k, a_idx])))
        if cfg.procedure == "select":
            chosen = np.array([c for _, extra in parts for c in extra])
            chosen_by_cell[cell.label] = {
                str(a): {str(b): int((chosen[:, i] == b).sum()) for b in cfg.candidates}
                for i, a in enumerate(cfg.alphas)
            }
    if chosen_by_cell:
        table.meta["chosen_block_sizes"] = chosen_by_cell
    return table


def _run_on_data(cfg: ExperimentConfig) -> ResultTable:
    """Apply the procedure once to a user-supplied CSV matrix (rows = time)."""
    X = check_series(np.loadtxt(cfg.data_path, delimiter=",", ndmin=2))
    if cfg.procedure == "select":
        hits, chosen = _select_hits(X, cfg, 0)
        labels = ["auto"]
    else:
        for b in cfg.block_sizes:
            if not 1 <= b <= X.shape[0]:
                raise InvalidBlockSize(f"block size {b} outside [1, {X.shape[0]}]")
        hits = _band_hits(X, cfg, 0) if cfg.procedure == "band" else _test_hits(X, cfg, 0)
        labels = [str(b) for b in cfg.block_sizes]
    table = ResultTable()
    label = f"data={Path(cfg.data_path).name}|p={X.shape[1]}"
    for k, b_label in enumerate(labels):
        for a_idx, alpha in enumerate(cfg.alphas):
            table.rows.append(ResultRow(label, b_label, float(alpha), 1, int(hits[k, a_idx])))
    return table


def _run_gauss(cfg: ExperimentConfig, workers: int) -> GaussLabTable:
    cells = experiment_cells(cfg)
    spans = _chunks(cfg.mc_reps, 2 * _REPS_PER_TASK)
    y_keys = sorted({c.p for c in cells})
    tasks = [(_gauss_chunk, cfg, cell, "X", lo, hi) for cell in cells for lo, hi in spans]
    tasks += [(_gauss_chunk, cfg, Cell("GaussianAnalog", p), "Y", lo, hi) for p in y_keys for lo, hi in spans]
    results = _map(tasks, workers)
    k = len(spans)
    x_draws = [np.concatenate(results[i * k : (i + 1) * k]) for i in range(len(cells))]
    off = len(cells) * k
    y_draws = {p: np.concatenate(results[off + j * k : off + (j + 1) * k]) for j, p in enumerate(y_keys)}
    table = GaussLabTable()
    for cell, xd in zip(cells, x_draws):
        sx = MaxStatSample(xd, cfg.mc_reps, "X")
        sy = MaxStatSample(y_draws[cell.p], cfg.mc_reps, "Y")
        curve = pp_curve(sx, sy, cfg.grid_size)
        table.rows.append(
            GaussLabRow(cell.label, cfg.n, cell.p, cell.beta0, cfg.mc_reps, estimate_kolmogorov_distance(sx, sy), curve.max_deviation)
        )
        table.curves[cell.label] = curve
    return table


def _git_hash() -> str | None:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5, cwd=Path(__file__).parent
        )
    except (OSError, subprocess.SubprocessError):
        return None
    return out.stdout.strip() or None if out.returncode == 0 else None


# --- output ------------------------------------------------------------------


def emit_csv(table: ResultTable | GaussLabTable, path, meta_path=None) -> None:
    """Write ``table`` as RFC-4180 CSV plus a JSON metadata sidecar.

    The sidecar defaults to ``meta.json`` next to ``path``.  Percentages are
    written with one decimal, standard errors at full precision.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(table.header)
        writer.writerows(table.records())
    meta_path = path.parent / "meta.json" if meta_path is None else Path(meta_path)
    meta_path.write_text(json.dumps(table.meta, indent=2, sort_keys=True, default=_jsonable))


def emit_ppcurves(table: GaussLabTable, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(("cell", "q", "x_cdf_at_y_quantile"))
        for label, curve in table.curves.items():
            writer.writerows((label, repr(float(q)), repr(float(v))) for q, v in zip(curve.grid, curve.x_cdf_at_y_quantiles))


def read_csv(path) -> ResultTable:
    """Parse a ``results.csv`` written by :func:`emit_csv` for a ResultTable."""
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        rows = [
            ResultRow(r["cell"], r["b_n"], float(r["alpha"]), int(r["mc_reps"]), int(r["hits"]))
            for r in reader
        ]
    return ResultTable(rows)


def write_outputs(table: ResultTable | GaussLabTable, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emit_csv(table, out / "results.csv")
    written = [out / "results.csv", out / "meta.json"]
    if isinstance(table, GaussLabTable):
        emit_ppcurves(table, out / "ppcurve.csv")
        written.append(out / "ppcurve.csv")
    return written
