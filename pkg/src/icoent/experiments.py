"""Reproducible experiment drivers with CSV and JSON output.

One driver per CLI subcommand.  Every run writes its data file(s) plus a
metadata.json carrying the artifact version, the full config echo, the basis
convention id, the logarithm base and per-stage wall-clock timings.  All
numeric pipelines are seed-deterministic, so re-running a driver with the
same config reproduces the CSV byte for byte (timings live only in the
metadata).
"""

from __future__ import annotations

import csv
import json
import math
import time
from collections import OrderedDict
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DomainError
from .fermionic import (
    amplitude_bound_max_eps,
    assemble_rho_eps,
    biseparable_decomposition,
    build_mirrored_ensemble,
    epsilon_star,
    random_ensemble,
    verify_decomposition,
)
from .measures import (
    SEPARABLE_DISTANCE_FLOOR,
    OptimizerConfig,
    geometric_entanglement,
    gme_W,
    log_negativity,
    refine_boundary,
    separable_ball,
    temperature_threshold,
    zero_crossing,
)
from .qstate import DensityMatrix, PureState, frobenius_distance, partial_trace
from .spin_system import (
    IcosahedronGraph,
    ModelParams,
    SpectrumCache,
    build_hamiltonian,
    build_icosahedron,
    diagonalize,
    frh_sweep,
    ground_state,
    observables,
    pair_at_distance,
    product_basis_state,
    quench_series,
    thermal_observables,
    thermal_state_rdm,
    triangle_scaled,
)

BASIS_CONVENTION_ID = "site1-msb;bit0=spin-up"
LOG_BASE = "e"
ZERO_TEMPERATURE_PROXY = 1e-6  # T used for "T -> 0+" when the ground manifold is degenerate
GROUND_STATE_MIN_FIELD = 0.05  # below this the frustrated manifold is treated as degenerate
SHALLOW_WATER_FLOOR = SEPARABLE_DISTANCE_FLOOR  # distance level declared effectively separable

FIELD_SWEEP_HEADER = ["h", "E_logneg", "D_geom", "W_gme", "sz", "sxsx_conn", "sysy_conn", "szsz_conn"]
TEMP_SWEEP_HEADER = ["T", "E_logneg", "D_geom", "W_gme", "dist2_to_I4", "dist3_to_I8"]
QUENCH_HEADER = ["t", "E_logneg", "D_geom", "W_gme"]
SEPARATION_HEADER = ["kind", "scale", "sites", "E_logneg", "D_geom", "W_gme"]
FRH_HEADER = ["n", "E_n", "lambda_min_1site", "lambda_min_2site", "lambda_min_3site"]


@dataclass
class RunConfig:
    """Flat bundle of all subcommand parameters; unused fields are ignored.

    Grids must be strictly increasing; the seed is recorded in every output.
    """

    out_dir: Path = Path(".")
    seed: int = 0
    j: float = 1.0
    h: float = 3.0
    # field sweep grid
    h_min: float = 0.0
    h_max: float = 6.0
    h_step: float = 0.05
    # temperature grid (log spaced)
    t_min: float = 0.2
    t_max: float = 40.0
    t_points: int = 120
    # quench grid
    time_max: float = 5.0
    time_step: float = 0.02
    pattern: str = "101010101010"
    # subsystem selections as "+"-joined site labels; empty means the
    # lexicographically smallest adjacent pair / face
    pair: str = ""
    face: str = ""
    # optimizer budgets (sweep-grade; single-shot library calls default higher)
    restarts: int = 20
    max_iter: int = 500
    witness_restarts: int = 50
    witness_max_iter: int = 600
    refine: bool = True
    # fermionic verification
    m: int = 3
    n_seeds: int = 100

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        if self.h < 0:
            raise DomainError(f"h must be nonnegative, got {self.h}")
        if self.h_step <= 0 or self.h_max < self.h_min or self.h_min < 0:
            raise DomainError(f"invalid field grid [{self.h_min}, {self.h_max}] step {self.h_step}")
        if not (0 < self.t_min < self.t_max) or self.t_points < 2:
            raise DomainError(f"invalid temperature grid ({self.t_min}, {self.t_max}, {self.t_points})")
        if self.time_step <= 0 or self.time_max <= 0:
            raise DomainError(f"invalid time grid step {self.time_step}, max {self.time_max}")
        if self.restarts < 1 or self.witness_restarts < 1:
            raise DomainError("restart counts must be >= 1")
        if self.m not in (3, 4):
            raise DomainError(f"fermionic mode count must be 3 or 4, got {self.m}")
        if self.n_seeds < 1:
            raise DomainError(f"n_seeds must be >= 1, got {self.n_seeds}")

    def field_grid(self) -> np.ndarray:
        count = int(round((self.h_max - self.h_min) / self.h_step)) + 1
        return self.h_min + self.h_step * np.arange(count)

    def temperature_grid(self) -> np.ndarray:
        return np.geomspace(self.t_min, self.t_max, self.t_points)

    def time_grid(self) -> np.ndarray:
        count = int(math.floor(self.time_max / self.time_step + 1e-9)) + 1
        return self.time_step * np.arange(count)

    def distance_config(self) -> OptimizerConfig:
        return OptimizerConfig(restarts=self.restarts, max_iter=self.max_iter, tol=1e-14, seed=self.seed)

    def witness_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            restarts=self.witness_restarts, max_iter=self.witness_max_iter, tol=1e-12, seed=self.seed
        )


class SpectrumStore:
    """Keeps diagonalized spectra keyed by (j, h) so drivers never repeat work.

    Bounded because one 4096-dim eigensystem holds ~134 MB; field sweeps visit
    many h values and must not accumulate them all.
    """

    def __init__(self, graph: IcosahedronGraph | None = None, max_entries: int = 2):
        self.graph = graph if graph is not None else build_icosahedron()
        self.max_entries = max_entries
        self._entries: OrderedDict[tuple[float, float], SpectrumCache] = OrderedDict()
        self.diagonalizations = 0
        self.diagonalize_seconds = 0.0

    def get(self, params: ModelParams) -> SpectrumCache:
        key = (params.j, params.h)
        if key in self._entries:
            self._entries.move_to_end(key)
            return self._entries[key]
        start = time.perf_counter()
        cache = diagonalize(build_hamiltonian(self.graph, params), params)
        self.diagonalize_seconds += time.perf_counter() - start
        self.diagonalizations += 1
        self._entries[key] = cache
        while len(self._entries) > self.max_entries:
            self._entries.popitem(last=False)
        return cache


def _format_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_value(v) for v in row])


def _json_value(x):
    if x is None:
        return None
    if isinstance(x, float) and math.isinf(x):
        return "beyond_range"
    return x


def _write_metadata(out_dir: Path, command: str, config: RunConfig, timings: dict) -> Path:
    echo = {k: (str(v) if isinstance(v, Path) else v) for k, v in asdict(config).items()}
    meta = {
        "artifact_version": __version__,
        "command": command,
        "config": echo,
        "basis_convention": BASIS_CONVENTION_ID,
        "log_base": LOG_BASE,
        "timings": timings,
    }
    path = out_dir / "metadata.json"
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _zero_temperature_rdm(cache: SpectrumCache, keep) -> DensityMatrix:
    """Ground-state RDM, or the T -> 0+ Gibbs limit when the manifold is degenerate."""
    if cache.ground_degeneracy > 1 or cache.params.h < GROUND_STATE_MIN_FIELD:
        return thermal_state_rdm(cache, ZERO_TEMPERATURE_PROXY, keep)
    return partial_trace(ground_state(cache), keep)


def _parse_sites(text: str, expected: int, n_sites: int = 12) -> tuple[int, ...]:
    """Parse a '+'-joined site selection like '1+2+5'."""
    try:
        sites = tuple(int(part) for part in text.split("+"))
    except ValueError:
        raise DomainError(f"site selection must look like '1+2', got {text!r}") from None
    if len(sites) != expected or len(set(sites)) != expected:
        raise DomainError(f"expected {expected} distinct sites, got {text!r}")
    if any(not 1 <= s <= n_sites for s in sites):
        raise DomainError(f"site labels must lie in 1..{n_sites}, got {text!r}")
    return sites


def _selected_subsystems(config: RunConfig, graph: IcosahedronGraph):
    pair = _parse_sites(config.pair, 2) if config.pair else pair_at_distance(graph, 1)
    face = _parse_sites(config.face, 3) if config.face else triangle_scaled(graph, 1)
    return pair, face


@dataclass
class FieldSweepResult:
    rows: list
    h2_star: float | None
    csv_path: Path
    metadata_path: Path


def run_field_sweep(config: RunConfig, store: SpectrumStore | None = None) -> FieldSweepResult:
    """Ground-state detectors and correlators on a field grid, one diagonalization per h."""
    store = store if store is not None else SpectrumStore()
    graph = store.graph
    pair = pair_at_distance(graph, 1)
    face = triangle_scaled(graph, 1)
    dcfg = config.distance_config()
    wcfg = config.witness_config()
    config.out_dir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    diag_before = store.diagonalize_seconds
    rows = []
    for h in config.field_grid():
        params = ModelParams(j=config.j, h=float(h))
        cache = store.get(params)
        cold = cache.ground_degeneracy > 1 or h < GROUND_STATE_MIN_FIELD
        if cold:
            rdm_pair = thermal_state_rdm(cache, ZERO_TEMPERATURE_PROXY, pair)
            rdm_face = thermal_state_rdm(cache, ZERO_TEMPERATURE_PROXY, face)
            obs = thermal_observables(cache, ZERO_TEMPERATURE_PROXY, graph)
        else:
            psi = ground_state(cache)
            rdm_pair = partial_trace(psi, pair)
            rdm_face = partial_trace(psi, face)
            obs = observables(psi, graph)
        e_val = log_negativity(rdm_pair, (pair[0],))
        d_val, _ = geometric_entanglement(rdm_face, config=dcfg)
        w_val = gme_W(rdm_face, wcfg)
        rows.append(
            (float(h), e_val, d_val, w_val, obs["sz"], obs["sxsx_conn"], obs["sysy_conn"], obs["szsz_conn"])
        )

    # largest grid h at which the pair negativity is exactly zero, scanned from above
    h2_star = None
    e_by_h = [(row[0], row[1]) for row in rows]
    if any(v > 1e-8 for _, v in e_by_h):
        for h, v in reversed(e_by_h):
            if v <= 1e-8:
                h2_star = h
                break

    csv_path = config.out_dir / "field_sweep.csv"
    _write_csv(csv_path, FIELD_SWEEP_HEADER, rows)
    timings = {
        "diagonalizations": store.diagonalizations,
        "diagonalize_s": store.diagonalize_seconds - diag_before,
        "total_s": time.perf_counter() - start,
    }
    meta_path = _write_metadata(config.out_dir, "field-sweep", config, timings)
    return FieldSweepResult(rows=rows, h2_star=h2_star, csv_path=csv_path, metadata_path=meta_path)


@dataclass
class TempSweepResult:
    rows: list
    thresholds: dict
    csv_path: Path
    thresholds_path: Path
    metadata_path: Path


def run_temp_sweep(config: RunConfig, store: SpectrumStore | None = None) -> TempSweepResult:
    """Thermal detectors and ball distances on a log temperature grid at fixed h.

    Thresholds: T2/T3 by ball bisection, T_E/T_W by zero crossing of the
    detector curves (bisection-refined when ``refine`` is set), T3_star as the
    first grid temperature with the distance at or below 1e-4.
    """
    store = store if store is not None else SpectrumStore()
    graph = store.graph
    pair, face = _selected_subsystems(config, graph)
    cache = store.get(ModelParams(j=config.j, h=config.h))
    dcfg = config.distance_config()
    wcfg = config.witness_config()
    config.out_dir.mkdir(parents=True, exist_ok=True)

    ball2 = separable_ball(DensityMatrix(np.eye(4) / 4, sites=pair))
    ball3 = separable_ball(DensityMatrix(np.eye(8) / 8, sites=face))

    def e_of_t(t: float) -> float:
        return log_negativity(thermal_state_rdm(cache, t, pair), (pair[0],))

    def w_of_t(t: float) -> float:
        return gme_W(thermal_state_rdm(cache, t, face), wcfg)

    start = time.perf_counter()
    temps = config.temperature_grid()
    rows = []
    for t in temps:
        rdm_pair = thermal_state_rdm(cache, float(t), pair)
        rdm_face = thermal_state_rdm(cache, float(t), face)
        e_val = log_negativity(rdm_pair, (pair[0],))
        d_val, _ = geometric_entanglement(rdm_face, config=dcfg)
        w_val = gme_W(rdm_face, wcfg)
        rows.append(
            (
                float(t),
                e_val,
                d_val,
                w_val,
                frobenius_distance(rdm_pair, ball2.center),
                frobenius_distance(rdm_face, ball3.center),
            )
        )
    sweep_s = time.perf_counter() - start

    start = time.perf_counter()
    t_range = (config.t_min, config.t_max)
    t2 = temperature_threshold(cache, pair, ball2, t_range)
    t3 = temperature_threshold(cache, face, ball3, t_range)
    t_e = _refined_crossing([(r[0], r[1]) for r in rows], e_of_t, config.refine, xtol=5e-3)
    t_w = _refined_crossing([(r[0], r[3]) for r in rows], w_of_t, config.refine, xtol=2e-2)
    t3_star = next((r[0] for r in rows if r[2] <= SHALLOW_WATER_FLOOR), None)
    thresholds = {"T2": t2, "T3": t3, "T_E": t_e, "T_W": t_w, "T3_star": t3_star}
    threshold_s = time.perf_counter() - start

    csv_path = config.out_dir / "temp_sweep.csv"
    _write_csv(csv_path, TEMP_SWEEP_HEADER, rows)
    thresholds_path = config.out_dir / "thresholds.json"
    with open(thresholds_path, "w") as fh:
        json.dump({k: _json_value(v) for k, v in thresholds.items()}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    timings = {
        "diagonalizations": store.diagonalizations,
        "sweep_s": sweep_s,
        "thresholds_s": threshold_s,
    }
    meta_path = _write_metadata(config.out_dir, "temp-sweep", config, timings)
    return TempSweepResult(
        rows=rows,
        thresholds=thresholds,
        csv_path=csv_path,
        thresholds_path=thresholds_path,
        metadata_path=meta_path,
    )


def _refined_crossing(curve, live_fn, refine: bool, xtol: float, floor: float = 1e-8):
    """Grid-level zero crossing, sharpened against the live curve when asked."""
    crossing = zero_crossing(curve, floor=floor)
    if crossing is None or math.isinf(crossing) or not refine:
        return crossing
    svals = [s for s, _ in curve]
    above = [i for i, (_, v) in enumerate(curve) if v > floor]
    lo = svals[above[-1]]
    hi = svals[above[-1] + 1]
    return refine_boundary(live_fn, lo, hi, floor=floor, xtol=xtol)


@dataclass
class QuenchResult:
    rows: list
    csv_path: Path
    metadata_path: Path


def run_quench(config: RunConfig, store: SpectrumStore | None = None) -> QuenchResult:
    """Detector evolution after preparing a product state and evolving at fixed h."""
    store = store if store is not None else SpectrumStore()
    psi0 = product_basis_state(config.pattern)  # validate before paying for a spectrum
    graph = store.graph
    pair, face = _selected_subsystems(config, graph)
    cache = store.get(ModelParams(j=config.j, h=config.h))
    dcfg = config.distance_config()
    wcfg = config.witness_config()
    config.out_dir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    times = config.time_grid()
    series = quench_series(cache, psi0, times)
    rows = []
    for k, t in enumerate(times):
        column = series[:, k]
        psi = PureState(column / np.linalg.norm(column))
        e_val = log_negativity(partial_trace(psi, pair), (pair[0],))
        rdm_face = partial_trace(psi, face)
        d_val, _ = geometric_entanglement(rdm_face, config=dcfg)
        w_val = gme_W(rdm_face, wcfg)
        rows.append((float(t), e_val, d_val, w_val))

    csv_path = config.out_dir / "quench.csv"
    _write_csv(csv_path, QUENCH_HEADER, rows)
    timings = {
        "diagonalizations": store.diagonalizations,
        "total_s": time.perf_counter() - start,
    }
    meta_path = _write_metadata(config.out_dir, "quench", config, timings)
    return QuenchResult(rows=rows, csv_path=csv_path, metadata_path=meta_path)


@dataclass
class SeparationResult:
    rows: list
    csv_path: Path
    metadata_path: Path


def run_separation(config: RunConfig, store: SpectrumStore | None = None) -> SeparationResult:
    """Detectors vs spatial separation in the zero-temperature state at fixed h.

    Pairs at graph distance 1 and 2 carry the negativity; the minimal triangle
    and its bond-length-2 blow-up carry the distance and the 3-party witness.
    The selected vertex sets are recorded in the table.
    """
    store = store if store is not None else SpectrumStore()
    graph = store.graph
    cache = store.get(ModelParams(j=config.j, h=config.h))
    dcfg = config.distance_config()
    wcfg = config.witness_config()
    config.out_dir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    rows = []
    for d in (1, 2):
        sites = pair_at_distance(graph, d)
        rdm = _zero_temperature_rdm(cache, sites)
        rows.append(("pair", d, "+".join(map(str, sites)), log_negativity(rdm, (sites[0],)), None, None))
    for lam in (1, 2):
        sites = triangle_scaled(graph, lam)
        rdm = _zero_temperature_rdm(cache, sites)
        d_val, _ = geometric_entanglement(rdm, config=dcfg)
        w_val = gme_W(rdm, wcfg)
        rows.append(("triangle", lam, "+".join(map(str, sites)), None, d_val, w_val))

    csv_path = config.out_dir / "separation.csv"
    _write_csv(csv_path, SEPARATION_HEADER, rows)
    timings = {
        "diagonalizations": store.diagonalizations,
        "total_s": time.perf_counter() - start,
    }
    meta_path = _write_metadata(config.out_dir, "separation", config, timings)
    return SeparationResult(rows=rows, csv_path=csv_path, metadata_path=meta_path)


@dataclass
class FrhResult:
    rows: list
    csv_path: Path
    metadata_path: Path


def run_frh(config: RunConfig, store: SpectrumStore | None = None) -> FrhResult:
    """Minimal reduced-state eigenvalue per Hamiltonian eigenstate, for 1..3 adjacent sites."""
    store = store if store is not None else SpectrumStore()
    graph = store.graph
    cache = store.get(ModelParams(j=config.j, h=config.h))
    config.out_dir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    keeps = [(graph.vertices[0],), pair_at_distance(graph, 1), triangle_scaled(graph, 1)]
    sweeps = [frh_sweep(cache, keep) for keep in keeps]
    rows = []
    for n in range(cache.dim):
        energy = sweeps[0][n][0]
        rows.append((n, energy, sweeps[0][n][1], sweeps[1][n][1], sweeps[2][n][1]))

    csv_path = config.out_dir / "frh.csv"
    _write_csv(csv_path, FRH_HEADER, rows)
    timings = {
        "diagonalizations": store.diagonalizations,
        "total_s": time.perf_counter() - start,
    }
    meta_path = _write_metadata(config.out_dir, "frh", config, timings)
    return FrhResult(rows=rows, csv_path=csv_path, metadata_path=meta_path)


ANALYTIC_EPS_STAR = {3: 1.0 / (2.0 * math.sqrt(3.0)), 4: 1.0 / (2.0 * math.sqrt(7.0))}


@dataclass
class FermiVerifyResult:
    report: dict
    passed: bool
    report_path: Path
    metadata_path: Path


def run_fermi_verify(config: RunConfig) -> FermiVerifyResult:
    """Fuzzed construction-and-verification loop plus the analytic regression case."""
    m = config.m
    config.out_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()

    failures = []
    for index in range(config.n_seeds):
        rng = np.random.default_rng([config.seed, index])
        ensemble = random_ensemble(rng, m)
        eps_star = epsilon_star(ensemble)
        if not math.isfinite(eps_star) or eps_star <= 0:
            failures.append({"seed_index": index, "reason": f"epsilon_star={eps_star}"})
            continue
        eps = 0.5 * eps_star
        report = verify_decomposition(
            biseparable_decomposition(ensemble, eps), assemble_rho_eps(ensemble, eps)
        )
        if not report.passed:
            failures.append(
                {
                    "seed_index": index,
                    "reason": "verify failed",
                    "min_eigenvalue": report.min_component_eigenvalue,
                    "parity_commutator": report.max_parity_commutator,
                    "reconstruction_error": report.reconstruction_error,
                }
            )

    # analytic regression: uniform sigma^x perturbation on unbiased modes
    base = [(1.0, [0.0] * m, [(1.0, 0.0)] * m)]
    analytic = build_mirrored_ensemble(base, m)
    eps_star = epsilon_star(analytic)
    expected = ANALYTIC_EPS_STAR[m]
    half_report = verify_decomposition(
        biseparable_decomposition(analytic, 0.5 * eps_star), assemble_rho_eps(analytic, 0.5 * eps_star)
    )
    beyond = 1.5 * eps_star
    beyond_ok = beyond <= amplitude_bound_max_eps(analytic)
    beyond_report = verify_decomposition(
        biseparable_decomposition(analytic, beyond), assemble_rho_eps(analytic, beyond)
    )
    analytic_block = {
        "epsilon_star": eps_star,
        "expected": expected,
        "within_tolerance": abs(eps_star - expected) <= 1e-6,
        "valid_at_half": half_report.passed,
        "beyond_within_amplitude_bound": beyond_ok,
        "fails_psd_beyond": (not beyond_report.passed)
        and beyond_report.min_component_eigenvalue < -1e-12,
    }

    passed = (
        not failures
        and analytic_block["within_tolerance"]
        and analytic_block["valid_at_half"]
        and analytic_block["fails_psd_beyond"]
    )
    report = {
        "m": m,
        "n_seeds": config.n_seeds,
        "seed": config.seed,
        "passed": passed,
        "failures": failures,
        "analytic": analytic_block,
    }
    report_path = config.out_dir / "fermi_verify.json"
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    timings = {"total_s": time.perf_counter() - start}
    meta_path = _write_metadata(config.out_dir, "fermi-verify", config, timings)
    return FermiVerifyResult(report=report, passed=passed, report_path=report_path, metadata_path=meta_path)
