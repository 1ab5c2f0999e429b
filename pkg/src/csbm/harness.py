"""Experiment sweeps: seeded trials, parallel execution, CSV output and summaries."""

from __future__ import annotations

import configparser
import csv
import hashlib
import itertools
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__, kernels
from .analysis import PgfParams, mc_estimate, pgf_cycle, simulate_cycle
from .community import overlap, recover_k, recover_pair, recover_single_detailed, recover_two_stage
from .graph import Graph, intersection_graph
from .matching import SearchConfig, anchor_sets, match_exhaustive, match_local_search
from .model import ModelParams, Scaling, edge_joint_law, generate_family
from .streams import derive

PIPELINES = (
    "match-exhaustive",
    "match-local",
    "recover-single",
    "recover-pair",
    "recover-k",
    "recover-two-stage",
    "intersection-connectivity",
    "pgf-validate",
)
MODEL_KEYS = ("n", "alpha", "beta", "s", "k_graphs", "scaling")
CSV_SCHEMA = "csbm-sweep-v1"
THREADS_ENV = "CSBM_THREADS"


# connectivity ------------------------------------------------------------------


def connectivity_check(g: Graph) -> tuple[bool, int]:
    """Breadth-first search over packed rows; returns (connected, component count)."""
    n = g.n
    if n == 0:
        return True, 0
    rows = g.rows
    words = rows.shape[1]
    visited = np.zeros(words, dtype=np.uint64)
    seen = np.zeros(n, dtype=bool)
    components = 0
    one = np.uint64(1)
    for start in range(n):
        if seen[start]:
            continue
        components += 1
        visited[start // 64] |= one << np.uint64(start % 64)
        seen[start] = True
        frontier = np.array([start])
        while len(frontier):
            reach = np.bitwise_or.reduce(rows[frontier], axis=0) & ~visited
            if not reach.any():
                break
            visited |= reach
            bits = np.unpackbits(reach.view(np.uint8), bitorder="little")[:n]
            frontier = np.flatnonzero(bits)
            seen[frontier] = True
    return components == 1, components


# configuration ---------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """One sweep: a base model, axes to vary, and a pipeline run per (point, trial).

    ``axes`` is a list of ``(parameter, values)``; points are the product of
    the axes in order, the last axis varying fastest. ``matcher`` selects the
    permutation estimate used by the recovery pipelines (exhaustive, local or
    oracle, where oracle injects the true permutation).
    """

    pipeline: str = "match-exhaustive"
    n: int = 8
    alpha: float = 0.8
    beta: float = 0.2
    s: float = 1.0
    k_graphs: int = 2
    scaling: str = "raw"
    axes: list = field(default_factory=list)
    trials: int = 10
    seed: int = 0
    threads: int = 1
    matcher: str = "exhaustive"
    restarts: int = 20
    max_moves: int | None = None
    init: str = "profile"
    pgf_samples: int = 100_000
    output: str | None = None
    include_time: bool = False

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ValueError(f"unknown pipeline {self.pipeline!r}; expected one of {PIPELINES}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        self.axes = [(str(name), tuple(float(v) if name != "n" and name != "k_graphs" else int(v)
                                       for v in values)) for name, values in self.axes]
        for name, values in self.axes:
            if name not in MODEL_KEYS or name == "scaling":
                raise ValueError(f"cannot sweep over {name!r}")
            if not values:
                raise ValueError(f"axis {name!r} has no values")
        # validates every point's parameters up front
        for point in self.points():
            self.params_at(point)

    def points(self) -> list[tuple]:
        if not self.axes:
            return [()]
        return list(itertools.product(*(values for _, values in self.axes)))

    def params_at(self, point: Sequence) -> ModelParams:
        base = {k: getattr(self, k) for k in MODEL_KEYS}
        for (name, _), value in zip(self.axes, point):
            base[name] = value
        base["scaling"] = Scaling(base["scaling"])
        return ModelParams(**base)

    def search_config(self, seed: int) -> SearchConfig:
        return SearchConfig(restarts=self.restarts, max_moves=self.max_moves, init=self.init, seed=seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["axes"] = [[name, list(values)] for name, values in self.axes]
        return d


def _parse_values(text: str) -> list[float]:
    text = text.strip()
    if text.startswith("linspace(") and text.endswith(")"):
        a, b, k = (t.strip() for t in text[len("linspace("):-1].split(","))
        return [float(v) for v in np.linspace(float(a), float(b), int(k))]
    return [float(v) for v in text.replace(",", " ").split()]


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Read an INI-style config file.

    Sections and keys::

        [model]   n, alpha, beta, s, k_graphs, scaling (log | raw)
        [sweep]   pipeline, trials, seed, threads, axis.<name> = v1, v2, ... | linspace(a, b, k)
        [solver]  matcher (exhaustive | local | oracle), restarts, max_moves, init
        [pgf]     samples
        [output]  csv, include_time

    ``CSBM_THREADS`` in the environment overrides ``threads``.
    """
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    kw: dict = {}
    if cp.has_section("model"):
        m = cp["model"]
        for key, conv in (("n", int), ("alpha", float), ("beta", float), ("s", float),
                          ("k_graphs", int), ("scaling", str)):
            if key in m:
                kw[key] = conv(m[key])
    if cp.has_section("sweep"):
        sw = cp["sweep"]
        for key, conv in (("pipeline", str), ("trials", int), ("seed", int), ("threads", int)):
            if key in sw:
                kw[key] = conv(sw[key])
        kw["axes"] = [(k[len("axis."):], _parse_values(v)) for k, v in sw.items() if k.startswith("axis.")]
    if cp.has_section("solver"):
        so = cp["solver"]
        if "matcher" in so:
            kw["matcher"] = so["matcher"]
        if "restarts" in so:
            kw["restarts"] = int(so["restarts"])
        if "max_moves" in so:
            kw["max_moves"] = int(so["max_moves"])
        if "init" in so:
            kw["init"] = so["init"]
    if cp.has_section("pgf") and "samples" in cp["pgf"]:
        kw["pgf_samples"] = int(cp["pgf"]["samples"])
    if cp.has_section("output"):
        out = cp["output"]
        if "csv" in out:
            kw["output"] = out["csv"]
        if "include_time" in out:
            kw["include_time"] = out.getboolean("include_time")
    if overrides:
        kw.update({k: v for k, v in overrides.items() if v is not None})
    env = os.environ.get(THREADS_ENV)
    if env:
        kw["threads"] = int(env)
    return ExperimentConfig(**kw)


# trials ------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialRecord:
    point: int
    coords: tuple
    trial: int
    success: bool
    matched: bool | None = None
    exact: bool | None = None
    overlap: float | None = None
    anchor_size: int | None = None
    connected: bool | None = None
    components: int | None = None
    matched_region: int | None = None
    value: float | None = None
    error: str | None = None
    wall_ms: float | None = None


def _stream_seed(rng) -> int:
    return int(rng.integers(0, 2**63 - 1))


def _run_pipeline(config: ExperimentConfig, params: ModelParams, point: int, trial: int) -> dict:
    pipe = config.pipeline
    solver_rng = derive(config.seed, point, trial, "solver")
    if pipe == "pgf-validate":
        rng = derive(config.seed, point, trial, "pgf")
        length = int(rng.integers(2, 7))
        pattern = tuple(int(v) for v in rng.choice([1, -1], size=length))
        theta = float(rng.uniform(0.3, 1.0))
        omega, zeta = (float(v) for v in rng.uniform(1.0, 3.0, size=2))
        law = edge_joint_law(params)
        exact = pgf_cycle(PgfParams(theta, omega, zeta, law, pattern))
        sims = simulate_cycle(law, pattern, config.pgf_samples, derive(config.seed, point, trial, "mc"))
        mean, se = mc_estimate(sims, theta, omega, zeta)
        z = (exact - mean) / se if se > 0 else (0.0 if exact == mean else math.inf)
        return dict(success=abs(z) <= 3.0, value=z)

    family = generate_family(params, derive(config.seed, point, trial, "family"))
    pi_star = family.pi_star[0]
    out: dict = {}
    if pipe in ("match-exhaustive", "match-local"):
        if pipe == "match-exhaustive":
            pi = match_exhaustive(family.g1, family.g2)
        else:
            pi = match_local_search(family.g1, family.g2, config.search_config(_stream_seed(solver_rng)))
        out["matched"] = pi == pi_star
        out["success"] = out["matched"]
        out["matched_region"] = int(np.sum(pi.mapping == pi_star.mapping))
        out["anchor_size"] = len(anchor_sets(family.g1, family.g2, pi_star, family.labels).t_all)
        return out
    if pipe == "intersection-connectivity":
        inter = intersection_graph(family.g1, family.g2_prime)
        connected, comps = connectivity_check(inter)
        out.update(success=connected, connected=connected, components=comps,
                   anchor_size=int(np.sum(inter.degrees == 0)))
        return out
    if pipe == "recover-single":
        sigma_hat, _ = recover_single_detailed(family.g1, params, seed=solver_rng)
        ov = overlap(sigma_hat, family.labels)
        return dict(success=ov == 1.0, exact=ov == 1.0, overlap=ov)
    runner = {"recover-pair": recover_pair, "recover-k": recover_k,
              "recover-two-stage": recover_two_stage}[pipe]
    res = runner(family, config.matcher, seed=solver_rng,
                 search=config.search_config(_stream_seed(derive(config.seed, point, trial, "search"))))
    return dict(success=res.exact, exact=res.exact, overlap=res.overlap, matched=res.matched,
                matched_region=res.matched_region)


def run_trial(config: ExperimentConfig, point_index: int, trial: int) -> TrialRecord:
    coords = config.points()[point_index]
    t0 = time.perf_counter()
    try:
        params = config.params_at(coords)
        out = _run_pipeline(config, params, point_index, trial)
        err = None
    except Exception as exc:  # a failed trial is recorded, not raised
        out, err = {"success": False}, f"{type(exc).__name__}: {exc}"
    wall = (time.perf_counter() - t0) * 1000.0
    out = {k: (bool(v) if isinstance(v, np.bool_) else v) for k, v in out.items()}
    return TrialRecord(point_index, tuple(coords), trial, error=err, wall_ms=wall, **out)


def run_sweep(config: ExperimentConfig, threads: int | None = None) -> list[TrialRecord]:
    """Every (point, trial) record, ordered by that key whatever the thread count."""
    threads = config.threads if threads is None else threads
    tasks = [(p, t) for p in range(len(config.points())) for t in range(config.trials)]
    if threads <= 1:
        records = [run_trial(config, p, t) for p, t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda pt: run_trial(config, *pt), tasks))
    return sorted(records, key=lambda r: (r.point, r.trial))


# summaries ---------------------------------------------------------------------


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("need at least one trial")
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    if successes == 0:
        lo = 0.0
    if successes == trials:
        hi = 1.0
    return lo, hi


@dataclass(frozen=True)
class PointSummary:
    point: int
    coords: tuple
    trials: int
    successes: int
    errors: int
    rate: float
    lower: float
    upper: float


def summarize(records: Iterable[TrialRecord]) -> list[PointSummary]:
    records = list(records)
    if not records:
        raise ValueError("no records to summarize")
    out = []
    for point, group in itertools.groupby(sorted(records, key=lambda r: (r.point, r.trial)),
                                          key=lambda r: r.point):
        group = list(group)
        k = sum(1 for r in group if r.success)
        lo, hi = wilson_interval(k, len(group))
        errors = sum(1 for r in group if r.error)
        out.append(PointSummary(point, group[0].coords, len(group), k, errors, k / len(group), lo, hi))
    return out


# CSV and manifest ----------------------------------------------------------------

RECORD_COLUMNS = ("success", "matched", "exact", "overlap", "anchor_size", "connected",
                  "components", "matched_region", "value", "error")


def csv_columns(config: ExperimentConfig) -> list[str]:
    cols = ["point", *(name for name, _ in config.axes), "trial", *RECORD_COLUMNS]
    if config.include_time:
        cols.append("wall_ms")
    return cols


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(records: Sequence[TrialRecord], config: ExperimentConfig, path) -> None:
    cols = csv_columns(config)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {CSV_SCHEMA} pipeline={config.pipeline} seed={config.seed}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            row = [r.point, *r.coords, r.trial, *(getattr(r, c) for c in RECORD_COLUMNS)]
            if config.include_time:
                row.append(round(r.wall_ms, 3))
            w.writerow([_fmt(v) for v in row])


def read_csv_records(path) -> list[TrialRecord]:
    """Parse a sweep CSV back into records (enough to re-run :func:`summarize`)."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    names = {f.name for f in fields(TrialRecord)}
    axis_cols = [c for c in reader.fieldnames if c not in names and c != "point"]

    def opt(v, conv):
        return None if v == "" else conv(v)

    def as_bool(v):
        return v == "1"

    out = []
    for row in reader:
        out.append(TrialRecord(
            point=int(row["point"]),
            coords=tuple(float(row[c]) for c in axis_cols),
            trial=int(row["trial"]),
            success=row["success"] == "1",
            matched=opt(row["matched"], as_bool),
            exact=opt(row["exact"], as_bool),
            overlap=opt(row["overlap"], float),
            anchor_size=opt(row["anchor_size"], int),
            connected=opt(row["connected"], as_bool),
            components=opt(row["components"], int),
            matched_region=opt(row["matched_region"], int),
            value=opt(row["value"], float),
            error=opt(row["error"], str),
            wall_ms=opt(row.get("wall_ms", ""), float),
        ))
    return out


def write_summary_csv(summaries: Sequence[PointSummary], config: ExperimentConfig, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {CSV_SCHEMA}-summary pipeline={config.pipeline} seed={config.seed}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point", *(name for name, _ in config.axes), "trials", "successes", "errors",
                    "rate", "wilson_lower", "wilson_upper"])
        for s in summaries:
            w.writerow([s.point, *(_fmt(c) for c in s.coords), s.trials, s.successes, s.errors,
                        repr(s.rate), repr(s.lower), repr(s.upper)])


def build_manifest(config: ExperimentConfig, csv_path=None, command: str = "sweep") -> dict:
    manifest = {
        "command": command,
        "version": __version__,
        "backend": kernels.BACKEND,
        "numpy": np.__version__,
        "seed": config.seed,
        "config": config.to_dict(),
        "csv_schema": CSV_SCHEMA,
    }
    if csv_path is not None and Path(csv_path).exists():
        manifest["csv"] = str(csv_path)
        manifest["csv_sha256"] = hashlib.sha256(Path(csv_path).read_bytes()).hexdigest()
    return manifest


def write_manifest(manifest: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
