"""Threshold formulas, phase-region classification and cycle generating functions."""

from __future__ import annotations

import csv
import enum
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import EdgeJointLaw, Labeling, ModelParams
from .perm import Permutation, pair_cycles

BOUNDARY_BAND = 1e-12
OMEGA_RANGE = (1.0, 3.0)


class Region(str, enum.Enum):
    GREEN = "Green"
    CYAN = "Cyan"
    YELLOW = "Yellow"
    RED = "Red"
    BOUNDARY = "BoundaryIndeterminate"


REGION_COLORS = {
    Region.GREEN: "#2ca02c",
    Region.CYAN: "#17becf",
    Region.YELLOW: "#ffd700",
    Region.RED: "#d62728",
    Region.BOUNDARY: "#7f7f7f",
}


@dataclass(frozen=True)
class RegionVerdict:
    region: Region
    matching_feasible: bool
    single_graph: bool
    pair_union: bool
    k_union: bool


def _union_rhs(s: float, k: int) -> float:
    z = 1.0 - (1.0 - s) ** k
    return math.sqrt(2.0 / z) if z > 0 else math.inf


def _compare(lhs: float, rhs: float, band: float) -> bool | None:
    """``lhs > rhs`` with None inside the indeterminate band."""
    if math.isinf(rhs):
        return False
    if abs(lhs - rhs) <= band:
        return None
    return lhs > rhs


def separation(alpha: float, beta: float) -> float:
    return abs(math.sqrt(alpha) - math.sqrt(beta))


def classify(alpha: float, beta: float, s: float, k: int = 2, band: float = BOUNDARY_BAND) -> RegionVerdict:
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be nonnegative")
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    sep = separation(alpha, beta)
    single = _compare(sep, math.sqrt(2.0 / s) if s > 0 else math.inf, band)
    pair = _compare(sep, _union_rhs(s, 2), band)
    kun = _compare(sep, _union_rhs(s, k), band)
    match = _compare(s * s * (alpha + beta) / 2.0, 1.0, band)

    if single is None or pair is None:
        region = Region.BOUNDARY
    elif single:
        region = Region.GREEN
    elif not pair:
        region = Region.RED
    elif match is None:
        region = Region.BOUNDARY
    else:
        region = Region.CYAN if match else Region.YELLOW
    return RegionVerdict(region, bool(match), bool(single), bool(pair), bool(kun))


def thresholds(params: ModelParams) -> RegionVerdict:
    return classify(params.alpha, params.beta, params.s, params.k_graphs)


# phase grids -------------------------------------------------------------------

AXES = ("alpha", "beta", "s")


@dataclass(frozen=True)
class PhaseGrid:
    x_name: str
    y_name: str
    x: np.ndarray
    y: np.ndarray
    fixed: dict
    verdicts: list  # verdicts[iy][ix]

    def regions(self) -> np.ndarray:
        return np.array([[v.region.value for v in row] for row in self.verdicts])

    def rows(self):
        for iy, yv in enumerate(self.y):
            for ix, xv in enumerate(self.x):
                v = self.verdicts[iy][ix]
                yield (float(xv), float(yv), v.region.value, int(v.matching_feasible),
                       int(v.single_graph), int(v.pair_union), int(v.k_union))


PHASE_COLUMNS = ("x", "y", "region", "matching_feasible", "single", "pair", "k_union")


def phase_grid(x_name: str, x_values: Sequence[float], y_name: str, y_values: Sequence[float],
               fixed: dict, k: int = 2) -> PhaseGrid:
    """Verdicts on the product grid; ``fixed`` supplies the remaining parameter."""
    if x_name == y_name or x_name not in AXES or y_name not in AXES:
        raise ValueError(f"axes must be two distinct names from {AXES}")
    (rest,) = set(AXES) - {x_name, y_name}
    if rest not in fixed:
        raise ValueError(f"missing fixed value for {rest}")
    xs, ys = np.asarray(x_values, dtype=float), np.asarray(y_values, dtype=float)
    verdicts = []
    for yv in ys:
        row = []
        for xv in xs:
            vals = {x_name: xv, y_name: yv, rest: fixed[rest]}
            row.append(classify(vals["alpha"], vals["beta"], vals["s"], k))
        verdicts.append(row)
    return PhaseGrid(x_name, y_name, xs, ys, {rest: fixed[rest]}, verdicts)


def write_phase_csv(grid: PhaseGrid, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# csbm phase v1 x={grid.x_name} y={grid.y_name} "
                 + " ".join(f"{k}={v!r}" for k, v in grid.fixed.items()) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PHASE_COLUMNS)
        for r in grid.rows():
            w.writerow((repr(r[0]), repr(r[1]), *r[2:]))


def write_phase_svg(grid: PhaseGrid, path, cell: int = 4) -> None:
    nx, ny = len(grid.x), len(grid.y)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{nx * cell}" height="{ny * cell}" '
             f'shape-rendering="crispEdges">']
    for iy in range(ny):
        for ix in range(nx):
            color = REGION_COLORS[grid.verdicts[iy][ix].region]
            # y grows upwards
            parts.append(f'<rect x="{ix * cell}" y="{(ny - 1 - iy) * cell}" width="{cell}" '
                         f'height="{cell}" fill="{color}"/>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


# generating functions along a pair cycle --------------------------------------


@dataclass(frozen=True)
class PgfParams:
    theta: float
    omega: float
    zeta: float
    law: EdgeJointLaw
    lambda_pattern: tuple

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if not (self.omega > 0 and self.zeta > 0):
            raise ValueError("omega and zeta must be positive")
        pattern = tuple(int(v) for v in self.lambda_pattern)
        if not pattern or any(v not in (1, -1) for v in pattern):
            raise ValueError("lambda pattern must be a nonempty sequence over {+1, -1}")
        object.__setattr__(self, "lambda_pattern", pattern)
        lo, hi = OMEGA_RANGE
        if not (lo <= self.omega <= hi and lo <= self.zeta <= hi):
            warnings.warn(f"omega/zeta outside the analysed range [{lo}, {hi}]", RuntimeWarning,
                          stacklevel=3)

    def replace(self, **changes) -> PgfParams:
        d = dict(theta=self.theta, omega=self.omega, zeta=self.zeta, law=self.law,
                 lambda_pattern=self.lambda_pattern)
        d.update(changes)
        return PgfParams(**d)


@dataclass(frozen=True)
class PgfTable:
    """``phi[i, j, m]`` after ``k`` steps of a cycle."""

    k: int
    phi: np.ndarray

    def __getitem__(self, key):
        return self.phi[key]


def _cells(law: EdgeJointLaw, lam: int):
    if lam == 1:
        return law.p00, law.p01, law.p10, law.p11
    return law.q00, law.q01, law.q10, law.q11


def _step_matrix(params: PgfParams, lam: int) -> np.ndarray:
    c00, c01, c10, c11 = _cells(params.law, lam)
    th = params.theta
    w = params.omega if lam == 1 else params.zeta
    return np.array([
        [c00 + c10, c01 + c11 * th * w],
        [c00 + c10 / th, c01 + c11 * w],
    ])


def pgf_initial(params: PgfParams) -> PgfTable:
    th = params.theta
    w = params.omega if params.lambda_pattern[0] == 1 else params.zeta
    phi = np.ones((2, 2, 2))
    phi[1, 0, 1] = 1.0 / th
    phi[1, 1, 0] = th * w
    phi[1, 1, 1] = w
    return PgfTable(1, phi)


def pgf_advance(table: PgfTable, params: PgfParams, k: int | None = None) -> PgfTable:
    """One step of the 2x2 recursion, using ``lambda_pattern[k - 1]``."""
    k = table.k + 1 if k is None else k
    if k != table.k + 1:
        raise ValueError(f"table holds step {table.k}; cannot advance to step {k}")
    if not 2 <= k <= len(params.lambda_pattern):
        raise ValueError("step out of range for this cycle")
    M = _step_matrix(params, params.lambda_pattern[k - 1])
    # phi[i, j, :] <- M @ phi[i, j, :]
    return PgfTable(k, np.einsum("ab,ijb->ija", M, table.phi))


def pgf_table(params: PgfParams, k: int | None = None) -> PgfTable:
    k = len(params.lambda_pattern) if k is None else k
    t = pgf_initial(params)
    for step in range(2, k + 1):
        t = pgf_advance(t, params, step)
    return t


def pgf_cycle(params: PgfParams) -> float:
    """E[theta^X omega^Y+ zeta^Y-] over one cycle of length ``len(lambda_pattern)``."""
    if len(params.lambda_pattern) < 2:
        raise ValueError("cycle length must be at least 2")
    t = pgf_table(params)
    c00, c01, c10, c11 = _cells(params.law, params.lambda_pattern[0])
    w = {(0, 0): c00, (0, 1): c01, (1, 0): c10, (1, 1): c11}
    return float(sum(w[i, j] * t.phi[i, j, j] for i in (0, 1) for j in (0, 1)))


def cycle_lambda_pattern(cycle, sigma: np.ndarray) -> tuple:
    return tuple(1 if sigma[i] == sigma[j] else -1 for i, j in cycle)


@dataclass(frozen=True)
class PgfProduct:
    log_value: float
    cycle_values: tuple
    patterns: tuple

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def pgf_full_detailed(labels: Labeling, pi_star: Permutation, pi: Permutation, theta: float,
                      omega: float, zeta: float, law: EdgeJointLaw) -> PgfProduct:
    """Product of the cycle values over the nontrivial cycles, accumulated in log space."""
    if not len(labels.sigma) == len(pi_star) == len(pi):
        raise ValueError("labels and permutations must share n")
    if labels.n > 200:
        raise ValueError("pair-cycle enumeration limited to n <= 200")
    sigma = labels.array
    dec = pair_cycles(pi_star, pi)
    values, patterns = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for cyc in dec.nontrivial:
            lam = cycle_lambda_pattern(cyc, sigma)
            values.append(pgf_cycle(PgfParams(theta, omega, zeta, law, lam)))
            patterns.append(lam)
    log_value = float(sum(math.log(v) for v in values))
    return PgfProduct(log_value, tuple(values), tuple(patterns))


def pgf_full(labels: Labeling, pi_star: Permutation, pi: Permutation, params: PgfParams) -> float:
    """Whole-permutation generating function; ``params.lambda_pattern`` is ignored."""
    return pgf_full_detailed(labels, pi_star, pi, params.theta, params.omega, params.zeta,
                             params.law).value


# Monte Carlo oracles -----------------------------------------------------------


def simulate_cycle(law: EdgeJointLaw, lambda_pattern, samples: int, rng) -> np.ndarray:
    """Draw ``(X_C, Y+_C, Y-_C)`` for ``samples`` independent cycles; shape (samples, 3)."""
    lam = np.asarray(lambda_pattern)
    L = len(lam)
    a = np.empty((samples, L), dtype=np.int8)
    b = np.empty((samples, L), dtype=np.int8)
    for k in range(L):
        c00, c01, c10, c11 = _cells(law, int(lam[k]))
        cell = rng.choice(4, size=samples, p=np.array([c00, c01, c10, c11]) / (c00 + c01 + c10 + c11))
        a[:, k] = cell >= 2
        b[:, k] = cell % 2
    b_next = np.roll(b, -1, axis=1)
    x = (a * b - a * b_next).sum(axis=1)
    both = a * b
    y_plus = both[:, lam == 1].sum(axis=1)
    y_minus = both[:, lam == -1].sum(axis=1)
    return np.stack([x, y_plus, y_minus], axis=1).astype(np.int64)


def mc_estimate(samples: np.ndarray, theta: float, omega: float, zeta: float) -> tuple[float, float]:
    """Mean and standard error of theta^X omega^Y+ zeta^Y- over simulated rows."""
    x, yp, ym = samples[:, 0], samples[:, 1], samples[:, 2]
    vals = np.exp(x * math.log(theta) + yp * math.log(omega) + ym * math.log(zeta))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))


# asymptotic bound checks -------------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    lhs: float
    rhs: float
    passed: bool


def cycle_bound_check(params: ModelParams, lambda_pattern, omega: float = math.e,
                      zeta: float = math.e, eps: float = 0.1, n: int | None = None) -> BoundCheck:
    """Compare one cycle value at theta = n^-1/2 with its asymptotic exponential bound.

    The bound only holds for n large enough, so the outcome is reported, not asserted.
    """
    from .model import joint_law_from_rates

    n = params.n if n is None else n
    scale = math.log(n) / n
    law = joint_law_from_rates(params.alpha * scale, params.beta * scale, params.s)
    lam = tuple(lambda_pattern)
    lhs = pgf_cycle(PgfParams(1.0 / math.sqrt(n), omega, zeta, law, lam))
    c_plus = sum(1 for v in lam if v == 1)
    c_minus = len(lam) - c_plus
    rhs = math.exp(-(1 - eps) * params.s ** 2 * (params.alpha * c_plus + params.beta * c_minus) * scale)
    return BoundCheck(lhs, rhs, lhs <= rhs)


def permutation_bound_check(params: ModelParams, labels: Labeling, pi_star: Permutation,
                            pi: Permutation, omega: float = math.e, zeta: float = math.e,
                            eps: float = 0.1, n_scale: int | None = None) -> BoundCheck:
    """Whole-permutation analogue using the mismatch counts M+ and M-.

    ``n_scale`` sets the n in the rates and in theta (default ``labels.n``);
    comparisons are made in log space.
    """
    from .model import joint_law_from_rates
    from .perm import mismatch_counts

    n = labels.n if n_scale is None else n_scale
    scale = math.log(n) / n
    law = joint_law_from_rates(params.alpha * scale, params.beta * scale, params.s)
    prod = pgf_full_detailed(labels, pi_star, pi, 1.0 / math.sqrt(n), omega, zeta, law)
    mc = mismatch_counts(labels, pi_star, pi)
    log_rhs = -(1 - eps) * params.s ** 2 * (params.alpha * mc.m_plus + params.beta * mc.m_minus) * scale
    return BoundCheck(prod.log_value, log_rhs, prod.log_value <= log_rhs)
