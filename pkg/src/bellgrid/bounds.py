"""Both sides of the three-setting Bell inequality and the model classification.

The quantum side is the grid self-inner-product (E, E); the local realistic
side is bounded by 2^N T_max, where T_max is the largest in-plane component of
the correlation tensor over all product directions.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .tensor import CorrelationTensor, contract, sum_squared_components

VIOLATION_TOL = 1e-9
ZB_TOL = 1e-12
DIRECT_SUM_LIMIT = 10**8

GRID_POINTS = 64
GRID_REFINE_MAX_PARTIES = 6
# cap on coarse-grid evaluations; only binds at N = 6
GRID_BUDGET = 2**24
GRID_CANDIDATES = 8

ALT_RESTARTS = 32
ALT_MAX_SWEEPS = 500
ALT_TOL = 1e-12
DEFAULT_SEED = 20070501

T_MAX_METHODS = ("grid_refine", "alternating", "closed_form_ghz")

HEADLINE = "two-setting model exists but cannot extend to a three-setting model"

CSV_COLUMNS = ("n", "v", "ee", "t_max", "bound", "sum_sq", "zb_exists", "violated")


@dataclass(frozen=True)
class SettingGrid:
    """Per-observer measurement angles (l - 1) pi / n_settings, l = 1..n_settings."""

    n_parties: int
    n_settings: int = 3

    def __post_init__(self):
        if self.n_parties < 1:
            raise ValueError("n_parties must be positive")
        if self.n_settings < 2:
            raise ValueError("n_settings must be >= 2")

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.n_settings) * math.pi / self.n_settings

    def directions(self) -> np.ndarray:
        """Setting vectors (cos a, sin a), shape (n_settings, 2)."""
        a = self.angles
        return np.stack([np.cos(a), np.sin(a)], axis=1)

    @property
    def size(self) -> int:
        return self.n_settings**self.n_parties


def correlation_grid(tensor: CorrelationTensor, grid: SettingGrid) -> np.ndarray:
    """E at every grid point, shape (n_settings,)*N with axis j = party j."""
    _check_grid(tensor, grid)
    c = grid.directions()
    t = tensor.as_array()
    # contracting axis 0 each time and appending the new axis keeps party order
    for _ in range(tensor.n_parties):
        t = np.tensordot(t, c, axes=([0], [1]))
    return t


def _check_grid(tensor: CorrelationTensor, grid: SettingGrid) -> None:
    if grid.n_parties != tensor.n_parties:
        raise ValueError(
            f"grid has {grid.n_parties} parties but tensor has {tensor.n_parties}"
        )


def ee_direct(tensor: CorrelationTensor, grid: SettingGrid) -> float:
    """(E, E) by summing E^2 over all n_settings^N grid points."""
    _check_grid(tensor, grid)
    if grid.size > DIRECT_SUM_LIMIT:
        raise ValueError(f"direct sum over {grid.size} grid points exceeds limit {DIRECT_SUM_LIMIT}")
    e = correlation_grid(tensor, grid)
    return float(np.sum(e * e))


def ee_closed_form(tensor: CorrelationTensor, grid: SettingGrid) -> float:
    """(E, E) = (n_settings / 2)^N * sum of squared components."""
    _check_grid(tensor, grid)
    return (grid.n_settings / 2) ** tensor.n_parties * sum_squared_components(tensor)


def ee_with_mode(tensor: CorrelationTensor, grid: SettingGrid | None = None) -> tuple[float, str]:
    grid = grid or SettingGrid(tensor.n_parties)
    if grid.size <= DIRECT_SUM_LIMIT:
        return ee_direct(tensor, grid), "direct"
    return ee_closed_form(tensor, grid), "closed_form"


def ee_inner_product(tensor: CorrelationTensor, grid: SettingGrid | None = None) -> float:
    """Grid self-inner-product (E, E); direct summation when the grid is small enough."""
    return ee_with_mode(tensor, grid)[0]


# -- T_max ------------------------------------------------------------------


def _partial_vector(t: np.ndarray, vectors: np.ndarray, skip: int) -> np.ndarray:
    """Contract every party except `skip`; returns the remaining 2-vector."""
    out = t
    n = t.ndim
    # contract from the last party down so axis numbers stay valid
    for j in reversed(range(n)):
        if j != skip:
            out = np.tensordot(out, vectors[j], axes=([j], [0]))
    return out


def _coordinate_ascent(t: np.ndarray, vectors: np.ndarray, tol: float, max_sweeps: int) -> tuple[float, np.ndarray]:
    """Maximize a multilinear form over unit 2-vectors one party at a time."""
    vectors = vectors.copy()
    n = t.ndim
    value = -math.inf
    for _ in range(max_sweeps):
        for j in range(n):
            g = _partial_vector(t, vectors, j)
            norm = math.hypot(g[0], g[1])
            if norm > 0:
                vectors[j] = g / norm
        new = float(_partial_vector(t, vectors, n - 1) @ vectors[n - 1])
        if new - value <= tol:
            value = max(value, new)
            break
        value = new
    return value, vectors


def _t_max_grid_refine(tensor: CorrelationTensor) -> float:
    n = tensor.n_parties
    if n > GRID_REFINE_MAX_PARTIES:
        raise ValueError(f"grid_refine supports at most {GRID_REFINE_MAX_PARTIES} parties, got {n}")
    points = GRID_POINTS
    while points ** (n - 1) > GRID_BUDGET:
        points -= 1
    betas = 2 * math.pi * np.arange(points) / points
    c = np.stack([np.cos(betas), np.sin(betas)], axis=1)
    t = tensor.as_array()

    # Coarse stage: grid over parties 0..N-2; the last party's best unit vector
    # is the normalized partial contraction, so its value is the vector norm.
    if n == 1:
        return float(np.linalg.norm(t))
    best_vals = []
    best_idx = []
    for a in range(points):
        sub = np.tensordot(c[a], t, axes=([0], [0]))
        for _ in range(n - 2):
            sub = np.tensordot(sub, c, axes=([0], [1]))
        # sub now has shape (2, points, ..., points)
        vals = np.sqrt(sub[0] ** 2 + sub[1] ** 2).reshape(-1)
        k = min(GRID_CANDIDATES, vals.size)
        top = np.argpartition(vals, -k)[-k:]
        best_vals.extend(vals[top])
        best_idx.extend((a, int(i)) for i in top)
    order = np.argsort(best_vals)[::-1][:GRID_CANDIDATES]

    best = -math.inf
    for o in order:
        a, rest = best_idx[o]
        idx = [a] + list(np.unravel_index(rest, (points,) * (n - 2))) if n > 2 else [a]
        vectors = np.empty((n, 2))
        for j, i in enumerate(idx):
            vectors[j] = c[i]
        g = _partial_vector(t, vectors, n - 1)
        vectors[n - 1] = g / np.linalg.norm(g) if np.linalg.norm(g) > 0 else (1.0, 0.0)
        value, _ = _coordinate_ascent(t, vectors, 1e-13, 10_000)
        best = max(best, value)
    return max(best, 0.0)


def _t_max_alternating(tensor: CorrelationTensor, restarts: int, seed: int | None) -> float:
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    t = tensor.as_array()
    n = tensor.n_parties
    best = -math.inf
    for _ in range(restarts):
        theta = rng.uniform(0, 2 * math.pi, size=n)
        vectors = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        value, _ = _coordinate_ascent(t, vectors, ALT_TOL, ALT_MAX_SWEEPS)
        best = max(best, value)
    return max(best, 0.0)


def t_max(
    tensor: CorrelationTensor,
    method: str = "alternating",
    *,
    restarts: int = ALT_RESTARTS,
    seed: int | None = None,
) -> float:
    """Largest in-plane tensor component max_beta E(beta_1, ..., beta_N).

    grid_refine: 64-point grid per party (thinned at N = 6 to stay within
    budget) over all parties but the last, then coordinate-wise refinement of
    the best cells. alternating: multistart alternating ascent from random
    directions. closed_form_ghz: the visibility of a GHZ-Werner tensor.
    """
    if method == "grid_refine":
        return _t_max_grid_refine(tensor)
    if method == "alternating":
        return _t_max_alternating(tensor, restarts, seed)
    if method == "closed_form_ghz":
        if tensor.visibility is None:
            raise ValueError("closed_form_ghz needs a GHZ-Werner tensor with known visibility")
        return float(tensor.visibility)
    raise ValueError(f"unknown t_max method {method!r}; expected one of {T_MAX_METHODS}")


def three_setting_bound(tensor: CorrelationTensor, method: str = "alternating", **kwargs) -> float:
    return 2.0**tensor.n_parties * t_max(tensor, method, **kwargs)


# -- window and classification ---------------------------------------------


@dataclass(frozen=True)
class ViolationWindow:
    n_parties: int
    lower: float
    upper: float

    @property
    def nonempty(self) -> bool:
        return self.lower < self.upper

    def contains(self, v: float) -> bool:
        return self.lower < v <= self.upper

    def to_dict(self) -> dict:
        return {"n_parties": self.n_parties, "lower": self.lower, "upper": self.upper, "nonempty": self.nonempty}


def violation_window(n_parties: int) -> ViolationWindow:
    """GHZ-Werner visibilities where a two-setting model exists but no three-setting one does."""
    if n_parties < 2:
        raise ValueError("n_parties must be ≥ 2")
    lower = 2 * (2 / 3) ** n_parties
    upper = 2 ** (-(n_parties - 1) / 2)
    return ViolationWindow(n_parties, lower, upper)


def plane_infinite_threshold(n_parties: int) -> float:
    return 2 * (2 / math.pi) ** n_parties


@dataclass
class BoundsReport:
    n_parties: int
    ee_value: float
    t_max: float
    three_setting_bound: float
    sum_sq: float
    zb_two_setting_exists: bool
    three_setting_violated: bool
    ee_mode: str = "direct"
    t_max_method: str = "alternating"
    visibility: float | None = None
    plane_infinite_threshold: float | None = None
    lhv_oracle_max: float | None = None
    verdict: str = ""
    label: str = ""
    window: dict | None = field(default=None)

    def recompute_flags(self) -> tuple[bool, bool]:
        return _zb_flag(self.sum_sq), _violation_flag(self.ee_value, self.three_setting_bound)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def csv_row(self) -> dict:
        return {
            "n": self.n_parties,
            "v": "" if self.visibility is None else repr(self.visibility),
            "ee": repr(self.ee_value),
            "t_max": repr(self.t_max),
            "bound": repr(self.three_setting_bound),
            "sum_sq": repr(self.sum_sq),
            "zb_exists": str(self.zb_two_setting_exists).lower(),
            "violated": str(self.three_setting_violated).lower(),
        }


def _zb_flag(sum_sq: float) -> bool:
    return sum_sq <= 1 + ZB_TOL


def _violation_flag(ee: float, bound: float) -> bool:
    return ee > bound + VIOLATION_TOL


def _verdict(zb: bool, violated: bool) -> str:
    if zb and violated:
        return HEADLINE
    if violated:
        return "no three-setting local realistic model"
    if zb:
        return "two-setting model exists; three-setting inequality satisfied"
    return "three-setting inequality satisfied"


def classify(
    tensor: CorrelationTensor,
    lhv_max: float | None = None,
    *,
    method: str | None = None,
    seed: int | None = None,
) -> BoundsReport:
    """Evaluate both sides of the inequality and the two-setting existence condition.

    GHZ-Werner tensors default to the closed-form T_max; other tensors use
    alternating ascent.
    """
    if method is None:
        method = "closed_form_ghz" if tensor.visibility is not None else "alternating"
    ee, mode = ee_with_mode(tensor)
    tm = t_max(tensor, method, seed=seed)
    bound = 2.0**tensor.n_parties * tm
    sum_sq = sum_squared_components(tensor)
    zb = _zb_flag(sum_sq)
    violated = _violation_flag(ee, bound)
    report = BoundsReport(
        n_parties=tensor.n_parties,
        ee_value=ee,
        t_max=tm,
        three_setting_bound=bound,
        sum_sq=sum_sq,
        zb_two_setting_exists=zb,
        three_setting_violated=violated,
        ee_mode=mode,
        t_max_method=method,
        visibility=tensor.visibility,
        lhv_oracle_max=lhv_max,
        verdict=_verdict(zb, violated),
        label=tensor.label,
    )
    if tensor.visibility is not None and tensor.n_parties >= 2:
        report.plane_infinite_threshold = plane_infinite_threshold(tensor.n_parties)
        report.window = violation_window(tensor.n_parties).to_dict()
    return report


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.csv_row())
    return buf.getvalue()
