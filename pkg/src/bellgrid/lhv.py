"""Deterministic local hidden variable strategies and the left side of the inequality.

A deterministic strategy fixes the +/-1 outcome of every observer for every grid
setting (one value of the hidden variable). A general local realistic model is
a convex mixture of these, and the inner product with E is linear in the
mixture weights, so its maximum sits on a deterministic strategy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bounds import DEFAULT_SEED, SettingGrid, correlation_grid, t_max
from .tensor import CorrelationTensor, evaluate

EXHAUSTIVE_LIMIT = 2**27
# values materialized per block during exhaustive search
BLOCK_SIZE = 2**24
LHV_RESTARTS = 64
TIE_TOL = 1e-12
IDENTITY_TOL = 1e-14

THREE_SETTING_ANGLES = np.arange(3) * math.pi / 3
M1 = math.sqrt(2 / 3) * np.cos(THREE_SETTING_ANGLES)
M2 = math.sqrt(2 / 3) * np.sin(THREE_SETTING_ANGLES)
MAX_PROJECTION_NORM = 2 * math.sqrt(2 / 3)


@dataclass(frozen=True)
class DeterministicStrategy:
    """signs[j, l] is observer j's predetermined outcome for setting l."""

    signs: np.ndarray

    def __post_init__(self):
        s = np.array(self.signs, dtype=float)
        if s.ndim != 2:
            raise ValueError("signs must be a 2-d array (observers x settings)")
        if not np.all(np.abs(s) == 1):
            raise ValueError("strategy entries must be exactly +1 or -1")
        s.setflags(write=False)
        object.__setattr__(self, "signs", s)

    @property
    def n_parties(self) -> int:
        return self.signs.shape[0]

    @property
    def n_settings(self) -> int:
        return self.signs.shape[1]

    def packed(self) -> int:
        """Strategy index: observer j's pattern (bit l set for -1) in bits [j*n, (j+1)*n)."""
        n = self.n_settings
        idx = 0
        for j, row in enumerate(self.signs):
            idx |= _pattern_of(row) << (n * j)
        return idx

    @classmethod
    def from_packed(cls, index: int, n_parties: int, n_settings: int = 3) -> "DeterministicStrategy":
        mask = (1 << n_settings) - 1
        patterns = [(index >> (n_settings * j)) & mask for j in range(n_parties)]
        return cls(np.stack([pattern_signs(p, n_settings) for p in patterns]))

    def flipped(self, observer: int) -> "DeterministicStrategy":
        s = self.signs.copy()
        s[observer] *= -1
        return DeterministicStrategy(s)

    def to_list(self) -> list[list[int]]:
        return [[int(x) for x in row] for row in self.signs]


def pattern_signs(pattern: int, n_settings: int = 3) -> np.ndarray:
    return np.array([-1.0 if (pattern >> l) & 1 else 1.0 for l in range(n_settings)])


def _pattern_of(row) -> int:
    return sum(1 << l for l, s in enumerate(row) if s < 0)


def all_patterns(n_settings: int = 3) -> np.ndarray:
    """Every local sign assignment, shape (2^n_settings, n_settings), in pattern order."""
    return np.stack([pattern_signs(p, n_settings) for p in range(2**n_settings)])


@dataclass(frozen=True)
class ConvexLHVModel:
    strategies: tuple[DeterministicStrategy, ...]
    weights: tuple[float, ...]

    def __init__(self, strategies: Sequence[DeterministicStrategy], weights: Sequence[float]):
        strategies = tuple(strategies)
        weights = tuple(float(w) for w in weights)
        if len(strategies) != len(weights) or not strategies:
            raise ValueError("need one weight per strategy and at least one strategy")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be non-negative")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {math.fsum(weights)}")
        shapes = {s.signs.shape for s in strategies}
        if len(shapes) != 1:
            raise ValueError("all strategies must have the same shape")
        object.__setattr__(self, "strategies", strategies)
        object.__setattr__(self, "weights", weights)


def _grid_for(tensor: CorrelationTensor, grid: SettingGrid | None) -> SettingGrid:
    return grid or SettingGrid(tensor.n_parties)


def _check_strategy(strategy: DeterministicStrategy, grid: SettingGrid) -> None:
    if strategy.signs.shape != (grid.n_parties, grid.n_settings):
        raise ValueError(
            f"strategy shape {strategy.signs.shape} does not match grid ({grid.n_parties}, {grid.n_settings})"
        )


def _contract_signs(egrid: np.ndarray, signs: np.ndarray) -> float:
    out = egrid
    for row in signs:
        out = np.tensordot(row, out, axes=([0], [0]))
    return float(out)


def lhv_inner_product(
    strategy: DeterministicStrategy, tensor: CorrelationTensor, grid: SettingGrid | None = None
) -> float:
    """Sum over grid points of the strategy's outcome product times E."""
    grid = _grid_for(tensor, grid)
    _check_strategy(strategy, grid)
    return _contract_signs(correlation_grid(tensor, grid), strategy.signs)


def mixture_inner_product(
    model: ConvexLHVModel, tensor: CorrelationTensor, grid: SettingGrid | None = None
) -> float:
    grid = _grid_for(tensor, grid)
    egrid = correlation_grid(tensor, grid)
    total = 0.0
    for s, w in zip(model.strategies, model.weights):
        _check_strategy(s, grid)
        total += w * _contract_signs(egrid, s.signs)
    return total


# -- maximization -----------------------------------------------------------


def _block_values(egrid: np.ndarray, patterns: np.ndarray, top: int | None) -> np.ndarray:
    """Inner products of all strategies, flattened in packed-index order.

    With `top` given, the most significant observer is fixed to that pattern.
    """
    out = egrid
    if top is not None:
        out = np.tensordot(out, patterns[top], axes=([out.ndim - 1], [0]))
    # contract observer 0 first; the appended axes end up most significant first after the flip
    for _ in range(out.ndim):
        out = np.tensordot(out, patterns, axes=([0], [1]))
    return np.transpose(out, tuple(reversed(range(out.ndim)))).reshape(-1)


def _max_exhaustive(egrid: np.ndarray, n_settings: int) -> tuple[float, int]:
    n = egrid.ndim
    patterns = all_patterns(n_settings)
    n_patterns = len(patterns)
    if n_patterns**n <= BLOCK_SIZE:
        vals = _block_values(egrid, patterns, None)
        best = float(vals.max())
        idx = int(np.flatnonzero(vals >= best - TIE_TOL * max(1.0, abs(best)))[0])
        return float(vals[idx]), idx

    block_max = [float(_block_values(egrid, patterns, p).max()) for p in range(n_patterns)]
    best = max(block_max)
    tol = TIE_TOL * max(1.0, abs(best))
    stride = n_patterns ** (n - 1)
    for p, m in enumerate(block_max):
        if m >= best - tol:
            vals = _block_values(egrid, patterns, p)
            i = int(np.flatnonzero(vals >= best - tol)[0])
            return float(vals[i]), p * stride + i
    raise AssertionError("unreachable")


def _partial_signs(egrid: np.ndarray, signs: np.ndarray, skip: int) -> np.ndarray:
    out = egrid
    for j in reversed(range(egrid.ndim)):
        if j != skip:
            out = np.tensordot(out, signs[j], axes=([j], [0]))
    return out


def _max_alternating(egrid: np.ndarray, n_settings: int, restarts: int, seed: int | None) -> tuple[float, np.ndarray]:
    """Multistart best-response ascent: each observer in turn picks its best local pattern."""
    rng = np.random.default_rng(DEFAULT_SEED if seed is None else seed)
    patterns = all_patterns(n_settings)
    n = egrid.ndim
    best_val, best_signs = -math.inf, None
    for _ in range(restarts):
        signs = patterns[rng.integers(0, len(patterns), size=n)].copy()
        improved = True
        while improved:
            improved = False
            for j in range(n):
                g = _partial_signs(egrid, signs, j)
                scores = patterns @ g
                k = int(np.argmax(scores))
                if scores[k] > float(signs[j] @ g) + TIE_TOL * max(1.0, abs(scores[k])):
                    signs[j] = patterns[k]
                    improved = True
        val = _contract_signs(egrid, signs)
        if val > best_val:
            best_val, best_signs = val, signs.copy()
    return best_val, best_signs


def max_lhv_inner_product(
    tensor: CorrelationTensor,
    grid: SettingGrid | None = None,
    mode: str = "exhaustive",
    *,
    restarts: int = LHV_RESTARTS,
    seed: int | None = None,
) -> tuple[float, DeterministicStrategy]:
    """Best deterministic strategy for the grid inner product with E.

    exhaustive enumerates all 2^(n_settings N) strategies (ties go to the
    smallest packed index); alternating runs multistart best-response ascent.
    """
    grid = _grid_for(tensor, grid)
    egrid = correlation_grid(tensor, grid)
    if mode == "exhaustive":
        count = 2 ** (grid.n_settings * grid.n_parties)
        if count > EXHAUSTIVE_LIMIT:
            raise ValueError(
                f"exhaustive search over {count} strategies exceeds limit {EXHAUSTIVE_LIMIT}; use mode='alternating'"
            )
        value, idx = _max_exhaustive(egrid, grid.n_settings)
        return value, DeterministicStrategy.from_packed(idx, grid.n_parties, grid.n_settings)
    if mode == "alternating":
        value, signs = _max_alternating(egrid, grid.n_settings, restarts, seed)
        return value, DeterministicStrategy(signs)
    raise ValueError(f"unknown mode {mode!r}; expected 'exhaustive' or 'alternating'")


# -- projection machinery ---------------------------------------------------


@dataclass(frozen=True)
class ProjectionDecomposition:
    norm: float
    beta: float
    z: complex


def projection_decomposition(observer_signs: Sequence[float], angles: np.ndarray | None = None) -> ProjectionDecomposition:
    """Projection of one observer's outcome vector onto the plane spanned by the
    normalized cos and sin setting vectors (M1, M2 for the three-setting grid).

    norm = sqrt(2/n) |z| with z = sum_l s_l exp(i alpha_l), beta = arg z
    (taken as 0 when z vanishes).
    """
    s = np.asarray(observer_signs, dtype=float)
    if angles is None:
        angles = THREE_SETTING_ANGLES
    angles = np.asarray(angles, dtype=float)
    if s.shape != angles.shape:
        raise ValueError(f"expected {angles.size} signs, got {s.size}")
    if not np.all(np.abs(s) == 1):
        raise ValueError("observer signs must be exactly +1 or -1")
    scale = math.sqrt(2 / angles.size)
    a = float(s @ (scale * np.cos(angles)))
    b = float(s @ (scale * np.sin(angles)))
    z = complex(np.sum(s * np.exp(1j * angles)))
    if abs(z) < 1e-12:
        # exact cancellation on the grid; rounding leaves ~1e-16
        return ProjectionDecomposition(0.0, 0.0, 0j)
    return ProjectionDecomposition(math.hypot(a, b), math.atan2(b, a) % (2 * math.pi), z)


def factored_inner_product(
    strategy: DeterministicStrategy, tensor: CorrelationTensor, grid: SettingGrid | None = None
) -> float:
    """The single-strategy inner product via per-observer projections:
    (n/2)^(N/2) * prod_j norm_j * E(beta_1, ..., beta_N).
    """
    grid = _grid_for(tensor, grid)
    _check_strategy(strategy, grid)
    parts = [projection_decomposition(row, grid.angles) for row in strategy.signs]
    prefactor = (grid.n_settings / 2) ** (tensor.n_parties / 2)
    norms = math.prod(p.norm for p in parts)
    if norms == 0.0:
        return 0.0
    return prefactor * norms * evaluate(tensor, [p.beta for p in parts])


def z_values(n_settings: int = 3) -> list[complex]:
    angles = np.arange(n_settings) * math.pi / n_settings
    return [projection_decomposition(s, angles).z for s in all_patterns(n_settings)]


@dataclass
class TrigIdentityReport:
    n_settings: int
    cross: float
    cos_sq: float
    sin_sq: float
    root_sum: float
    residuals: dict
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "n_settings": self.n_settings,
            "cross": self.cross,
            "cos_sq": self.cos_sq,
            "sin_sq": self.sin_sq,
            "root_sum": self.root_sum,
            "residuals": self.residuals,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def trig_identity_suite(n_settings: int = 3, tol: float = IDENTITY_TOL) -> TrigIdentityReport:
    """Grid sums sum cos*sin = 0, sum cos^2 = n/2, sum sin^2 = n/2, and sum exp(2i alpha) = 0."""
    if n_settings < 2:
        raise ValueError("n_settings must be >= 2")
    a = np.arange(n_settings) * math.pi / n_settings
    cross = math.fsum(np.cos(a) * np.sin(a))
    cos_sq = math.fsum(np.cos(a) ** 2)
    sin_sq = math.fsum(np.sin(a) ** 2)
    root_sum = abs(np.sum(np.exp(2j * a)))
    half = n_settings / 2
    residuals = {
        "cross": abs(cross),
        "cos_sq": abs(cos_sq - half),
        "sin_sq": abs(sin_sq - half),
        "root_sum": float(root_sum),
    }
    passed = all(r <= tol for r in residuals.values())
    return TrigIdentityReport(n_settings, cross, cos_sq, sin_sq, float(root_sum), residuals, tol, passed)


# -- oracle report ----------------------------------------------------------


@dataclass
class OracleResult:
    max_value: float
    argmax: DeterministicStrategy
    bound: float
    mode: str

    @property
    def satisfied(self) -> bool:
        return self.max_value <= self.bound + 1e-9

    def to_dict(self) -> dict:
        return {
            "max_value": self.max_value,
            "argmax_signs": self.argmax.to_list(),
            "bound": self.bound,
            "satisfied": self.satisfied,
            "mode": self.mode,
        }


def run_oracle(
    tensor: CorrelationTensor,
    mode: str = "exhaustive",
    *,
    t_max_method: str | None = None,
    seed: int | None = None,
) -> OracleResult:
    """Maximize over deterministic strategies and compare with 2^N T_max."""
    value, strategy = max_lhv_inner_product(tensor, mode=mode, seed=seed)
    if t_max_method is None:
        t_max_method = "closed_form_ghz" if tensor.visibility is not None else "alternating"
    bound = 2.0**tensor.n_parties * t_max(tensor, t_max_method, seed=seed)
    return OracleResult(value, strategy, bound, mode)
