"""Core free-recall network model.

State layout: the minicolumn pair (i, j) (hypercolumn i, minicolumn j, both
zero-based) lives at flat index ``i * m + j``.  A full state is the
concatenation ``x = [s, a]`` of length ``2 * m * n``.  All user-facing I/O
uses one-based indices; this module is zero-based throughout.

The dynamics are

    ds/dt = W f(s) - s - a
    da/dt = g_bar_a f(s) - alpha a

with ``f`` the per-hypercolumn softmax.  The shifted system moves the trivial
equilibrium (s0, a0) to the origin and replaces ``f`` with
``f_bar(s) = f(s) - 1/m``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidStateError, StructureError

DEFAULT_ASSUMPTION_TOL = 1e-12


@dataclass(frozen=True)
class NetworkConfig:
    """Dimensions and scalar parameters of the network.

    ``alpha`` is the inverse adaptation time constant and ``g_bar_a`` the
    scaled adaptation gain (``alpha * g_a``).
    """

    n: int
    m: int
    alpha: float
    g_bar_a: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"m must be an integer >= 2, got {self.m}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (self.g_bar_a > 0.0 and np.isfinite(self.g_bar_a)):
            raise ValueError(f"g_bar_a must be positive, got {self.g_bar_a}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "g_bar_a", float(self.g_bar_a))

    @property
    def size(self) -> int:
        """Number of minicolumns, ``m * n``."""
        return self.n * self.m

    @property
    def gain_ratio(self) -> float:
        """``g_bar_a / alpha``, the adaptation level of a fully active unit."""
        return self.g_bar_a / self.alpha

    def replace(self, **changes) -> "NetworkConfig":
        fields = dict(n=self.n, m=self.m, alpha=self.alpha, g_bar_a=self.g_bar_a)
        fields.update(changes)
        return NetworkConfig(**fields)


def _readonly(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class WeightMatrix:
    """Connection matrix with hypercolumn block structure.

    Construction rejects non-square shapes, non-finite entries and any
    nonzero diagonal block: the model defines ``W_ii = 0`` and silently
    zeroing user input would hide modelling errors.
    """

    entries: np.ndarray
    n: int
    m: int

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=float)
        size = self.n * self.m
        if arr.shape != (size, size):
            raise DimensionError(
                f"weight matrix must be {size}x{size} for n={self.n}, m={self.m}; "
                f"got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise StructureError("weight matrix has non-finite entries")
        blocks = arr.reshape(self.n, self.m, self.n, self.m)
        for i in range(self.n):
            diag = blocks[i, :, i, :]
            if np.any(diag != 0.0):
                raise StructureError(
                    f"diagonal block W[{i + 1},{i + 1}] must be zero "
                    f"(max |entry| {np.abs(diag).max():.3g})"
                )
        object.__setattr__(self, "entries", _readonly(arr))

    @property
    def dims(self) -> tuple[int, int]:
        return self.n, self.m

    @property
    def size(self) -> int:
        return self.n * self.m

    def block(self, i: int, k: int) -> np.ndarray:
        """Zero-based block ``W_{i,k}`` (m x m)."""
        m = self.m
        return self.entries[i * m:(i + 1) * m, k * m:(k + 1) * m]

    def row_sums(self) -> np.ndarray:
        """Array ``(n, m, n)`` of per-row block sums ``sum_l w_{ij,kl}``."""
        return self.entries.reshape(self.n, self.m, self.n, self.m).sum(axis=3)

    @property
    def F(self) -> np.ndarray:
        """n x n matrix of block row sums (meaningful when block row sums are equal)."""
        return self.row_sums().mean(axis=1)

    def scaled(self, factor: float) -> "WeightMatrix":
        return WeightMatrix(factor * self.entries, self.n, self.m)

    @classmethod
    def zeros(cls, n: int, m: int) -> "WeightMatrix":
        return cls(np.zeros((n * m, n * m)), n, m)


@dataclass(frozen=True)
class StateVector:
    """Minicolumn states ``s`` and adaptation levels ``a``."""

    s: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s", _readonly(self.s))
        object.__setattr__(self, "a", _readonly(self.a))
        if self.s.shape != self.a.shape or self.s.ndim != 1:
            raise DimensionError(
                f"s and a must be 1-d of equal length, got {self.s.shape} and {self.a.shape}"
            )
        if not (np.all(np.isfinite(self.s)) and np.all(np.isfinite(self.a))):
            raise InvalidStateError("state contains non-finite values")

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.s, self.a])

    @classmethod
    def from_array(cls, x) -> "StateVector":
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size % 2:
            raise DimensionError(f"flat state must be 1-d of even length, got {x.shape}")
        half = x.size // 2
        return cls(x[:half], x[half:])

    def __add__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.s + other.s, self.a + other.a)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return StateVector(self.s - other.s, self.a - other.a)


@dataclass(frozen=True)
class AssumptionReport:
    symmetric: bool
    equal_row_sums: bool
    symmetric_row_sums: bool
    symmetry_violation: float
    row_sum_violation: float
    row_sum_symmetry_violation: float
    tol: float
    F: np.ndarray | None = field(default=None)

    @property
    def all_pass(self) -> bool:
        return self.symmetric and self.equal_row_sums and self.symmetric_row_sums

    def lines(self) -> list[str]:
        def verdict(ok):
            return "pass" if ok else "FAIL"

        return [
            f"assumption_1_symmetric: {verdict(self.symmetric)} "
            f"(max |W - W^T| = {self.symmetry_violation:.3e})",
            f"assumption_2_equal_row_sums: {verdict(self.equal_row_sums)} "
            f"(max row-sum spread = {self.row_sum_violation:.3e})",
            f"assumption_3_symmetric_F: {verdict(self.symmetric_row_sums)} "
            f"(max |F - F^T| = {self.row_sum_symmetry_violation:.3e})",
            f"tolerance: {self.tol:.3e}",
            f"overall: {verdict(self.all_pass)}",
        ]


def _as_flat(state) -> np.ndarray:
    if isinstance(state, StateVector):
        return state.as_array()
    return np.asarray(state, dtype=float)


def _check_length(x, expected, what):
    if x.shape[-1] != expected:
        raise DimensionError(f"{what} has length {x.shape[-1]}, expected {expected}")


def softmax_output(s, cfg: NetworkConfig) -> np.ndarray:
    """Per-hypercolumn softmax ``o = f(s)``.

    Accepts a single state or a batch with the minicolumn axis last.  The
    per-block maximum is subtracted before exponentiation.
    """
    s = np.asarray(s, dtype=float)
    _check_length(s, cfg.size, "state")
    if not np.all(np.isfinite(s)):
        raise InvalidStateError("softmax input contains non-finite values")
    blocks = s.reshape(s.shape[:-1] + (cfg.n, cfg.m))
    e = np.exp(blocks - blocks.max(axis=-1, keepdims=True))
    return (e / e.sum(axis=-1, keepdims=True)).reshape(s.shape)


def shifted_nonlinearity(s_bar, cfg: NetworkConfig) -> np.ndarray:
    """``f_bar(s_bar) = f(s_bar) - 1/m``; each block of the result sums to 0."""
    return softmax_output(s_bar, cfg) - 1.0 / cfg.m


def _split(x, cfg):
    _check_length(x, 2 * cfg.size, "state")
    return x[..., :cfg.size], x[..., cfg.size:]


def _check_weights(W: WeightMatrix, cfg: NetworkConfig):
    if W.dims != (cfg.n, cfg.m):
        raise DimensionError(f"weight matrix dims {W.dims} do not match config ({cfg.n}, {cfg.m})")


def rhs_original(state, W: WeightMatrix, cfg: NetworkConfig) -> np.ndarray:
    """Vector field in original coordinates, returned as a flat ``[ds, da]``."""
    _check_weights(W, cfg)
    x = _as_flat(state)
    s, a = _split(x, cfg)
    o = softmax_output(s, cfg)
    ds = o @ W.entries.T - s - a
    da = cfg.g_bar_a * o - cfg.alpha * a
    return np.concatenate([ds, da], axis=-1)


def rhs_shifted(state_bar, W: WeightMatrix, cfg: NetworkConfig) -> np.ndarray:
    """Vector field in coordinates centred on the trivial equilibrium."""
    _check_weights(W, cfg)
    x = _as_flat(state_bar)
    s, a = _split(x, cfg)
    fb = shifted_nonlinearity(s, cfg)
    ds = fb @ W.entries.T - s - a
    da = cfg.g_bar_a * fb - cfg.alpha * a
    return np.concatenate([ds, da], axis=-1)


def softmax_jacobian(o, cfg: NetworkConfig) -> np.ndarray:
    """Block-diagonal ``df/ds`` evaluated at outputs ``o``.

    Entry ``(rt, rl)`` is ``-o_rt (o_rl - delta_tl)``.
    """
    o = np.asarray(o, dtype=float)
    m = cfg.m
    D = np.zeros((cfg.size, cfg.size))
    for r in range(cfg.n):
        ob = o[r * m:(r + 1) * m]
        D[r * m:(r + 1) * m, r * m:(r + 1) * m] = np.diag(ob) - np.outer(ob, ob)
    return D


def jacobian_shifted(state_bar, W: WeightMatrix, cfg: NetworkConfig) -> np.ndarray:
    """Analytic Jacobian of :func:`rhs_shifted` (2mn x 2mn).

    ``f`` is invariant to per-block constant shifts, so this is also the
    Jacobian of :func:`rhs_original` at ``state_bar + (s0, a0)``.
    """
    _check_weights(W, cfg)
    x = _as_flat(state_bar)
    if x.ndim != 1:
        raise DimensionError("jacobian_shifted takes a single state")
    s, _ = _split(x, cfg)
    D = softmax_jacobian(softmax_output(s, cfg), cfg)
    N = cfg.size
    eye = np.eye(N)
    J = np.empty((2 * N, 2 * N))
    J[:N, :N] = W.entries @ D - eye
    J[:N, N:] = -eye
    J[N:, :N] = cfg.g_bar_a * D
    J[N:, N:] = -cfg.alpha * eye
    return J


def validate_assumptions(W: WeightMatrix, tol: float = DEFAULT_ASSUMPTION_TOL) -> AssumptionReport:
    """Check symmetry, equal block row sums and symmetry of the row-sum matrix."""
    A = W.entries
    sym_err = float(np.abs(A - A.T).max()) if A.size else 0.0
    sums = W.row_sums()
    spread = float((sums.max(axis=1) - sums.min(axis=1)).max())
    F = sums.mean(axis=1)
    f_err = float(np.abs(F - F.T).max())
    equal = spread <= tol
    return AssumptionReport(
        symmetric=sym_err <= tol,
        equal_row_sums=equal,
        symmetric_row_sums=f_err <= tol,
        symmetry_violation=sym_err,
        row_sum_violation=spread,
        row_sum_symmetry_violation=f_err,
        tol=tol,
        F=F if equal else None,
    )


def require_assumptions(W: WeightMatrix, tol: float = DEFAULT_ASSUMPTION_TOL) -> AssumptionReport:
    report = validate_assumptions(W, tol)
    if not report.all_pass:
        failed = [ln for ln in report.lines() if "FAIL" in ln and not ln.startswith("overall")]
        raise StructureError("weight matrix violates model assumptions: " + "; ".join(failed))
    return report


def trivial_equilibrium(W: WeightMatrix, cfg: NetworkConfig,
                        tol: float = DEFAULT_ASSUMPTION_TOL) -> StateVector:
    """Synchronized equilibrium ``(s0, a0)``.

    ``s0`` is constant ``c_i = (sum_k lambda_ik - g_bar_a/alpha) / m`` on
    hypercolumn ``i`` and ``a0 = g_bar_a / (alpha m)`` everywhere, i.e.
    ``a0 = (g_bar_a/alpha) f(s0)``.
    """
    _check_weights(W, cfg)
    report = require_assumptions(W, tol)
    c = (report.F.sum(axis=1) - cfg.gain_ratio) / cfg.m
    s0 = np.repeat(c, cfg.m)
    a0 = np.full(cfg.size, cfg.gain_ratio / cfg.m)
    return StateVector(s0, a0)


def structured_random_weights(n: int, m: int, rng: np.random.Generator,
                              scale: float = 1.0) -> WeightMatrix:
    """Random weight matrix that is symmetric, zero on the diagonal blocks and has
    equal block row sums by construction.

    Each off-diagonal block is a doubly-centred Gaussian matrix plus
    ``(lambda/m) 11^T``, so every row and column of the block sums to
    ``lambda``; the transpose fills the mirror block.
    """
    center = np.eye(m) - np.full((m, m), 1.0 / m)
    W = np.zeros((n * m, n * m))
    for i in range(n):
        for k in range(i + 1, n):
            block = center @ rng.normal(size=(m, m)) @ center
            block += rng.normal() / m * np.ones((m, m))
            W[i * m:(i + 1) * m, k * m:(k + 1) * m] = block
            W[k * m:(k + 1) * m, i * m:(i + 1) * m] = block.T
    return WeightMatrix(scale * W, n, m)
