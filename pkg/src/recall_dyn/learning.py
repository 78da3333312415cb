"""Hebbian construction of the weight matrix from stored patterns.

Three steps: a signed co-activation matrix per pattern, summation over
patterns, and a rescaling that pins the leading eigenvalue of ``m W Lambda``
to a chosen value ``mu1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateSpectrumError, DimensionError, StructureError, UnsupportedRuleError
from .model import NetworkConfig, WeightMatrix, validate_assumptions
from .spectral import lambda_matrix

EIG_TOL = 1e-10


@dataclass(frozen=True)
class Pattern:
    """One stored memory: the active minicolumn (one-based) of each hypercolumn."""

    values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if not vals:
            raise DimensionError("pattern must be non-empty")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)

    def check(self, n: int, m: int) -> None:
        if self.n != n:
            raise DimensionError(f"pattern {list(self.values)} has length {self.n}, expected {n}")
        bad = [v for v in self.values if not 1 <= v <= m]
        if bad:
            raise DimensionError(f"pattern {list(self.values)} has entries outside 1..{m}: {bad}")

    def flat_indices(self, m: int) -> np.ndarray:
        """Zero-based flat indices of the designated minicolumns."""
        return np.array([i * m + (v - 1) for i, v in enumerate(self.values)])

    def one_hot(self, m: int) -> np.ndarray:
        x = np.zeros(self.n * m)
        x[self.flat_indices(m)] = 1.0
        return x

    def __str__(self):
        return " ".join(str(v) for v in self.values)


def as_patterns(patterns) -> list[Pattern]:
    return [p if isinstance(p, Pattern) else Pattern(tuple(p)) for p in patterns]


@dataclass(frozen=True)
class LearningSpec:
    patterns: tuple[Pattern, ...]
    mu1: float
    n: int
    m: int
    remark1: bool = False

    def __post_init__(self):
        pats = tuple(as_patterns(self.patterns))
        if not pats:
            raise DimensionError("at least one pattern is required")
        for p in pats:
            p.check(self.n, self.m)
        if not self.mu1 > 0:
            raise ValueError(f"mu1 must be positive, got {self.mu1}")
        if self.m == 2 and not self.remark1:
            raise UnsupportedRuleError(
                "the Hebbian rule divides by m-2, undefined for m=2; "
                "enable the two-minicolumn variant (remark1) explicitly"
            )
        object.__setattr__(self, "patterns", pats)


def single_pattern_weights(z: Pattern | Sequence[int], n: int, m: int,
                           remark1: bool = False) -> np.ndarray:
    """Raw mn x mn weights for one pattern.

    +1 between two active minicolumns, ``-1/(m-2)`` between an active and an
    inactive one, 0 between two inactive ones; diagonal blocks are zero.
    With ``remark1`` (only for m=2) the mixed value is -1.
    """
    z = z if isinstance(z, Pattern) else Pattern(tuple(z))
    z.check(n, m)
    if remark1:
        if m != 2:
            raise UnsupportedRuleError("the remark1 rule variant is defined only for m=2")
        mixed = -1.0
    else:
        if m == 2:
            raise UnsupportedRuleError(
                "the Hebbian rule divides by m-2, undefined for m=2; "
                "enable the two-minicolumn variant (remark1) explicitly"
            )
        mixed = -1.0 / (m - 2)
    active = np.zeros((n, m), dtype=bool)
    active[np.arange(n), np.array(z.values) - 1] = True
    act = active.ravel()
    W = np.where(
        act[:, None] & act[None, :], 1.0,
        np.where(act[:, None] ^ act[None, :], mixed, 0.0),
    )
    for i in range(n):
        W[i * m:(i + 1) * m, i * m:(i + 1) * m] = 0.0
    return W


def accumulate_patterns(spec: LearningSpec) -> np.ndarray:
    W = np.zeros((spec.n * spec.m, spec.n * spec.m))
    for z in spec.patterns:
        W += single_pattern_weights(z, spec.n, spec.m, remark1=spec.remark1)
    return W


def normalize_weights(W_bar, mu1: float, cfg: NetworkConfig) -> WeightMatrix:
    """Scale raw weights so the top eigenvalue of ``m W Lambda`` is ``mu1``."""
    W_bar = np.asarray(W_bar, dtype=float)
    prod = W_bar @ lambda_matrix(cfg)
    top = float(np.linalg.eigvalsh(0.5 * (prod + prod.T))[-1])
    if top <= EIG_TOL:
        raise DegenerateSpectrumError(
            f"largest eigenvalue of W_bar Lambda is {top:.3e}; cannot normalize"
        )
    return WeightMatrix(mu1 * W_bar / (cfg.m * top), cfg.n, cfg.m)


def learn_weights(spec: LearningSpec, cfg: NetworkConfig, tol: float = 1e-12) -> WeightMatrix:
    """Full pipeline: accumulate, normalize, validate."""
    if (spec.n, spec.m) != (cfg.n, cfg.m):
        raise DimensionError(f"learning dims ({spec.n}, {spec.m}) differ from config ({cfg.n}, {cfg.m})")
    W = normalize_weights(accumulate_patterns(spec), spec.mu1, cfg)
    report = validate_assumptions(W, tol)
    if not report.all_pass:
        raise StructureError(
            "learned weights violate the model assumptions: "
            + "; ".join(ln for ln in report.lines() if "FAIL" in ln)
        )
    return W


REFERENCE_PATTERNS = (
    Pattern((1, 1, 1, 1, 1, 1)),
    Pattern((2, 2, 2, 1, 1, 1)),
    Pattern((2, 2, 3, 1, 3, 2)),
)
