"""Closed-form spectrum of the linearization at the trivial equilibrium and
regime classification.

For a symmetric weight matrix with equal block row sums ``W`` preserves the subspace of vectors with zero
hypercolumn sums and its complement spanned by ``e_k (x) 1_m``.  On the
first, ``m W Lambda`` acts as ``W``; its eigenvalues ``mu_1 >= ... >=
mu_{(m-1)n}`` drive the interesting modes.  On the second, ``W`` acts as the
row-sum matrix ``F``.  Each ``mu_i`` yields a pair of eigenvalues of the
2mn x 2mn Jacobian ``H``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .model import NetworkConfig, WeightMatrix, require_assumptions

SIMPLE_GAP_REL = 1e-8


def lambda_matrix(cfg: NetworkConfig) -> np.ndarray:
    """Block-diagonal derivative of ``f_bar`` at the origin.

    Each block is ``I/m - 11^T/m^2``.
    """
    m = cfg.m
    block = np.eye(m) / m - np.full((m, m), 1.0 / m**2)
    return np.kron(np.eye(cfg.n), block)


def sum_zero_basis(m: int) -> np.ndarray:
    """Orthonormal (Helmert) basis of {x in R^m : sum x = 0}, shape (m, m-1).

    Column k is ``(1, ..., 1, -k, 0, ..., 0) / sqrt(k (k+1))``; for m = 2 it
    is exactly ``(1, -1)/sqrt(2)``.
    """
    U = np.zeros((m, m - 1))
    for k in range(1, m):
        U[:k, k - 1] = 1.0
        U[k, k - 1] = -float(k)
        U[:, k - 1] /= np.sqrt(k * (k + 1.0))
    return U


def _descending(values, vectors):
    order = np.argsort(-values, kind="stable")
    return values[order], vectors[:, order]


def nu_pairs(mu_first, cfg: NetworkConfig) -> np.ndarray:
    """Eigenvalue pairs ``(nu_+, nu_-)`` of H for each mu of the first group."""
    mu_first = np.asarray(mu_first, dtype=float)
    m, alpha, g = cfg.m, cfg.alpha, cfg.g_bar_a
    centre = (mu_first - m * (1 + alpha)) / (2 * m)
    disc = (alpha + (mu_first / m - 1)) ** 2 - 4 * g / m
    root = 0.5 * np.sqrt(disc.astype(complex))
    return np.stack([centre + root, centre - root], axis=-1)


@dataclass(frozen=True)
class SpectralReport:
    """Eigen-structure of ``W Lambda`` and of ``H``.

    ``mu`` holds the (m-1)n eigenvalues of ``m W Lambda`` off the structural
    kernel (descending), followed by the n eigenvalues of ``F`` (descending).
    ``nu`` has shape (mn, 2): row i is ``(nu_{i,+}, nu_{i,-})``.
    """

    mu: np.ndarray
    nu: np.ndarray
    P: np.ndarray
    F: np.ndarray
    n_first: int
    mu1_simple: bool
    max_real_part: float

    @property
    def p1(self) -> np.ndarray:
        return self.P[:, 0]

    @property
    def mu1(self) -> float:
        return float(self.mu[0]) if self.n_first else float("nan")

    @property
    def mu_first(self) -> np.ndarray:
        return self.mu[:self.n_first]

    @property
    def nu_flat(self) -> np.ndarray:
        return self.nu.reshape(-1)

    @property
    def leading_real_part(self) -> float:
        """Largest real part among the pairs of the first group."""
        return float(self.nu[:self.n_first].real.max())


def _mu1_is_simple(mu_first) -> bool:
    if len(mu_first) < 2:
        return True
    gap = mu_first[0] - mu_first[1]
    return bool(gap > SIMPLE_GAP_REL * max(1.0, abs(mu_first[0])))


def h_eigenvalues(report: SpectralReport, cfg: NetworkConfig) -> np.ndarray:
    """Closed-form spectrum of H, shape (mn, 2).

    First-group rows come from the quadratic formula for each mu; the last n
    rows are exactly ``(-alpha, -1)``.
    """
    first = nu_pairs(report.mu[:report.n_first], cfg)
    rest = np.tile(np.array([-cfg.alpha, -1.0], dtype=complex), (cfg.size - report.n_first, 1))
    return np.vstack([first, rest])


def lemma2_basis(W: WeightMatrix, cfg: NetworkConfig, tol: float = 1e-12) -> SpectralReport:
    """Orthogonal P diagonalizing ``W``, ``W Lambda`` and ``Lambda`` jointly."""
    require_assumptions(W, tol)
    n, m = cfg.n, cfg.m
    B0 = np.kron(np.eye(n), sum_zero_basis(m))
    A = B0.T @ W.entries @ B0
    mu_a, V = _descending(*np.linalg.eigh(0.5 * (A + A.T)))
    C = np.kron(np.eye(n), np.full((m, 1), 1.0 / np.sqrt(m)))
    F = C.T @ W.entries @ C
    mu_f, Vf = _descending(*np.linalg.eigh(0.5 * (F + F.T)))
    P = np.hstack([B0 @ V, C @ Vf])
    mu = np.concatenate([mu_a, mu_f])
    n_first = (m - 1) * n
    partial = SpectralReport(mu=mu, nu=np.empty((0, 2)), P=P, F=W.F, n_first=n_first,
                             mu1_simple=_mu1_is_simple(mu_a), max_real_part=float("nan"))
    nu = h_eigenvalues(partial, cfg)
    return SpectralReport(mu=mu, nu=nu, P=P, F=W.F, n_first=n_first,
                          mu1_simple=partial.mu1_simple,
                          max_real_part=float(nu.real.max()))


def h_matrix(W: WeightMatrix, cfg: NetworkConfig) -> np.ndarray:
    """Dense Jacobian H at the origin of the shifted system."""
    N = cfg.size
    Lam = lambda_matrix(cfg)
    eye = np.eye(N)
    return np.block([[W.entries @ Lam - eye, -eye], [cfg.g_bar_a * Lam, -cfg.alpha * eye]])


def quartic_margin(p1, cfg: NetworkConfig) -> float:
    """``(3/m) sum_r (sum_t p^2)^2 - sum p^4`` for the leading eigenvector."""
    blocks = np.asarray(p1).reshape(cfg.n, cfg.m)
    sq = blocks**2
    return float(3.0 / cfg.m * (sq.sum(axis=1) ** 2).sum() - (sq**2).sum())


class Regime(enum.Enum):
    GLOBAL_EQUILIBRIUM = "GLOBAL_EQUILIBRIUM"
    LOCAL_EQUILIBRIUM = "LOCAL_EQUILIBRIUM"
    HOPF_LIMIT_CYCLE = "HOPF_LIMIT_CYCLE"
    UNCLASSIFIED = "UNCLASSIFIED"


@dataclass(frozen=True)
class Condition:
    name: str
    passed: bool
    margin: float
    detail: str = ""


@dataclass(frozen=True)
class RegimeClassification:
    regime: Regime
    conditions: tuple[Condition, ...]
    unique_equilibrium: bool
    report: SpectralReport = field(repr=False)

    def condition(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def holds(self, prefix: str) -> bool:
        """True when every condition whose name starts with ``prefix`` passed."""
        group = [c for c in self.conditions if c.name.startswith(prefix)]
        return bool(group) and all(c.passed for c in group)


def classify_regime(W: WeightMatrix, cfg: NetworkConfig, tol: float = 1e-12) -> RegimeClassification:
    """Evaluate every sufficient condition of the dynamics table with margins.

    Precedence: global stability, then local stability, then the Hopf
    limit-cycle conditions.  A positive margin means the inequality holds.
    """
    rep = lemma2_basis(W, cfg, tol)
    m, alpha, g = cfg.m, cfg.alpha, cfg.g_bar_a
    eig_w = np.linalg.eigvalsh(W.entries)
    mu_max_w = float(eig_w[-1])
    norm_w = float(np.abs(eig_w).max())
    mu1 = rep.mu1
    crit = m * (1 + alpha)
    conds = []

    m_uni = g - alpha * (mu_max_w - 2.0)
    conds.append(Condition("unique.g_bar_a>alpha(mu_max(W)-2)", m_uni > 0, m_uni))

    sigma = 2 * (1 + alpha) - mu_max_w
    conds.append(Condition("global.mu_max(W)<2(1+alpha)", sigma > 0, sigma))
    if sigma > 0:
        bound = 2 * alpha**2 * (1 + alpha) * norm_w**2 / sigma**2
        conds.append(Condition("global.gain_bound", g > bound, g - bound,
                               f"bound={bound:.6g}"))
    else:
        conds.append(Condition("global.gain_bound", False, float("-inf"),
                               "sigma <= 0"))

    conds.append(Condition("local.mu1<m(1+alpha)", mu1 < crit, crit - mu1))
    conds.append(Condition("local.g_bar_a>m*alpha^2", g > m * alpha**2, g - m * alpha**2))

    complex_gain = m * (mu1 / m + alpha - 1) ** 2 / 4
    conds.append(Condition("hopf.mu1>m(1+alpha)", mu1 > crit, mu1 - crit))
    gap = float(rep.mu[0] - rep.mu[1]) if rep.n_first > 1 else float("inf")
    conds.append(Condition("hopf.mu1_simple", rep.mu1_simple, gap))
    conds.append(Condition("hopf.g_bar_a>m(mu1/m+alpha-1)^2/4", g > complex_gain, g - complex_gain))
    gain_case = g - m * (1 + alpha) ** 2
    if m == 2:
        conds.append(Condition("hopf.case_a(m=2)", True, float("inf")))
    elif m == 3:
        conds.append(Condition("hopf.case_b(g_bar_a>=m(1+alpha)^2)", gain_case >= 0, gain_case))
    else:
        conds.append(Condition("hopf.case_c(g_bar_a>=m(1+alpha)^2)", gain_case >= 0, gain_case))
        q = quartic_margin(rep.p1, cfg)
        conds.append(Condition("hopf.case_c(quartic)", q >= 0, q))

    result = RegimeClassification(Regime.UNCLASSIFIED, tuple(conds), m_uni > 0, rep)
    if result.holds("global."):
        regime = Regime.GLOBAL_EQUILIBRIUM
    elif result.holds("local."):
        regime = Regime.LOCAL_EQUILIBRIUM
    elif result.holds("hopf."):
        regime = Regime.HOPF_LIMIT_CYCLE
    else:
        regime = Regime.UNCLASSIFIED
    return RegimeClassification(regime, tuple(conds), m_uni > 0, rep)
