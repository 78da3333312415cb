"""Time integration, recall detection, period estimation, equilibrium search
and Lyapunov spectra.

Integration is classical fixed-step RK4 in original coordinates.  The inner
loops work on raw arrays through :class:`VectorField`, which skips the
validation done by the public ``rhs_*`` functions; inputs are validated once
up front.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (DivergenceError, DimensionError, InvalidStateError, RenormalizationError,
                     StructureError)
from .learning import Pattern, as_patterns
from .model import NetworkConfig, StateVector, WeightMatrix, _check_weights, softmax_output
from .spectral import lemma2_basis

log = logging.getLogger(__name__)

STABILITY_WARN = 0.5
FRAME_FLOOR = 1e-300


@dataclass(frozen=True)
class IntegratorSpec:
    t_end: float
    dt: float = 0.01
    record_stride: int = 1
    method: str = "RK4"

    def __post_init__(self):
        if self.method.upper() != "RK4":
            raise ValueError(f"unsupported integration method {self.method!r}; only RK4")
        if not self.dt > 0 or not math.isfinite(self.dt):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end > 0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be a positive integer, got {self.record_stride}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


class VectorField:
    """Fast evaluation of the vector field and its tangent action.

    Works on flat arrays ``[s, a]`` (or batches with the state axis last).
    """

    def __init__(self, W: WeightMatrix, cfg: NetworkConfig):
        _check_weights(W, cfg)
        self.cfg = cfg
        self.n, self.m, self.N = cfg.n, cfg.m, cfg.size
        self.WT = np.ascontiguousarray(W.entries.T)
        self.W = np.ascontiguousarray(W.entries)
        self.g = cfg.g_bar_a
        self.alpha = cfg.alpha

    def outputs(self, s):
        S = s.reshape(s.shape[:-1] + (self.n, self.m))
        e = np.exp(S - S.max(axis=-1, keepdims=True))
        e /= e.sum(axis=-1, keepdims=True)
        return e.reshape(s.shape)

    def __call__(self, x):
        N = self.N
        s, a = x[..., :N], x[..., N:]
        o = self.outputs(s)
        out = np.empty_like(x)
        out[..., :N] = o @ self.WT - s - a
        out[..., N:] = self.g * o - self.alpha * a
        return out

    def tangent(self, x, Y):
        """``J(x) @ Y`` for a frame Y of shape (2N, K)."""
        N, n, m = self.N, self.n, self.m
        o = self.outputs(x[:N])[:, None]
        Ys, Ya = Y[:N], Y[N:]
        oY = o * Ys
        DY = oY - o * np.repeat(oY.reshape(n, m, -1).sum(axis=1), m, axis=0)
        out = np.empty_like(Y)
        out[:N] = self.W @ DY - Ys - Ya
        out[N:] = self.g * DY - self.alpha * Ya
        return out


def rk4_step(f: Callable, x, dt: float):
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class Trajectory:
    """Recorded states on a uniform time grid.

    ``states`` has shape (K, 2N) (or (K, B, 2N) for batched runs).  Outputs
    are computed on demand unless supplied explicitly.
    """

    times: np.ndarray
    states: np.ndarray
    cfg: NetworkConfig
    _outputs: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.shape[0] != self.times.shape[0]:
            raise DimensionError("times and states lengths differ")

    def __len__(self):
        return self.times.shape[0]

    @property
    def s(self) -> np.ndarray:
        return self.states[..., :self.cfg.size]

    @property
    def a(self) -> np.ndarray:
        return self.states[..., self.cfg.size:]

    @property
    def outputs(self) -> np.ndarray:
        if self._outputs is None:
            if len(self) == 0:
                self._outputs = np.zeros((0, self.cfg.size))
            else:
                self._outputs = softmax_output(self.s, self.cfg)
        return self._outputs

    def state(self, k: int) -> StateVector:
        return StateVector.from_array(self.states[k])

    @property
    def final(self) -> StateVector:
        return self.state(-1)

    def window(self, t_start: float, t_end: float | None = None) -> "Trajectory":
        """Samples with ``t_start <= t <= t_end``."""
        mask = self.times >= t_start - 1e-9
        if t_end is not None:
            mask &= self.times <= t_end + 1e-9
        out = None if self._outputs is None else self._outputs[mask]
        return Trajectory(self.times[mask], self.states[mask], self.cfg, out)


def _warn_stiffness(W: WeightMatrix, cfg: NetworkConfig, dt: float) -> None:
    try:
        rep = lemma2_basis(W, cfg)
    except StructureError:
        return
    rate = dt * float(np.abs(rep.nu).max())
    if rate >= STABILITY_WARN:
        log.warning("dt * max|nu| = %.3g exceeds %.2g; RK4 may be inaccurate or unstable",
                    rate, STABILITY_WARN)


def integrate(x0, W: WeightMatrix, cfg: NetworkConfig, spec: IntegratorSpec,
              t0: float = 0.0) -> Trajectory:
    """Fixed-step RK4 integration of the original system.

    ``x0`` may be a StateVector, a flat array, or a batch (B, 2N) of
    independent initial conditions integrated side by side.
    """
    x = x0.as_array() if isinstance(x0, StateVector) else np.array(x0, dtype=float)
    if x.shape[-1] != 2 * cfg.size:
        raise DimensionError(f"state has length {x.shape[-1]}, expected {2 * cfg.size}")
    if not np.all(np.isfinite(x)):
        raise InvalidStateError("initial state contains non-finite values")
    _warn_stiffness(W, cfg, spec.dt)
    f = VectorField(W, cfg)
    dt, stride, n_steps = spec.dt, int(spec.record_stride), spec.n_steps
    n_rec = n_steps // stride + 1
    states = np.empty((n_rec,) + x.shape)
    states[0] = x
    rec = 1
    for k in range(1, n_steps + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            x_new = rk4_step(f, x, dt)
        if not np.isfinite(x_new).all():
            raise DivergenceError("non-finite state during integration", t0 + (k - 1) * dt)
        x = x_new
        if k % stride == 0:
            states[rec] = x
            rec += 1
    times = t0 + dt * stride * np.arange(n_rec)
    return Trajectory(times, states, cfg)


def pattern_biased_state(W: WeightMatrix, cfg: NetworkConfig, pattern: Pattern | Sequence[int],
                         epsilon: float = 0.5, noise: float = 0.0,
                         rng: np.random.Generator | None = None) -> StateVector:
    """``s = s0 + epsilon * one_hot(pattern)``, ``a = a0`` plus optional noise."""
    from .model import trivial_equilibrium

    z = pattern if isinstance(pattern, Pattern) else Pattern(tuple(pattern))
    z.check(cfg.n, cfg.m)
    eq = trivial_equilibrium(W, cfg)
    s = eq.s + epsilon * z.one_hot(cfg.m)
    a = eq.a.copy()
    if noise:
        rng = rng if rng is not None else np.random.default_rng(0)
        s = s + noise * rng.standard_normal(cfg.size)
        a = a + noise * rng.standard_normal(cfg.size)
    return StateVector(s, a)


# -- recall and period ---------------------------------------------------------

@dataclass(frozen=True)
class RecallEvent:
    pattern: int          # one-based
    t_start: float
    t_end: float


@dataclass(frozen=True)
class RecallReport:
    threshold: float
    events: tuple[RecallEvent, ...]

    def patterns_recalled(self) -> set[int]:
        return {e.pattern for e in self.events}

    def for_pattern(self, k: int) -> list[RecallEvent]:
        return [e for e in self.events if e.pattern == k]


def detect_recall(traj: Trajectory, patterns, threshold: float = 0.9) -> RecallReport:
    """Intervals where every designated output of a pattern exceeds threshold."""
    pats = as_patterns(patterns)
    cfg = traj.cfg
    events = []
    if len(traj) == 0:
        return RecallReport(threshold, ())
    O = traj.outputs
    for k, p in enumerate(pats, start=1):
        p.check(cfg.n, cfg.m)
        active = O[:, p.flat_indices(cfg.m)].min(axis=1) > threshold
        edges = np.diff(np.concatenate([[0], active.astype(np.int8), [0]]))
        starts = np.nonzero(edges == 1)[0]
        ends = np.nonzero(edges == -1)[0] - 1
        for i, j in zip(starts, ends):
            events.append(RecallEvent(k, float(traj.times[i]), float(traj.times[j])))
    events.sort(key=lambda e: (e.t_start, e.pattern))
    return RecallReport(threshold, tuple(events))


MIN_RETURNS = 5
PERIOD_SPREAD = 0.05
MIN_AMPLITUDE = 1e-6


def upward_crossings(times, signal, level: float) -> np.ndarray:
    """Linearly interpolated times where ``signal`` crosses ``level`` upward."""
    y = np.asarray(signal) - level
    idx = np.nonzero((y[:-1] < 0) & (y[1:] >= 0))[0]
    frac = -y[idx] / (y[idx + 1] - y[idx])
    return times[idx] + frac * (times[idx + 1] - times[idx])


def estimate_period(traj: Trajectory, coordinate: int = 0) -> float | None:
    """Mean return time of ``s[coordinate]`` through its mean, upward.

    None for fewer than ``MIN_RETURNS`` returns, a flat signal, or return
    times spreading by more than 5% of their mean.
    """
    if len(traj) < 3:
        return None
    sig = traj.s[:, coordinate]
    if sig.max() - sig.min() < MIN_AMPLITUDE:
        return None
    cross = upward_crossings(traj.times, sig, float(sig.mean()))
    if cross.size < 2:
        return None
    returns = np.diff(cross)
    if returns.size < MIN_RETURNS:
        return None
    mean = float(returns.mean())
    if (returns.max() - returns.min()) > PERIOD_SPREAD * mean:
        return None
    return mean


@dataclass(frozen=True)
class SumPropertyReport:
    max_deviation: float
    worst_index: int | None
    worst_time: float | None


def sum_property_check(traj: Trajectory) -> SumPropertyReport:
    """Largest deviation of a hypercolumn output sum from 1."""
    if len(traj) == 0:
        return SumPropertyReport(0.0, None, None)
    cfg = traj.cfg
    O = traj.outputs.reshape(len(traj), -1, cfg.n, cfg.m)
    dev = np.abs(O.sum(axis=-1) - 1.0).reshape(len(traj), -1).max(axis=1)
    k = int(np.argmax(dev))
    return SumPropertyReport(float(dev[k]), k, float(traj.times[k]))


# -- equilibria ------------------------------------------------------------------

NEWTON_MAX_ITER = 100
NEWTON_TOL = 1e-12
BACKTRACK_HALVINGS = 30
ROOT_RESIDUAL = 1e-9
DEDUP_DIST = 1e-6


def _newton(s, A, f: VectorField):
    """Damped Newton on ``G(s) = A f(s) - s`` with ``A = W - (g/alpha) I``."""
    n, m, N = f.n, f.m, f.N
    eye = np.eye(N)

    def G(v):
        return A @ f.outputs(v) - v

    r = G(s)
    norm = np.linalg.norm(r)
    for _ in range(NEWTON_MAX_ITER):
        if norm < NEWTON_TOL:
            break
        o = f.outputs(s)
        ob = o.reshape(n, m)
        D = np.zeros((N, N))
        for i in range(n):
            sl = slice(i * m, (i + 1) * m)
            D[sl, sl] = np.diag(ob[i]) - np.outer(ob[i], ob[i])
        try:
            step = np.linalg.solve(A @ D - eye, -r)
        except np.linalg.LinAlgError:
            return s, norm
        t = 1.0
        for _ in range(BACKTRACK_HALVINGS):
            trial = s + t * step
            r_trial = G(trial)
            n_trial = np.linalg.norm(r_trial)
            if np.isfinite(n_trial) and n_trial < norm:
                break
            t *= 0.5
        else:
            return s, norm
        s, r, norm = trial, r_trial, n_trial
    return s, float(np.abs(r).max())


def find_equilibria(W: WeightMatrix, cfg: NetworkConfig, n_starts: int = 20, seed: int = 0,
                    patterns=None) -> list[StateVector]:
    """Multi-start root search for equilibria.

    At an equilibrium ``a = (g/alpha) f(s)`` and ``(W - (g/alpha) I) f(s) =
    s``.  Starts: the trivial equilibrium, ``A one_hot(p)`` for each given
    pattern, and ``A o`` for ``n_starts`` random simplex points ``o``.  Roots
    are returned in discovery order, trivial first.
    """
    from .model import trivial_equilibrium

    f = VectorField(W, cfg)
    q = cfg.gain_ratio
    A = W.entries - q * np.eye(cfg.size)
    starts = []
    try:
        starts.append(trivial_equilibrium(W, cfg).s)
    except StructureError:
        starts.append(A @ np.full(cfg.size, 1.0 / cfg.m))
    for p in as_patterns(patterns or ()):
        p.check(cfg.n, cfg.m)
        starts.append(A @ p.one_hot(cfg.m))
    rng = np.random.default_rng(seed)
    for _ in range(n_starts):
        o = rng.dirichlet(np.ones(cfg.m), size=cfg.n).ravel()
        starts.append(A @ o)

    roots: list[np.ndarray] = []
    for s in starts:
        s_fin, res = _newton(np.array(s, dtype=float), A, f)
        if not res < ROOT_RESIDUAL:
            continue
        if any(np.linalg.norm(s_fin - r) < DEDUP_DIST for r in roots):
            continue
        roots.append(s_fin)
    return [StateVector(s, q * f.outputs(s)) for s in roots]


# -- Lyapunov spectrum -------------------------------------------------------------

@dataclass(frozen=True)
class LyapunovSpectrum:
    exponents: np.ndarray
    history: np.ndarray        # rows: (t, exponent_1, ..., exponent_d)
    renorm_interval: float
    trajectory: Trajectory | None = field(default=None, repr=False)


def tangent_space_exponents(flow: Callable, tangent: Callable, x0, dt: float,
                            renorm_interval: float, t_total: float,
                            frame_burn_in: float = 0.0, dim: int | None = None,
                            on_step: Callable | None = None):
    """Tangent-frame (QR) estimate of the Lyapunov spectrum of ``x' = flow(x)``.

    ``tangent(x, Y)`` returns ``J(x) Y``.  The frame evolves from t = 0; log
    growth accumulated before ``frame_burn_in`` is discarded so that the
    initial frame alignment does not bias the averages.  Returns
    ``(exponents_descending, history, final_state)``.
    """
    x = np.array(x0, dtype=float)
    d = dim if dim is not None else x.shape[0]
    Y = np.eye(x.shape[0], d)
    steps_per = max(1, int(round(renorm_interval / dt)))
    n_renorm = int(round(t_total / (steps_per * dt)))
    burn = int(round(frame_burn_in / (steps_per * dt)))
    if burn >= n_renorm:
        raise ValueError("frame burn-in must be shorter than the total time")

    def joint(z):
        xz, Yz = z[:, 0], z[:, 1:]
        out = np.empty_like(z)
        out[:, 0] = flow(xz)
        out[:, 1:] = tangent(xz, Yz)
        return out

    z = np.column_stack([x, Y])
    sums = np.zeros(d)
    hist = []
    step = 0
    for r in range(n_renorm):
        for _ in range(steps_per):
            with np.errstate(over="ignore", invalid="ignore"):
                z_new = rk4_step(joint, z, dt)
            step += 1
            if not np.isfinite(z_new).all():
                raise DivergenceError("non-finite state in tangent integration", (step - 1) * dt)
            z = z_new
            if on_step is not None:
                on_step(step * dt, z[:, 0])
        Q, R = np.linalg.qr(z[:, 1:])
        diag = np.abs(np.diag(R))
        if diag.min() < FRAME_FLOOR:
            raise RenormalizationError("tangent frame collapsed below 1e-300", step * dt)
        z[:, 1:] = Q * np.sign(np.diag(R))
        if r >= burn:
            sums += np.log(diag)
            elapsed = (r + 1 - burn) * steps_per * dt
            hist.append(np.concatenate([[step * dt], sums / elapsed]))
    T = (n_renorm - burn) * steps_per * dt
    exps = np.sort(sums / T)[::-1]
    return exps, np.array(hist), z[:, 0]


def lyapunov_spectrum(x0, W: WeightMatrix, cfg: NetworkConfig, spec: IntegratorSpec,
                      renorm_interval: float = 1.0, t_total: float | None = None,
                      transient: float = 0.0, frame_burn_in: float | None = None,
                      record_stride: int | None = None) -> LyapunovSpectrum:
    """Full 2mn-dimensional Lyapunov spectrum along the orbit from ``x0``.

    The state first runs ``transient`` time units alone.  Then state and
    frame run for ``t_total``; the first ``frame_burn_in`` (default half of
    ``t_total``) only aligns the frame.  With ``record_stride`` the states of
    the joint run are kept as a trajectory (times from 0 at its start).
    """
    t_total = spec.t_end if t_total is None else t_total
    frame_burn_in = 0.5 * t_total if frame_burn_in is None else frame_burn_in
    x = x0.as_array() if isinstance(x0, StateVector) else np.array(x0, dtype=float)
    if transient > 0:
        x = integrate(x, W, cfg, IntegratorSpec(t_end=transient, dt=spec.dt,
                                                record_stride=max(1, int(round(transient / spec.dt))))).states[-1]
    else:
        _warn_stiffness(W, cfg, spec.dt)
    f = VectorField(W, cfg)
    recorded = []
    on_step = None
    if record_stride:
        recorded.append(x.copy())

        def on_step(t, state, _k=[0]):
            _k[0] += 1
            if _k[0] % record_stride == 0:
                recorded.append(state.copy())

    exps, hist, _ = tangent_space_exponents(f, f.tangent, x, spec.dt, renorm_interval, t_total,
                                            frame_burn_in, on_step=on_step)
    traj = None
    if record_stride:
        states = np.array(recorded)
        traj = Trajectory(spec.dt * record_stride * np.arange(len(states)), states, cfg)
    return LyapunovSpectrum(exps, hist, renorm_interval, traj)


def linear_lyapunov_spectrum(A, dt: float = 0.01, renorm_interval: float = 1.0,
                             t_total: float = 200.0, frame_burn_in: float | None = None,
                             seed: int = 0) -> LyapunovSpectrum:
    """Spectrum of ``x' = A x``; equals the real parts of A's eigenvalues."""
    A = np.asarray(A, dtype=float)
    frame_burn_in = 0.5 * t_total if frame_burn_in is None else frame_burn_in
    x0 = np.random.default_rng(seed).standard_normal(A.shape[0])
    exps, hist, _ = tangent_space_exponents(lambda x: A @ x, lambda x, Y: A @ Y, x0, dt,
                                            renorm_interval, t_total, frame_burn_in)
    return LyapunovSpectrum(exps, hist, renorm_interval)


# -- export ----------------------------------------------------------------------------

def trajectory_header(cfg: NetworkConfig, include_outputs: bool = False) -> list[str]:
    names = [f"{i + 1}_{j + 1}" for i in range(cfg.n) for j in range(cfg.m)]
    head = ["t"] + [f"s_{k}" for k in names] + [f"a_{k}" for k in names]
    if include_outputs:
        head += [f"o_{k}" for k in names]
    return head


def write_trajectory_csv(traj: Trajectory, path, include_outputs: bool = False) -> None:
    """CSV with one-based column names; floats use shortest round-trip repr."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trajectory_header(traj.cfg, include_outputs))
        O = traj.outputs if include_outputs else None
        for k in range(len(traj)):
            row = [traj.times[k], *traj.states[k]]
            if O is not None:
                row += list(O[k])
            w.writerow([repr(float(v)) for v in row])
