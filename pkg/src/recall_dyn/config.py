"""INI-style run configuration.

Numeric values may be arithmetic expressions over the network parameters,
e.g. ``mu1 = 3*(1+alpha)+40`` or ``alpha = 1/54``.  Relative paths resolve
against the directory of the config file; ``output_dir`` resolves against
the working directory.
"""

from __future__ import annotations

import ast
import configparser
import operator
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .io import read_patterns, read_weights
from .learning import LearningSpec, Pattern, learn_weights
from .model import NetworkConfig, WeightMatrix
from .spectral import lemma2_basis

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def safe_eval(expr: str, names: dict | None = None) -> float:
    """Evaluate a numeric expression with + - * / ** and the given names."""
    names = names or {}

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name) and node.id in names:
            return names[node.id]
        raise ValueError(f"unsupported element {ast.dump(node)[:40]}")

    try:
        value = ev(ast.parse(expr.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
        raise ValueError(f"cannot evaluate {expr!r}: {exc}") from None
    return float(value)


@dataclass(frozen=True)
class WeightSource:
    patterns: tuple[Pattern, ...] = ()
    mu1: float | None = None
    remark1: bool = False
    file: Path | None = None


@dataclass(frozen=True)
class RunConfig:
    path: Path
    network: NetworkConfig
    weights: WeightSource
    dt: float = 0.01
    t_end: float = 1000.0
    record_stride: int = 10
    initial_patterns: tuple[int, ...] = (1,)
    epsilon: float = 0.5
    noise: float = 0.0
    threshold: float = 0.9
    burn_in: float = 0.5
    include_outputs: bool = False
    n_starts: int = 20
    renorm_interval: float = 1.0
    lyap_t_total: float = 5000.0
    lyap_transient: float = 0.0
    frame_burn_in: float | None = None
    window: tuple[float, float] | None = None
    sweep_mu1: tuple[float, ...] = ()
    sweep_t_end: float = 2000.0
    linear_matrix: np.ndarray | None = field(default=None, repr=False)
    seed: int = 0
    output_dir: Path = Path("out")

    def weight_matrix(self, mu1: float | None = None) -> WeightMatrix:
        """Learned (or loaded) weights, optionally at a different mu1."""
        src = self.weights
        if src.file is not None:
            W = read_weights(src.file)
            if W.dims != (self.network.n, self.network.m):
                raise InputError(f"weight file dims {W.dims} differ from [network] "
                                 f"({self.network.n}, {self.network.m})", path=src.file)
            if mu1 is not None:
                cur = lemma2_basis(W, self.network).mu1
                W = W.scaled(mu1 / cur)
            return W
        spec = LearningSpec(src.patterns, src.mu1 if mu1 is None else mu1,
                            self.network.n, self.network.m, remark1=src.remark1)
        return learn_weights(spec, self.network)

    @property
    def patterns(self) -> tuple[Pattern, ...]:
        return self.weights.patterns


class _Reader:
    def __init__(self, parser: configparser.ConfigParser, path: Path, names: dict):
        self.p, self.path, self.names = parser, path, names

    def _raw(self, section, key):
        if not self.p.has_option(section, key):
            return None
        return self.p.get(section, key)

    def num(self, section, key, default=None, required=False):
        raw = self._raw(section, key)
        if raw is None:
            if required:
                raise InputError(f"missing [{section}] {key}", path=self.path)
            return default
        try:
            return safe_eval(raw, self.names)
        except ValueError as exc:
            raise InputError(f"[{section}] {key}: {exc}", path=self.path) from None

    def integer(self, section, key, default=None, required=False):
        v = self.num(section, key, default, required)
        if v is None:
            return None
        if v != int(v):
            raise InputError(f"[{section}] {key} must be an integer, got {v}", path=self.path)
        return int(v)

    def boolean(self, section, key, default=False):
        if not self.p.has_option(section, key):
            return default
        try:
            return self.p.getboolean(section, key)
        except ValueError:
            raise InputError(f"[{section}] {key} must be a boolean", path=self.path) from None

    def text(self, section, key, default=None):
        raw = self._raw(section, key)
        return default if raw is None else raw.strip()

    def file(self, section, key):
        raw = self.text(section, key)
        if raw is None:
            return None
        p = Path(raw)
        if not p.is_absolute():
            p = self.path.parent / p
        if not p.exists():
            raise InputError(f"[{section}] {key}: file {raw!r} not found", path=self.path)
        return p

    def numbers(self, section, key):
        raw = self._raw(section, key)
        if raw is None:
            return None
        try:
            return tuple(safe_eval(t, self.names) for t in raw.replace(",", " ").split())
        except ValueError as exc:
            raise InputError(f"[{section}] {key}: {exc}", path=self.path) from None


def _sweep_grid(r: _Reader) -> tuple[float, ...]:
    explicit = r.numbers("sweep", "mu1")
    if explicit:
        return explicit
    start = r.num("sweep", "mu1_start")
    if start is None:
        return ()
    stop = r.num("sweep", "mu1_stop", required=True)
    steps = r.integer("sweep", "steps", required=True)
    if steps < 1 or not stop > start:
        raise InputError("[sweep] needs mu1_stop > mu1_start and steps >= 1", path=r.path)
    return tuple(float(v) for v in np.linspace(start, stop, steps + 1))


def _linear_matrix(r: _Reader):
    raw = r.text("linear", "matrix")
    if raw is None:
        return None
    rows = [row for row in raw.split(";") if row.strip()]
    try:
        A = np.array([[safe_eval(t) for t in row.replace(",", " ").split()] for row in rows])
    except ValueError as exc:
        raise InputError(f"[linear] matrix: {exc}", path=r.path) from None
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError("[linear] matrix must be square", path=r.path)
    return A


def load_config(path) -> RunConfig:
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise InputError(f"cannot read config: {exc.strerror}", path=path) from None
    except configparser.Error as exc:
        raise InputError(f"malformed config: {exc.message}", path=path) from None

    r = _Reader(parser, path, {})
    n = r.integer("network", "n", required=True)
    m = r.integer("network", "m", required=True)
    r.names.update(n=n, m=m)
    alpha = r.num("network", "alpha", required=True)
    r.names["alpha"] = alpha
    g = r.num("network", "g_bar_a", required=True)
    r.names["g_bar_a"] = g
    try:
        cfg = NetworkConfig(n, m, alpha, g)
    except ValueError as exc:
        raise InputError(str(exc), path=path) from None

    wfile = r.file("weights", "file")
    pfile = r.file("weights", "patterns")
    patterns = tuple(read_patterns(pfile)) if pfile is not None else ()
    mu1 = r.num("weights", "mu1")
    if wfile is None and (not patterns or mu1 is None):
        raise InputError("[weights] needs either 'file' or both 'patterns' and 'mu1'", path=path)
    weights = WeightSource(patterns, mu1, r.boolean("weights", "remark1"), wfile)

    initial = r.numbers("initial", "patterns") or (1,)
    if any(v != int(v) or v < 1 for v in initial):
        raise InputError("[initial] patterns must be one-based pattern numbers", path=path)
    window = r.numbers("lyapunov", "window")
    if window is not None and len(window) != 2:
        raise InputError("[lyapunov] window takes two values", path=path)

    out = r.text("run", "output_dir", "out")
    return RunConfig(
        path=path,
        network=cfg,
        weights=weights,
        dt=r.num("integrator", "dt", 0.01),
        t_end=r.num("integrator", "t_end", 1000.0),
        record_stride=r.integer("integrator", "record_stride", 10),
        initial_patterns=tuple(int(v) for v in initial),
        epsilon=r.num("initial", "epsilon", 0.5),
        noise=r.num("initial", "noise", 0.0),
        threshold=r.num("recall", "threshold", 0.9),
        burn_in=r.num("recall", "burn_in", 0.5),
        include_outputs=r.boolean("integrator", "include_outputs"),
        n_starts=r.integer("equilibria", "n_starts", 20),
        renorm_interval=r.num("lyapunov", "renorm_interval", 1.0),
        lyap_t_total=r.num("lyapunov", "t_total", 5000.0),
        lyap_transient=r.num("lyapunov", "transient", 0.0),
        frame_burn_in=r.num("lyapunov", "frame_burn_in"),
        window=tuple(window) if window else None,
        sweep_mu1=_sweep_grid(r),
        sweep_t_end=r.num("sweep", "t_end", 2000.0),
        linear_matrix=_linear_matrix(r),
        seed=r.integer("run", "seed", 0),
        output_dir=Path(out),
    )
