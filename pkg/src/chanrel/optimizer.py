"""Deterministic multi-start search over pure states and over parameter boxes.

Pure-state search refines each start by derivative-free moves on the complex
unit sphere: for every coordinate pair a real and a complex Givens rotation,
and for every coordinate a phase rotation, each tried with angle +step and
-step. All candidate moves of one round are scored in a single vectorized
objective call; the best strict improvement is accepted, otherwise the step is
halved. The rank-based hypothesis-testing objectives are piecewise constant,
which is why no gradients are used anywhere.

Restart ``i`` draws its starting point from a generator seeded by
``(seed, i)`` only, so results do not depend on the number of restarts
requested, on execution order, or on the worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .states import PureState

INITIAL_STEP = math.pi / 4
FINITE_CAP = 1e6


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 64
    max_iters: int = 500
    step_tolerance: float = 1e-9
    seed: int = 0
    warm_starts: tuple = ()
    workers: int = 1
    value_tolerance: float = 1e-12
    stall_rounds: int = 10

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        object.__setattr__(self, "warm_starts", tuple(self.warm_starts))

    def with_warm_starts(self, starts: Sequence) -> "OptimizerConfig":
        return replace(self, warm_starts=tuple(starts))

    def with_restarts(self, restarts: int) -> "OptimizerConfig":
        return replace(self, restarts=restarts)

    def as_dict(self) -> dict:
        return {"restarts": self.restarts, "max_iters": self.max_iters,
                "step_tolerance": self.step_tolerance, "seed": self.seed,
                "warm_starts": len(self.warm_starts), "workers": self.workers,
                "value_tolerance": self.value_tolerance, "stall_rounds": self.stall_rounds}


@dataclass
class OptResult:
    value: float
    argmax: PureState
    restarts_converged: int
    best_restart_index: int


@dataclass
class ParamResult:
    value: float
    argmin: np.ndarray
    restarts_converged: int
    best_restart_index: int


def restart_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)))


def fix_phase(x: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the first non-negligible amplitude is real and non-negative."""
    nz = np.flatnonzero(np.abs(x) > 1e-12)
    if nz.size == 0:
        return x
    c = x[nz[0]]
    return x * (abs(c) / c)


def _batch(objective: Callable, vectorized: bool, dims) -> Callable[[np.ndarray], np.ndarray]:
    if vectorized:
        def f(xs):
            return np.asarray(objective(xs), dtype=float).reshape(-1)
    else:
        def f(xs):
            return np.array([float(objective(PureState(x, dims))) for x in xs])

    def safe(xs):
        v = f(xs)
        return np.where(np.isnan(v), -np.inf, v)
    return safe


def _move_generators(d: int, step: float) -> np.ndarray:
    """Unitaries of all elementary moves at angle ``step``, shape ``(moves, d, d)``."""
    c, s = math.cos(step), math.sin(step)
    out = []
    for ss in (s, -s):
        for j in range(d):
            g = np.eye(d, dtype=complex)
            g[j, j] = complex(c, ss)
            out.append(g)
        for j in range(d):
            for k in range(j + 1, d):
                g = np.eye(d, dtype=complex)
                g[j, j], g[j, k], g[k, j], g[k, k] = c, -ss, ss, c
                out.append(g)
                g = np.eye(d, dtype=complex)
                g[j, j], g[j, k], g[k, j], g[k, k] = c, -1j * ss, -1j * ss, c
                out.append(g)
    return np.array(out)


def _refine_all(f, x0: np.ndarray, cfg: OptimizerConfig):
    """Refine every row of ``x0`` in lockstep; restarts never interact.

    Each restart keeps its own step exponent, halved after a failed round and
    doubled after a successful one. A restart stops when the step drops below
    ``step_tolerance`` or when ``stall_rounds`` consecutive rounds gain less
    than ``value_tolerance`` in total. One objective call per round scores the
    candidate moves of all still-active restarts.
    """
    n, d = x0.shape
    x = x0 / np.linalg.norm(x0, axis=1, keepdims=True)
    val = f(x)
    level = np.zeros(n, dtype=int)
    max_level = max(0, math.ceil(math.log2(INITIAL_STEP / cfg.step_tolerance)) + 1)
    active = np.isfinite(val) if d > 1 else np.zeros(n, dtype=bool)
    active &= val != -math.inf
    converged = ~active.copy()
    anchor = val.copy()
    stall = np.zeros(n, dtype=int)
    gens = {}
    for _ in range(cfg.max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        cand = []
        for r in idx:
            k = int(level[r])
            if k not in gens:
                gens[k] = _move_generators(d, INITIAL_STEP * 0.5 ** k)
            cand.append(gens[k] @ x[r])
        m = cand[0].shape[0]
        vals = f(np.concatenate(cand)).reshape(idx.size, m)
        for pos, r in enumerate(idx):
            b = int(np.argmax(vals[pos]))
            if vals[pos, b] > val[r]:
                y = cand[pos][b]
                x[r] = y / np.linalg.norm(y)
                val[r] = vals[pos, b]
                level[r] = max(0, level[r] - 1)
                if val[r] == math.inf:
                    active[r] = False
                    converged[r] = True
            else:
                level[r] += 1
                if INITIAL_STEP * 0.5 ** level[r] < cfg.step_tolerance or level[r] > max_level:
                    active[r] = False
                    converged[r] = True
            if not active[r]:
                continue
            # value-based stop: too little total gain over the last few rounds
            if val[r] - anchor[r] > cfg.value_tolerance * max(1.0, abs(val[r])):
                anchor[r] = val[r]
                stall[r] = 0
            else:
                stall[r] += 1
                if stall[r] >= cfg.stall_rounds:
                    active[r] = False
                    converged[r] = True
    return val, x, converged


def _random_sphere(dim: int, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(size=dim) + 1j * rng.normal(size=dim)


def maximize_over_pure_states(objective: Callable, dim: int, cfg: OptimizerConfig = OptimizerConfig(),
                              vectorized: bool = False, dims: Optional[tuple] = None) -> OptResult:
    """Maximize ``objective`` over unit vectors of length ``dim``.

    :param objective: either ``PureState -> float`` or, with ``vectorized=True``,
        a function mapping a ``(n, dim)`` complex array of unit rows to ``n`` values.
        ``+inf`` is allowed and short-circuits the search.
    :param dim: sphere dimension.
    :param cfg: restarts, seed, step tolerance and warm starts (tried first, in order).
    :param dims: tensor factorization recorded on the returned state.
    """
    if dim < 1:
        raise ValueError("dimension must be at least 1")
    f = _batch(objective, vectorized, dims)
    starts = []
    for w in cfg.warm_starts:
        a = w.amplitudes if isinstance(w, PureState) else np.asarray(w, dtype=complex).reshape(-1)
        if a.size != dim:
            raise ValueError(f"warm start has dimension {a.size}, expected {dim}")
        starts.append(a.astype(complex))
    n_warm = len(starts)
    if n_warm:
        # a warm start already at +inf settles the search without any refinement
        warm = np.array(starts)
        wv = f(warm / np.linalg.norm(warm, axis=1, keepdims=True))
        hit = np.flatnonzero(wv == math.inf)
        if hit.size:
            x = warm[hit[0]]
            return OptResult(math.inf, PureState(fix_phase(x / np.linalg.norm(x)), dims), n_warm, int(hit[0]))
    for i in range(cfg.restarts):
        starts.append(_random_sphere(dim, restart_rng(cfg.seed, i)))
    x0 = np.array(starts)
    chunks = np.array_split(np.arange(len(starts)), max(1, min(cfg.workers, len(starts))))
    if len(chunks) > 1:
        with ThreadPoolExecutor(len(chunks)) as pool:
            parts = list(pool.map(lambda c: _refine_all(f, x0[c], cfg), chunks))
        vals = np.concatenate([p[0] for p in parts])
        xs = np.concatenate([p[1] for p in parts])
        conv = np.concatenate([p[2] for p in parts])
    else:
        vals, xs, conv = _refine_all(f, x0, cfg)
    best_idx = int(np.argmax(vals))  # first occurrence of the maximum: lowest restart index
    x = xs[best_idx]
    return OptResult(float(vals[best_idx]), PureState(fix_phase(x / np.linalg.norm(x)), dims),
                     int(np.sum(conv)), best_idx)


def minimize_over_parameters(objective: Callable[[np.ndarray], float], bounds: Sequence[tuple],
                             cfg: OptimizerConfig = OptimizerConfig(),
                             initial_points: Sequence = ()) -> ParamResult:
    """Multi-start bounded Powell minimization over a finite box.

    ``initial_points`` play the role of warm starts: they are tried first and
    indexed before the seeded random starts.
    """
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(hi >= lo)):
        raise ValueError("bounds must form a finite box")
    starts = [np.clip(np.asarray(p, dtype=float), lo, hi) for p in initial_points]
    for i in range(cfg.restarts):
        starts.append(lo + (hi - lo) * restart_rng(cfg.seed, i).random(lo.size))

    def safe(p):
        v = float(objective(np.clip(p, lo, hi)))
        return math.inf if math.isnan(v) else v

    def capped(p):
        # scipy's line search cannot interpolate through inf
        return min(safe(p), FINITE_CAP)

    def run(x0):
        if lo.size == 0:
            return safe(x0), x0, True
        res = minimize(capped, x0, method="Powell", bounds=list(zip(lo, hi)),
                       options={"xtol": max(cfg.step_tolerance, 1e-10), "ftol": 1e-12,
                                "maxiter": cfg.max_iters * max(1, lo.size)})
        x = np.clip(res.x, lo, hi)
        v = safe(x)
        x0v = safe(x0)
        if x0v < v:
            return x0v, x0, bool(res.success)
        return v, x, bool(res.success)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(x0) for x0 in starts]
    best_idx = 0
    for idx, (v, _, _) in enumerate(results):
        if v < results[best_idx][0]:
            best_idx = idx
    value, x, _ = results[best_idx]
    return ParamResult(float(value), np.asarray(x), sum(1 for r in results if r[2]), best_idx)
