"""Channel relative entropies, channel entropies and their depolarizing closed forms.

Three input strategies are supported for comparing two channels ``N, M: A' -> A``:

* ``A``: the best single-system input ``max_psi d(N(psi) || M(psi))``;
* ``Phi``: the Choi states, i.e. the fixed input ``Phi+`` with a reference copy;
* ``AB``: the best input entangled with an ancilla of dimension ``d_B = d_A'``.

Each strategy is paired with either the zero-smoothing hypothesis-testing
divergence (``D*`` kinds) or the Umegaki relative entropy (``S*`` kinds).
``Phi`` kinds are exact; the others come from the multi-start optimizer and
are lower bounds of the true supremum.

The AB searches are always seeded with ``Phi+`` and with the best A-kind input
tensored with ``|0>`` on the ancilla, so ``AB >= max(A, Phi)`` holds exactly.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import channels as ch
from .channels import KrausChannel
from .linalg import DimensionMismatch
from .optimizer import OptimizerConfig, OptResult, maximize_over_pure_states
from .states import (PureState, basis_state, batch_entropy, batch_hypothesis_divergence,
                     batch_partial_trace, batch_relative_entropy, batch_renyi0,
                     hypothesis_divergence_zero, maximally_entangled, relative_entropy,
                     renyi0_entropy, von_neumann_entropy)

IDENTICAL_TOL = 1e-12
SNAP_THRESHOLDS = (1e-6, 1e-3, 1e-2, 0.05, 0.15, 0.3)


class DivergenceKind(enum.Enum):
    DA = "dA"
    DPhi = "dPhi"
    DAB = "dAB"
    SA = "sA"
    SPhi = "sPhi"
    SAB = "sAB"

    @property
    def smooth(self) -> bool:
        """True for the Umegaki (S) family."""
        return self.name.startswith("S")

    @property
    def strategy(self) -> str:
        return self.name[1:]

    @property
    def closed_form(self) -> bool:
        return self.strategy == "Phi"

    def sibling(self, strategy: str) -> "DivergenceKind":
        return DivergenceKind[self.name[0] + strategy]

    @classmethod
    def parse(cls, text: str) -> "DivergenceKind":
        for k in cls:
            if text in (k.value, k.name) or text.lower() == k.value.lower():
                return k
        raise ValueError(f"unknown divergence kind {text!r}")


@dataclass
class DivergenceResult:
    kind: DivergenceKind
    value: float
    achieving_input: Optional[PureState]
    lower_bound_only: bool

    def as_dict(self) -> dict:
        d = {"kind": self.kind.value, "value": _json_float(self.value),
             "lower_bound_only": self.lower_bound_only}
        if self.achieving_input is not None:
            a = self.achieving_input.amplitudes
            d["achieving_input"] = [[float(z.real), float(z.imag)] for z in a]
        return d


def _json_float(v: float):
    return "inf" if v == math.inf else float(v)


def _batch_divergence(smooth: bool):
    return batch_relative_entropy if smooth else batch_hypothesis_divergence


def _check_pair(n: KrausChannel, m: KrausChannel):
    if (n.dim_in, n.dim_out) != (m.dim_in, m.dim_out):
        raise DimensionMismatch(
            f"channels act between different spaces: {n.dim_in}->{n.dim_out} vs {m.dim_in}->{m.dim_out}")


def pair_objective(n: KrausChannel, m: KrausChannel, smooth: bool, d_anc: int = 1):
    """Vectorized ``psi -> d((N (x) I)(psi) || (M (x) I)(psi))`` on inputs of length ``d_in * d_anc``."""
    div = _batch_divergence(smooth)

    def f(xs):
        return div(ch.batch_apply_pure(n, xs, d_anc), ch.batch_apply_pure(m, xs, d_anc))
    return f


# ---------------------------------------------------------------------------
# warm starts


def _basis_starts(dim: int) -> List[PureState]:
    return [basis_state(dim, i) for i in range(dim)]


def snapped(x: np.ndarray, d_in: int, d_anc: int = 1) -> List[np.ndarray]:
    """Low-rank relatives of ``x`` with small amplitudes or Schmidt coefficients zeroed.

    Rank-based objectives only change when an output loses rank, which a generic
    local search never reaches; these candidates put such points on the table.
    """
    out = []
    mags = np.abs(x)
    for t in SNAP_THRESHOLDS:
        y = np.where(mags >= t * mags.max(), x, 0)
        out.append(y / np.linalg.norm(y))
    if d_anc > 1:
        u, s, vh = np.linalg.svd(x.reshape(d_in, d_anc))
        for t in SNAP_THRESHOLDS:
            keep = s >= t * s[0]
            y = (u[:, keep] * s[keep]) @ vh[keep]
            out.append(y.reshape(-1) / np.linalg.norm(y))
    return out


def _dedupe(vectors) -> List[np.ndarray]:
    seen, out = [], []
    for v in vectors:
        v = np.asarray(v.amplitudes if isinstance(v, PureState) else v, dtype=complex)
        if any(abs(abs(np.vdot(w, v)) - 1.0) < 1e-13 for w in seen):
            continue
        seen.append(v)
        out.append(v)
    return out


def _with_ancilla(x: np.ndarray, d_anc: int) -> np.ndarray:
    e0 = np.zeros(d_anc, dtype=complex)
    e0[0] = 1.0
    return np.kron(x, e0)


def _guide_cfg(cfg: OptimizerConfig) -> OptimizerConfig:
    """Smaller budget for the smooth search that only proposes low-rank candidates."""
    return cfg.with_restarts(max(4, cfg.restarts // 4))


def _run(objective, dim, cfg: OptimizerConfig, starts, dims=None) -> OptResult:
    extra = [w for w in cfg.warm_starts
             if (w.dim if isinstance(w, PureState) else np.asarray(w).size) == dim]
    merged = _dedupe(list(starts) + extra)
    return maximize_over_pure_states(objective, dim, cfg.with_warm_starts(merged), vectorized=True,
                                     dims=dims)


# ---------------------------------------------------------------------------
# generic divergences


def _a_search(objective, n: KrausChannel, smooth: bool, cfg: OptimizerConfig,
              smooth_objective=None) -> OptResult:
    starts = _basis_starts(n.dim_in)
    if not smooth and smooth_objective is not None and n.dim_in > 1:
        guide = _run(smooth_objective, n.dim_in, _guide_cfg(cfg), starts)
        if guide.value < math.inf:
            starts += [guide.argmax.amplitudes] + snapped(guide.argmax.amplitudes, n.dim_in)
    return _run(objective, n.dim_in, cfg, starts)


def _ab_search(objective, n: KrausChannel, a_best: OptResult, smooth: bool, cfg: OptimizerConfig,
               smooth_objective=None) -> OptResult:
    d = n.dim_in
    starts = [maximally_entangled(d).amplitudes, _with_ancilla(a_best.argmax.amplitudes, d)]
    if d > 1:
        starts += [_with_ancilla(b.amplitudes, d) for b in _basis_starts(d)]
        if not smooth and smooth_objective is not None:
            guide = _run(smooth_objective, d * d, _guide_cfg(cfg), starts)
            if guide.value < math.inf:
                starts += [guide.argmax.amplitudes] + snapped(guide.argmax.amplitudes, d, d)
    return _run(objective, d * d, cfg, starts, dims=(d, d))


def _identical(n: KrausChannel, m: KrausChannel) -> bool:
    return ch.channel_distance(n, m) <= IDENTICAL_TOL


def _choi_divergence(n: KrausChannel, m: KrausChannel, smooth: bool) -> float:
    jn, jm = ch.to_choi(n).matrix, ch.to_choi(m).matrix
    return relative_entropy(jn, jm) if smooth else hypothesis_divergence_zero(jn, jm)


def channel_divergence(kind: DivergenceKind, n: KrausChannel, m: KrausChannel,
                       cfg: OptimizerConfig = OptimizerConfig()) -> DivergenceResult:
    """Divergence of the requested kind between two channels with matching dimensions."""
    _check_pair(n, m)
    smooth = kind.smooth
    if kind.closed_form:
        return DivergenceResult(kind, _choi_divergence(n, m, smooth), None, False)
    d = n.dim_in
    if _identical(n, m):
        dim = d if kind.strategy == "A" else d * d
        return DivergenceResult(kind, 0.0, basis_state(dim, 0), True)
    objective = pair_objective(n, m, smooth)
    guide = None if smooth else pair_objective(n, m, True)
    a_best = _a_search(objective, n, smooth, cfg, guide)
    if kind.strategy == "A":
        return DivergenceResult(kind, a_best.value, a_best.argmax, True)
    objective_ab = pair_objective(n, m, smooth, d)
    guide_ab = None if smooth else pair_objective(n, m, True, d)
    best = _ab_search(objective_ab, n, a_best, smooth, cfg, guide_ab)
    return DivergenceResult(kind, best.value, best.argmax, True)


# ---------------------------------------------------------------------------
# depolarizing reference


def _neg_output_entropy(n: KrausChannel, smooth: bool):
    entropy = batch_entropy if smooth else batch_renyi0

    def f(xs):
        return -entropy(ch.batch_apply_pure(n, xs))
    return f


def _neg_conditional_entropy(n: KrausChannel, smooth: bool):
    d = n.dim_in
    entropy = batch_entropy if smooth else batch_renyi0

    def f(xs):
        out = ch.batch_apply_pure(n, xs, d)
        anc = batch_partial_trace(out, (n.dim_out, d), [1])
        return entropy(anc) - entropy(out)
    return f


def divergence_to_depolarizing(kind: DivergenceKind, n: KrausChannel,
                               cfg: OptimizerConfig = OptimizerConfig()) -> DivergenceResult:
    """Divergence between ``n`` and the completely depolarizing channel with the same dimensions.

    Uses ``d(rho || I/d) = log2 d - entropy(rho)`` wherever it applies. The
    ``DAB`` kind has no such simplification and goes through the generic path.
    """
    d_in, d_out = n.dim_in, n.dim_out
    log_out = math.log2(d_out)
    if kind == DivergenceKind.DAB:
        return channel_divergence(kind, n, ch.depolarizing(d_in, d_out), cfg)
    if kind.closed_form:
        j = ch.to_choi(n).matrix
        ent = von_neumann_entropy(j) if kind.smooth else renyi0_entropy(j)
        return DivergenceResult(kind, math.log2(d_in * d_out) - ent, None, False)
    smooth = kind.smooth
    objective = _neg_output_entropy(n, smooth)
    guide = None if smooth else _neg_output_entropy(n, True)
    a_best = _a_search(objective, n, smooth, cfg, guide)
    if kind.strategy == "A":
        return DivergenceResult(kind, log_out + a_best.value, a_best.argmax, True)
    best = _ab_search(_neg_conditional_entropy(n, smooth), n, a_best, smooth, cfg)
    return DivergenceResult(kind, log_out + best.value, best.argmax, True)


def channel_entropy(kind: DivergenceKind, n: KrausChannel, cfg: OptimizerConfig = OptimizerConfig()) -> float:
    """``log2 d_A`` minus the divergence to the completely depolarizing channel."""
    return math.log2(n.dim_out) - divergence_to_depolarizing(kind, n, cfg).value


# ---------------------------------------------------------------------------
# ordering


@dataclass
class OrderingReport:
    values: dict
    gaps: dict
    holds: bool

    def as_dict(self) -> dict:
        return {"values": {k.value: _json_float(v) for k, v in self.values.items()},
                "gaps": {k: _json_float(v) for k, v in self.gaps.items()}, "holds": self.holds}


def _all_kinds(n: KrausChannel, m: KrausChannel, cfg: OptimizerConfig) -> dict:
    """All six values, sharing the A-kind searches between the A and AB kinds."""
    _check_pair(n, m)
    values = {}
    for smooth, prefix in ((False, "D"), (True, "S")):
        phi = DivergenceKind[prefix + "Phi"]
        values[phi] = _choi_divergence(n, m, smooth)
        if _identical(n, m):
            values[DivergenceKind[prefix + "A"]] = values[DivergenceKind[prefix + "AB"]] = 0.0
            continue
        guide = None if smooth else pair_objective(n, m, True)
        a_best = _a_search(pair_objective(n, m, smooth), n, smooth, cfg, guide)
        guide_ab = None if smooth else pair_objective(n, m, True, n.dim_in)
        ab = _ab_search(pair_objective(n, m, smooth, n.dim_in), n, a_best, smooth, cfg, guide_ab)
        values[DivergenceKind[prefix + "A"]] = a_best.value
        values[DivergenceKind[prefix + "AB"]] = ab.value
    return values


def ordering_check(n: KrausChannel, m: KrausChannel, cfg: OptimizerConfig = OptimizerConfig(),
                   tol: float = 1e-9) -> OrderingReport:
    """Check ``AB >= max(A, Phi)`` within each family and report the gaps."""
    values = _all_kinds(n, m, cfg)
    gaps = {}
    holds = True
    for prefix in ("D", "S"):
        ab = values[DivergenceKind[prefix + "AB"]]
        for s in ("A", "Phi"):
            other = values[DivergenceKind[prefix + s]]
            gap = 0.0 if ab == other else ab - other
            gaps[f"{prefix}AB-{prefix}{s}"] = gap
            holds &= gap >= -tol
    return OrderingReport(values, gaps, holds)
