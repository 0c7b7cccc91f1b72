"""Quantum states and the state-level entropic quantities.

Logarithms are base 2 throughout. Infinite divergences are returned as
``math.inf`` (an IEEE infinity, which orders and propagates through ``max``
correctly); no finite sentinel is ever used.

The underscore-prefixed ``batch_*`` helpers evaluate the same quantities on
stacks of matrices of shape ``(batch, n, n)``; the optimizer-backed channel
divergences use them to score many candidate inputs per numpy call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import linalg
from .linalg import SUPPORT_TOL, DimensionMismatch

PSD_TOL = 1e-10
TRACE_TOL = 1e-9
NORM_TOL = 1e-10
CONTAINMENT_TOL = 1e-9
LOG_FLOOR = 1e-14


class InvalidState(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DensityState:
    """Unit-trace PSD matrix with a recorded tensor factorization ``dims``."""

    matrix: np.ndarray
    dims: tuple = field(default=None)

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix)
        dims = (m.shape[0],) if self.dims is None else tuple(int(d) for d in self.dims)
        if int(np.prod(dims)) != m.shape[0] or m.shape[0] != m.shape[1]:
            raise DimensionMismatch(f"dims {dims} do not factor a {m.shape} matrix")
        if not linalg.is_hermitian(m, PSD_TOL):
            raise InvalidState("density matrix is not Hermitian")
        w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
        if w[0] < -PSD_TOL:
            raise InvalidState(f"density matrix has negative eigenvalue {w[0]:.3e}")
        if abs(np.trace(m).real - 1.0) > TRACE_TOL:
            raise InvalidState(f"trace {np.trace(m).real:.12f} differs from 1")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def reduced(self, keep: Sequence[int]) -> "DensityState":
        kept = sorted(keep)
        return DensityState(linalg.partial_trace(self.matrix, self.dims, kept),
                            tuple(self.dims[k] for k in kept))


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    dims: tuple = field(default=None)

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        dims = (a.size,) if self.dims is None else tuple(int(d) for d in self.dims)
        if int(np.prod(dims)) != a.size:
            raise DimensionMismatch(f"dims {dims} do not factor a vector of length {a.size}")
        if abs(np.linalg.norm(a) - 1.0) > NORM_TOL:
            raise InvalidState(f"state norm {np.linalg.norm(a):.12f} differs from 1")
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def normalized(cls, amplitudes, dims=None) -> "PureState":
        a = np.asarray(amplitudes, dtype=complex).reshape(-1)
        return cls(a / np.linalg.norm(a), dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> DensityState:
        a = self.amplitudes
        return DensityState(np.outer(a, a.conj()), self.dims)


StateLike = Union[DensityState, PureState, np.ndarray]


def as_density_matrix(state: StateLike) -> np.ndarray:
    if isinstance(state, DensityState):
        return state.matrix
    if isinstance(state, PureState):
        return state.density().matrix
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        return np.outer(arr, arr.conj())
    return arr


def basis_state(d: int, i: int) -> PureState:
    a = np.zeros(d, dtype=complex)
    a[i] = 1.0
    return PureState(a)


def maximally_entangled(d: int) -> PureState:
    """``1/sqrt(d) sum_i |ii>`` on dims ``(d, d)``."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    a = np.eye(d, dtype=complex).reshape(-1) / math.sqrt(d)
    return PureState(a, (d, d))


def maximally_mixed(d: int) -> DensityState:
    return DensityState(np.eye(d, dtype=complex) / d)


def _spectrum(state: StateLike) -> np.ndarray:
    w = np.linalg.eigvalsh(as_density_matrix(state))
    return np.clip(w, 0.0, None)


def _positive(w: np.ndarray) -> np.ndarray:
    return w[w > SUPPORT_TOL * max(float(np.max(w, initial=0.0)), 1e-300)]


def von_neumann_entropy(rho: StateLike) -> float:
    return float(batch_entropy(as_density_matrix(rho)[None])[0])


def renyi0_entropy(rho: StateLike) -> float:
    """log2 of the numerical rank."""
    return math.log2(_positive(_spectrum(rho)).size)


def min_entropy(rho: StateLike) -> float:
    return -math.log2(float(np.max(_spectrum(rho))))


def conditional_entropy(rho_ab: DensityState, a_factors: Sequence[int]) -> float:
    """``H(A|B) = S(rho_AB) - S(rho_B)`` where B is every factor not in ``a_factors``."""
    dims = rho_ab.dims
    a_set = set(a_factors)
    if len(dims) < 2 or not a_set or any(k < 0 or k >= len(dims) for k in a_set):
        raise DimensionMismatch(f"cannot split factors {dims} with A = {sorted(a_set)}")
    b = [k for k in range(len(dims)) if k not in a_set]
    rho_b = linalg.partial_trace(rho_ab.matrix, dims, b)
    return von_neumann_entropy(rho_ab) - von_neumann_entropy(rho_b)


def _check_pair(rho: np.ndarray, sigma: np.ndarray):
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"state shapes differ: {rho.shape} vs {sigma.shape}")


def relative_entropy(rho: StateLike, sigma: StateLike) -> float:
    """``Tr[rho log2 rho - rho log2 sigma]``, or ``inf`` if supp(rho) is not inside supp(sigma)."""
    r, s = as_density_matrix(rho), as_density_matrix(sigma)
    _check_pair(r, s)
    return float(batch_relative_entropy(r[None], s[None])[0])


def hypothesis_divergence_zero(rho: StateLike, sigma: StateLike) -> float:
    """Hypothesis-testing divergence at zero smoothing: ``-log2 Tr[P_rho sigma]``.

    ``P_rho`` projects onto the support of ``rho``; the value is ``inf`` when
    the overlap is at or below the support tolerance.
    """
    r, s = as_density_matrix(rho), as_density_matrix(sigma)
    _check_pair(r, s)
    return float(batch_hypothesis_divergence(r[None], s[None])[0])


# ---------------------------------------------------------------------------
# batched kernels


def _batch_eigh(m: np.ndarray):
    w, v = np.linalg.eigh(0.5 * (m + np.conj(np.swapaxes(m, -1, -2))))
    return np.clip(w, 0.0, None), v


def _support_mask(w: np.ndarray, tol: float = SUPPORT_TOL) -> np.ndarray:
    return w > tol * np.max(w, axis=-1, keepdims=True)


def batch_entropy(rho: np.ndarray) -> np.ndarray:
    w, _ = _batch_eigh(rho)
    mask = w > 0
    logs = np.log2(np.where(mask, w, 1.0))
    return np.maximum(0.0, -np.sum(w * logs, axis=-1))


def batch_renyi0(rho: np.ndarray) -> np.ndarray:
    w, _ = _batch_eigh(rho)
    return np.log2(np.sum(_support_mask(w), axis=-1))


def batch_relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Umegaki relative entropy of stacked pairs.

    ``w log w`` is continuous at zero, so every positive eigenvalue of ``rho``
    is kept. ``sigma`` keeps every eigenvalue above rounding level
    (``LOG_FLOOR * lambda_max``): dropping larger ones would silently discard
    genuine ``-p log q`` terms and bias the value upwards.
    """
    wr, vr = _batch_eigh(rho)
    ws, vs = _batch_eigh(sigma)
    ms = _support_mask(ws, LOG_FLOOR)
    # overlaps[b, i, j] = |<r_i|s_j>|^2
    ov = np.abs(np.conj(np.swapaxes(vr, -1, -2)) @ vs) ** 2
    weight = wr[..., :, None] * ov
    outside = np.sum(np.where(ms[..., None, :], 0.0, weight), axis=(-1, -2))
    log_r = np.log2(np.where(wr > 0, wr, 1.0))
    log_s = np.where(ms, np.log2(np.where(ms, ws, 1.0)), 0.0)
    val = np.sum(wr * log_r, axis=-1) - np.sum(weight * log_s[..., None, :], axis=(-1, -2))
    return np.where(outside > CONTAINMENT_TOL, np.inf, val)


def batch_hypothesis_divergence(rho: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    wr, vr = _batch_eigh(rho)
    mr = _support_mask(wr)
    # <v_i|sigma|v_i> for each eigenvector of rho
    diag = np.real(np.einsum("...ki,...kl,...li->...i", np.conj(vr), sigma, vr))
    overlap = np.sum(np.where(mr, diag, 0.0), axis=-1)
    safe = np.where(overlap > SUPPORT_TOL, overlap, 1.0)
    return np.where(overlap > SUPPORT_TOL, np.maximum(0.0, -np.log2(safe)), np.inf)


def batch_partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace applied to every matrix in a ``(batch, n, n)`` stack."""
    dims = [int(d) for d in dims]
    nf = len(dims)
    keep = sorted(keep)
    b = rho.shape[0]
    t = rho.reshape([b] + dims + dims)
    letters = iter("abcdefghijklmnopqrstuvwxyz")
    rows = [next(letters) for _ in range(nf)]
    cols = [rows[k] if k not in keep else next(letters) for k in range(nf)]
    sub = "Z" + "".join(rows) + "".join(cols) + "->Z" + "".join(rows[k] for k in keep) + "".join(
        cols[k] for k in keep)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return np.einsum(sub, t).reshape(b, dk, dk)
