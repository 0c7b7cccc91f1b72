"""Dense complex matrix kernel.

Hermitian eigendecomposition with a reproducible ordering of degenerate
eigenvectors, spectral functions restricted to the support of a PSD matrix,
Kronecker products and partial traces over an explicit tensor factorization.

All functions are pure and operate on ``numpy`` arrays. Matrices are at most
64x64; everything here is dense and O(n^3).
"""
from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

MAX_DIM = 64
HERMITIAN_TOL = 1e-10
SUPPORT_TOL = 1e-10


class LinalgError(ValueError):
    """Base class for kernel errors."""


class NotHermitian(LinalgError):
    pass


class NotPSD(LinalgError):
    pass


class DimensionMismatch(LinalgError):
    pass


class EigenDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(
        np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its first non-negligible entry is real positive."""
    out = vecs.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size:
            c = col[nz[0]]
            out[:, k] = col * (abs(c) / c)
    return out


def hermitian_eig(m, tol: float = HERMITIAN_TOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Eigenvector phases are fixed so that the first non-negligible entry is
    real and positive. Within a degenerate eigenspace the vectors returned by
    LAPACK are kept, but sorted lexicographically by their (real, imag)
    entries, so identical input bits always produce identical output.

    Raises:
        NotHermitian: if ``max|M - M^dagger|`` exceeds ``tol``.
        DimensionMismatch: for non-square input or dimension above 64.
    """
    m = as_matrix(m)
    n = m.shape[0]
    if m.shape[1] != n:
        raise DimensionMismatch(f"matrix is not square: {m.shape}")
    if n > MAX_DIM:
        raise DimensionMismatch(f"dimension {n} exceeds the supported maximum {MAX_DIM}")
    if not is_hermitian(m, tol):
        raise NotHermitian(f"asymmetry {np.max(np.abs(m - m.conj().T)):.3e} exceeds {tol:g}")
    herm = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(herm)
    v = _fix_phases(v)
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    order = list(range(n))
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[start] <= 1e-12 * scale:
            stop += 1
        if stop - start > 1:
            block = order[start:stop]
            block.sort(key=lambda k: tuple(
                x for z in v[:, k] for x in (round(z.real, 12), round(z.imag, 12))))
            order[start:stop] = block
        start = stop
    return EigenDecomposition(w[order], v[:, order])


def _psd_eig(m, tol: float) -> EigenDecomposition:
    dec = hermitian_eig(m)
    w = dec.eigenvalues
    scale = float(np.max(np.abs(w), initial=0.0))
    if w.size and w[0] < -tol * max(scale, 1.0):
        raise NotPSD(f"minimum eigenvalue {w[0]:.3e} is below -{tol:g}")
    return dec


def support_projector(m, tol: float = SUPPORT_TOL) -> np.ndarray:
    """Projector onto the span of eigenvectors with eigenvalue above ``tol * lambda_max``."""
    w, v = _psd_eig(m, tol)
    keep = w > tol * float(np.max(w, initial=0.0))
    vk = v[:, keep]
    return vk @ vk.conj().T


def matrix_log2_on_support(m, tol: float = SUPPORT_TOL) -> np.ndarray:
    """``V diag(log2 lambda) V^dagger`` with eigenvalues on the kernel mapped to zero.

    The zero convention is only safe when the caller has already checked
    that the other operand lives on the support of ``m``.
    """
    w, v = _psd_eig(m, tol)
    keep = w > tol * float(np.max(w, initial=0.0))
    logs = np.zeros_like(w)
    logs[keep] = np.log2(w[keep])
    return (v * logs) @ v.conj().T


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_all(mats: Sequence) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def partial_trace(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every factor of ``dims`` not listed in ``keep``.

    The kept factors appear in their original order. Keeping nothing returns
    the 1x1 matrix holding the full trace.
    """
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    n = int(np.prod(dims)) if dims else 1
    if m.shape != (n, n):
        raise DimensionMismatch(f"matrix shape {m.shape} does not match factors {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionMismatch(f"keep indices {keep} out of range for {len(dims)} factors")
    nf = len(dims)
    t = m.reshape(dims + dims)
    traced = [k for k in range(nf) if k not in keep]
    # einsum subscripts: row index i_k, column index j_k; traced factors share a label
    letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    rows = [next(letters) for _ in range(nf)]
    cols = [rows[k] if k in traced else next(letters) for k in range(nf)]
    out_sub = "".join(rows[k] for k in keep) + "".join(cols[k] for k in keep)
    red = np.einsum("".join(rows) + "".join(cols) + "->" + out_sub, t)
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return red.reshape(dk, dk)


def partial_transpose(m, dims: Sequence[int], factors: Sequence[int]) -> np.ndarray:
    """Transpose the listed tensor factors of ``m``."""
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    nf = len(dims)
    t = m.reshape(dims + dims)
    axes = list(range(2 * nf))
    for k in factors:
        axes[k], axes[nf + k] = axes[nf + k], axes[k]
    return t.transpose(axes).reshape(m.shape)


def permute_factors(m, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of a square operator: new factor ``i`` is old ``perm[i]``."""
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    nf = len(dims)
    t = m.reshape(dims + dims)
    axes = list(perm) + [nf + p for p in perm]
    return t.transpose(axes).reshape(m.shape)


def permute_vector(v, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return v.reshape([int(d) for d in dims]).transpose(list(perm)).reshape(-1)


def inv_sqrt_psd(m, tol: float = 1e-14) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    w = np.where(w > tol, w, tol)
    return (v / np.sqrt(w)) @ v.conj().T
