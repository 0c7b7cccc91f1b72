"""Quantum channels in Kraus and Choi form, and the operations the divergences need.

Conventions
-----------
* A Kraus operator of a channel ``A' -> A`` is a ``dim_out x dim_in`` matrix.
* Choi matrices are normalized states ``(N (x) I)(Phi+)`` on the factors
  ``(dim_out, dim_in)``: channel output first, reference copy of the input second.
* Whenever a channel acts on part of a larger system, the channel factors come
  first and the untouched ancilla factors are appended after them, in order.
* ``in_dims`` / ``out_dims`` optionally record a tensor factorization of the
  input and output spaces (e.g. ``(2, 2)`` for a channel ``A'C' -> AC``).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import linalg
from .linalg import DimensionMismatch
from .states import DensityState, PureState, as_density_matrix, maximally_entangled

TP_TOL = 1e-9
KRAUS_CUTOFF = 1e-12


class ChannelError(ValueError):
    pass


class NotIsometry(ChannelError):
    pass


class InvalidChoi(ChannelError):
    pass


class ParseError(ChannelError):
    pass


class ChannelValidationError(ChannelError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


def _dims(dims, total: int) -> tuple:
    if dims is None:
        return (total,)
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != total:
        raise DimensionMismatch(f"factorization {dims} does not multiply to {total}")
    return dims


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Channel ``rho -> sum_k K_k rho K_k^dagger``.

    ``kraus`` is stored as an array of shape ``(rank, dim_out, dim_in)``.
    Construction does not enforce trace preservation; use :func:`validate`.
    """

    kraus: np.ndarray
    in_dims: tuple = None
    out_dims: tuple = None
    name: str = ""

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3 or k.shape[0] == 0:
            raise DimensionMismatch(f"Kraus operators must form a (rank, out, in) array, got {k.shape}")
        object.__setattr__(self, "kraus", k)
        object.__setattr__(self, "in_dims", _dims(self.in_dims, k.shape[2]))
        object.__setattr__(self, "out_dims", _dims(self.out_dims, k.shape[1]))

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    @property
    def rank(self) -> int:
        return self.kraus.shape[0]

    def __call__(self, rho):
        return apply(self, rho)

    def with_dims(self, in_dims=None, out_dims=None, name=None) -> "KrausChannel":
        return KrausChannel(self.kraus, in_dims or self.in_dims, out_dims or self.out_dims,
                            self.name if name is None else name)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    matrix: np.ndarray
    dim_in: int
    dim_out: int

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix)
        n = self.dim_in * self.dim_out
        if m.shape != (n, n):
            raise DimensionMismatch(f"Choi matrix shape {m.shape} does not match {self.dim_out}x{self.dim_in}")
        object.__setattr__(self, "matrix", m)

    @property
    def dims(self) -> tuple:
        return (self.dim_out, self.dim_in)

    def check(self, tol: float = TP_TOL) -> None:
        """Raise :class:`InvalidChoi` unless PSD with input marginal ``I/dim_in``."""
        if not linalg.is_hermitian(self.matrix, 1e-10):
            raise InvalidChoi("Choi matrix is not Hermitian")
        w = np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))
        if w[0] < -1e-10:
            raise InvalidChoi(f"Choi matrix has negative eigenvalue {w[0]:.3e}")
        marginal = linalg.partial_trace(self.matrix, self.dims, [1])
        err = np.max(np.abs(marginal - np.eye(self.dim_in) / self.dim_in))
        if err > tol:
            raise InvalidChoi(f"input marginal deviates from I/d by {err:.3e}")


@dataclass(frozen=True, eq=False)
class Superchannel:
    """``N -> post o (N (x) id_E) o pre`` with ``pre: C' -> A'E`` and ``post: AE -> C``."""

    pre: KrausChannel
    ancilla_dim: int
    post: KrausChannel

    def __post_init__(self):
        if self.pre.dim_out % self.ancilla_dim or self.post.dim_in % self.ancilla_dim:
            raise DimensionMismatch("pre/post dimensions are not divisible by the ancilla dimension")

    @property
    def slot_in(self) -> int:
        return self.pre.dim_out // self.ancilla_dim

    @property
    def slot_out(self) -> int:
        return self.post.dim_in // self.ancilla_dim


@dataclass(frozen=True, eq=False)
class Measurement:
    """POVM elements ``M_k`` paired with output states ``omega_k``: ``rho -> sum_k Tr[M_k rho] omega_k``."""

    povm: tuple
    outputs: tuple

    def __post_init__(self):
        povm = tuple(linalg.as_matrix(m) for m in self.povm)
        outputs = tuple(o if isinstance(o, DensityState) else DensityState(as_density_matrix(o))
                        for o in self.outputs)
        if len(povm) != len(outputs) or not povm:
            raise DimensionMismatch("need one output state per POVM element")
        d = povm[0].shape[0]
        total = sum(povm)
        if np.max(np.abs(total - np.eye(d))) > TP_TOL:
            raise ChannelError("POVM elements do not sum to the identity")
        for m in povm:
            if m.shape != (d, d) or np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < -1e-10:
                raise ChannelError("POVM element is not PSD")
        object.__setattr__(self, "povm", povm)
        object.__setattr__(self, "outputs", outputs)


@dataclass
class ValidationReport:
    passed: bool
    residual: np.ndarray
    residual_norm: float
    kraus_shapes: list = field(default_factory=list)
    problems: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"passed": self.passed, "residual_norm": self.residual_norm,
                "kraus_shapes": [list(s) for s in self.kraus_shapes], "problems": list(self.problems)}


def validate(ch: KrausChannel, tol: float = TP_TOL) -> ValidationReport:
    """Trace-preservation residual ``I - sum K^dagger K`` and a pass/fail verdict."""
    k = ch.kraus
    residual = np.eye(ch.dim_in) - np.einsum("koi,koj->ij", k.conj(), k)
    norm = float(np.max(np.abs(residual), initial=0.0))
    problems = []
    if norm > tol:
        problems.append(f"trace-preservation residual {norm:.3e} exceeds {tol:g}")
    return ValidationReport(not problems, residual, norm, [op.shape for op in k], problems)


# ---------------------------------------------------------------------------
# action on states


def apply(ch: KrausChannel, rho) -> DensityState:
    r = as_density_matrix(rho)
    if r.shape != (ch.dim_in, ch.dim_in):
        raise DimensionMismatch(f"input dimension {r.shape[0]} does not match channel input {ch.dim_in}")
    k = ch.kraus
    out = np.einsum("koi,ij,kpj->op", k, r, k.conj())
    return DensityState(out, ch.out_dims)


def _state_dims(rho) -> tuple:
    if isinstance(rho, (DensityState, PureState)):
        return rho.dims
    return (as_density_matrix(rho).shape[0],)


def apply_extended(ch: KrausChannel, rho, ancilla_factors: Optional[Sequence[int]] = None) -> DensityState:
    """``(N (x) I)(rho)``: the channel acts on the leading factors of ``rho``.

    ``ancilla_factors`` lists the factors left untouched (default: every factor
    after the first). They must be the trailing factors; the output carries
    ``ch.out_dims`` followed by the ancilla dimensions.
    """
    r = as_density_matrix(rho)
    dims = _state_dims(rho)
    if ancilla_factors is None:
        ancilla_factors = list(range(1, len(dims)))
    anc = sorted(ancilla_factors)
    n_lead = len(dims) - len(anc)
    if anc != list(range(n_lead, len(dims))):
        raise DimensionMismatch("ancilla factors must be the trailing factors of the state")
    d_lead = int(np.prod(dims[:n_lead]))
    d_anc = int(np.prod(dims[n_lead:]))
    if d_lead != ch.dim_in:
        raise DimensionMismatch(f"channel input {ch.dim_in} does not match leading factors {dims[:n_lead]}")
    t = r.reshape(d_lead, d_anc, d_lead, d_anc)
    k = ch.kraus
    out = np.einsum("koi,iajb,kpj->oapb", k, t, k.conj()).reshape(ch.dim_out * d_anc, -1)
    return DensityState(out, tuple(ch.out_dims) + tuple(dims[n_lead:]))


def batch_apply_pure(ch: KrausChannel, psis: np.ndarray, d_anc: int = 1) -> np.ndarray:
    """Outputs ``(N (x) I)(|psi><psi|)`` for a ``(batch, dim_in*d_anc)`` stack of vectors."""
    b = psis.shape[0]
    p = psis.reshape(b, ch.dim_in, d_anc)
    phi = np.einsum("koi,bia->bkoa", ch.kraus, p).reshape(b, ch.rank, -1)
    return np.swapaxes(phi, 1, 2) @ phi.conj()


# ---------------------------------------------------------------------------
# representations


def to_choi(ch: KrausChannel) -> ChoiMatrix:
    phi = maximally_entangled(ch.dim_in)
    out = apply_extended(ch, phi)
    return ChoiMatrix(out.matrix, ch.dim_in, ch.dim_out)


def from_choi(c: ChoiMatrix, cutoff: float = KRAUS_CUTOFF) -> KrausChannel:
    """Kraus operators ``sqrt(d_in * lambda_k) * unvec(v_k)`` from the Choi eigendecomposition."""
    c.check()
    w, v = np.linalg.eigh(0.5 * (c.matrix + c.matrix.conj().T))
    keep = w > cutoff
    if not np.any(keep):
        raise InvalidChoi("Choi matrix has no eigenvalue above the cutoff")
    ops = [math.sqrt(c.dim_in * w[k]) * v[:, k].reshape(c.dim_out, c.dim_in)
           for k in np.flatnonzero(keep)[::-1]]
    return KrausChannel(np.array(ops))


def simplify(ch: KrausChannel) -> KrausChannel:
    """Re-derive a minimal Kraus set when the current one exceeds ``dim_in * dim_out`` operators."""
    if ch.rank <= ch.dim_in * ch.dim_out:
        return ch
    return from_choi(to_choi(ch)).with_dims(ch.in_dims, ch.out_dims, ch.name)


def channel_distance(a: KrausChannel, b: KrausChannel) -> float:
    """Frobenius distance between normalized Choi matrices."""
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        raise DimensionMismatch("channels act between different spaces")
    return float(np.linalg.norm(to_choi(a).matrix - to_choi(b).matrix))


# ---------------------------------------------------------------------------
# combinators


def compose(f: KrausChannel, g: KrausChannel) -> KrausChannel:
    """``f o g`` (apply ``g`` first)."""
    if g.dim_out != f.dim_in:
        raise DimensionMismatch(f"cannot compose: {g.dim_out} -> {f.dim_in}")
    ops = np.einsum("aij,bjk->abik", f.kraus, g.kraus).reshape(-1, f.dim_out, g.dim_in)
    return simplify(KrausChannel(ops, g.in_dims, f.out_dims))


def tensor(f: KrausChannel, g: KrausChannel) -> KrausChannel:
    ops = np.einsum("aij,bkl->abikjl", f.kraus, g.kraus).reshape(
        f.rank * g.rank, f.dim_out * g.dim_out, f.dim_in * g.dim_in)
    return simplify(KrausChannel(ops, f.in_dims + g.in_dims, f.out_dims + g.out_dims))


def mixture(channels: Sequence[KrausChannel], weights: Sequence[float]) -> KrausChannel:
    """Convex combination ``sum_i p_i N_i``."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("mixture weights must be a probability vector")
    first = channels[0]
    ops = [math.sqrt(p) * k for ch, p in zip(channels, weights) if p > 0 for k in ch.kraus]
    return simplify(KrausChannel(np.array(ops), first.in_dims, first.out_dims))


def apply_superchannel(phi: Superchannel, n: KrausChannel) -> KrausChannel:
    if phi.slot_in != n.dim_in or phi.slot_out != n.dim_out:
        raise DimensionMismatch(
            f"superchannel slot {phi.slot_in}->{phi.slot_out} does not fit channel {n.dim_in}->{n.dim_out}")
    middle = tensor(n, identity(phi.ancilla_dim))
    return compose(phi.post, compose(middle, phi.pre)).with_dims(phi.pre.in_dims, phi.post.out_dims)


# ---------------------------------------------------------------------------
# constructors


def identity(d: int) -> KrausChannel:
    return KrausChannel(np.eye(d, dtype=complex)[None], name=f"identity{d}")


def depolarizing(d_in: int, d_out: Optional[int] = None) -> KrausChannel:
    """Completely depolarizing channel ``rho -> Tr[rho] I/d_out``."""
    d_out = d_in if d_out is None else d_out
    ops = np.zeros((d_in * d_out, d_out, d_in), dtype=complex)
    for a in range(d_in):
        for b in range(d_out):
            ops[a * d_out + b, b, a] = 1.0 / math.sqrt(d_out)
    return KrausChannel(ops, name=f"depolarizing{d_in}x{d_out}")


def dephasing(d: int, basis: Optional[np.ndarray] = None) -> KrausChannel:
    """Completely dephasing channel in the basis given by the columns of ``basis``."""
    u = np.eye(d, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    if np.max(np.abs(u.conj().T @ u - np.eye(d))) > 1e-9:
        raise NotIsometry("dephasing basis is not orthonormal")
    ops = np.array([np.outer(u[:, i], u[:, i].conj()) for i in range(d)])
    return KrausChannel(ops, name=f"dephasing{d}")


def replacement(d_in: int, target) -> KrausChannel:
    """``rho -> Tr[rho] target``; with ``d_in == 1`` this is state preparation."""
    t = as_density_matrix(target)
    w, v = np.linalg.eigh(0.5 * (t + t.conj().T))
    ops = []
    for j in range(w.size):
        if w[j] <= KRAUS_CUTOFF:
            continue
        for a in range(d_in):
            e = np.zeros(d_in, dtype=complex)
            e[a] = 1.0
            ops.append(math.sqrt(w[j]) * np.outer(v[:, j], e))
    out_dims = target.dims if isinstance(target, (DensityState, PureState)) else None
    return KrausChannel(np.array(ops), out_dims=out_dims, name="replacement")


def state_preparation(target) -> KrausChannel:
    return replacement(1, target)


def isometry(v, tol: float = TP_TOL) -> KrausChannel:
    v = linalg.as_matrix(v)
    if np.max(np.abs(v.conj().T @ v - np.eye(v.shape[1]))) > tol:
        raise NotIsometry("V^dagger V differs from the identity")
    return KrausChannel(v[None], name="isometry")


def measurement_channel(m: Measurement) -> KrausChannel:
    ops = []
    for povm, out in zip(m.povm, m.outputs):
        mu, a = np.linalg.eigh(0.5 * (povm + povm.conj().T))
        nu, b = np.linalg.eigh(out.matrix)
        for i in range(mu.size):
            if mu[i] <= KRAUS_CUTOFF:
                continue
            for j in range(nu.size):
                if nu[j] <= KRAUS_CUTOFF:
                    continue
                ops.append(math.sqrt(mu[i] * nu[j]) * np.outer(b[:, j], a[:, i].conj()))
    return simplify(KrausChannel(np.array(ops), name="measurement"))


def projective_measurement(basis: np.ndarray) -> KrausChannel:
    """``rho -> sum_k <psi_k|rho|psi_k> |psi_k><psi_k|`` for the columns ``psi_k`` of ``basis``."""
    ch = dephasing(np.asarray(basis).shape[0], basis)
    return ch.with_dims(name="projective-measurement")


def swap(d1: int, d2: int) -> KrausChannel:
    """Unitary exchange of two factors ``(d1, d2) -> (d2, d1)``."""
    u = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for i in range(d1):
        for j in range(d2):
            u[j * d1 + i, i * d2 + j] = 1.0
    return KrausChannel(u[None], (d1, d2), (d2, d1), name="swap")


def randomize_zero() -> KrausChannel:
    """Qubit channel sending |0> to I/2 and keeping |1>; Choi diagonal (1/4, 0, 1/4, 1/2)."""
    k = np.zeros((3, 2, 2), dtype=complex)
    k[0, 0, 0] = k[1, 1, 0] = math.sqrt(0.5)
    k[2, 1, 1] = 1.0
    return KrausChannel(k, name="randomize-zero")


def random_channel(d_in: int, d_out: int, rng: np.random.Generator,
                   rank: Optional[int] = None) -> KrausChannel:
    """Gaussian Kraus operators normalized by ``(sum G^dagger G)^(-1/2)``.

    The rank is drawn from ``ceil(d_in/d_out)..d_in*d_out``; fewer operators
    cannot be trace preserving.
    """
    low = -(-d_in // d_out)
    if rank is None:
        rank = int(rng.integers(low, d_in * d_out + 1))
    elif rank < low:
        raise ValueError(f"a {d_in}->{d_out} channel needs at least {low} Kraus operators")
    g = (rng.normal(size=(rank, d_out, d_in)) + 1j * rng.normal(size=(rank, d_out, d_in))) / math.sqrt(2)
    s = np.einsum("koi,koj->ij", g.conj(), g)
    return KrausChannel(g @ linalg.inv_sqrt_psd(s), name="random")


def random_state(d: int, rng: np.random.Generator, rank: Optional[int] = None) -> DensityState:
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ g.conj().T
    return DensityState(m / np.trace(m).real)


def random_pure_state(d: int, rng: np.random.Generator) -> PureState:
    return PureState.normalized(rng.normal(size=d) + 1j * rng.normal(size=d))


def subchannel(n: KrausChannel, keep: Union[str, int], frozen_input) -> KrausChannel:
    """Freeze one input factor of a bipartite channel ``A'C' -> AC`` and trace the other output.

    ``keep="A"`` gives ``rho_A' -> Tr_C[N(rho_A' (x) frozen)]``; ``keep="C"``
    gives ``rho_C' -> Tr_A[N(frozen (x) rho_C')]``. The bipartition is read from
    ``n.in_dims`` and ``n.out_dims``, which must both have two factors.
    """
    if len(n.in_dims) != 2 or len(n.out_dims) != 2:
        raise DimensionMismatch("subchannel needs a channel with two input and two output factors")
    side = {"A": 0, "C": 1, 0: 0, 1: 1}[keep]
    (da_in, dc_in), (da_out, dc_out) = n.in_dims, n.out_dims
    frozen = as_density_matrix(frozen_input)
    other_in = dc_in if side == 0 else da_in
    if frozen.shape != (other_in, other_in):
        raise DimensionMismatch(f"frozen input must have dimension {other_in}")
    p, vecs = np.linalg.eigh(0.5 * (frozen + frozen.conj().T))
    k = n.kraus.reshape(n.rank, da_out, dc_out, da_in, dc_in)
    ops = []
    for j in range(p.size):
        if p[j] <= KRAUS_CUTOFF:
            continue
        c = vecs[:, j]
        if side == 0:
            # (I_A (x) <m|_C) K (I_A' (x) |c>)
            red = np.einsum("kamib,b->kmai", k, c) * math.sqrt(p[j])
        else:
            # (<a|_A (x) I_C) K (|c> (x) I_C')
            red = np.einsum("kamib,i->kamb", k, c) * math.sqrt(p[j])
        ops.append(red.reshape(-1, red.shape[-2], red.shape[-1]))
    out = np.concatenate(ops)
    dims_in = da_in if side == 0 else dc_in
    dims_out = da_out if side == 0 else dc_out
    return simplify(KrausChannel(out.reshape(-1, dims_out, dims_in)))


# ---------------------------------------------------------------------------
# JSON channel files


def _encode_matrix(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def channel_to_dict(ch: KrausChannel, **extra) -> dict:
    d = {"name": ch.name, "dim_in": ch.dim_in, "dim_out": ch.dim_out,
         "kraus": [_encode_matrix(k) for k in ch.kraus]}
    if len(ch.in_dims) > 1:
        d["in_dims"] = list(ch.in_dims)
    if len(ch.out_dims) > 1:
        d["out_dims"] = list(ch.out_dims)
    d.update(extra)
    return d


def channel_from_dict(data: dict, check: bool = True, tol: float = TP_TOL) -> KrausChannel:
    try:
        dim_in, dim_out = int(data["dim_in"]), int(data["dim_out"])
        raw = np.asarray(data["kraus"], dtype=float)
        if raw.ndim != 4 or raw.shape[1:] != (dim_out, dim_in, 2):
            raise ParseError(f"kraus array has shape {raw.shape}, expected (r, {dim_out}, {dim_in}, 2)")
        ops = raw[..., 0] + 1j * raw[..., 1]
        ch = KrausChannel(ops, data.get("in_dims"), data.get("out_dims"), str(data.get("name", "")))
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed channel description: {exc}") from exc
    if check:
        report = validate(ch, tol)
        if not report.passed:
            raise ChannelValidationError("; ".join(report.problems), report)
    return ch


def load_channel(path: Union[str, Path], check: bool = True, tol: float = TP_TOL) -> KrausChannel:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top-level JSON value must be an object")
    return channel_from_dict(data, check, tol)


def load_channel_meta(path: Union[str, Path]) -> dict:
    """Raw JSON object of a channel file (for optional fields such as ``type``)."""
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def save_channel(ch: KrausChannel, path: Union[str, Path], **extra) -> None:
    Path(path).write_text(json.dumps(channel_to_dict(ch, **extra), indent=1))
