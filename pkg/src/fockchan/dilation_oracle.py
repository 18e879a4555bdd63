"""Independent ground truth: two-mode Gaussian unitaries from their generators.

Nothing here uses the closed-form coefficients. Unitaries are
``exp(t * G)`` for the real antisymmetric generators

* beamsplitter   ``G = a b^dag - a^dag b``,  ``kappa = cos(theta)``
* two-mode squeeze ``G = a^dag b^dag - a b``, ``kappa = cosh(r)``
* conjugator     squeeze followed by the mode flip, ``kappa = sinh(r)``

``i G`` is Hermitian, so each connected block of the (sparse) generator is
exponentiated through ``numpy.linalg.eigh``. On a truncated space the
squeezer is not closed: rows near the cutoff are wrong, which is why outputs
are only trusted on a window well below ``per_mode_dim``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import DomainError
from .fock_core import DiagonalState, FockDensityMatrix, PureState, as_density
from .kraus import check_kappa, normalize_family

KINDS = ("beamsplitter", "two_mode_squeeze", "mode_flip", "conjugator")


@dataclass(frozen=True)
class DilationSpec:
    unitary_kind: str
    parameter: float
    per_mode_dim: int
    env_state: PureState | DiagonalState | None = None

    def __post_init__(self):
        if self.unitary_kind not in KINDS:
            raise DomainError(f"unknown unitary kind {self.unitary_kind!r}")
        if self.per_mode_dim < 2:
            raise DomainError("per_mode_dim must be >= 2")
        if self.env_state is not None and self.env_state.dim > self.per_mode_dim:
            raise DomainError("environment state does not fit the per-mode truncation")

    @property
    def kappa(self) -> float:
        if self.unitary_kind == "beamsplitter":
            return math.cos(self.parameter)
        if self.unitary_kind == "two_mode_squeeze":
            return math.cosh(self.parameter)
        if self.unitary_kind == "conjugator":
            return math.sinh(self.parameter)
        return float("nan")


def spec_for(family: str, kappa: float, per_mode_dim: int, env_state=None) -> DilationSpec:
    family = normalize_family(family)
    check_kappa(family, kappa)
    if family == "attenuator":
        return DilationSpec("beamsplitter", math.acos(kappa), per_mode_dim, env_state)
    if family == "amplifier":
        return DilationSpec("two_mode_squeeze", math.acosh(kappa), per_mode_dim, env_state)
    return DilationSpec("conjugator", math.asinh(kappa), per_mode_dim, env_state)


def _ladder(dim):
    return sp.diags(np.sqrt(np.arange(1, dim)), 1, format="csr")


def generator(kind: str, dim: int) -> sp.csr_matrix:
    a = _ladder(dim)
    eye = sp.identity(dim, format="csr")
    a1, a2 = sp.kron(a, eye, "csr"), sp.kron(eye, a, "csr")
    if kind == "beamsplitter":
        return (a1 @ a2.T - a1.T @ a2).tocsr()
    if kind in ("two_mode_squeeze", "conjugator"):
        return (a1.T @ a2.T - a1 @ a2).tocsr()
    raise DomainError(f"no generator for {kind!r}")


def flip_permutation(dim: int) -> np.ndarray:
    """Index map: basis vector ``|n1, n2>`` goes to ``|n2, n1>``."""
    n1, n2 = np.divmod(np.arange(dim * dim), dim)
    return n2 * dim + n1


class BlockUnitary:
    """``exp(t G)`` kept as dense blocks over the connected components of ``G``."""

    def __init__(self, gen: sp.csr_matrix, t: float, post_flip: bool = False):
        self.size = gen.shape[0]
        self.dim = int(round(math.sqrt(self.size)))
        n_blocks, labels = connected_components(gen != 0, directed=False)
        self._labels = labels
        self._blocks = []
        for b in range(n_blocks):
            idx = np.flatnonzero(labels == b)
            h = 1j * gen[idx][:, idx].toarray()
            w, v = np.linalg.eigh(h)
            self._blocks.append((idx, (v * np.exp(-1j * t * w)) @ v.conj().T))
        self._post_flip = post_flip
        self._flip = flip_permutation(self.dim)

    def columns(self, inputs) -> np.ndarray:
        """``U[:, inputs]`` as a dense ``(size, len(inputs))`` array."""
        out = np.zeros((self.size, len(inputs)), dtype=complex)
        for c, col in enumerate(inputs):
            if self._post_flip:
                col = self._flip[col]
            idx, blk = self._blocks[self._labels[col]]
            out[idx, c] = blk[:, np.searchsorted(idx, col)]
        return out

    def toarray(self) -> np.ndarray:
        return self.columns(range(self.size))


@lru_cache(maxsize=32)
def _block_unitary(kind: str, parameter: float, dim: int) -> BlockUnitary:
    return BlockUnitary(generator(kind, dim), parameter, post_flip=(kind == "conjugator"))


def build_unitary(spec: DilationSpec) -> np.ndarray:
    """Dense two-mode unitary on ``per_mode_dim**2`` levels, index ``n1*dim + n2``."""
    dim = spec.per_mode_dim
    if spec.unitary_kind == "mode_flip":
        u = np.zeros((dim * dim, dim * dim))
        u[flip_permutation(dim), np.arange(dim * dim)] = 1.0
        return u
    return _block_unitary(spec.unitary_kind, float(spec.parameter), dim).toarray()


def _env_components(env, dim):
    """Pure environment components ``(weight, amplitudes)``."""
    if env is None:
        env = PureState(np.eye(1, dim, 0).ravel())
    if isinstance(env, DiagonalState):
        comps = []
        for k, p in enumerate(env.probs):
            if p > 0:
                amps = np.zeros(dim, dtype=complex)
                amps[k] = 1.0
                comps.append((p, amps))
        return comps
    amps = np.zeros(dim, dtype=complex)
    amps[: env.dim] = env.amps
    return [(1.0, amps)]


def _dilate(spec: DilationSpec, rho):
    """``sum_w w * U (rho (x) |e><e|) U^dag`` reshaped to ``(m1, m2, m1', m2')`` factors.

    Returns a list of ``(weight, W)`` with ``W[m1, m2, i] = sum_k U[(m1,m2),(i,k)] e_k``,
    so the joint output is ``sum_w w W rho W^dag``.
    """
    dim = spec.per_mode_dim
    mat = as_density(rho)
    d_in = mat.shape[0]
    if d_in > dim:
        raise DomainError(f"input dim {d_in} exceeds per_mode_dim {dim}")
    if spec.unitary_kind == "mode_flip":
        uni = None
    else:
        uni = _block_unitary(spec.unitary_kind, float(spec.parameter), dim)
    out = []
    for w, e in _env_components(spec.env_state, dim):
        levels = np.flatnonzero(e)
        cols = [i * dim + k for i in range(d_in) for k in levels]
        if uni is None:
            big = np.zeros((dim * dim, len(cols)), dtype=complex)
            big[flip_permutation(dim)[cols], np.arange(len(cols))] = 1.0
        else:
            big = uni.columns(cols)
        big = big.reshape(dim * dim, d_in, levels.size) @ e[levels]
        out.append((w, big.reshape(dim, dim, d_in)))
    return mat, out


def _reduce(W, mat):
    # sum_{b,i,j} W[a,b,i] mat[i,j] conj(W[c,b,j])
    a, b, d = W.shape
    left = (W.reshape(a * b, d) @ mat).reshape(a, b * d)
    return left @ W.reshape(a, b * d).conj().T


def channel_via_dilation(spec: DilationSpec, rho) -> FockDensityMatrix:
    """``Tr_E[U (rho (x) sigma_E) U^dag]`` on ``per_mode_dim`` levels."""
    mat, parts = _dilate(spec, rho)
    out = sum(w * _reduce(W, mat) for w, W in parts)
    return FockDensityMatrix(out, leakage_tol=1.0)


def complementary_via_dilation(spec: DilationSpec, rho) -> FockDensityMatrix:
    """``Tr_A[U (rho (x) sigma_E) U^dag]`` on ``per_mode_dim`` levels."""
    mat, parts = _dilate(spec, rho)
    out = sum(w * _reduce(np.ascontiguousarray(W.transpose(1, 0, 2)), mat) for w, W in parts)
    return FockDensityMatrix(out, leakage_tol=1.0)


def partial_trace(joint: np.ndarray, dim1: int, dim2: int, keep: int = 0) -> np.ndarray:
    """Reduced state of a ``(dim1*dim2)``-square matrix; ``keep`` selects the mode."""
    t = joint.reshape(dim1, dim2, dim1, dim2)
    return np.einsum("ijkj->ik", t) if keep == 0 else np.einsum("ijil->jl", t)


def oracle_output(family: str, kappa: float, rho, env=None, window: int | None = None,
                  guard_factor: float = 2.0, edge_tol: float = 1e-13,
                  complementary: bool = False, max_dim: int = 400) -> np.ndarray:
    """Oracle channel (or complement) output restricted to ``window`` levels.

    The per-mode dimension starts at ``guard_factor`` times the working size
    and grows until the windowed output stops changing by more than
    ``edge_tol``, which flushes truncation-edge errors of the squeezer.
    """
    mat = as_density(rho)
    env_dim = 1 if env is None else env.dim
    working = mat.shape[0] + env_dim
    if window is None:
        window = working
    working = max(working, window)
    dim = max(int(math.ceil(guard_factor * working)), 2)
    step = max(working // 2, 4)
    fn = complementary_via_dilation if complementary else channel_via_dilation
    prev = None
    while True:
        spec = spec_for(family, kappa, dim, env)
        cur = np.array(fn(spec, mat).entries[:window, :window])
        if prev is not None and np.max(np.abs(cur - prev)) <= edge_tol:
            return cur
        if dim >= max_dim:
            raise DomainError(f"oracle did not converge below per_mode_dim={max_dim}")
        prev = cur
        dim = min(dim + step, max_dim)
