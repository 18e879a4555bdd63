"""Truncated Fock-space primitives.

States are immutable containers around read-only numpy arrays. Everything
else in the package consumes them, so the invariants are checked here once,
at construction.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, TruncationWarning

#: default tolerated probability mass lost to a truncation
DEFAULT_LEAKAGE = 1e-6

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
NORM_TOL = 1e-12


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Truncation:
    """Input and output Fock cutoffs of a channel (levels ``0..dim-1``)."""

    dim_in: int
    dim_out: int

    def __post_init__(self):
        if int(self.dim_in) != self.dim_in or self.dim_in < 1:
            raise DomainError(f"dim_in must be a positive integer, got {self.dim_in}")
        if int(self.dim_out) != self.dim_out or self.dim_out < self.dim_in:
            raise DomainError(
                f"dim_out must be an integer >= dim_in={self.dim_in}, got {self.dim_out}"
            )


@dataclass(frozen=True)
class FockDensityMatrix:
    """Density matrix ``entries[m, n] = <m|rho|n>`` on levels ``0..dim-1``."""

    entries: np.ndarray
    leakage_tol: float = DEFAULT_LEAKAGE

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 1:
            raise DomainError(f"density matrix must be square, got shape {rho.shape}")
        herm = np.max(np.abs(rho - rho.conj().T))
        if herm > HERMITIAN_TOL:
            raise DomainError(f"density matrix is not Hermitian (defect {herm:.3e})")
        tr = np.trace(rho).real
        if tr > 1 + 1e-10 or tr < 1 - self.leakage_tol:
            raise DomainError(
                f"trace {tr!r} outside [1 - {self.leakage_tol:g}, 1]"
            )
        lam_min = np.linalg.eigvalsh(rho)[0]
        if lam_min < -PSD_TOL:
            raise DomainError(f"density matrix is not PSD (min eigenvalue {lam_min:.3e})")
        object.__setattr__(self, "entries", _frozen(rho))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def diagonal(self) -> np.ndarray:
        return self.entries.diagonal().real.copy()

    def embed(self, dim: int) -> np.ndarray:
        """Zero-padded copy on ``dim`` levels (``dim`` >= current)."""
        if dim < self.dim:
            raise DomainError(f"cannot embed dim {self.dim} into {dim}")
        out = np.zeros((dim, dim), dtype=complex)
        out[: self.dim, : self.dim] = self.entries
        return out


@dataclass(frozen=True)
class DiagonalState:
    """Fock-diagonal state with weights ``probs``; ``tail`` is the mass cut off."""

    probs: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise DomainError("probs must be a non-empty 1-d array")
        if np.any(p < 0):
            raise DomainError("probabilities must be nonnegative")
        if p.sum() > 1 + 1e-10:
            raise DomainError(f"probabilities sum to {p.sum()!r} > 1")
        object.__setattr__(self, "probs", _frozen(p))

    @property
    def dim(self) -> int:
        return self.probs.size

    def check(self, leakage_tol: float = DEFAULT_LEAKAGE) -> bool:
        return self.probs.sum() >= 1 - leakage_tol

    def to_density(self, leakage_tol: float = DEFAULT_LEAKAGE) -> FockDensityMatrix:
        return FockDensityMatrix(np.diag(self.probs).astype(complex), leakage_tol)


@dataclass(frozen=True)
class PureState:
    amps: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amps, dtype=complex)
        if a.ndim != 1 or a.size < 1:
            raise DomainError("amplitudes must be a non-empty 1-d array")
        norm = np.linalg.norm(a)
        if abs(norm - 1) > NORM_TOL:
            raise DomainError(f"state is not normalized (norm {norm!r})")
        object.__setattr__(self, "amps", _frozen(a))

    @property
    def dim(self) -> int:
        return self.amps.size

    def to_density(self) -> FockDensityMatrix:
        return FockDensityMatrix(np.outer(self.amps, self.amps.conj()))


@lru_cache(maxsize=4096)
def log_factorial(k: int) -> float:
    """``ln(k!)``."""
    if k < 0 or int(k) != k:
        raise DomainError(f"log_factorial needs a nonnegative integer, got {k}")
    return math.lgamma(k + 1)


def log_binom(n: int, k: int) -> float:
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k)


def fock_state(j: int, dim: int) -> PureState:
    if not 0 <= j < dim:
        raise DomainError(f"Fock level {j} outside 0..{dim - 1}")
    amps = np.zeros(dim, dtype=complex)
    amps[j] = 1.0
    return PureState(amps)


def thermal_state(nbar: float, dim: int) -> DiagonalState:
    """Truncated thermal state ``p_n = nbar^n / (1 + nbar)^(n + 1)``."""
    if nbar < 0:
        raise DomainError(f"mean photon number must be >= 0, got {nbar}")
    if nbar == 0:
        probs = np.zeros(dim)
        probs[0] = 1.0
        return DiagonalState(probs, 0.0)
    ratio = nbar / (1 + nbar)
    n = np.arange(dim)
    probs = np.exp(n * math.log(ratio) - math.log1p(nbar))
    return DiagonalState(probs, ratio**dim)


def pats_state(nbar: float, k_additions: int, dim: int,
               leakage_tol: float = DEFAULT_LEAKAGE) -> DiagonalState:
    """Photon-added thermal state ``(a^dag)^k rho_th a^k`` renormalized.

    ``|n><n|`` maps to ``(n+k)!/n! |n+k><n+k|``; the untruncated norm is
    ``k! (1 + nbar)^k``, so truncation loss shows up in ``tail``.
    """
    if nbar < 0:
        raise DomainError(f"mean photon number must be >= 0, got {nbar}")
    if k_additions < 1:
        raise DomainError(f"k_additions must be >= 1, got {k_additions}")
    th = thermal_state(nbar, max(dim - k_additions, 0) or 1)
    probs = np.zeros(dim)
    log_norm = log_factorial(k_additions) + k_additions * math.log1p(nbar)
    for n in range(max(dim - k_additions, 0)):
        if th.probs[n] == 0:
            continue
        log_w = (math.log(th.probs[n]) + log_factorial(n + k_additions)
                 - log_factorial(n) - log_norm)
        probs[n + k_additions] = math.exp(log_w)
    tail = max(0.0, 1.0 - math.fsum(probs))
    if tail > leakage_tol:
        warnings.warn(
            f"PATS truncated at dim={dim} loses mass {tail:.3e}",
            TruncationWarning,
            stacklevel=2,
        )
    return DiagonalState(probs, tail)


def as_density(rho) -> np.ndarray:
    """Dense complex matrix view of any supported state representation."""
    if isinstance(rho, FockDensityMatrix):
        return np.array(rho.entries)
    if isinstance(rho, DiagonalState):
        return np.diag(rho.probs).astype(complex)
    if isinstance(rho, PureState):
        return np.outer(rho.amps, rho.amps.conj())
    arr = np.asarray(rho)
    if arr.ndim == 1:
        return np.diag(arr).astype(complex)
    return arr.astype(complex)


# -- JSON round trip ---------------------------------------------------------

def state_to_json(rho) -> dict:
    if isinstance(rho, DiagonalState):
        return {"dim": rho.dim, "diag": rho.probs.tolist()}
    mat = as_density(rho)
    return {"dim": mat.shape[0], "re": mat.real.tolist(), "im": mat.imag.tolist()}


def state_from_json(doc) -> DiagonalState | FockDensityMatrix:
    if isinstance(doc, str):
        doc = json.loads(doc)
    dim = int(doc["dim"])
    if "diag" in doc:
        probs = np.asarray(doc["diag"], dtype=float)
        if probs.size != dim:
            raise DomainError(f"diag has {probs.size} entries, expected {dim}")
        return DiagonalState(probs)
    mat = np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc.get("im", 0.0))
    if mat.shape != (dim, dim):
        raise DomainError(f"matrix shape {mat.shape} does not match dim {dim}")
    return FockDensityMatrix(mat)
