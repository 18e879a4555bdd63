"""Applying channels to states, support ranges, complements and thermal mixtures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import coeffs
from .errors import DomainError, ToleranceError
from .fock_core import (
    DiagonalState,
    FockDensityMatrix,
    as_density,
    log_factorial,
    thermal_state,
)
from .kraus import (
    DEFAULT_TOL,
    KrausOperator,
    PhotonAddedChannel,
    build_channel,
    normalize_family,
)

DEFAULT_TAIL = 1e-8


@dataclass(frozen=True)
class SupportRange:
    """Smallest and largest occupied Fock level; ``n_max`` may be ``math.inf``."""

    n_min: int
    n_max: float

    def __post_init__(self):
        if self.n_min < 0 or self.n_max < self.n_min:
            raise DomainError(f"invalid support range ({self.n_min}, {self.n_max})")

    def contains(self, level: int) -> bool:
        return self.n_min <= level <= self.n_max


@dataclass(frozen=True)
class MixtureChannel:
    """``sum_n p_n(nbar) Phi(kappa; n)`` cut off after ``cutoff``."""

    family: str
    kappa: float
    nbar: float
    weights: np.ndarray
    components: tuple
    cutoff: int
    tail: float

    @property
    def dim_in(self) -> int:
        return self.components[0].dim_in

    @property
    def dim_out(self) -> int:
        return self.components[0].dim_out


# -- apply ---------------------------------------------------------------------

def _band_conjugate(op: KrausOperator, rho: np.ndarray):
    rows, cols, vals = op.support()
    if rows.size == 0:
        return None
    block = np.outer(vals, vals) * rho[np.ix_(cols, cols)]
    return rows, block


def apply(channel, rho) -> FockDensityMatrix:
    """``sum_l F_l rho F_l^dag`` on the channel's output truncation.

    Banded operators touch one ``(rows, rows)`` block each; contributions are
    added in ascending Kraus index with Kahan compensation.
    """
    if isinstance(channel, MixtureChannel):
        total = sum(w * np.asarray(apply(c, rho).entries)
                    for w, c in zip(channel.weights, channel.components))
        return FockDensityMatrix(total, _leak_tol(channel))
    mat = as_density(rho)
    if mat.shape[0] != channel.dim_in:
        raise DomainError(f"state dim {mat.shape[0]} != channel dim_in {channel.dim_in}")
    out = np.zeros((channel.dim_out, channel.dim_out), dtype=complex)
    comp = np.zeros_like(out)
    for op in channel.kraus_list:
        if isinstance(op, KrausOperator):
            hit = _band_conjugate(op, mat)
            if hit is None:
                continue
            rows, block = hit
            idx = np.ix_(rows, rows)
            y = block - comp[idx]
            t = out[idx] + y
            comp[idx] = (t - out[idx]) - y
            out[idx] = t
        else:
            out += op @ mat @ op.conj().T
    return FockDensityMatrix(out, _leak_tol(channel))


def _leak_tol(channel):
    # output trace can only fall short by the truncation/completeness defect
    defect = getattr(channel, "completeness_defect", 0.0)
    tail = getattr(channel, "tail", 0.0)
    if isinstance(channel, MixtureChannel):
        defect = max(c.completeness_defect for c in channel.components)
    return max(1e-6, 2 * (defect + tail) + 1e-9)


def fock_action(family: str, kappa: float, n_add: int, j: int, dim_out: int,
                l_max: int | None = None) -> np.ndarray:
    """Output weights of ``Phi(kappa; n)`` on ``|j><j|`` from the closed forms.

    Only Kraus indices ``l <= l_max`` contribute when ``l_max`` is given, so
    the result matches a channel built with a finite Kraus set.
    """
    family = normalize_family(family)
    n = n_add
    out = np.zeros(dim_out)
    if family == "attenuator":
        # level j + n - l, weight (j+n-l)! l! / (j! n!) g2(n, l, j)^2
        hi = j + n if l_max is None else min(j + n, l_max)
        for ell in range(hi + 1):
            m = j + n - ell
            if m >= dim_out:
                continue
            sign, lg = coeffs.g2_sum(n, ell, j, kappa).sign_log()
            if sign:
                out[m] = math.exp(2 * lg + (log_factorial(m) - log_factorial(j))
                                  + (log_factorial(ell) - log_factorial(n)))
    elif family == "amplifier":
        # level l - n + j, weight kappa^-2 j! l! / ((l-n+j)! n!) g1(n, j, l-n+j)^2
        hi = dim_out - 1 + n - j
        if l_max is not None:
            hi = min(hi, l_max)
        for ell in range(max(n - j, 0), hi + 1):
            m = ell - n + j
            sign, lg = coeffs.g1_sum(n, j, m, kappa).sign_log()
            if sign:
                out[m] = math.exp(2 * lg - 2 * math.log(kappa)
                                  + (log_factorial(j) - log_factorial(m))
                                  + (log_factorial(ell) - log_factorial(n)))
    else:
        # level l + n - j, weight d^2 n! l! / ((l+n-j)! j!) g3(n, j, l+n-j)^2
        log_d2 = -math.log1p(kappa * kappa)
        hi = dim_out - 1 - n + j
        if l_max is not None:
            hi = min(hi, l_max)
        for ell in range(max(j - n, 0), hi + 1):
            m = ell + n - j
            sign, lg = coeffs.g3_sum(n, j, m, kappa).sign_log()
            if sign:
                out[m] = math.exp(2 * lg + log_d2 + (log_factorial(n) - log_factorial(m))
                                  + (log_factorial(ell) - log_factorial(j)))
    return out


def apply_diagonal(channel, d) -> DiagonalState:
    """Closed-form image of a Fock-diagonal state."""
    if isinstance(channel, MixtureChannel):
        total = sum(w * apply_diagonal(c, d).probs
                    for w, c in zip(channel.weights, channel.components))
        return DiagonalState(total, max(0.0, 1.0 - math.fsum(total)))
    if not isinstance(channel, PhotonAddedChannel):
        raise TypeError("apply_diagonal needs a photon-added channel")
    probs = d.probs if isinstance(d, DiagonalState) else np.asarray(d, dtype=float)
    if probs.size != channel.dim_in:
        raise DomainError(f"state dim {probs.size} != channel dim_in {channel.dim_in}")
    out = np.zeros(channel.dim_out)
    for j, p in enumerate(probs):
        if p == 0:
            continue
        out += p * fock_action(channel.family, channel.kappa, channel.n_add, j,
                               channel.dim_out, channel.n_kraus - 1)
    return DiagonalState(out, max(0.0, 1.0 - math.fsum(out)))


# -- structure -----------------------------------------------------------------

def support_bounds(family: str, n_add: int, in_range: SupportRange) -> SupportRange:
    """Output Fock range for inputs supported on ``in_range``.

    The conjugator floor is set by the highest input level: |j> reaches down
    to ``n - j``.
    """
    family = normalize_family(family)
    if family == "attenuator":
        return SupportRange(0, in_range.n_max + n_add)
    if family == "amplifier":
        return SupportRange(max(in_range.n_min - n_add, 0), math.inf)
    return SupportRange(max(n_add - in_range.n_max, 0), math.inf)


def support_of(weights, threshold: float = 0.0) -> SupportRange:
    """Occupied range of a weight vector (entries ``> threshold``)."""
    idx = np.flatnonzero(np.asarray(weights) > threshold)
    if idx.size == 0:
        raise DomainError("state has empty support")
    return SupportRange(int(idx[0]), int(idx[-1]))


def complementary_params(family: str, kappa: float) -> tuple[str, float]:
    family = normalize_family(family)
    if family == "amplifier":
        return "conjugator", math.sqrt(kappa * kappa - 1)
    if family == "attenuator":
        return "attenuator", math.sqrt(max(0.0, 1 - kappa * kappa))
    return "amplifier", math.sqrt(kappa * kappa + 1)


def complementary(channel: PhotonAddedChannel, dim_out: int | None = None,
                  tol: float | None = None) -> PhotonAddedChannel:
    """Photon-added channel realizing the environment output, same ``n``."""
    fam, kap = complementary_params(channel.family, channel.kappa)
    if tol is None:
        tol = channel.tol
    if dim_out is None and fam != "attenuator":
        dim_out = channel.dim_out
    return build_channel(fam, kap, channel.n_add, channel.dim_in, dim_out, tol)


def dephase(rho) -> DiagonalState:
    diag = np.real(np.diagonal(as_density(rho))).copy()
    diag[diag < 0] = 0.0
    return DiagonalState(diag, max(0.0, 1.0 - math.fsum(diag)))


def offdiagonal_max(rho) -> float:
    mat = as_density(rho)
    return float(np.max(np.abs(mat - np.diag(np.diagonal(mat))))) if mat.size > 1 else 0.0


# -- noisy channels as mixtures ------------------------------------------------

def thermal_cutoff(nbar: float, tail_tol: float = DEFAULT_TAIL) -> int:
    """Smallest ``c`` with geometric tail ``(nbar/(1+nbar))^(c+1) <= tail_tol``."""
    if nbar == 0:
        return 0
    ratio = nbar / (1 + nbar)
    c = math.ceil(math.log(tail_tol) / math.log(ratio)) - 1
    while ratio ** (c + 1) > tail_tol:
        c += 1
    while c > 0 and ratio**c <= tail_tol:
        c -= 1
    return max(c, 0)


def mixture_noisy(family: str, kappa: float, nbar: float, dim_in: int,
                  dim_out: int | None = None, cutoff: int | None = None,
                  tail_tol: float = DEFAULT_TAIL, tol: float = DEFAULT_TOL) -> MixtureChannel:
    """Noisy Gaussian channel as a thermal-weighted sum of photon-added channels."""
    family = normalize_family(family)
    if nbar < 0:
        raise DomainError(f"mean photon number must be >= 0, got {nbar}")
    if cutoff is None:
        cutoff = thermal_cutoff(nbar, tail_tol)
    ratio = nbar / (1 + nbar)
    tail = ratio ** (cutoff + 1) if nbar > 0 else 0.0
    if tail > tail_tol:
        raise ToleranceError(f"thermal tail {tail:.3e} beyond cutoff {cutoff} exceeds "
                             f"{tail_tol:.1e}", tail, tail_tol)
    weights = thermal_state(nbar, cutoff + 1).probs
    comps = [build_channel(family, kappa, n, dim_in, dim_out, tol) for n in range(cutoff + 1)]
    common = max(c.dim_out for c in comps)
    comps = tuple(c if c.dim_out == common else c.padded(common) for c in comps)
    return MixtureChannel(family, float(kappa), float(nbar), weights, comps, cutoff, tail)
