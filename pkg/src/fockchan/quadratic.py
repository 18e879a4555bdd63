"""Quadratic Kraus products ``W_{l l'} = F_l^dag F_l'`` and their linear independence.

Each ``F_l`` maps every input level to a single output level, so every
``W_{l l'}`` is a single band ``|c><c + offset|`` on the input space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import coeffs
from .errors import DomainError
from .fock_core import log_factorial
from .kraus import PhotonAddedChannel

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class BandMatrix:
    """Square matrix with entries only at ``(i, i + offset)``."""

    dim: int
    offset: int
    values: np.ndarray  # values[i] sits at (i, i + offset)

    def to_dense(self) -> np.ndarray:
        mat = np.zeros((self.dim, self.dim))
        i = np.arange(self.dim)
        j = i + self.offset
        ok = (j >= 0) & (j < self.dim)
        mat[i[ok], j[ok]] = self.values[ok]
        return mat

    def adjoint(self) -> BandMatrix:
        vals = np.zeros(self.dim)
        i = np.arange(self.dim)
        j = i + self.offset
        ok = (j >= 0) & (j < self.dim)
        vals[j[ok]] = self.values[ok]
        return BandMatrix(self.dim, -self.offset, vals)


def _kraus(channel: PhotonAddedChannel, ell: int):
    if not 0 <= ell < channel.n_kraus:
        raise DomainError(f"Kraus index {ell} outside built range 0..{channel.n_kraus - 1}")
    return channel.kraus_list[ell]


def w_operator(channel: PhotonAddedChannel, l: int, l_prime: int) -> BandMatrix:
    """Direct product ``F_l^dag F_l'`` from the stored Kraus bands."""
    a, b = _kraus(channel, l), _kraus(channel, l_prime)
    dim = channel.dim_in
    ra, ca, va = a.support()
    rb, cb, vb = b.support()
    row_to_b = dict(zip(rb.tolist(), zip(cb.tolist(), vb.tolist())))
    entries = {}
    for r, c, v in zip(ra.tolist(), ca.tolist(), va.tolist()):
        hit = row_to_b.get(r)
        if hit is not None:
            entries[c] = (hit[0], v * hit[1])
    offset = _band_offset(channel.family, l, l_prime)
    vals = np.zeros(dim)
    for c, (c2, v) in entries.items():
        assert c2 - c == offset
        vals[c] = v
    return BandMatrix(dim, offset, vals)


def _band_offset(family: str, l: int, l_prime: int) -> int:
    # W_{l l'} has entries |c><c + offset|
    return l - l_prime if family == "amplifier" else l_prime - l


def _signed(acc):
    return acc.sign_log()


def w_closed_form(channel: PhotonAddedChannel, l: int, l_prime: int) -> BandMatrix:
    """``W_{l l'}`` summed directly from the coefficient functions.

    Terms whose intermediate output level falls outside the output
    truncation are dropped, so this agrees with the cropped direct product.
    """
    _kraus(channel, l), _kraus(channel, l_prime)
    fam, kappa, n = channel.family, channel.kappa, channel.n_add
    dim, dim_out = channel.dim_in, channel.dim_out
    offset = _band_offset(fam, l, l_prime)
    vals = np.zeros(dim)
    lf = log_factorial
    for c in range(dim):
        c2 = c + offset
        if not 0 <= c2 < dim:
            continue
        if fam == "attenuator":
            m = c + n - l
            if m < 0 or m >= dim_out or c < l - n or c2 < l_prime - n:
                continue
            s1, g1 = coeffs.g2_sum(n, l, c, kappa).sign_log()
            s2, g2 = coeffs.g2_sum(n, l_prime, c2, kappa).sign_log()
            log_pref = 0.5 * (2 * lf(m) + lf(l) + lf(l_prime) - lf(c) - lf(c2) - 2 * lf(n))
        elif fam == "amplifier":
            m = c + l - n
            if m < 0 or m >= dim_out:
                continue
            s1, g1 = coeffs.g1_sum(n, c, m, kappa).sign_log()
            s2, g2 = coeffs.g1_sum(n, c2, m, kappa).sign_log()
            log_pref = (-2 * math.log(kappa)
                        + 0.5 * (lf(c) + lf(c2) + lf(l) + lf(l_prime) - 2 * lf(m) - 2 * lf(n)))
        else:
            m = l + n - c
            if m < 0 or m >= dim_out:
                continue
            s1, g1 = coeffs.g3_sum(n, c, m, kappa).sign_log()
            s2, g2 = coeffs.g3_sum(n, c2, m, kappa).sign_log()
            log_pref = (-math.log1p(kappa * kappa)
                        + 0.5 * (2 * lf(n) + lf(l) + lf(l_prime) - 2 * lf(m) - lf(c) - lf(c2)))
        if s1 and s2:
            vals[c] = s1 * s2 * math.exp(g1 + g2 + log_pref)
    return BandMatrix(dim, offset, vals)


@dataclass
class RankReport:
    count: int
    rank: int
    singular_values: list
    threshold: float
    labels: list = field(default_factory=list)
    dim: int = 0
    config: dict = field(default_factory=dict)

    @property
    def full_rank(self) -> bool:
        return self.rank == self.count

    @property
    def deficit(self) -> int:
        return self.count - self.rank

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "dim": self.dim,
            "count": self.count,
            "rank": self.rank,
            "full_rank": self.full_rank,
            "threshold": self.threshold,
            "singular_values": [float(s) for s in self.singular_values],
            "labels": [list(p) for p in self.labels],
        }


def rank_report(operators, labels=None, rtol: float = RANK_RTOL) -> RankReport:
    """Numeric rank of a set of matrices, each flattened to a vector."""
    mats = [op.to_dense() if isinstance(op, BandMatrix) else np.asarray(op) for op in operators]
    if not mats:
        return RankReport(0, 0, [], 0.0, labels or [])
    stack = np.stack([m.ravel() for m in mats])
    sv = np.linalg.svd(stack, compute_uv=False)
    thr = rtol * sv[0] if sv.size else 0.0
    rank = int(np.sum(sv > thr)) if sv[0] > 0 else 0
    return RankReport(len(mats), rank, sv.tolist(), float(thr), labels or [],
                      mats[0].shape[0])


@dataclass
class QuadraticSet:
    channel: PhotonAddedChannel
    pairs: list
    operators: dict
    report: RankReport | None = None

    def hermiticity_defect(self) -> float:
        """``max |W_{l l'}^dag - W_{l' l}|`` over stored pairs."""
        worst = 0.0
        for (a, b), w in self.operators.items():
            other = self.operators.get((b, a))
            if other is not None:
                worst = max(worst, float(np.max(np.abs(w.to_dense().T - other.to_dense()))))
        return worst


def _active(channel: PhotonAddedChannel, max_l: int) -> list[int]:
    top = min(max_l, channel.n_kraus - 1)
    return [ell for ell in range(top + 1) if np.any(channel.kraus_list[ell].values)]


def quadratic_set(channel: PhotonAddedChannel, max_l: int, rtol: float = RANK_RTOL) -> QuadraticSet:
    """All ``W_{l l'}`` over nonzero Kraus operators with ``l, l' <= max_l``."""
    if max_l < 0:
        raise DomainError("max_l must be nonnegative")
    idx = _active(channel, max_l)
    pairs = [(a, b) for a in idx for b in idx]
    ops = {p: w_operator(channel, *p) for p in pairs}
    report = rank_report([ops[p] for p in pairs], pairs, rtol)
    report.config = {"family": channel.family, "kappa": channel.kappa,
                     "n_add": channel.n_add, "max_l": max_l,
                     "dim_in": channel.dim_in, "dim_out": channel.dim_out}
    return QuadraticSet(channel, pairs, ops, report)


def independence_rank(channel: PhotonAddedChannel, max_l: int,
                      rtol: float = RANK_RTOL) -> RankReport:
    """Numeric rank of the vectorized ``W_{l l'}`` on the channel's input truncation.

    Evidence on a finite truncation only; says nothing about the
    infinite-dimensional operators.
    """
    if max_l < 1:
        raise DomainError("max_l must be >= 1")
    return quadratic_set(channel, max_l, rtol).report
