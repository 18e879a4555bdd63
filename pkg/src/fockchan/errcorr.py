"""Environment-assisted recovery of Fock-basis information.

Knowing which Kraus index ``y`` fired, the receiver undoes the band shift of
``F_y``: every input ``|j>`` lands on a single output level, so the recovery
is a relabelling of levels plus a projector on whatever ``F_y`` never hits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ToleranceError
from .fock_core import FockDensityMatrix
from .kraus import PhotonAddedChannel

NULL_THRESHOLD = 1e-12


@dataclass(frozen=True)
class RecoveryMap:
    """``R_y(s) = sum_j |j><phi_j| s |phi_j><j| + E s E`` on the output space."""

    y: int
    dim: int
    inputs: np.ndarray  # j with ||F_y|j>|| above threshold
    targets: np.ndarray  # output level carrying phi_j
    signs: np.ndarray  # phi_j = sign * |target>
    norms: np.ndarray  # ||F_y|j>|| for every input level
    residual: np.ndarray  # diagonal of the projector E

    def kraus_list(self) -> list[np.ndarray]:
        ops = []
        for j, t, s in zip(self.inputs, self.targets, self.signs):
            k = np.zeros((self.dim, self.dim))
            k[j, t] = s
            ops.append(k)
        ops.append(np.diag(self.residual))
        return ops

    def completeness_defect(self) -> float:
        total = sum(k.T @ k for k in self.kraus_list())
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def __call__(self, sigma: np.ndarray) -> np.ndarray:
        sigma = np.asarray(sigma)
        out = np.zeros_like(sigma, dtype=complex)
        out[self.inputs, self.inputs] = sigma[self.targets, self.targets]
        keep = self.residual.astype(bool)
        out[np.ix_(keep, keep)] += sigma[np.ix_(keep, keep)]
        return out


def build_recovery(channel: PhotonAddedChannel, y: int,
                   null_threshold: float = NULL_THRESHOLD) -> RecoveryMap:
    if not 0 <= y < channel.n_kraus:
        raise DomainError(f"Kraus index {y} outside built range 0..{channel.n_kraus - 1}")
    op = channel.kraus_list[y]
    rows, cols, vals = op.support()
    norms = np.zeros(channel.dim_in)
    norms[cols] = np.abs(vals)
    keep = np.abs(vals) > null_threshold
    residual = np.ones(channel.dim_out)
    residual[rows[keep]] = 0.0
    return RecoveryMap(y, channel.dim_out, cols[keep], rows[keep],
                       np.sign(vals[keep]), norms, residual)


def corrected_apply(channel: PhotonAddedChannel, x: int,
                    null_threshold: float = NULL_THRESHOLD) -> FockDensityMatrix:
    """``sum_y R_y(F_y |x><x| F_y^dag)`` on the output space.

    The result is ``(1 - defect_x) |x><x|``; a shortfall beyond the channel's
    completeness defect raises ``ToleranceError``.
    """
    if not 0 <= x < channel.dim_in:
        raise DomainError(f"x={x} outside input truncation {channel.dim_in}")
    out = np.zeros((channel.dim_out, channel.dim_out), dtype=complex)
    for y, op in enumerate(channel.kraus_list):
        col = op.to_dense()[:, x]
        if not np.any(col):
            continue
        out += build_recovery(channel, y, null_threshold)(np.outer(col, col))
    shortfall = 1.0 - float(np.real(np.trace(out)))
    allowed = channel.completeness_defect + 1e-10
    if shortfall > allowed:
        raise ToleranceError(f"corrected output lost {shortfall:.3e} of trace, "
                             f"more than the completeness defect", shortfall, allowed)
    return FockDensityMatrix(out, leakage_tol=max(allowed, 1e-6))


def corrected_fidelity(channel: PhotonAddedChannel, x: int,
                       null_threshold: float = NULL_THRESHOLD) -> float:
    """``<x| corrected output |x>``."""
    return float(np.real(corrected_apply(channel, x, null_threshold).entries[x, x]))
