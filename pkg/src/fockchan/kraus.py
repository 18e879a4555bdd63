"""Banded Kraus operators for the photon-added attenuator, amplifier and
phase conjugator, plus a generic builder for any environment state.

Each photon-added Kraus operator has a single nonzero line, so it is stored
as one vector indexed by the *input* column ``j``::

    diagonal band:       (j + offset, j)
    anti-diagonal band:  (offset - j, j)

Entries whose row falls outside ``0..dim_out-1`` are stored as exact zeros.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from . import coeffs
from .errors import DomainError, ToleranceError
from .fock_core import PureState, Truncation, log_factorial

FAMILIES = ("attenuator", "amplifier", "conjugator")
_ALIASES = {
    "att": "attenuator", "attenuator": "attenuator", "b": "attenuator",
    "amp": "amplifier", "amplifier": "amplifier", "a": "amplifier",
    "conj": "conjugator", "conjugator": "conjugator", "c": "conjugator",
}

DEFAULT_TOL = 1e-8
MAX_KRAUS = 20000

DIAGONAL = "diagonal-band"
ANTI_DIAGONAL = "anti-diagonal-band"


def normalize_family(name: str) -> str:
    try:
        return _ALIASES[name.lower()]
    except KeyError:
        raise DomainError(f"unknown channel family {name!r}") from None


def check_kappa(family: str, kappa: float) -> None:
    family = normalize_family(family)
    if not math.isfinite(kappa):
        raise DomainError(f"kappa must be finite, got {kappa}")
    if family == "attenuator" and not 0 <= kappa <= 1:
        raise DomainError(f"attenuator needs 0 <= kappa <= 1, got {kappa}")
    if family == "amplifier" and kappa < 1:
        raise DomainError(f"amplifier needs kappa >= 1, got {kappa}")
    if family == "conjugator" and kappa < 0:
        raise DomainError(f"conjugator needs kappa >= 0, got {kappa}")


@dataclass(frozen=True)
class KrausOperator:
    kind: str
    offset: int
    values: np.ndarray
    dim_out: int
    index: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        rows = self._rows(v.size)
        outside = (rows < 0) | (rows >= self.dim_out)
        if np.any(v[outside] != 0):
            raise ValueError("band values outside the output range must be zero")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def _rows(self, dim_in):
        cols = np.arange(dim_in)
        if self.kind == DIAGONAL:
            return cols + self.offset
        if self.kind == ANTI_DIAGONAL:
            return self.offset - cols
        raise ValueError(f"unknown band kind {self.kind!r}")

    @property
    def dim_in(self) -> int:
        return self.values.size

    def support(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(rows, cols, values)`` of the stored nonzero entries."""
        cols = np.flatnonzero(self.values)
        return self._rows(self.dim_in)[cols], cols, self.values[cols]

    def to_dense(self) -> np.ndarray:
        mat = np.zeros((self.dim_out, self.dim_in))
        rows, cols, vals = self.support()
        mat[rows, cols] = vals
        return mat

    def with_dim_out(self, dim_out: int) -> KrausOperator:
        if dim_out < self.dim_out:
            raise DomainError("padding cannot shrink the output space")
        return replace(self, dim_out=dim_out)

    def to_json(self) -> dict:
        return {"kind": self.kind, "offset": int(self.offset),
                "values": [float(x) for x in self.values]}


@dataclass(frozen=True)
class PhotonAddedChannel:
    family: str
    kappa: float
    n_add: int
    trunc: Truncation
    kraus_list: tuple
    completeness_defect: float
    tol: float | None = DEFAULT_TOL
    cancellation_flags: int = 0

    @property
    def dim_in(self) -> int:
        return self.trunc.dim_in

    @property
    def dim_out(self) -> int:
        return self.trunc.dim_out

    @property
    def n_kraus(self) -> int:
        return len(self.kraus_list)

    def kraus_matrices(self) -> list[np.ndarray]:
        return [op.to_dense() for op in self.kraus_list]

    def padded(self, dim_out: int) -> PhotonAddedChannel:
        """Same Kraus set viewed on a larger output space."""
        ops = tuple(op.with_dim_out(dim_out) for op in self.kraus_list)
        return replace(self, trunc=Truncation(self.dim_in, dim_out), kraus_list=ops)

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "kappa": float(self.kappa),
            "n_add": int(self.n_add),
            "dim_in": self.dim_in,
            "dim_out": self.dim_out,
            "n_kraus": self.n_kraus,
            "completeness_defect": float(self.completeness_defect),
            "operators": [op.to_json() for op in self.kraus_list],
        }


@dataclass(frozen=True)
class EnvironmentChannel:
    """Channel from a Gaussian dilation with an arbitrary pure environment.

    Kraus operators are generally multi-band, so they are stored dense.
    """

    family: str
    kappa: float
    env: PureState
    trunc: Truncation
    kraus_list: tuple
    completeness_defect: float
    tol: float | None = DEFAULT_TOL

    @property
    def dim_in(self) -> int:
        return self.trunc.dim_in

    @property
    def dim_out(self) -> int:
        return self.trunc.dim_out

    @property
    def n_kraus(self) -> int:
        return len(self.kraus_list)

    def kraus_matrices(self) -> list[np.ndarray]:
        return [np.array(k) for k in self.kraus_list]


# -- single band construction -------------------------------------------------

def _band_entry(acc: coeffs.SignedLogSum, log_pref: float) -> float:
    sign, log_abs = acc.sign_log()
    if sign == 0:
        return 0.0
    return sign * math.exp(log_abs + log_pref)


def _attenuator_band(kappa, n, ell, dim_in, dim_out):
    # B_l: |n1 + n - l><n1|, n1 >= max(0, l - n)
    vals = np.zeros(dim_in)
    flags = 0
    for n1 in range(max(0, ell - n), dim_in):
        m1 = n1 + n - ell
        if m1 >= dim_out:
            continue
        acc = coeffs.g2_sum(n, ell, n1, kappa)
        flags += acc.cancellation_dominated
        log_pref = 0.5 * ((log_factorial(m1) - log_factorial(n1))
                          + (log_factorial(ell) - log_factorial(n)))
        vals[n1] = _band_entry(acc, log_pref)
    return KrausOperator(DIAGONAL, n - ell, vals, dim_out, ell), flags


def _amplifier_band(kappa, n, ell, dim_in, dim_out):
    # A_l: |n1 + l - n><n1|, n1 >= max(0, n - l)
    vals = np.zeros(dim_in)
    flags = 0
    log_inv = -math.log(kappa)
    for n1 in range(max(0, n - ell), dim_in):
        m1 = n1 + ell - n
        if m1 >= dim_out:
            continue
        acc = coeffs.g1_sum(n, n1, m1, kappa)
        flags += acc.cancellation_dominated
        log_pref = log_inv + 0.5 * ((log_factorial(n1) - log_factorial(m1))
                                    + (log_factorial(ell) - log_factorial(n)))
        vals[n1] = _band_entry(acc, log_pref)
    return KrausOperator(DIAGONAL, ell - n, vals, dim_out, ell), flags


def _conjugator_band(kappa, n, ell, dim_in, dim_out):
    # C_l: |l + n - n1><n1|, n1 = 0..n + l
    vals = np.zeros(dim_in)
    flags = 0
    log_d = -0.5 * math.log1p(kappa * kappa)
    for n1 in range(0, min(n + ell, dim_in - 1) + 1):
        m1 = ell + n - n1
        if m1 >= dim_out:
            continue
        acc = coeffs.g3_sum(n, n1, m1, kappa)
        flags += acc.cancellation_dominated
        log_pref = log_d + 0.5 * ((log_factorial(n) - log_factorial(m1))
                                  + (log_factorial(ell) - log_factorial(n1)))
        vals[n1] = _band_entry(acc, log_pref)
    return KrausOperator(ANTI_DIAGONAL, ell + n, vals, dim_out, ell), flags


_BANDS = {
    "attenuator": _attenuator_band,
    "amplifier": _amplifier_band,
    "conjugator": _conjugator_band,
}


def _last_useful_index(family, n, dim_in, dim_out):
    """Largest Kraus index with any entry on output levels below ``dim_out``."""
    if family == "attenuator":
        return dim_in - 1 + n
    if family == "amplifier":
        return dim_out - 1 + n
    return dim_out - 1 - n + dim_in - 1


def _implied_dim_out(family, n, dim_in, last_index):
    if family == "attenuator":
        return dim_in + n
    if family == "amplifier":
        return max(dim_in, dim_in + last_index - n)
    return max(dim_in, last_index + n + 1)


def _defect(diag_sum):
    return float(np.max(np.abs(diag_sum - 1.0)))


def build_channel(family: str, kappa: float, n_add: int, dim_in: int,
                  dim_out: int | None = None, tol: float | None = DEFAULT_TOL,
                  n_kraus: int | None = None) -> PhotonAddedChannel:
    """Build the Kraus set of a photon-added channel on a truncation.

    ``dim_out=None`` with ``n_kraus=None`` grows the Kraus index until the
    completeness defect drops to ``tol`` and sizes the output space to hold
    every band. A fixed ``dim_out`` crops bands and keeps every index that
    still reaches the output space. ``tol=None`` skips the tolerance check
    (useful for truncation scans that report leakage instead).
    """
    family = normalize_family(family)
    check_kappa(family, kappa)
    if n_add < 0 or int(n_add) != n_add:
        raise DomainError(f"n_add must be a nonnegative integer, got {n_add}")
    if dim_in < 1:
        raise DomainError(f"dim_in must be positive, got {dim_in}")
    if dim_out is not None and dim_out < dim_in:
        raise DomainError(f"dim_out={dim_out} smaller than dim_in={dim_in}")
    band = _BANDS[family]

    if family == "attenuator" and dim_out is None:
        dim_out = dim_in + n_add
    if n_kraus is not None:
        last = n_kraus - 1
    elif dim_out is not None:
        last = _last_useful_index(family, n_add, dim_in, dim_out)
    else:
        last = None
        if tol is None:
            raise DomainError("adaptive Kraus cutoff needs a tolerance or a fixed dim_out")

    ops = []
    flags = 0
    col_sum = np.zeros(dim_in)
    ell = 0
    # Without a fixed output space bands are built uncropped, then padded.
    working_out = dim_out if dim_out is not None else dim_in + MAX_KRAUS + n_add + 1
    while True:
        if last is not None and ell > last:
            break
        if last is None and ell >= MAX_KRAUS:
            defect = _defect(col_sum)
            raise ToleranceError(
                f"{family} kappa={kappa} n={n_add}: defect {defect:.3e} after "
                f"{MAX_KRAUS} Kraus operators", defect, tol)
        op, f = band(kappa, n_add, ell, dim_in, working_out)
        ops.append(op)
        flags += f
        col_sum += op.values**2
        if last is None and tol is not None and _defect(col_sum) <= tol:
            break
        ell += 1

    if dim_out is None:
        dim_out = _implied_dim_out(family, n_add, dim_in, len(ops) - 1)
        ops = [replace(op, dim_out=dim_out) for op in ops]
    defect = _defect(col_sum)
    if tol is not None and defect > tol:
        raise ToleranceError(
            f"{family} kappa={kappa} n={n_add} dim_in={dim_in} dim_out={dim_out}: "
            f"completeness defect {defect:.3e} exceeds tol {tol:.1e}", defect, tol)
    return PhotonAddedChannel(family, float(kappa), int(n_add),
                              Truncation(dim_in, dim_out), tuple(ops), defect,
                              tol, flags)


def build_attenuator(kappa, n_add, dim_in, dim_out=None, tol=DEFAULT_TOL):
    return build_channel("attenuator", kappa, n_add, dim_in, dim_out, tol)


def build_amplifier(kappa, n_add, dim_in, dim_out=None, tol=DEFAULT_TOL, n_kraus=None):
    return build_channel("amplifier", kappa, n_add, dim_in, dim_out, tol, n_kraus)


def build_conjugator(kappa, n_add, dim_in, dim_out=None, tol=DEFAULT_TOL, n_kraus=None):
    return build_channel("conjugator", kappa, n_add, dim_in, dim_out, tol, n_kraus)


def completeness_defect(channel) -> float:
    """``max |sum_l F_l^dag F_l - I|`` on the input space, recomputed from the operators."""
    total = np.zeros((channel.dim_in, channel.dim_in))
    for mat in channel.kraus_matrices():
        total += mat.T.conj() @ mat
    return float(np.max(np.abs(total - np.eye(channel.dim_in))))


def kraus_from_environment(family: str, kappa: float, env: PureState, dim_in: int,
                           dim_out: int, tol: float | None = DEFAULT_TOL,
                           n_kraus: int | None = None) -> EnvironmentChannel:
    """``F_k = sum T^{m1,k}_{n1,n2} <n2|psi> |m1><n1|`` from closed-form elements.

    Kraus index ``k`` is the environment output level; it runs over every
    value that can reach ``dim_out`` unless ``n_kraus`` fixes it.
    """
    family = normalize_family(family)
    check_kappa(family, kappa)
    t_elem = coeffs.T_ELEMENTS[family]
    amps = np.asarray(env.amps)
    env_levels = [int(i) for i in np.flatnonzero(amps)]
    if n_kraus is None:
        n_kraus = 1 + max(_last_useful_index(family, n2, dim_in, dim_out)
                          for n2 in env_levels)
    ops = []
    for k in range(n_kraus):
        mat = np.zeros((dim_out, dim_in), dtype=complex)
        for n2 in env_levels:
            for n1 in range(dim_in):
                for m1 in _rows_for(family, k, n1, n2, dim_out):
                    mat[m1, n1] += t_elem(m1, k, n1, n2, kappa) * amps[n2]
        ops.append(mat)
    total = sum(op.conj().T @ op for op in ops)
    defect = float(np.max(np.abs(total - np.eye(dim_in))))
    if tol is not None and defect > tol:
        raise ToleranceError(f"environment channel defect {defect:.3e} exceeds {tol:.1e}",
                             defect, tol)
    if np.allclose(np.imag(amps), 0):
        ops = [op.real for op in ops]
    return EnvironmentChannel(family, float(kappa), env, Truncation(dim_in, dim_out),
                              tuple(ops), defect, tol)


def _rows_for(family, k, n1, n2, dim_out):
    # the conservation law fixes m1 for given (k, n1, n2)
    if family == "attenuator":
        m1 = n1 + n2 - k
    elif family == "amplifier":
        m1 = n1 - n2 + k
    else:
        m1 = n2 - n1 + k
    return (m1,) if 0 <= m1 < dim_out else ()


def channel_from_json(doc) -> PhotonAddedChannel:
    """Rebuild a banded channel from its JSON export."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    dim_in, dim_out = int(doc["dim_in"]), int(doc["dim_out"])
    ops = tuple(
        KrausOperator(o["kind"], int(o["offset"]), np.asarray(o["values"], float),
                      dim_out, i)
        for i, o in enumerate(doc["operators"])
    )
    col_sum = sum(op.values**2 for op in ops)
    return PhotonAddedChannel(normalize_family(doc["family"]), float(doc["kappa"]),
                              int(doc["n_add"]), Truncation(dim_in, dim_out), ops,
                              _defect(col_sum), None)
