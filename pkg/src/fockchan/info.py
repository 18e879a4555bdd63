"""Entropies, coherent information and parameter sweeps."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import apply, apply_diagonal, complementary_params
from .errors import DomainError
from .fock_core import DEFAULT_LEAKAGE, DiagonalState, as_density
from .kraus import PhotonAddedChannel, build_channel, normalize_family

CLIP_TOL = 1e-10
ZERO_EIG = 1e-14


def _spectrum(rho) -> np.ndarray:
    if isinstance(rho, DiagonalState):
        return np.array(rho.probs)
    arr = np.asarray(rho.entries) if hasattr(rho, "entries") else np.asarray(rho)
    if arr.ndim == 1:
        return arr.astype(float)
    return np.linalg.eigvalsh(as_density(arr))


def von_neumann_entropy(rho, base: float = 2.0, return_clipped: bool = False):
    """``-sum lam log_base(lam)`` over the spectrum, with ``0 log 0 = 0``.

    Eigenvalues in ``[-1e-10, 1e-14)`` are treated as zero; anything more
    negative means the input is not a state and raises ``DomainError``.
    With ``return_clipped`` the discarded eigenvalue mass is returned too.
    """
    lam = _spectrum(rho)
    if lam.size and lam.min() < -CLIP_TOL:
        raise DomainError(f"state has eigenvalue {lam.min():.3e} below -{CLIP_TOL:g}")
    small = lam < ZERO_EIG
    clipped = float(np.abs(lam[small]).sum())
    lam = lam[~small]
    s = float(-np.sum(lam * np.log(lam)))
    if base is not None and base != math.e:
        s /= math.log(base)
    s = max(s, 0.0)
    return (s, clipped) if return_clipped else s


@dataclass(frozen=True)
class TruncationPolicy:
    """Output cutoffs to try in order, and the leakage accepted at each."""

    dims: tuple = (110,)
    leakage_threshold: float = DEFAULT_LEAKAGE

    def __post_init__(self):
        if not self.dims or any(d < 1 for d in self.dims):
            raise DomainError("truncation policy needs positive dims")


@dataclass(frozen=True)
class CoherentInfo:
    value: float
    s_channel: float
    s_complement: float
    leakage_channel: float
    leakage_complement: float
    dim_out: int
    flagged: bool

    def as_dict(self) -> dict:
        return {
            "coherent_information": self.value,
            "s_channel": self.s_channel,
            "s_complement": self.s_complement,
            "leakage_channel": self.leakage_channel,
            "leakage_complement": self.leakage_complement,
            "dim_out": self.dim_out,
            "flagged": self.flagged,
        }


def _output(ch, rho):
    if isinstance(rho, DiagonalState):
        out = apply_diagonal(ch, rho)
        return out, 1.0 - math.fsum(out.probs)
    out = apply(ch, rho)
    return out, 1.0 - out.trace


def _build_at(family, kappa, n_add, dim_in, dim):
    if family == "attenuator":
        return build_channel(family, kappa, n_add, dim_in, tol=None, dim_out=dim_in + n_add)
    return build_channel(family, kappa, n_add, dim_in, dim_out=max(dim, dim_in), tol=None)


def coherent_information(channel, rho, policy: TruncationPolicy | None = None,
                         base: float = 2.0) -> CoherentInfo:
    """``S(Phi(rho)) - S(Phi^c(rho))`` with both outputs at the same cutoff.

    ``channel`` may be a built ``PhotonAddedChannel`` or a
    ``(family, kappa, n_add)`` tuple; it is rebuilt at each cutoff of the
    policy until both outputs leak at most ``policy.leakage_threshold``.
    Entropies are of the truncated (unrenormalized) outputs.
    """
    policy = policy or TruncationPolicy()
    if isinstance(channel, PhotonAddedChannel):
        family, kappa, n_add = channel.family, channel.kappa, channel.n_add
    else:
        family, kappa, n_add = channel
        family = normalize_family(family)
    if not isinstance(rho, DiagonalState):
        rho = as_density(rho)
    dim_in = rho.dim if isinstance(rho, DiagonalState) else rho.shape[0]
    comp_family, comp_kappa = complementary_params(family, kappa)
    result = None
    for dim in policy.dims:
        ch = _build_at(family, kappa, n_add, dim_in, dim)
        co = _build_at(comp_family, comp_kappa, n_add, dim_in, dim)
        out, leak = _output(ch, rho)
        cout, cleak = _output(co, rho)
        s1 = von_neumann_entropy(out, base)
        s2 = von_neumann_entropy(cout, base)
        flagged = max(leak, cleak) > policy.leakage_threshold
        result = CoherentInfo(s1 - s2, s1, s2, max(leak, 0.0), max(cleak, 0.0),
                              ch.dim_out, flagged)
        if not flagged:
            break
    return result


def q_at_origin(rho) -> float:
    """Husimi function at the origin, ``<0|rho|0>``."""
    if isinstance(rho, DiagonalState):
        return float(rho.probs[0])
    return float(np.real(as_density(rho)[0, 0]))


def mean_photon(rho) -> float:
    if isinstance(rho, DiagonalState):
        p = rho.probs
    else:
        p = np.real(np.diagonal(as_density(rho)))
    return float(math.fsum(np.arange(p.size) * p))


# -- sweeps --------------------------------------------------------------------

@dataclass
class SweepResult:
    axis_name: str
    axis_values: list
    quantities: dict = field(default_factory=dict)
    status: list = field(default_factory=list)

    def __post_init__(self):
        for name, col in self.quantities.items():
            if len(col) != len(self.axis_values):
                raise ValueError(f"column {name!r} length mismatch")

    def columns(self) -> list[str]:
        return [self.axis_name, *self.quantities, "status"]

    def rows(self):
        for i, x in enumerate(self.axis_values):
            yield [x, *(self.quantities[k][i] for k in self.quantities), self.status[i]]

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(self.columns())
        for row in self.rows():
            writer.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text

    def to_json(self) -> dict:
        return {
            "axis_name": self.axis_name,
            "axis_values": list(self.axis_values),
            "quantities": {k: list(v) for k, v in self.quantities.items()},
            "status": list(self.status),
        }

    @classmethod
    def from_csv(cls, text: str) -> SweepResult:
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        axis = header[0]
        names = header[1:-1]
        res = cls(axis, [float(r[0]) for r in body],
                  {n: [float(r[i + 1]) for r in body] for i, n in enumerate(names)},
                  [r[-1] for r in body])
        return res


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


SWEEP_KINDS = ("n_add", "kappa", "truncation")


def sweep(kind: str, grid, family: str = "conjugator", kappa: float = math.sqrt(1.25),
          n_add: int = 1, rho=None, policy: TruncationPolicy | None = None,
          base: float = 2.0, plateau_tol: float = 1e-4, jobs: int = 1) -> SweepResult:
    """Coherent information and output entropies along one parameter axis.

    Failures at a grid point are recorded in ``status`` and the sweep goes on.
    For ``kind="truncation"`` the grid holds output cutoffs; extra columns
    flag whether entropies are nondecreasing and whether they have settled
    to within ``plateau_tol`` of the previous point.
    """
    if kind not in SWEEP_KINDS:
        raise DomainError(f"sweep kind must be one of {SWEEP_KINDS}, got {kind!r}")
    if rho is None:
        rho = DiagonalState(np.array([0.6, 0.4]))
    policy = policy or TruncationPolicy()
    points = []
    for x in grid:
        if kind == "n_add":
            points.append(((family, kappa, int(x)), policy))
        elif kind == "kappa":
            points.append(((family, float(x), n_add), policy))
        else:
            points.append(((family, kappa, n_add),
                           TruncationPolicy((int(x),), policy.leakage_threshold)))
    args = [(p, rho, pol, base) for p, pol in points]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_sweep_point, args))
    else:
        results = [_sweep_point(a) for a in args]

    cols = {k: [] for k in ("s_channel", "s_complement", "coherent_information",
                            "leakage_channel", "leakage_complement")}
    status = []
    for res in results:
        if isinstance(res, str):
            for col in cols.values():
                col.append(float("nan"))
            status.append(res)
            continue
        cols["s_channel"].append(res.s_channel)
        cols["s_complement"].append(res.s_complement)
        cols["coherent_information"].append(res.value)
        cols["leakage_channel"].append(res.leakage_channel)
        cols["leakage_complement"].append(res.leakage_complement)
        status.append("flagged" if res.flagged and kind != "truncation" else "ok")
    if kind == "truncation":
        mono, plateau = [], []
        prev = None
        for s1, s2 in zip(cols["s_channel"], cols["s_complement"]):
            if prev is None:
                mono.append(1)
                plateau.append(0)
            else:
                mono.append(int(s1 >= prev[0] - 1e-12 and s2 >= prev[1] - 1e-12))
                plateau.append(int(abs(s1 - prev[0]) <= plateau_tol
                                   and abs(s2 - prev[1]) <= plateau_tol))
            prev = (s1, s2)
        cols["monotone"] = mono
        cols["plateau"] = plateau
    axis = {"n_add": "n_add", "kappa": "kappa", "truncation": "dim_out"}[kind]
    values = [int(x) if kind != "kappa" else float(x) for x in grid]
    return SweepResult(axis, values, cols, status)


def _sweep_point(args):
    params, rho, policy, base = args
    try:
        return coherent_information(params, rho, policy, base)
    except Exception as exc:  # recorded per point
        return f"error: {type(exc).__name__}: {exc}"
