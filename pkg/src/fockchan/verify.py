"""Invariant suites run by ``fockchan verify``.

Each suite checks one property over a grid of channel configurations and
reports its worst value against a threshold. ``perturb`` scales every Kraus
entry by ``1 + perturb`` to confirm the suites can fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import apply, mixture_noisy, offdiagonal_max
from .dilation_oracle import oracle_output
from .errcorr import corrected_fidelity
from .fock_core import DiagonalState, PureState, thermal_state
from .info import TruncationPolicy, coherent_information, mean_photon
from .kraus import DEFAULT_TOL, build_channel, completeness_defect
from .quadratic import independence_rank, w_closed_form, w_operator

DEFAULT_KAPPAS = {
    "attenuator": (0.3, 0.7, 0.95),
    "amplifier": (1.1, 1.3, 1.5),
    "conjugator": (math.sqrt(1.1**2 - 1), math.sqrt(1.3**2 - 1), math.sqrt(1.25)),
}
DEFAULT_N = (0, 1, 2)
DEFAULT_DIM = 12
SUITES = ("completeness", "oracle", "complementarity", "fock_preservation",
          "w_structure", "errcorr", "mixture")
ORACLE_WINDOW = 24


@dataclass(frozen=True)
class Config:
    family: str
    kappa: float
    n_add: int
    dim: int

    def label(self) -> str:
        return f"{self.family}(kappa={self.kappa:.6g}, n={self.n_add}, dim={self.dim})"


def default_grid(dim: int = DEFAULT_DIM, n_values=DEFAULT_N, kappas=None) -> list[Config]:
    kappas = kappas or DEFAULT_KAPPAS
    return [Config(f, k, n, dim) for f in kappas for n in n_values for k in kappas[f]]


def perturbed(channel, eps: float):
    if not eps:
        return channel
    ops = tuple(replace(op, values=op.values * (1 + eps)) for op in channel.kraus_list)
    ch = replace(channel, kraus_list=ops)
    return replace(ch, completeness_defect=completeness_defect(ch))


def _rng(cfg: Config, salt: int) -> np.random.Generator:
    fam = ("attenuator", "amplifier", "conjugator").index(cfg.family)
    return np.random.default_rng([salt, fam, cfg.n_add, int(round(cfg.kappa * 1e6)), cfg.dim])


def _random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def _random_pure(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _completeness_tol(family):
    return 1e-12 if family == "attenuator" else DEFAULT_TOL


# -- per-config checks: each returns (value, threshold) ------------------------

def check_completeness(cfg: Config, eps: float = 0.0):
    ch = perturbed(build_channel(cfg.family, cfg.kappa, cfg.n_add, cfg.dim), eps)
    return completeness_defect(ch), _completeness_tol(cfg.family)


def check_oracle(cfg: Config, eps: float = 0.0):
    window = cfg.dim + cfg.n_add if cfg.family == "attenuator" else max(ORACLE_WINDOW, cfg.dim)
    ch = perturbed(build_channel(cfg.family, cfg.kappa, cfg.n_add, cfg.dim,
                                 dim_out=window, tol=None), eps)
    rho = _random_density(_rng(cfg, 1), cfg.dim)
    env = PureState(np.eye(cfg.n_add + 1)[cfg.n_add])
    ref = oracle_output(cfg.family, cfg.kappa, rho, env=env, window=window)
    got = np.asarray(apply(ch, rho).entries)
    return float(np.max(np.abs(got - ref))), 1e-8


def check_complementarity(cfg: Config, eps: float = 0.0, dims=(110,)):
    psi = _random_pure(_rng(cfg, 2), cfg.dim)
    res = coherent_information((cfg.family, cfg.kappa, cfg.n_add), np.outer(psi, psi.conj()),
                               TruncationPolicy(dims))
    return abs(res.value), 1e-6


def check_fock_preservation(cfg: Config, eps: float = 0.0):
    ch = perturbed(build_channel(cfg.family, cfg.kappa, cfg.n_add, cfg.dim), eps)
    rng = _rng(cfg, 3)
    p = rng.random(cfg.dim)
    out = apply(ch, np.diag(p / p.sum()))
    worst = offdiagonal_max(out)
    rho = _random_density(rng, cfg.dim)
    deph_in = np.diag(np.diagonal(rho))
    for op in ch.kraus_matrices():
        img = op @ rho @ op.T
        lhs = np.diag(np.diagonal(img))
        rhs = op @ deph_in @ op.T
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst, 1e-12


def check_w_structure(cfg: Config, eps: float = 0.0, max_l: int = 4):
    ch = perturbed(build_channel(cfg.family, cfg.kappa, cfg.n_add, cfg.dim), eps)
    mats = ch.kraus_matrices()
    top = min(max_l, ch.n_kraus - 1)
    diag_off = 0.0
    closed = 0.0
    for a in range(top + 1):
        w = mats[a].T @ mats[a]
        diag_off = max(diag_off, float(np.max(np.abs(w - np.diag(np.diagonal(w))))))
        for b in range(top + 1):
            closed = max(closed, float(np.max(np.abs(
                w_operator(ch, a, b).to_dense() - w_closed_form(ch, a, b).to_dense()))))
    rep = independence_rank(ch, max(top, 1))
    # fold the three conditions into one margin-style number
    value = max(diag_off / 1e-12, closed / 1e-10, float(rep.deficit > 0) * 2)
    return value, 1.0


def check_errcorr(cfg: Config, eps: float = 0.0):
    ch = perturbed(build_channel(cfg.family, cfg.kappa, cfg.n_add, cfg.dim), eps)
    worst = 0.0
    for x in range(cfg.dim):
        shortfall = 1.0 - corrected_fidelity(ch, x)
        worst = max(worst, shortfall - ch.completeness_defect)
    return worst, 1e-10


def check_mixture(cfg: Config, eps: float = 0.0, nbar: float = 1.0, m_max: int = 5):
    if cfg.family != "attenuator" or cfg.n_add != 0:
        return None
    k = cfg.kappa
    dim_in = m_max + 1
    mix = mixture_noisy("attenuator", k, nbar, dim_in)
    if eps:
        mix = replace(mix, components=tuple(perturbed(c, eps) for c in mix.components))
    env = DiagonalState(thermal_state(nbar, mix.cutoff + 1).probs)
    worst_mean = worst_elem = 0.0
    for m in range(dim_in):
        rho = np.zeros((dim_in, dim_in))
        rho[m, m] = 1.0
        out = np.asarray(apply(mix, rho).entries)
        worst_mean = max(worst_mean, abs(mean_photon(out) - (k * k * m + (1 - k * k) * nbar)))
        ref = oracle_output("attenuator", k, rho, env=env, window=mix.dim_out)
        worst_elem = max(worst_elem, float(np.max(np.abs(out - ref))))
    return max(worst_mean / 1e-5, worst_elem / 1e-6), 1.0


CHECKS = {
    "completeness": check_completeness,
    "oracle": check_oracle,
    "complementarity": check_complementarity,
    "fock_preservation": check_fock_preservation,
    "w_structure": check_w_structure,
    "errcorr": check_errcorr,
    "mixture": check_mixture,
}


def _run_one(task):
    suite, cfg, eps = task
    try:
        res = CHECKS[suite](cfg, eps)
    except Exception as exc:  # a crash fails the suite, it does not stop the run
        return {"config": cfg.label(), "error": f"{type(exc).__name__}: {exc}"}
    if res is None:
        return None
    value, thr = res
    return {"config": cfg.label(), "value": float(value), "threshold": float(thr),
            "passed": bool(value <= thr)}


def run_verify(suites=SUITES, grid=None, perturb: float = 0.0, jobs: int = 1) -> dict:
    """Run the named suites; the report lists worst value and margin per suite."""
    grid = grid if grid is not None else default_grid()
    unknown = set(suites) - set(SUITES)
    if unknown:
        raise ValueError(f"unknown suites {sorted(unknown)}")
    tasks = [(s, c, perturb) for s in suites for c in grid]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]

    report = {"perturb_kraus": perturb, "grid_size": len(grid), "suites": {}}
    for s in suites:
        rows = [r for (suite, _, _), r in zip(tasks, results) if suite == s and r is not None]
        errors = [r for r in rows if "error" in r]
        scored = [r for r in rows if "error" not in r]
        worst = max(scored, key=lambda r: r["value"] / r["threshold"], default=None)
        passed = not errors and all(r["passed"] for r in scored) and bool(rows)
        report["suites"][s] = {
            "passed": passed,
            "checks": len(rows),
            "worst_value": worst["value"] if worst else None,
            "threshold": worst["threshold"] if worst else None,
            "margin": (worst["threshold"] - worst["value"]) if worst else None,
            "worst_config": worst["config"] if worst else None,
            "errors": errors,
            "failures": [r["config"] for r in scored if not r["passed"]],
        }
    report["passed"] = all(v["passed"] for v in report["suites"].values())
    report["failing_suites"] = [s for s, v in report["suites"].items() if not v["passed"]]
    return report
