"""Coefficient functions g1, g2, g3 and two-mode Fock matrix elements.

Every alternating sum is accumulated as sign/log-magnitude pairs so that
binomials and factorials far beyond double range never materialize. Powers
of an exact zero follow ``0**0 == 1``; any positive power of zero drops the
term.

Parameter conventions (the quantum-limited channel parameter ``kappa``):

* amplifier (two-mode squeezer), ``kappa >= 1``
* attenuator (beamsplitter), ``0 <= kappa <= 1``
* phase conjugator (squeezer followed by a mode flip), ``kappa >= 0``
"""

from __future__ import annotations

import math

from .errors import DomainError
from .fock_core import log_binom, log_factorial

CANCELLATION_RATIO = 1e-12

_NEG_INF = -math.inf


class SignedLogSum:
    """Accumulator for ``sum_i s_i * exp(L_i)``.

    Terms are kept until read out; the result is ``exp(max L) * fsum(...)``,
    which is correctly rounded and therefore independent of insertion order.
    """

    __slots__ = ("_terms",)

    def __init__(self):
        self._terms = []

    def add(self, sign: int, log_mag: float) -> None:
        if sign == 0 or log_mag == _NEG_INF:
            return
        self._terms.append((1 if sign > 0 else -1, log_mag))

    def __len__(self):
        return len(self._terms)

    @property
    def max_log(self) -> float:
        return max((t[1] for t in self._terms), default=_NEG_INF)

    def _scaled(self) -> float:
        top = self.max_log
        return math.fsum(s * math.exp(lm - top) for s, lm in self._terms)

    def value(self) -> float:
        if not self._terms:
            return 0.0
        return self._scaled() * math.exp(self.max_log)

    def sign_log(self) -> tuple[int, float]:
        """``(sign, ln|value|)``; ``(0, -inf)`` for an exact zero."""
        if not self._terms:
            return 0, _NEG_INF
        s = self._scaled()
        if s == 0.0:
            return 0, _NEG_INF
        return (1 if s > 0 else -1), math.log(abs(s)) + self.max_log

    @property
    def cancellation_ratio(self) -> float:
        """``|result| / max |term|``; 1.0 for an empty sum."""
        if not self._terms:
            return 1.0
        return abs(self._scaled())

    @property
    def cancellation_dominated(self) -> bool:
        return bool(self._terms) and self.cancellation_ratio < CANCELLATION_RATIO


def _log_pow(base_log: float, exponent: int) -> float:
    """``exponent * base_log`` with ``0 * log(0) == 0``."""
    if exponent == 0:
        return 0.0
    if exponent < 0:
        raise ValueError("negative exponents do not occur in these sums")
    return exponent * base_log


def _safe_log(x: float) -> float:
    return math.log(x) if x > 0 else _NEG_INF


def _parity(k: int) -> int:
    return -1 if k % 2 else 1


def _check_amp(kappa):
    if not kappa >= 1:
        raise DomainError(f"amplifier parameter must satisfy kappa >= 1, got {kappa}")


def _check_att(kappa):
    if not 0 <= kappa <= 1:
        raise DomainError(f"attenuator parameter must lie in [0, 1], got {kappa}")


def _check_conj(kappa):
    if not kappa >= 0:
        raise DomainError(f"conjugator parameter must satisfy kappa >= 0, got {kappa}")


def _check_index(*idx):
    for i in idx:
        if i < 0 or int(i) != i:
            raise DomainError(f"indices must be nonnegative integers, got {idx}")


def _amp_logs(kappa):
    # ln(1/kappa), ln sqrt(1 - kappa^-2)
    return -math.log(kappa), 0.5 * _safe_log(1.0 - kappa**-2)


def _att_logs(kappa):
    return _safe_log(kappa), 0.5 * _safe_log(1.0 - kappa * kappa)


def _conj_logs(kappa):
    # (sqrt(1 + kappa^2))^-1 and (sqrt(1 + kappa^-2))^-1 = kappa / sqrt(1 + kappa^2)
    log_d = -0.5 * math.log1p(kappa * kappa)
    return log_d, _safe_log(kappa) + log_d


def g1_sum(n, n1, m1, kappa) -> SignedLogSum:
    _check_amp(kappa)
    _check_index(n, n1, m1)
    log_inv, log_s = _amp_logs(kappa)
    acc = SignedLogSum()
    for r in range(max(0, n1 - m1), min(n, n1) + 1):
        acc.add(
            _parity(r),
            log_binom(n, r) + log_binom(m1, n1 - r)
            + _log_pow(log_inv, n + n1 - 2 * r)
            + _log_pow(log_s, m1 + 2 * r - n1),
        )
    return acc


def g2_sum(n, ell, n1, kappa) -> SignedLogSum:
    _check_att(kappa)
    _check_index(n, ell, n1)
    log_k, log_s = _att_logs(kappa)
    acc = SignedLogSum()
    for r in range(max(0, ell - n), min(ell, n1) + 1):
        acc.add(
            _parity(n - ell + r),
            log_binom(n1, r) + log_binom(n, ell - r)
            + _log_pow(log_k, n1 - 2 * r + ell)
            + _log_pow(log_s, 2 * r + n - ell),
        )
    return acc


def g3_sum(n, n1, m1, kappa) -> SignedLogSum:
    _check_conj(kappa)
    _check_index(n, n1, m1)
    log_d, log_kd = _conj_logs(kappa)
    acc = SignedLogSum()
    for r in range(max(0, n - n1), min(n, m1) + 1):
        acc.add(
            _parity(n - r),
            log_binom(m1, r) + log_binom(n1, n - r)
            + _log_pow(log_kd, m1 - 2 * r + n)
            + _log_pow(log_d, n1 + 2 * r - n),
        )
    return acc


def g1(n: int, n1: int, m1: int, kappa: float) -> float:
    """Amplifier coefficient; sum over ``r`` in ``[max(0, n1-m1), min(n, n1)]``."""
    return g1_sum(n, n1, m1, kappa).value()


def g2(n: int, ell: int, n1: int, kappa: float) -> float:
    """Attenuator coefficient; sum over ``r`` in ``[max(0, ell-n), min(ell, n1)]``."""
    return g2_sum(n, ell, n1, kappa).value()


def g3(n: int, n1: int, m1: int, kappa: float) -> float:
    """Conjugator coefficient; sum over ``r`` in ``[max(0, n-n1), min(n, m1)]``."""
    return g3_sum(n, n1, m1, kappa).value()


# -- two-mode matrix elements <m1, m2| U |n1, n2> -----------------------------
#
# Written as the printed double sums over (r, j); one Kronecker delta fixes j
# for each r, the other is a pure index constraint checked up front.

def _finish(acc: SignedLogSum, log_pref: float) -> float:
    sign, log_abs = acc.sign_log()
    if sign == 0:
        return 0.0
    return sign * math.exp(log_abs + log_pref)


def t_amplifier(m1, m2, n1, n2, kappa) -> float:
    """Two-mode squeezer element; zero unless ``m1 - m2 == n1 - n2``."""
    _check_amp(kappa)
    _check_index(m1, m2, n1, n2)
    if m2 != n2 + m1 - n1:
        return 0.0
    log_inv, log_s = _amp_logs(kappa)
    acc = SignedLogSum()
    for r in range(n2 + 1):
        j = n1 - r  # delta(n1, r + j)
        if not 0 <= j <= m1:
            continue
        acc.add(
            _parity(r),
            log_binom(n2, r) + log_binom(m1, j)
            + _log_pow(log_inv, n2 + j - r)
            + _log_pow(log_s, m1 + r - j),
        )
    log_pref = log_inv + 0.5 * (
        log_factorial(n1) + log_factorial(m2) - log_factorial(m1) - log_factorial(n2)
    )
    return _finish(acc, log_pref)


def t_attenuator(m1, m2, n1, n2, kappa) -> float:
    """Beamsplitter element; zero unless ``m1 + m2 == n1 + n2``."""
    _check_att(kappa)
    _check_index(m1, m2, n1, n2)
    if m1 != n1 + n2 - m2:
        return 0.0
    log_k, log_s = _att_logs(kappa)
    acc = SignedLogSum()
    for r in range(n1 + 1):
        j = m2 - r  # delta(m2, r + j)
        if not 0 <= j <= n2:
            continue
        acc.add(
            _parity(n2 - j),
            log_binom(n1, r) + log_binom(n2, j)
            + _log_pow(log_k, n1 - r + j)
            + _log_pow(log_s, r + n2 - j),
        )
    log_pref = 0.5 * (
        log_factorial(m1) + log_factorial(m2) - log_factorial(n1) - log_factorial(n2)
    )
    return _finish(acc, log_pref)


def t_conjugator(m1, m2, n1, n2, kappa) -> float:
    """Squeezer-then-flip element; zero unless ``m1 - m2 == n2 - n1``."""
    _check_conj(kappa)
    _check_index(m1, m2, n1, n2)
    if m2 != n1 + m1 - n2:
        return 0.0
    log_d, log_kd = _conj_logs(kappa)
    acc = SignedLogSum()
    for r in range(m1 + 1):
        j = n2 - r  # delta(n2, r + j)
        if not 0 <= j <= n1:
            continue
        acc.add(
            _parity(j),
            log_binom(m1, r) + log_binom(n1, j)
            + _log_pow(log_d, n1 + r - j)
            + _log_pow(log_kd, m1 - r + j),
        )
    log_pref = log_d + 0.5 * (
        log_factorial(n2) + log_factorial(m2) - log_factorial(m1) - log_factorial(n1)
    )
    return _finish(acc, log_pref)


T_ELEMENTS = {
    "amplifier": t_amplifier,
    "attenuator": t_attenuator,
    "conjugator": t_conjugator,
}
