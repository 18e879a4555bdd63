import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockchan.channel import (
    SupportRange,
    apply,
    apply_diagonal,
    complementary,
    complementary_params,
    dephase,
    fock_action,
    mixture_noisy,
    offdiagonal_max,
    support_bounds,
    support_of,
    thermal_cutoff,
)
from fockchan.errors import DomainError, ToleranceError
from fockchan.fock_core import DiagonalState
from fockchan.info import mean_photon
from fockchan.kraus import build_amplifier, build_attenuator, build_channel, build_conjugator


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_attenuator_fixes_vacuum():
    out = apply(build_attenuator(0.4, 0, 4), np.diag([1.0, 0, 0, 0]))
    expected = np.zeros((4, 4))
    expected[0, 0] = 1
    np.testing.assert_allclose(out.entries, expected, atol=1e-15)


def test_full_swap_emits_environment():
    rng = np.random.default_rng(1)
    rho = random_density(rng, 5)
    out = apply(build_attenuator(0.0, 2, 5), rho)
    expected = np.zeros((7, 7))
    expected[2, 2] = 1
    np.testing.assert_allclose(out.entries, expected, atol=1e-14)


def test_amplifier_on_vacuum_is_thermal():
    ch = build_amplifier(1.5, 0, 1, tol=1e-12)
    out = apply(ch, np.array([[1.0]]))
    m = np.arange(ch.dim_out)
    expected = (1 / 2.25) * (1 - 1 / 2.25) ** m
    np.testing.assert_allclose(np.diagonal(out.entries).real, expected, atol=1e-14)
    assert offdiagonal_max(out) == 0


def test_dimension_mismatch():
    with pytest.raises(DomainError):
        apply(build_attenuator(0.5, 1, 3), np.eye(4) / 4)
    with pytest.raises(DomainError):
        apply_diagonal(build_attenuator(0.5, 1, 3), DiagonalState(np.full(4, 0.25)))


@pytest.mark.parametrize("n", range(1, 5))
@pytest.mark.parametrize("kappa", [0.3, 1.0, math.sqrt(1.25)])
def test_conjugator_vacuum_output_starts_at_n(n, kappa):
    out = apply_diagonal(build_conjugator(kappa, n, 1), DiagonalState(np.array([1.0])))
    assert np.all(out.probs[:n] == 0)
    assert out.probs[n] > 0


@pytest.mark.parametrize("n", range(4))
def test_attenuator_support_exact(n):
    for j in range(8):
        d = np.zeros(8)
        d[j] = 1
        out = apply_diagonal(build_attenuator(0.6, n, 8), DiagonalState(d)).probs
        assert np.all(out[: j + n + 1] > 0)
        assert np.all(out[j + n + 1:] == 0)


def test_identity_attenuator_on_diagonal():
    d = DiagonalState(np.array([0.1, 0.2, 0.3, 0.4]))
    for n in range(3):
        out = apply_diagonal(build_attenuator(1.0, n, 4), d).probs
        np.testing.assert_allclose(out[:4], d.probs, rtol=1e-15)
        assert not out[4:].any()


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["attenuator", "amplifier", "conjugator"]), st.integers(0, 3),
       st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_apply_and_apply_diagonal_agree(family, n, dim, seed):
    kappa = {"attenuator": 0.55, "amplifier": 1.3, "conjugator": 0.8}[family]
    rng = np.random.default_rng(seed)
    p = rng.random(dim)
    p /= p.sum()
    ch = build_channel(family, kappa, n, dim)
    dense = apply(ch, np.diag(p))
    diag = apply_diagonal(ch, DiagonalState(p))
    np.testing.assert_allclose(np.diagonal(dense.entries).real, diag.probs, atol=1e-10)
    assert offdiagonal_max(dense) <= 1e-12


def test_fock_action_matches_dense_apply():
    ch = build_conjugator(1.1, 2, 4)
    for j in range(4):
        rho = np.zeros((4, 4))
        rho[j, j] = 1
        dense = np.diagonal(apply(ch, rho).entries).real
        closed = fock_action("conjugator", 1.1, 2, j, ch.dim_out, ch.n_kraus - 1)
        np.testing.assert_allclose(dense, closed, atol=1e-14)


def test_support_bounds_examples():
    assert support_bounds("attenuator", 2, SupportRange(0, 3)) == SupportRange(0, 5)
    assert support_bounds("amplifier", 4, SupportRange(1, math.inf)) == SupportRange(0, math.inf)
    assert support_bounds("conjugator", 3, SupportRange(0, 0)) == SupportRange(3, math.inf)
    assert support_of([0, 0, 0.2, 0.8, 0]) == SupportRange(2, 3)


@pytest.mark.parametrize("n", range(1, 4))
def test_conjugator_floor_is_set_by_highest_input_level(n):
    p = np.array([0.5, 0.3, 0.2])
    out = apply_diagonal(build_conjugator(0.8, n, 3), DiagonalState(p)).probs
    lo = support_bounds("conjugator", n, support_of(p)).n_min
    assert lo == max(n - 2, 0)
    assert np.all(out[:lo] == 0) and out[lo] > 0


@pytest.mark.parametrize("family,kappa", [("amplifier", 1.4), ("conjugator", 0.9)])
@pytest.mark.parametrize("n", range(5))
def test_infinite_support_families_respect_lower_bound(family, kappa, n):
    ch = build_channel(family, kappa, n, 11)
    for j in range(11):
        d = np.zeros(11)
        d[j] = 1
        out = apply_diagonal(ch, DiagonalState(d)).probs
        lo = support_bounds(family, n, SupportRange(j, j)).n_min
        assert np.all(out[:lo] == 0)
        assert out[lo] > 0


@pytest.mark.parametrize("family,kappa", [("attenuator", 0.7), ("amplifier", 1.2),
                                          ("conjugator", 0.5)])
@pytest.mark.parametrize("n", range(1, 4))
def test_no_finite_support_fixed_point(family, kappa, n):
    rng = np.random.default_rng(n)
    for width in range(1, 5):
        p = rng.random(width)
        p /= p.sum()
        ch = build_channel(family, kappa, n, width)
        out = apply_diagonal(ch, DiagonalState(p)).probs
        padded = np.zeros_like(out)
        padded[:width] = p
        assert np.max(np.abs(out - padded)) > 1e-6


def test_complementary_params():
    fam, k = complementary_params("amplifier", 1.5)
    assert fam == "conjugator" and k == pytest.approx(math.sqrt(1.25), rel=1e-15)
    fam, k = complementary_params("attenuator", 0.6)
    assert fam == "attenuator" and k == pytest.approx(0.8, rel=1e-15)
    fam, k = complementary_params("conjugator", math.sqrt(1.25))
    assert fam == "amplifier" and k == pytest.approx(1.5, rel=1e-15)


def test_complementary_channel_builds_with_same_n():
    ch = build_amplifier(1.5, 1, 4)
    comp = complementary(ch)
    assert comp.family == "conjugator" and comp.n_add == 1
    assert comp.dim_out == ch.dim_out


def test_dephase_examples():
    d = np.diag([0.2, 0.3, 0.5])
    np.testing.assert_array_equal(dephase(d).probs, [0.2, 0.3, 0.5])
    plus = np.full((2, 2), 0.5)
    np.testing.assert_allclose(dephase(plus).probs, [0.5, 0.5])


@pytest.mark.parametrize("family,kappa", [("attenuator", 0.7), ("amplifier", 1.3),
                                          ("conjugator", 1.0)])
@pytest.mark.parametrize("n", range(3))
def test_kraus_commute_with_dephasing(family, kappa, n):
    rng = np.random.default_rng(10 + n)
    rho = random_density(rng, 6)
    for op in build_channel(family, kappa, n, 6).kraus_matrices():
        lhs = np.diag(np.diagonal(op @ rho @ op.T))
        rhs = op @ np.diag(np.diagonal(rho)) @ op.T
        assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_thermal_cutoff():
    assert thermal_cutoff(0) == 0
    c = thermal_cutoff(1.0, 1e-8)
    assert 0.5 ** (c + 1) <= 1e-8 < 0.5**c


def test_mixture_vacuum_noise_is_single_component():
    mix = mixture_noisy("attenuator", 0.6, 0.0, 4)
    assert mix.cutoff == 0 and len(mix.components) == 1 and mix.tail == 0


def test_mixture_tail_at_fixed_cutoff():
    mix = mixture_noisy("attenuator", 0.6, 1.0, 3, cutoff=20, tail_tol=1e-6)
    assert mix.tail == pytest.approx(0.5**21) and mix.tail <= 5e-7
    with pytest.raises(ToleranceError):
        mixture_noisy("attenuator", 0.6, 1.0, 3, cutoff=5, tail_tol=1e-8)


@pytest.mark.parametrize("kappa", [0.3, 0.8])
@pytest.mark.parametrize("nbar", [0.5, 1.0])
def test_mixture_mean_photon_number(kappa, nbar):
    mix = mixture_noisy("attenuator", kappa, nbar, 6)
    for m in range(6):
        rho = np.zeros((6, 6))
        rho[m, m] = 1
        out = apply(mix, rho)
        assert mean_photon(out) == pytest.approx(kappa**2 * m + (1 - kappa**2) * nbar, abs=1e-5)
        diag = apply_diagonal(mix, DiagonalState(np.diag(rho)))
        np.testing.assert_allclose(np.diagonal(out.entries).real, diag.probs, atol=1e-12)


def test_pure_attenuator_mean_photon_number():
    for n in range(4):
        ch = build_attenuator(0.7, n, 6)
        for m in range(6):
            d = np.zeros(6)
            d[m] = 1
            out = apply_diagonal(ch, DiagonalState(d))
            assert mean_photon(out) == pytest.approx(0.49 * m + 0.51 * n, abs=1e-12)
