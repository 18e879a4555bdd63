import math

import numpy as np
import pytest

from fockchan.channel import apply, fock_action
from fockchan.coeffs import t_attenuator
from fockchan.dilation_oracle import (
    DilationSpec,
    build_unitary,
    channel_via_dilation,
    complementary_via_dilation,
    generator,
    oracle_output,
    partial_trace,
    spec_for,
)
from fockchan.errors import DomainError
from fockchan.fock_core import PureState, fock_state
from fockchan.info import von_neumann_entropy
from fockchan.kraus import build_channel

GRID5 = {
    "attenuator": (0.1, 0.3, 0.5, 0.7, 0.9),
    "amplifier": (1.05, 1.15, 1.25, 1.35, 1.45),
    "conjugator": (0.2, 0.4, 0.6, 0.8, 1.0),
}


def random_density(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_spec_validation():
    with pytest.raises(DomainError):
        DilationSpec("phase_shift", 0.1, 4)
    with pytest.raises(DomainError):
        DilationSpec("beamsplitter", 0.1, 1)
    with pytest.raises(DomainError):
        DilationSpec("beamsplitter", 0.1, 3, fock_state(3, 4))
    assert spec_for("attenuator", 0.6, 5).kappa == pytest.approx(0.6)
    assert spec_for("amplifier", 1.5, 5).kappa == pytest.approx(1.5)
    assert spec_for("conjugator", 0.8, 5).kappa == pytest.approx(0.8)


def test_generator_is_real_antisymmetric():
    for kind in ("beamsplitter", "two_mode_squeeze"):
        g = generator(kind, 6).toarray()
        np.testing.assert_array_equal(g, -g.T)


def test_zero_angle_beamsplitter_is_identity():
    np.testing.assert_allclose(build_unitary(DilationSpec("beamsplitter", 0.0, 5)),
                               np.eye(25), atol=1e-15)


def test_mode_flip_elements():
    dim = 4
    u = build_unitary(DilationSpec("mode_flip", 0.0, dim))
    for m1 in range(dim):
        for m2 in range(dim):
            for n1 in range(dim):
                for n2 in range(dim):
                    assert u[m1 * dim + m2, n1 * dim + n2] == float(m1 == n2 and m2 == n1)


@pytest.mark.parametrize("kappa", [0.2, 0.5, 0.85])
def test_beamsplitter_matches_closed_form(kappa):
    dim = 12
    u = build_unitary(spec_for("attenuator", kappa, dim)).real
    # number conservation closes every block below the edge
    for n1 in range(6):
        for n2 in range(6):
            for m1 in range(n1 + n2 + 1):
                m2 = n1 + n2 - m1
                ref = u[m1 * dim + m2, n1 * dim + n2]
                assert t_attenuator(m1, m2, n1, n2, kappa) == pytest.approx(ref, abs=1e-9)


def test_vacuum_through_beamsplitter():
    out = channel_via_dilation(spec_for("attenuator", 0.4, 4), np.diag([1.0, 0.0]))
    expected = np.zeros((4, 4))
    expected[0, 0] = 1
    np.testing.assert_allclose(out.entries, expected, atol=1e-15)


def test_amplifier_with_one_environment_photon():
    rho = np.diag([0.6, 0.4])
    window = 20
    ref = oracle_output("amplifier", 1.5, rho, env=fock_state(1, 2), window=window)
    got = apply(build_channel("amplifier", 1.5, 1, 2, dim_out=window, tol=None), rho)
    assert np.max(np.abs(got.entries - ref)) <= 1e-8


@pytest.mark.parametrize("n", range(3))
@pytest.mark.parametrize("j", range(3))
def test_conjugator_fock_inputs_are_diagonal(n, j):
    kappa, window = 0.7, 16
    rho = np.zeros((3, 3))
    rho[j, j] = 1
    ref = oracle_output("conjugator", kappa, rho, env=fock_state(n, n + 1), window=window)
    assert np.max(np.abs(ref - np.diag(np.diagonal(ref)))) <= 1e-12
    expected = fock_action("conjugator", kappa, n, j, window)
    np.testing.assert_allclose(np.diagonal(ref).real, expected, atol=1e-10)


def test_complement_of_pure_input_has_equal_entropy():
    rng = np.random.default_rng(3)
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    v /= np.linalg.norm(v)
    rho = np.outer(v, v.conj())
    env = fock_state(1, 2)
    a = oracle_output("amplifier", 1.2, rho, env=env, window=40)
    b = oracle_output("amplifier", 1.2, rho, env=env, window=40, complementary=True)
    assert von_neumann_entropy(a) == pytest.approx(von_neumann_entropy(b), abs=1e-8)


@pytest.mark.parametrize("kappa", [0.3, 0.6, 0.9])
@pytest.mark.parametrize("n", range(3))
def test_attenuator_complement_is_attenuator(kappa, n):
    rng = np.random.default_rng(n)
    rho = random_density(rng, 4)
    window = 4 + n
    comp = oracle_output("attenuator", kappa, rho, env=fock_state(n, n + 1), window=window,
                         complementary=True)
    direct = apply(build_channel("attenuator", math.sqrt(1 - kappa**2), n, 4), rho)
    np.testing.assert_allclose(comp, direct.entries, atol=1e-12)


def test_partial_trace_preserves_trace():
    rng = np.random.default_rng(0)
    spec = spec_for("attenuator", 0.6, 8)
    u = build_unitary(spec)
    joint_in = np.zeros((64, 64), dtype=complex)
    small = random_density(rng, 3)
    for a in range(3):
        for b in range(3):
            joint_in[a * 8 + 1, b * 8 + 1] = small[a, b]
    joint = u @ joint_in @ u.conj().T
    for keep in (0, 1):
        assert np.trace(partial_trace(joint, 8, 8, keep)).real == pytest.approx(1.0, abs=1e-13)
    reduced = partial_trace(joint, 8, 8, 0)
    direct = channel_via_dilation(DilationSpec("beamsplitter", spec.parameter, 8,
                                               fock_state(1, 2)), small)
    np.testing.assert_allclose(reduced, direct.entries, atol=1e-13)
    comp = complementary_via_dilation(DilationSpec("beamsplitter", spec.parameter, 8,
                                                   fock_state(1, 2)), small)
    np.testing.assert_allclose(partial_trace(joint, 8, 8, 1), comp.entries, atol=1e-13)


def test_conservation_blocks_of_unitaries():
    dim = 8
    for family, kappa, rule in [
        ("attenuator", 0.5, lambda m1, m2, n1, n2: m1 + m2 == n1 + n2),
        ("amplifier", 1.3, lambda m1, m2, n1, n2: m1 - m2 == n1 - n2),
        ("conjugator", 0.9, lambda m1, m2, n1, n2: m1 - m2 == n2 - n1),
    ]:
        u = build_unitary(spec_for(family, kappa, dim))
        rows, cols = np.nonzero(np.abs(u) > 0)
        for r, c in zip(rows, cols):
            assert rule(r // dim, r % dim, c // dim, c % dim)


@pytest.mark.parametrize("family", sorted(GRID5))
def test_kraus_channels_agree_with_oracle_on_wide_grid(family):
    rng = np.random.default_rng(sorted(GRID5).index(family))
    dim_in = 6
    worst = 0.0
    for kappa in GRID5[family]:
        for n in range(5):
            rho = random_density(rng, dim_in)
            window = dim_in + n if family == "attenuator" else 16
            ch = build_channel(family, kappa, n, dim_in, dim_out=window, tol=None)
            ref = oracle_output(family, kappa, rho, env=fock_state(n, n + 1), window=window)
            worst = max(worst, float(np.max(np.abs(apply(ch, rho).entries - ref))))
    assert worst <= 1e-8


def test_superposition_environment_matches_environment_kraus():
    from fockchan.kraus import kraus_from_environment

    env = PureState(np.array([0.6, 0.8]))
    rng = np.random.default_rng(5)
    rho = random_density(rng, 4)
    ch = kraus_from_environment("amplifier", 1.2, env, 4, 14, tol=None)
    got = apply(ch, rho)
    ref = oracle_output("amplifier", 1.2, rho, env=env, window=14)
    assert np.max(np.abs(got.entries - ref)) <= 1e-8
