import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockchan.channel import apply, apply_diagonal, dephase
from fockchan.errors import DomainError
from fockchan.fock_core import DiagonalState, fock_state, thermal_state
from fockchan.info import (
    SweepResult,
    TruncationPolicy,
    coherent_information,
    mean_photon,
    q_at_origin,
    sweep,
    von_neumann_entropy,
)
from fockchan.kraus import build_attenuator, build_conjugator

DATA = Path(__file__).parent / "data"
K = math.sqrt(1.25)


def test_entropy_of_pure_state_is_zero():
    v = np.array([0.6, 0.8j])
    assert von_neumann_entropy(np.outer(v, v.conj())) == pytest.approx(0.0, abs=1e-12)


def test_entropy_of_maximally_mixed_qubit():
    assert von_neumann_entropy(np.diag([0.5, 0.5])) == pytest.approx(1.0, rel=1e-15)
    assert von_neumann_entropy(np.diag([0.5, 0.5]), base=math.e) == pytest.approx(math.log(2))


def test_entropy_rejects_negative_spectrum():
    with pytest.raises(DomainError):
        von_neumann_entropy(np.diag([1.1, -0.1]))


def test_entropy_clipping_is_reported_and_harmless():
    rho = np.diag([0.7, 0.3 + 5e-11, -5e-11])
    s, clipped = von_neumann_entropy(rho, return_clipped=True)
    assert clipped == pytest.approx(5e-11)
    assert abs(s - von_neumann_entropy(np.diag([0.7, 0.3]))) <= 1e-9


@settings(max_examples=40)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=12))
def test_entropy_of_diagonal_state_is_dephasing_invariant(weights):
    p = np.array(weights)
    if p.sum() == 0:
        return
    p /= p.sum()
    rho = np.diag(p)
    assert von_neumann_entropy(dephase(rho)) == von_neumann_entropy(DiagonalState(p))
    assert von_neumann_entropy(rho) == pytest.approx(von_neumann_entropy(DiagonalState(p)),
                                                     abs=1e-12)


def test_output_entropy_first_reference_row():
    out = apply_diagonal(build_conjugator(K, 1, 2, dim_out=110, tol=None),
                         DiagonalState(np.array([0.6, 0.4])))
    assert von_neumann_entropy(out) == pytest.approx(3.46527, abs=2e-5)


@pytest.mark.parametrize("n,probs,expected", [
    (1, (0.6, 0.4), 0.10573),
    (0, (0.6, 0.4), -0.2239),
    (5, (0.3, 0.3, 0.2, 0.2), 0.07838),
])
def test_coherent_information_values(n, probs, expected):
    res = coherent_information(("conjugator", K, n), DiagonalState(np.array(probs)))
    assert res.value == pytest.approx(expected, abs=1e-4)
    assert not res.flagged
    assert res.dim_out == 110


def test_coherent_information_accepts_built_channel_and_dense_input():
    ch = build_conjugator(K, 1, 2)
    a = coherent_information(ch, DiagonalState(np.array([0.6, 0.4])))
    b = coherent_information(ch, np.diag([0.6, 0.4]))
    assert a.value == pytest.approx(b.value, abs=1e-10)


def test_identity_attenuator_coherent_information_is_input_entropy():
    p = np.array([0.5, 0.3, 0.2])
    rho = np.diag(p)
    for n in range(3):
        ch = build_attenuator(1.0, n, 3)
        out = apply(ch, rho)
        np.testing.assert_array_equal(out.entries[:3, :3], rho)
        res = coherent_information(ch, DiagonalState(p))
        assert res.s_complement == 0.0
        assert res.value == pytest.approx(von_neumann_entropy(rho), abs=1e-14)


def test_leakage_is_flagged_when_cutoff_too_small():
    res = coherent_information(("amplifier", 3.0, 1), DiagonalState(np.array([0.6, 0.4])),
                               TruncationPolicy((20,)))
    assert res.flagged
    assert res.leakage_channel > 1e-6


def test_truncation_schedule_stops_at_first_good_cutoff():
    res = coherent_information(("amplifier", 3.0, 1), DiagonalState(np.array([0.6, 0.4])),
                               TruncationPolicy((20, 400, 800)))
    assert not res.flagged and res.dim_out == 400


def test_q_at_origin():
    assert q_at_origin(fock_state(0, 3).to_density()) == 1.0
    assert q_at_origin(thermal_state(1, 60)) == 0.5
    for n in range(1, 4):
        out = apply(build_conjugator(0.9, n, 1), np.array([[1.0]]))
        assert q_at_origin(out) <= 1e-12


def test_mean_photon():
    assert mean_photon(fock_state(3, 5).to_density()) == 3.0
    assert mean_photon(thermal_state(0.7, 200)) == pytest.approx(0.7, rel=1e-12)


def test_n_sweep_decreases_strictly():
    res = sweep("n_add", range(1, 11), kappa=K)
    ci = res.quantities["coherent_information"]
    assert all(b < a for a, b in zip(ci, ci[1:]))
    assert all(s == "ok" for s in res.status)
    assert all(c > 0 for c in ci)


def test_truncation_sweep_plateaus_by_110():
    res = sweep("truncation", range(20, 141, 10), kappa=K, n_add=1)
    dims = res.axis_values
    s1 = res.quantities["s_channel"]
    s2 = res.quantities["s_complement"]
    assert all(res.quantities["monotone"])
    i = dims.index(110)
    assert abs(s1[-1] - s1[i]) <= 1e-3 and abs(s2[-1] - s2[i]) <= 1e-3
    assert res.quantities["plateau"][-1] == 1


def test_kappa_sweep_matches_stored_baseline():
    text = (DATA / "kappa_sweep_conjugator_n1.csv").read_bytes().decode()
    base = SweepResult.from_csv(text)
    res = sweep("kappa", base.axis_values, family="conjugator", n_add=1,
                policy=TruncationPolicy((110, 200, 300)))
    for name, col in base.quantities.items():
        if name.startswith("leakage"):
            continue
        np.testing.assert_allclose(res.quantities[name], col, rtol=1e-9, atol=1e-12)
    assert res.to_csv() == text


def test_sweep_records_point_failures():
    res = sweep("kappa", [0.5, -1.0, 1.0], family="conjugator", n_add=1)
    assert res.status[0] == "ok" and res.status[2] == "ok"
    assert res.status[1].startswith("error")
    assert math.isnan(res.quantities["coherent_information"][1])


def test_sweep_rejects_unknown_kind():
    with pytest.raises(DomainError):
        sweep("phase", [1])


def test_sweep_result_columns_must_align():
    with pytest.raises(ValueError):
        SweepResult("x", [1, 2], {"y": [1.0]}, ["ok", "ok"])


def test_sweep_csv_roundtrip():
    res = sweep("n_add", [1, 2], kappa=K)
    back = SweepResult.from_csv(res.to_csv())
    assert back.axis_values == [1.0, 2.0]
    assert back.quantities["coherent_information"] == res.quantities["coherent_information"]
    assert res.to_json()["axis_name"] == "n_add"


def test_parallel_sweep_matches_serial():
    a = sweep("n_add", [1, 2, 3], kappa=K)
    b = sweep("n_add", [1, 2, 3], kappa=K, jobs=2)
    assert a.to_csv() == b.to_csv()
