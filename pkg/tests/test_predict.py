"""Closed-form phase predictions and anyon-model bookkeeping."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tme import predict
from tme.predict import (
    arg_jn,
    arg_kn,
    arg_smun,
    charged_modular_commutator,
    format_anyon_table,
    ising_model,
    modular_commutator,
    parse_anyon_table,
    phi_r_phase,
    replica_limit_check,
    semion_model,
    spurious_arg_jn,
    toric_code_model,
)


# ---------------------------------------------------------------------------
# Renyi commutator phases


def test_arg_j1_ising_value():
    assert arg_jn(0.5, 1) == pytest.approx(-np.pi / 72, abs=1e-15)
    assert arg_jn(0.5, 1) == pytest.approx(-0.0436332, abs=5e-8)


def test_arg_j2_ising_value():
    assert arg_jn(0.5, 2) == pytest.approx(-np.pi / 45, abs=1e-15)


def test_arg_k1_conjugate_of_j1():
    assert arg_kn(0.5, 1) == pytest.approx(np.pi / 72, abs=1e-15)
    assert arg_kn(0.5, 1) == pytest.approx(-arg_jn(0.5, 1), abs=1e-15)


def test_arg_k2_value():
    assert arg_kn(0.5, 2) == pytest.approx(np.pi / 20, abs=1e-15)


def test_trivial_phase_at_zero_chirality():
    for n in (1, 2, 3):
        assert arg_jn(0.0, n) == 0.0
        assert arg_kn(0.0, n) == 0.0


@given(
    st.floats(min_value=-30, max_value=30, allow_nan=False),
    st.integers(min_value=1, max_value=8),
)
def test_arg_jn_odd_in_chirality(c, n):
    assert arg_jn(-c, n) == pytest.approx(-arg_jn(c, n), abs=1e-12)
    assert arg_kn(-c, n) == pytest.approx(-arg_kn(c, n), abs=1e-12)


@given(st.integers(min_value=1, max_value=40))
def test_jn_and_kn_coefficients_linear_in_c(n):
    # both families are exactly linear in the chiral central charge; the
    # returned value lives on (-pi, pi], so compare as phases
    for fn in (arg_jn, arg_kn):
        assert np.exp(1j * fn(3.0, n)) == pytest.approx(
            np.exp(6j * fn(0.5, n)), abs=1e-11
        )
        assert -np.pi < fn(3.0, n) <= np.pi


def test_arg_jn_requires_positive_n():
    with pytest.raises(ValueError):
        arg_jn(0.5, 0)
    with pytest.raises(ValueError):
        arg_kn(0.5, -1)


# ---------------------------------------------------------------------------
# lens-space multi-entropy phases


def test_phi2_ising_is_real_positive():
    val = phi_r_phase(ising_model(), 2)
    assert val.real > 0
    assert abs(val.imag) < 1e-12


def test_phi3_ising_phase():
    assert np.angle(phi_r_phase(ising_model(), 3)) == pytest.approx(
        2 * np.pi / 9, abs=1e-12
    )


def test_phi_r_toric_code_trivial_phase():
    # the r = 2 anyon sum over {1, e, m, eps} is 1+1+1+1 = 4, so the phase
    # factor is exactly unity; the same holds at any even r for c_minus = 0
    for r in (2, 4):
        val = phi_r_phase(toric_code_model(), r)
        assert val == pytest.approx(1.0, abs=1e-12)
        assert abs(val) == pytest.approx(1.0, abs=1e-12)


def test_phi2_semion_vanishing_sum():
    # sum d_a^2 theta_a^2 = 1 - 1 = 0 for the semion model: the phase is
    # undefined and the routine signals that with an exact zero
    assert phi_r_phase(semion_model(), 2) == 0


def test_phi_r_rejects_bad_r():
    with pytest.raises(ValueError):
        phi_r_phase(ising_model(), 1)


# ---------------------------------------------------------------------------
# charged phases


def test_arg_smun_value():
    sigma = 1 / (2 * np.pi)
    assert arg_smun(sigma, 1.0, 1) == pytest.approx(1 / (8 * np.pi), abs=1e-15)
    assert arg_smun(sigma, 1.0, 1) == pytest.approx(0.0397887, abs=5e-8)


def test_arg_smun_zero_at_zero_charge():
    assert arg_smun(1 / (2 * np.pi), 0.0, 1) == 0.0


def test_arg_smun_coefficient():
    # arg S = sigma * n mu^2 / (2 (n + 1))
    sigma, mu, n = 1 / (4 * np.pi), 0.7, 3
    assert arg_smun(sigma, mu, n) == pytest.approx(
        sigma * n * mu**2 / (2 * (n + 1)), rel=1e-13
    )


@given(
    st.floats(min_value=-4, max_value=4, allow_nan=False),
    st.integers(min_value=1, max_value=6),
)
def test_arg_smun_even_in_mu(mu, n):
    sigma = 1 / (2 * np.pi)
    assert arg_smun(sigma, -mu, n) == pytest.approx(arg_smun(sigma, mu, n), abs=1e-12)


# ---------------------------------------------------------------------------
# replica limits


def test_modular_commutator_limit():
    assert modular_commutator(0.5) == pytest.approx(np.pi / 6, abs=1e-12)
    assert modular_commutator(1.0) == pytest.approx(np.pi / 3, abs=1e-12)
    assert modular_commutator(0.0) == 0.0


def test_charged_modular_commutator_limit():
    sigma = 1 / (2 * np.pi)
    assert charged_modular_commutator(sigma) == pytest.approx(-2j * sigma, abs=1e-15)


def test_replica_limit_check_ising():
    numeric, target, err = replica_limit_check(0.5)
    assert target == pytest.approx(np.pi / 6, abs=1e-12)
    assert abs(numeric - target) < 1e-6
    assert err < 1e-6


def test_replica_limit_check_large_charge():
    numeric, target, err = replica_limit_check(24.0)
    assert target == pytest.approx(8 * np.pi, abs=1e-12)
    assert abs(numeric - target) < 1e-5


def test_replica_limit_check_trivial():
    numeric, target, err = replica_limit_check(0.0)
    assert target == 0.0
    assert abs(numeric) < 1e-9


# ---------------------------------------------------------------------------
# spurious contributions from fine-tuned states


def test_spurious_arg_symmetric_point():
    a = 1 / np.sqrt(3)
    assert spurious_arg_jn(a, a, a, 1) == pytest.approx(
        np.arctan(1 / (5 * np.sqrt(3))), abs=1e-12
    )
    assert spurious_arg_jn(a, a, a, 1) == pytest.approx(0.114956, abs=1e-5)


def test_spurious_arg_vanishes_without_triple_overlap():
    assert spurious_arg_jn(0.6, 0.8, 0.0, 1) == 0.0
    assert spurious_arg_jn(0.0, 0.8, 0.6, 2) == 0.0


def test_spurious_arg_not_universal_ratio():
    # unlike the universal phases, successive n do not follow the
    # 2 n^2 / ((2n+1)(n+1)) coefficient ratio of the chiral prediction
    a = 1 / np.sqrt(3)
    s1 = spurious_arg_jn(a, a, a, 1)
    s2 = spurious_arg_jn(a, a, a, 2)
    coeff = lambda n: 2 * n**2 / ((2 * n + 1) * (n + 1))
    assert abs(s2 / s1 - coeff(2) / coeff(1)) > 0.05


# ---------------------------------------------------------------------------
# anyon tables


def test_builtin_models_sanity():
    ising = ising_model()
    assert ising.c_minus == pytest.approx(0.5)
    assert sorted(np.round(ising.d**2, 10)) == [1.0, 1.0, 2.0]
    tc = toric_code_model()
    assert tc.c_minus == 0.0
    assert len(tc.d) == 4
    sem = semion_model()
    assert sem.c_minus == pytest.approx(1.0)
    assert np.allclose(sorted(sem.theta.imag), [0.0, 1.0])


@pytest.mark.parametrize("model", [ising_model(), toric_code_model(), semion_model()])
def test_anyon_table_round_trip(model):
    back = parse_anyon_table(format_anyon_table(model))
    assert back.c_minus == pytest.approx(model.c_minus, abs=1e-15)
    assert np.allclose(back.d, model.d, atol=1e-15)
    assert np.allclose(back.theta, model.theta, atol=1e-15)


def test_parse_anyon_table_skips_comments_and_blanks():
    text = "# chiral Ising data\nc_minus=0.5\n\n1.0 1.0 0.0\n"
    model = parse_anyon_table(text)
    assert model.c_minus == 0.5
    assert len(model.d) == 1


def test_parse_anyon_table_errors():
    with pytest.raises(ValueError):
        parse_anyon_table("1.0 1.0 0.0\n")  # no header
    with pytest.raises(ValueError):
        parse_anyon_table("c_minus=0.5\n")  # no rows
    with pytest.raises(ValueError):
        parse_anyon_table("c_minus=0.5\n1.0 1.0\n")  # short row
