import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resfluor.errors import ConfigError, ResonantDriveError
from resfluor.hilbert import (
    HilbertSpec,
    SystemSpec,
    build_operators,
    displace_frame,
    displaced_drive,
    port_drive_for,
    tensor,
)


def test_number_operator_two_levels():
    ops = build_operators(HilbertSpec(cavity_levels=2))
    assert np.allclose(np.diag(ops.n).real, [0, 1, 0, 1])
    assert np.allclose(ops.n, np.diag(np.diag(ops.n)))


def test_atom_anticommutator_is_identity():
    ops = build_operators(HilbertSpec(cavity_levels=5))
    assert np.allclose(ops.sp @ ops.sm + ops.sm @ ops.sp, ops.identity)


def test_cavity_commutator_entrywise():
    nc = 4
    ops = build_operators(HilbertSpec(cavity_levels=nc))
    comm = ops.a @ ops.adag - ops.adag @ ops.a
    # hand expansion: a a^dag = diag(1, 2, 3, 0), a^dag a = diag(0, 1, 2, 3) on the cavity factor
    expected_cavity = np.diag([1.0, 1.0, 1.0, -(nc - 1)])
    assert np.allclose(comm, np.kron(np.eye(2), expected_cavity), rtol=0, atol=1e-14)


def test_basis_order_atom_slowest():
    ops = build_operators(HilbertSpec(cavity_levels=3))
    assert np.allclose(np.diag(ops.sz).real, [-1, -1, -1, 1, 1, 1])
    # sigma_- maps |e, n> (index 3 + n) to |g, n> (index n)
    assert ops.sm[0, 3] == 1 and ops.sm[2, 5] == 1


def test_tensor_identities():
    assert np.array_equal(tensor(np.eye(2), np.eye(3)), np.eye(6))
    sz = np.diag([1.0, -1.0])
    assert np.allclose(np.diag(tensor(sz, np.eye(3))), [1, 1, 1, -1, -1, -1])


def test_tensor_rejects_mismatch():
    with pytest.raises(ConfigError):
        tensor(np.eye(2), np.eye(3), HilbertSpec(cavity_levels=4))
    with pytest.raises(ConfigError):
        tensor(np.ones((2, 3)), np.eye(2))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_mixed_product_property(seed):
    rng = np.random.default_rng(seed)
    A1, A2 = rng.normal(size=(2, 2, 2)) + 1j * rng.normal(size=(2, 2, 2))
    B1, B2 = rng.normal(size=(2, 3, 3)) + 1j * rng.normal(size=(2, 3, 3))
    lhs = tensor(A1, B1) @ tensor(A2, B2)
    # direct multiplication oracle, entry by entry
    rhs = np.empty((6, 6), dtype=complex)
    P, Q = A1 @ A2, B1 @ B2
    for i in range(2):
        for j in range(2):
            rhs[3 * i : 3 * i + 3, 3 * j : 3 * j + 3] = P[i, j] * Q
    assert np.allclose(lhs, rhs)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 15))
def test_operators_hermitian_pairs(nc):
    ops = build_operators(HilbertSpec(cavity_levels=nc))
    assert np.array_equal(ops.adag, ops.a.conj().T)
    assert np.array_equal(ops.sp, ops.sm.conj().T)
    assert ops.a.shape == (2 * nc, 2 * nc)


def test_default_spec_detunings():
    spec = SystemSpec()
    assert spec.delta_a == 0
    assert spec.delta_c == -37.0
    assert spec.delta_0 == 37.0
    assert spec.gamma_2 == pytest.approx(2.8)


def test_spec_validation():
    with pytest.raises(ConfigError):
        SystemSpec(gamma_1=-1)
    with pytest.raises(ConfigError):
        SystemSpec(gamma_e=4.0)
    with pytest.raises(ConfigError):
        HilbertSpec(cavity_levels=1)


def test_displace_zero_drive_unchanged():
    spec = SystemSpec(Omega=0.0)
    assert displace_frame(spec) == spec


def test_port_drive_inversion():
    spec = SystemSpec()
    Oc = port_drive_for(spec, 37.0)
    # Omega = -g_c Omega_c / Delta_c  ->  Omega_c = 37 * 37 / 7.5
    assert Oc == pytest.approx(182.5 + 1 / 30, rel=1e-12)
    moved = displace_frame(spec.replace(Omega_c=Oc))
    assert moved.Omega == pytest.approx(37.0)
    assert moved.Omega_c == 0


def test_lossy_displacement_magnitude():
    spec = SystemSpec(Omega_c=100.0)
    exact = displaced_drive(spec, include_cavity_loss=True)
    assert abs(exact) == pytest.approx(7.5 * 100 / np.hypot(37.0, 0.75))
    assert np.sign(exact) == np.sign(displaced_drive(spec))


def test_resonant_drive_rejected():
    spec = SystemSpec(omega_c=6814.0, Omega_c=1.0)
    with pytest.raises(ResonantDriveError):
        displace_frame(spec)
