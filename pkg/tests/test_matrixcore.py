import numpy as np
import pytest

from holonomy_lab.errors import NotHermitian, NotUnitary, SingularOverlap
from holonomy_lab.matrixcore import (
    block_generator,
    block_polar,
    canonical_phases,
    cluster_indices,
    dagger,
    eig_hermitian,
    eig_unitary,
    expm_antihermitian_generator,
    max_abs_diff,
    unitarity_defect,
    unitarize,
    unitary_generator,
    wrap_phase,
)
from holonomy_lab.models import SIGMA2, SIGMA3, ParameterPoint, floquet_operator
from holonomy_lab.oracles import EQ_functions


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + dagger(a)) / 2


def test_eig_unitary_identity():
    pairs = eig_unitary(np.eye(2))
    assert np.allclose(pairs.values, [1, 1])
    assert max_abs_diff(dagger(pairs.vectors) @ pairs.vectors, np.eye(2)) < 1e-12


def test_eig_unitary_diagonal_keeps_standard_basis():
    u = np.diag([np.exp(1j * np.pi / 3), np.exp(-1j * np.pi / 3)])
    pairs = eig_unitary(u)
    # ordered by ascending -arg: e^{-i pi/3} (eps = pi/3) first
    assert np.allclose(pairs.values, [np.exp(-1j * np.pi / 3), np.exp(1j * np.pi / 3)])
    assert np.allclose(np.abs(pairs.vectors), [[0, 1], [1, 0]])


def test_eig_unitary_matches_closed_form_quasienergies(spin_half):
    point = ParameterPoint.spin_half(np.pi / 2, np.pi / 2, 0.0)
    pairs = eig_unitary(floquet_operator(spin_half, point))
    E, _ = EQ_functions(np.pi / 4, np.pi / 2, 1.0)
    expected = np.sort(np.array([np.pi / 4 + E, np.pi / 4 - E]) % (2 * np.pi))
    got = (-np.angle(pairs.values)) % (2 * np.pi)
    assert np.allclose(got, expected, atol=1e-10)


def test_eig_unitary_reconstructs(random_unitary):
    for n in (2, 4, 7):
        u = random_unitary(n)
        pairs = eig_unitary(u)
        rebuilt = pairs.vectors @ np.diag(pairs.values) @ dagger(pairs.vectors)
        assert max_abs_diff(u, rebuilt) < 1e-9
        assert unitarity_defect(pairs.vectors) < 1e-12
        assert max_abs_diff(u @ pairs.vectors, pairs.vectors * pairs.values) < 1e-10


def test_eig_unitary_canonical_phase(random_unitary):
    vectors = eig_unitary(random_unitary(4)).vectors
    pivots = vectors[np.argmax(np.abs(vectors), axis=0), np.arange(4)]
    assert np.allclose(pivots.imag, 0, atol=1e-12)
    assert np.all(pivots.real > 0)


def test_eig_unitary_rejects_non_unitary():
    with pytest.raises(NotUnitary):
        eig_unitary(np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_eig_hermitian_ascending(rng):
    h = random_hermitian(rng, 5)
    pairs = eig_hermitian(h)
    assert np.all(np.diff(pairs.values) >= 0)
    assert max_abs_diff(h @ pairs.vectors, pairs.vectors * pairs.values) < 1e-10


def test_unitarize_examples(random_unitary):
    u = random_unitary(3)
    assert max_abs_diff(unitarize(u), u) < 1e-12
    assert max_abs_diff(unitarize(0.5 * np.eye(2)), np.eye(2)) < 1e-12
    expected = np.diag([1, (1 + 1j) / np.sqrt(2)])
    assert max_abs_diff(unitarize(np.diag([2, 1 + 1j])), expected) < 1e-12


def test_unitarize_strips_positive_factor(rng, random_unitary):
    u = random_unitary(4)
    w = random_unitary(4)
    p = w @ np.diag(rng.uniform(0.5, 2.0, size=4)) @ dagger(w)
    assert max_abs_diff(unitarize(u @ p), u) < 1e-10


def test_unitarize_singular():
    with pytest.raises(SingularOverlap):
        unitarize(np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_expm_examples():
    assert max_abs_diff(expm_antihermitian_generator(SIGMA3, np.pi), -np.eye(2)) < 1e-12
    assert max_abs_diff(expm_antihermitian_generator(SIGMA2, np.pi / 2), -1j * SIGMA2) < 1e-12


def test_expm_zero_scale_and_composition(rng):
    h = random_hermitian(rng, 4)
    assert max_abs_diff(expm_antihermitian_generator(h, 0.0), np.eye(4)) < 1e-12
    u1 = expm_antihermitian_generator(h, 0.3)
    u2 = expm_antihermitian_generator(h, 1.1)
    assert unitarity_defect(u1) < 1e-12
    assert max_abs_diff(u1 @ u2, expm_antihermitian_generator(h, 1.4)) < 1e-10


def test_expm_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        expm_antihermitian_generator(np.array([[0, 1], [0, 0]]), 1.0)


def test_unitary_generator_inverts_expm(rng):
    h = random_hermitian(rng, 3)
    h *= 1.0 / np.max(np.abs(np.linalg.eigvalsh(h)))  # spectrum inside (-pi, pi)
    u = expm_antihermitian_generator(h, 1.0)
    assert max_abs_diff(unitary_generator(u), h) < 1e-10


def test_block_polar_and_generator(random_unitary):
    blocks = ((0, 1), (2,))
    m = random_unitary(3)
    p = block_polar(m, blocks)
    assert unitarity_defect(p) < 1e-12
    assert np.allclose(p[:2, 2], 0) and np.allclose(p[2, :2], 0)
    g = block_generator(p, blocks)
    assert max_abs_diff(expm_antihermitian_generator(g, 1.0), p) < 1e-10


def test_cluster_indices_line_and_circle():
    assert cluster_indices([0.0, 1e-9, 1.0], 1e-6) == [[0, 1], [2]]
    # 0.0 and 2*pi - 1e-9 are neighbours on the circle
    clusters = cluster_indices([0.0, 1.0, 2 * np.pi - 1e-9], 1e-6, period=2 * np.pi)
    assert sorted(sorted(c) for c in clusters) == [[0, 2], [1]]


def test_wrap_phase_range():
    x = np.array([np.pi, -np.pi, 3 * np.pi / 2, 0.1])
    wrapped = wrap_phase(x)
    assert np.all(wrapped <= np.pi) and np.all(wrapped > -np.pi)
    assert np.allclose(np.exp(1j * wrapped), np.exp(1j * x))


def test_canonical_phases_idempotent(random_unitary):
    v = canonical_phases(random_unitary(3))
    assert max_abs_diff(canonical_phases(v), v) < 1e-14
