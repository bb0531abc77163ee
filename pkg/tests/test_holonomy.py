from dataclasses import replace

import numpy as np
import pytest
from scipy.linalg import block_diag, expm

from holonomy_lab.eigenframe import bundle_along, constant_loop, named_loop, regauge
from holonomy_lab.errors import BlockMismatch, DimensionMismatch
from holonomy_lab.holonomy import (
    apply_gauge,
    basis_change,
    classify_permutation,
    conjugation_distance,
    connection_at,
    connection_profile,
    holonomy_M,
    wilson_W,
)
from holonomy_lab.matrixcore import dagger, frobenius, max_abs_diff
from holonomy_lab.models import SIGMA1, SIGMA2, SIGMA3, ParameterPoint, zeeman_hamiltonian
from holonomy_lab.oracles import EQ_functions, analytic_holonomies
from holonomy_lab.schemas import GaugePolicy, LoopName, ModelKind, ModelSpec

I2 = np.eye(2)
HALF_BASE = ParameterPoint.spin_half(0.0, 0.7, 0.0)
THREE_HALF_BASE = ParameterPoint.spin_three_half(0.0, 0.7, 0.4, 0.3, 0.9)
FIELD_FREE = ModelSpec(kind=ModelKind.KICKED_SPIN_HALF, T=0.0, p=1)


def _bundle(spec, base, coordinate, K=256, policy=GaugePolicy.SMOOTH_PHASE):
    return bundle_along(spec, named_loop(spec, base, coordinate), K, policy)


def _aligned(result, bundle, oracle):
    S = basis_change(bundle.frames[0], oracle.frame)
    return S @ result.M @ dagger(S)


def test_constant_loop_is_trivial(spin_half):
    bundle = bundle_along(spin_half, constant_loop(spin_half, HALF_BASE), 16,
                          GaugePolicy.SMOOTH_PHASE)
    result = holonomy_M(bundle)
    assert max_abs_diff(result.M, I2) < 1e-12
    assert max_abs_diff(result.W, I2) < 1e-12
    assert result.permutation == [0, 1]
    assert result.delta_n == [0, 0]
    for sample in connection_profile(bundle):
        assert np.all(sample.A == 0)


def test_lambda_loop_swaps_the_bands(spin_half):
    result = holonomy_M(_bundle(spin_half, HALF_BASE, "lambda"))
    assert max_abs_diff(result.M, -1j * SIGMA2) < 1e-8
    assert result.permutation == [1, 0]
    assert result.phases == pytest.approx([1, -1], abs=1e-8)
    assert result.delta_n == [1, 1]
    assert result.consistent
    assert np.allclose(np.exp(1j * np.array(result.geometric_phases)), [1, -1], atol=1e-8)


@pytest.mark.parametrize("p, expected, shift, permutation", [
    (0, -I2, 0, [0, 1]),
    (2, I2, 2, [0, 1]),
    (3, 1j * SIGMA2, 3, [1, 0]),
])
def test_lambda_loop_winding_number(p, expected, shift, permutation):
    spec = ModelSpec(kind=ModelKind.KICKED_SPIN_HALF, T=1.0, p=p)
    result = holonomy_M(_bundle(spec, HALF_BASE, "lambda"))
    assert max_abs_diff(result.M, expected) < 1e-8
    assert result.delta_n == [shift, shift]
    assert result.permutation == permutation
    assert result.consistent


def test_lambda_loop_matches_oracle_from_shifted_start(spin_half):
    base = ParameterPoint.spin_half(0.4, 0.7, 0.3)
    bundle = _bundle(spin_half, base, "lambda", K=512)
    result = holonomy_M(bundle)
    oracle = analytic_holonomies(spin_half, LoopName.LAMBDA, base)
    assert max_abs_diff(_aligned(result, bundle, oracle), oracle.M) < 1e-8


def test_xi_loop_without_tilt_is_trivial():
    base = ParameterPoint.spin_half(np.pi / 2, 0.0, 0.0)
    result = holonomy_M(_bundle(FIELD_FREE, base, "xi", K=64))
    assert max_abs_diff(result.M, I2) < 1e-10


def test_xi_loop_in_analytic_gauge_splits_into_W_and_B():
    gamma = np.pi / 3
    base = ParameterPoint.spin_half(np.pi / 2, gamma, 0.0)
    result = holonomy_M(_bundle(FIELD_FREE, base, "xi", K=4096,
                                policy=GaugePolicy.ANALYTIC_ORACLE))
    oracle = analytic_holonomies(FIELD_FREE, LoopName.XI, base)
    assert max_abs_diff(result.W, -I2) < 1e-10
    c = np.cos(gamma)
    assert max_abs_diff(result.B, np.diag(np.exp([1j * np.pi * c, -1j * np.pi * c]))) < 1e-6
    assert max_abs_diff(result.M, oracle.M) < 1e-6


def test_xi_loop_smooth_gauge_matches_oracle():
    base = ParameterPoint.spin_half(np.pi / 2, np.pi / 3, 0.0)
    bundle = _bundle(FIELD_FREE, base, "xi", K=1024)
    oracle = analytic_holonomies(FIELD_FREE, LoopName.XI, base)
    assert max_abs_diff(_aligned(holonomy_M(bundle), bundle, oracle), oracle.M) < 1e-4


def _oracle_distance(bundle, result, oracle):
    return conjugation_distance(_aligned(result, bundle, oracle), oracle.M, oracle.frame.blocks)


def test_xi_loop_converges_at_second_order():
    base = ParameterPoint.spin_half(np.pi / 2, np.pi / 3, 0.0)
    oracle = analytic_holonomies(FIELD_FREE, LoopName.XI, base)
    grids = np.array([256, 512, 1024, 2048])
    errors = []
    for K in grids:
        bundle = _bundle(FIELD_FREE, base, "xi", K=int(K))
        errors.append(_oracle_distance(bundle, holonomy_M(bundle), oracle))
    slope, _ = np.polyfit(np.log(grids), np.log(errors), 1)
    assert -2.5 <= slope <= -1.5


@pytest.mark.slow
@pytest.mark.parametrize("gamma", [np.pi / 6, np.pi / 3, np.pi / 2])
def test_xi_loop_on_fine_grid_matches_oracle(gamma):
    base = ParameterPoint.spin_half(np.pi / 2, gamma, 0.0)
    bundle = _bundle(FIELD_FREE, base, "xi", K=4096)
    result = holonomy_M(bundle)
    oracle = analytic_holonomies(FIELD_FREE, LoopName.XI, base)
    assert _oracle_distance(bundle, result, oracle) <= 1e-6
    assert result.permutation == [0, 1]


@pytest.mark.slow
def test_gamma_loop_gives_minus_identity():
    base = ParameterPoint.spin_half(np.pi / 2, np.pi / 3, 0.0)
    result = holonomy_M(_bundle(FIELD_FREE, base, "gamma", K=4096))
    assert frobenius(result.M, -I2) <= 1e-6


def test_spin_three_half_block_swap_at_quarter_turn():
    spec = ModelSpec(kind=ModelKind.KICKED_SPIN_THREE_HALF, T=1.0, p=1)
    base = ParameterPoint.spin_three_half(0.0, 0.7, np.pi / 2, 0.3, 0.9)
    result = holonomy_M(_bundle(spec, base, "lambda", policy=GaugePolicy.ANALYTIC_ORACLE))
    expected = np.array([[0, 0, -1, 0], [0, 0, 0, -1], [1, 0, 0, 0], [0, 1, 0, 0]])
    assert max_abs_diff(result.M, expected) < 1e-10
    assert result.permutation == [1, 0]
    assert result.delta_n == [1, 1, 1, 1]
    assert result.geometric_phases is None


def test_spin_three_half_smooth_gauge_matches_oracle(spin_three_half):
    bundle = _bundle(spin_three_half, THREE_HALF_BASE, "lambda")
    result = holonomy_M(bundle)
    oracle = analytic_holonomies(spin_three_half, LoopName.LAMBDA, THREE_HALF_BASE)
    assert max_abs_diff(_aligned(result, bundle, oracle), oracle.M) < 1e-8
    assert result.permutation == [1, 0]
    assert result.consistent


@pytest.mark.slow
@pytest.mark.parametrize("eta", [0.0, np.pi / 4, np.pi / 2])
def test_spin_three_half_on_fine_grid_matches_oracle(spin_three_half, eta):
    base = ParameterPoint.spin_three_half(0.0, 0.7, eta, 0.3, 0.9)
    bundle = _bundle(spin_three_half, base, "lambda", K=4096)
    result = holonomy_M(bundle)
    oracle = analytic_holonomies(spin_three_half, LoopName.LAMBDA, base)
    assert _oracle_distance(bundle, result, oracle) <= 1e-6
    assert result.permutation == [1, 0]
    assert classify_permutation(oracle.M, blocks=oracle.frame.blocks)[0] == [1, 0]


def test_parallel_transport_has_trivial_B(spin_three_half):
    result = holonomy_M(_bundle(spin_three_half, THREE_HALF_BASE, "lambda",
                                policy=GaugePolicy.PARALLEL_TRANSPORT))
    assert max_abs_diff(result.B, np.eye(4)) < 1e-10
    assert max_abs_diff(result.M, result.W) < 1e-10
    bundle = _bundle(FIELD_FREE, ParameterPoint.spin_half(np.pi / 2, np.pi / 3, 0.0), "xi",
                     policy=GaugePolicy.PARALLEL_TRANSPORT)
    for sample in connection_profile(bundle, centered=False):
        assert np.max(np.abs(sample.A_diag)) * sample.step < 1e-8


def test_diagonal_twists_conjugate_M(spin_half, rng):
    bundle = _bundle(spin_half, HALF_BASE, "lambda", K=128)
    before = holonomy_M(bundle)
    moved_W = moved_B = 0.0
    for _ in range(100):
        # independent end values: g(alpha_K) != g(alpha_0)
        twist = rng.uniform(-np.pi, np.pi, size=(bundle.K + 1, 2))
        after = holonomy_M(apply_gauge(bundle, twist))
        G0 = np.diag(np.exp(1j * twist[0]))
        assert max_abs_diff(after.M, dagger(G0) @ before.M @ G0) < 1e-10
        assert np.max(np.abs(np.abs(after.M) - np.abs(before.M))) < 1e-8
        assert after.permutation == before.permutation
        assert after.delta_n == before.delta_n
        moved_W = max(moved_W, max_abs_diff(after.W, before.W))
        moved_B = max(moved_B, max_abs_diff(after.B, before.B))
    # the factors move, their product only by the base-point conjugation
    assert moved_W > 1e-3
    assert moved_B > 1e-3


def test_single_valued_twist_leaves_M_unchanged(spin_half, rng):
    bundle = _bundle(spin_half, HALF_BASE, "lambda", K=128)
    amplitudes = rng.uniform(-2, 2, size=2)
    twist = np.sin(2 * np.pi * np.arange(bundle.K + 1) / bundle.K)[:, None] * amplitudes
    twist[-1] = 0.0
    before, after = holonomy_M(bundle), holonomy_M(apply_gauge(bundle, twist))
    assert max_abs_diff(after.M, before.M) < 1e-10


def test_block_twist_conjugates_M(spin_three_half, random_unitary):
    bundle = _bundle(spin_three_half, THREE_HALF_BASE, "lambda", K=64)
    before = holonomy_M(bundle)
    twist = np.array([block_diag(random_unitary(2), random_unitary(2))
                      for _ in range(bundle.K + 1)])
    after = holonomy_M(apply_gauge(bundle, twist))
    assert max_abs_diff(after.M, dagger(twist[0]) @ before.M @ twist[0]) < 1e-10
    assert after.delta_n == before.delta_n


def test_gauge_twist_rejects_bad_shapes(spin_half, spin_three_half, random_unitary):
    bundle = _bundle(spin_half, HALF_BASE, "lambda", K=32)
    with pytest.raises(DimensionMismatch):
        apply_gauge(bundle, np.zeros((bundle.K, 2)))
    big = _bundle(spin_three_half, THREE_HALF_BASE, "lambda", K=32)
    with pytest.raises(DimensionMismatch):
        apply_gauge(big, np.array([random_unitary(4) for _ in range(big.K + 1)]))


def test_changed_blocks_rejected(spin_half):
    bundle = _bundle(spin_half, HALF_BASE, "lambda", K=32)
    frames = list(bundle.frames)
    frames[5] = replace(frames[5], blocks=((0, 1),))
    with pytest.raises(BlockMismatch):
        holonomy_M(regauge(bundle, frames))


def test_classify_permutation_examples():
    assert classify_permutation(I2) == ([0, 1], [1, 1])
    perm, phases = classify_permutation(np.array([[0, -1], [1, 0]]))
    assert perm == [1, 0] and phases == [1, -1]
    hadamard = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    assert classify_permutation(hadamard) is None

    swap = np.block([[np.zeros((2, 2)), -I2], [I2, np.zeros((2, 2))]])
    perm, phases = classify_permutation(swap, blocks=((0, 1), (2, 3)))
    assert perm == [1, 0]
    assert max_abs_diff(phases[0], I2) == 0 and max_abs_diff(phases[1], -I2) == 0


def test_open_wilson_lines_compose(spin_half):
    bundle = _bundle(spin_half, HALF_BASE, "lambda", K=64)
    full = wilson_W(bundle)
    assert max_abs_diff(full, wilson_W(bundle, 0, 20) @ wilson_W(bundle, 20)) < 1e-12
    assert max_abs_diff(wilson_W(bundle, 7, 7), I2) == 0


def test_xi_connection_in_analytic_gauge():
    gamma = np.pi / 3
    bundle = _bundle(FIELD_FREE, ParameterPoint.spin_half(np.pi / 2, gamma, 0.0), "xi",
                     policy=GaugePolicy.ANALYTIC_ORACLE)
    expected = 0.5 * (np.cos(gamma) * SIGMA3 - np.sin(gamma) * SIGMA1)
    for centered in (False, True):
        sample = connection_at(bundle, 10, centered=centered)
        assert max_abs_diff(sample.A, expected) < 1e-9
        # polar-factor phase differs from the generator diagonal at O(step^2)
        assert max_abs_diff(sample.A_diag, np.diag(np.diag(expected))) < 1e-4


def test_lambda_connection_is_off_diagonal(spin_half):
    gamma, xi, T = 0.7, 0.3, 1.0
    bundle = _bundle(spin_half, ParameterPoint.spin_half(0.0, gamma, xi), "lambda",
                     policy=GaugePolicy.ANALYTIC_ORACLE)
    k = 50
    lam = [bundle.frames[j].point.lam for j in (k - 1, k + 1)]
    _, q_before = EQ_functions(lam[0] / 2, gamma, T)
    _, q_after = EQ_functions(lam[1] / 2, gamma, T)
    sample = connection_at(bundle, k, centered=True)
    expected = (q_after - q_before) / (lam[1] - lam[0]) * SIGMA2
    assert max_abs_diff(sample.A, expected) < 1e-9
    assert np.max(np.abs(sample.A_diag)) < 1e-9
    assert max_abs_diff(sample.A, dagger(sample.A)) < 1e-12


def test_zeeman_xi_loop_gives_solid_angle_phases():
    gamma = np.pi / 3
    spec = ModelSpec(kind=ModelKind.CUSTOM_STATIC, hamiltonian=zeeman_hamiltonian, dim=2)
    result = holonomy_M(_bundle(spec, ParameterPoint.spin_half(0.0, gamma, 0.0), "xi", K=1024))
    c = np.cos(gamma)
    expected = np.diag(np.exp([-1j * np.pi * (1 + c), -1j * np.pi * (1 - c)]))
    assert max_abs_diff(result.M, expected) < 1e-4
    assert result.permutation == [0, 1]
    assert result.delta_n == [0, 0]


def test_conjugation_distance_removes_block_rotation(spin_three_half, rng):
    oracle = analytic_holonomies(spin_three_half, LoopName.LAMBDA, THREE_HALF_BASE)
    blocks = ((0, 1), (2, 3))
    assert conjugation_distance(oracle.M, oracle.M, blocks) == 0
    h = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    D = block_diag(expm(-0.05j * (h + dagger(h))), np.eye(2))
    rotated = D @ oracle.M @ dagger(D)
    assert max_abs_diff(rotated, oracle.M) > 1e-3
    assert conjugation_distance(rotated, oracle.M, blocks) < 1e-3
