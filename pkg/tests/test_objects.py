import numpy as np
import pytest
from hypothesis import given, strategies as st

from obsent.errors import (
    BranchExplosion,
    DimensionMismatch,
    InvariantViolation,
    NotNormalized,
    NotPositive,
    WeightError,
    ZeroVolumeOutcome,
)
from obsent.objects import (
    ClassicalDistribution,
    CoarseGrainingSequence,
    DensityMatrix,
    Instrument,
    KrausMap,
    Povm,
    StochasticMatrix,
    apply_stochastic,
    as_povm,
    backward_stochastic,
    branch_probabilities,
    compose_sequence,
    measuring_channel,
    mix_povms,
    outcome_statistics,
    post_measurement_states,
    sequence_povm,
)
from obsent.sampling import random_instrument, random_mixed, random_povm, random_stochastic

from conftest import HADAMARD, configs


def test_density_matrix_rejects_bad_input():
    with pytest.raises(NotPositive):
        DensityMatrix(np.diag([1.2, -0.2]))
    with pytest.raises(NotNormalized):
        DensityMatrix(np.diag([0.5, 0.4]))


def test_density_matrix_repairs_tiny_defects():
    rho = DensityMatrix(np.diag([1 + 1e-10, -1e-10]))
    assert np.all(rho.eig.eigenvalues >= 0)
    assert np.isclose(np.trace(rho.matrix).real, 1.0, atol=1e-15)


def test_arrays_are_read_only():
    rho = DensityMatrix.maximally_mixed(2)
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1


def test_povm_checks():
    with pytest.raises(InvariantViolation):
        Povm(np.stack([np.diag([1.0, 0]), np.diag([0, 0.5])]))
    with pytest.raises(NotPositive):
        Povm(np.stack([np.diag([1.5, 0.5]), np.diag([-0.5, 0.5])]))


def test_povm_drops_zero_elements():
    els = np.stack([np.diag([1.0, 0]), np.zeros((2, 2)), np.diag([0, 1.0])])
    with pytest.warns(UserWarning):
        c = Povm(els, ("a", "b", "c"))
    assert c.labels == ("a", "c")
    kept = Povm(els, ("a", "b", "c"), drop_empty=False)
    assert len(kept) == 3


def test_povm_labels_unique():
    with pytest.raises(InvariantViolation):
        Povm(np.stack([np.eye(2) / 2, np.eye(2) / 2]), ("x", "x"))


def test_instrument_trace_preserving():
    with pytest.raises(InvariantViolation):
        Instrument((KrausMap(np.eye(2)[None] * 0.5),))


@given(configs)
def test_luders_reproduces_povm(cfg):
    c = random_povm(cfg)
    inst = Instrument.luders(c)
    assert np.allclose(as_povm(inst).elements, c.elements, atol=1e-12)


@given(configs)
def test_schroedinger_matches_heisenberg(cfg):
    rho = random_mixed(cfg)
    inst = random_instrument(cfg.with_(kraus_count=2))
    p_heis = outcome_statistics(rho, inst)[0].probs
    assert np.allclose(branch_probabilities(rho, inst), p_heis, atol=1e-12)


@given(configs, st.integers(2, 3))
def test_sequence_povm_two_routes(cfg, n):
    rng = cfg.rng()
    seq = CoarseGrainingSequence(tuple(random_instrument(cfg.with_(outcome_count=2), rng) for _ in range(n)))
    direct = as_povm(compose_sequence(seq))
    heis = sequence_povm(seq)
    assert direct.labels == heis.labels
    assert np.allclose(direct.elements, heis.elements, atol=1e-12)


def test_sequence_labels_lexicographic():
    z = Povm.computational(2)
    seq = CoarseGrainingSequence((z, z))
    assert compose_sequence(seq).labels == ((0, 0), (0, 1), (1, 0), (1, 1))


def test_sequence_prefix_and_branch_cap():
    z = Povm.computational(2)
    seq = CoarseGrainingSequence((z, z, z))
    assert seq.branch_count == 8
    assert len(seq.prefix(2)) == 2
    with pytest.raises(BranchExplosion):
        compose_sequence(seq, cap=4)


def test_sequence_dims_must_agree():
    with pytest.raises(DimensionMismatch):
        CoarseGrainingSequence((Povm.computational(2), Povm.computational(3)))


def test_outcome_statistics_dim_mismatch():
    with pytest.raises(DimensionMismatch):
        outcome_statistics(DensityMatrix.maximally_mixed(3), Povm.computational(2))


def test_post_measurement_states_projective():
    rho = DensityMatrix.pure(HADAMARD[:, 0])
    post = post_measurement_states(rho, Povm.computational(2))
    assert [lab for lab, _, _ in post] == [0, 1]
    assert np.allclose([p for _, p, _ in post], [0.5, 0.5])
    assert np.allclose(post[1][2].matrix, np.diag([0, 1]))


def test_post_measurement_skips_null_branches():
    post = post_measurement_states(DensityMatrix.pure([1, 0]), Povm.computational(2))
    assert len(post) == 1


@given(configs)
def test_measuring_channel_outputs_statistics(cfg):
    rho = random_mixed(cfg)
    inst = random_instrument(cfg.with_(kraus_count=2))
    m = measuring_channel(inst)
    out = m(rho.matrix)
    p = outcome_statistics(rho, inst)[0].probs
    assert np.allclose(out, np.diag(p), atol=1e-12)


def test_distribution_from_counts():
    d = ClassicalDistribution.from_counts([500, 500], ("+", "-"))
    assert np.allclose(d.probs, [0.5, 0.5])
    with pytest.raises(InvariantViolation):
        ClassicalDistribution.from_counts([0, 0])


def test_stochastic_matrix_columns():
    with pytest.raises(NotNormalized):
        StochasticMatrix(np.array([[0.5, 1.0], [0.4, 0.0]]))
    assert StochasticMatrix.total(3).shape == (1, 3)


@given(configs, st.integers(1, 4))
def test_backward_matrix_column_stochastic(cfg, rows):
    c = random_povm(cfg)
    v = random_stochastic(cfg, rows, len(c))
    vt = backward_stochastic(c, v)
    assert np.allclose(vt.matrix.sum(axis=0), 1, atol=1e-12)
    coarse = apply_stochastic(c, v)
    assert np.allclose(coarse.elements.sum(axis=0), np.eye(cfg.dim), atol=1e-12)


def test_backward_matrix_zero_volume():
    c = Povm.computational(2)
    v = StochasticMatrix(np.array([[1.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ZeroVolumeOutcome):
        backward_stochastic(c, v)


def test_mix_povms_merges_labels():
    a = Povm.computational(2)
    b = Povm.from_basis(HADAMARD, ("+", "-"))
    m = mix_povms([a, b], [0.25, 0.75])
    assert m.labels == (0, 1, "+", "-")
    assert np.isclose(m.volumes.sum(), 2)
    with pytest.raises(WeightError):
        mix_povms([a, b], [0.5, 0.6])
