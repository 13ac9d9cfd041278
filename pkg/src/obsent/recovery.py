"""Petz recovery, the coarse recovered state, and Jeffrey-rule retrodiction."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, LabelMismatch, ModelFalsified, SupportLeak, ZeroVolumeOutcome
from .linalg import SUPPORT_TOL, commutator_norm, eig_hermitian, spectral_fn, support_projector, trace_norm
from .objects import (
    PROB_FLOOR,
    ClassicalDistribution,
    DensityMatrix,
    KrausMap,
    Povm,
    StochasticMatrix,
    measuring_channel,
    outcome_statistics,
)

SUPPORT_LEAK_TOL = 1e-8
COMMUTE_TOL = 1e-9
DENSE_SUPEROP_MAX_DIM = 16


class PetzMap:
    """Petz transpose map of ``channel`` with respect to ``reference``.

    The map ``x -> sqrt(s) E^dagger(E(s)^{-1/2} x E(s)^{-1/2}) sqrt(s)`` is
    itself CP with Kraus operators ``sqrt(s) K^dagger E(s)^{-1/2}``; those are
    precomputed once. For input dimension up to 16 the dense superoperator is
    cached as well and used for application.
    """

    def __init__(self, channel: KrausMap, reference: DensityMatrix):
        if channel.dim_in != reference.dim:
            raise DimensionMismatch(f"channel input dim {channel.dim_in} != reference dim {reference.dim}")
        self.channel = channel
        self.reference = reference
        image = channel(reference.matrix)
        image = (image + image.conj().T) / 2
        eig = eig_hermitian(image)
        self.image = image
        self.image_support = support_projector(image, eig=eig)
        inv_sqrt = spectral_fn(image, lambda x: 1 / np.sqrt(x), support_only=True, eig=eig)
        sqrt_ref = spectral_fn(reference.matrix, np.sqrt, support_only=True, eig=reference.eig)
        k = channel.kraus
        self.kraus = np.einsum("ij,mkj,kl->mil", sqrt_ref, k.conj(), inv_sqrt)
        self._superop = None
        if channel.dim_in <= DENSE_SUPEROP_MAX_DIM:
            # row-major vec: vec(B x B^dagger) = (B kron conj(B)) vec(x)
            b = self.kraus
            self._superop = np.einsum("mij,mkl->ikjl", b, b.conj()).reshape(
                b.shape[1] ** 2, b.shape[2] ** 2
            )

    def leak(self, x) -> float:
        p = self.image_support
        x = np.asarray(x)
        return trace_norm(x - p @ x @ p)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        if x.shape != self.image.shape:
            raise DimensionMismatch(f"input shape {x.shape} != channel output shape {self.image.shape}")
        leak = self.leak(x)
        if leak > SUPPORT_LEAK_TOL:
            raise SupportLeak(f"input has weight {leak:.3g} outside the support of E(sigma)")
        if self._superop is not None:
            d = self.reference.dim
            out = (self._superop @ x.reshape(-1)).reshape(d, d)
        else:
            b = self.kraus
            out = np.einsum("mij,jk,mlk->il", b, x, b.conj())
        return (out + out.conj().T) / 2


def petz_apply(petz: PetzMap, x) -> np.ndarray:
    return petz(x)


def recovered_state(rho_or_stats: DensityMatrix | ClassicalDistribution, c: Povm) -> DensityMatrix:
    """Coarse recovered state ``sum_i (p_i / V_i) Pi_i``.

    Takes either the true state (statistics are computed from it) or an
    observed distribution whose labels must match the POVM's.
    """
    if isinstance(rho_or_stats, DensityMatrix):
        dist, vol = outcome_statistics(rho_or_stats, c)
    else:
        dist, vol = rho_or_stats, c.volumes
        if dist.labels != c.labels:
            raise LabelMismatch(f"statistics labels {dist.labels!r} do not match POVM labels {c.labels!r}")
    p = dist.probs
    live = p > 0
    empty = live & (vol <= SUPPORT_TOL)
    if np.any(empty):
        lab = c.labels[int(np.argmax(empty))]
        raise ZeroVolumeOutcome(f"outcome {lab!r} has probability but zero volume")
    ratio = np.where(live, p / np.where(live, vol, 1.0), 0.0)
    return DensityMatrix(np.einsum("k,kij->ij", ratio, c.elements))


def petz_recovered_state(rho: DensityMatrix, c) -> DensityMatrix:
    """Petz recovery of the qc-channel at the uniform reference, applied to ``M(rho)``.

    Goes through the full Kraus description of the measuring channel; agrees
    with :func:`recovered_state` whenever the implementation is right.
    """
    m = measuring_channel(c)
    if m.dim_in != rho.dim:
        raise DimensionMismatch(f"state has dim {rho.dim}, measurement has dim {m.dim_in}")
    petz = PetzMap(m, DensityMatrix.maximally_mixed(rho.dim))
    return DensityMatrix(petz(m(rho.matrix)))


def jeffrey_retrodict(
    prior: ClassicalDistribution,
    likelihood: StochasticMatrix,
    soft_evidence: ClassicalDistribution,
) -> ClassicalDistribution:
    """Jeffrey's rule ``r(x | t) = sum_y r(x) s(y|x) t(y) / [s o r](y)``.

    ``likelihood.matrix[y, x]`` is ``s(y|x)``. Reduces to Bayes' theorem
    for point-mass evidence.
    """
    s = likelihood.matrix
    r = prior.probs
    t = soft_evidence.probs
    if s.shape != (len(t), len(r)):
        raise DimensionMismatch(f"likelihood shape {s.shape} incompatible with {len(t)} outcomes, {len(r)} states")
    pred = s @ r
    dead = (t > PROB_FLOOR) & (pred <= PROB_FLOOR)
    if np.any(dead):
        y = soft_evidence.labels[int(np.argmax(dead))]
        raise ModelFalsified(f"evidence on outcome {y!r}, which the model predicts with probability 0")
    live = t > PROB_FLOOR
    # inverse channel s~(x|y) = r(x) s(y|x) / [s o r](y), restricted to live y
    inverse = r[:, None] * s[live].T / pred[live][None, :]
    post = inverse @ t[live]
    return ClassicalDistribution(post / post.sum(), prior.labels)


def commuting_basis(c: Povm, seed: int = 0, attempts: int = 4) -> tuple[bool, np.ndarray | None]:
    """Simultaneous eigenbasis of a commuting POVM, or ``(False, None)``.

    Diagonalizes a random real combination of the elements and re-verifies
    that every element is diagonal in the resulting basis.
    """
    els = c.elements
    for a in range(len(els)):
        for b in range(a + 1, len(els)):
            if commutator_norm(els[a], els[b]) > COMMUTE_TOL:
                return False, None
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        coeffs = rng.standard_normal(len(els))
        _, basis = eig_hermitian(np.einsum("k,kij->ij", coeffs, els))
        rotated = np.einsum("ji,kjl,lm->kim", basis.conj(), els, basis)
        off = rotated - np.einsum("kii->ki", rotated)[:, :, None] * np.eye(c.dim)
        if np.max(np.abs(off)) <= COMMUTE_TOL:
            return True, basis
    return False, None
