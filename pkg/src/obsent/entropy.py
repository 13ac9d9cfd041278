"""Scalar information measures, all in nats.

Infinite relative entropies are returned as ``math.inf``; no function here
returns NaN.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatch, LabelMismatch
from .linalg import spectral_fn, support_projector, trace_norm
from .objects import (
    PROB_FLOOR,
    ClassicalDistribution,
    DensityMatrix,
    Instrument,
    as_povm,
    branch_probabilities,
    outcome_statistics,
)

SUPPORT_LEAK_TOL = 1e-9


def _same_dim(rho: DensityMatrix, sigma: DensityMatrix):
    if rho.dim != sigma.dim:
        raise DimensionMismatch(f"dimensions differ: {rho.dim} vs {sigma.dim}")


def von_neumann_entropy(rho: DensityMatrix) -> float:
    lam = rho.eig.eigenvalues
    lam = lam[lam > PROB_FLOOR]
    return max(0.0, float(-np.sum(lam * np.log(lam))))


def quantum_relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Umegaki relative entropy ``tr rho (ln rho - ln sigma)``.

    Returns ``inf`` when ``rho`` leaks out of the support of ``sigma`` by
    more than ``SUPPORT_LEAK_TOL`` in trace norm.
    """
    _same_dim(rho, sigma)
    proj = support_projector(sigma.matrix, eig=sigma.eig)
    outside = np.eye(rho.dim) - proj
    if trace_norm(outside @ rho.matrix @ outside) > SUPPORT_LEAK_TOL:
        return math.inf
    lam = rho.eig.eigenvalues
    lam = lam[lam > PROB_FLOOR]
    rho_log_rho = float(np.sum(lam * np.log(lam)))
    log_sigma = spectral_fn(sigma.matrix, np.log, support_only=True, eig=sigma.eig)
    rho_log_sigma = float(np.real(np.trace(rho.matrix @ log_sigma)))
    return max(0.0, rho_log_rho - rho_log_sigma)


def kl_divergence(p, q, floor: float = PROB_FLOOR) -> float:
    """Kullback-Leibler divergence ``sum p ln(p/q)``.

    Accepts two ``ClassicalDistribution`` objects (labels must agree) or two
    arrays of equal shape, e.g. unnormalized joint vectors. Terms with
    ``p <= floor`` contribute nothing; ``p > floor`` against ``q <= floor``
    gives ``inf``.
    """
    if isinstance(p, ClassicalDistribution) or isinstance(q, ClassicalDistribution):
        if not (isinstance(p, ClassicalDistribution) and isinstance(q, ClassicalDistribution)):
            raise TypeError("cannot mix ClassicalDistribution with raw arrays")
        if p.labels != q.labels:
            raise LabelMismatch(f"label sets differ: {p.labels!r} vs {q.labels!r}")
        pa, qa = p.probs, q.probs
    else:
        pa = np.asarray(p, dtype=float).ravel()
        qa = np.asarray(q, dtype=float).ravel()
        if pa.shape != qa.shape:
            raise LabelMismatch(f"shapes differ: {np.shape(p)} vs {np.shape(q)}")
    live = pa > floor
    if np.any(qa[live] <= floor):
        return math.inf
    pl, ql = pa[live], qa[live]
    return max(0.0, float(np.sum(pl * np.log(pl / ql))))


def observational_entropy(rho: DensityMatrix, c) -> float:
    """``-sum_i p_i ln(p_i / V_i)`` for a POVM, instrument or sequence."""
    dist, vol = outcome_statistics(rho, c)
    p = dist.probs
    live = p > PROB_FLOOR
    return float(-np.sum(p[live] * np.log(p[live] / vol[live])))


def observed_relative_entropy(rho: DensityMatrix, sigma: DensityMatrix, c) -> float:
    """KL divergence between the outcome distributions ``c`` induces on two states."""
    _same_dim(rho, sigma)
    if isinstance(c, Instrument):
        p = np.clip(branch_probabilities(rho, c), 0.0, None)
        q = np.clip(branch_probabilities(sigma, c), 0.0, None)
        return kl_divergence(p, q)
    povm = as_povm(c)
    return kl_divergence(outcome_statistics(rho, povm)[0], outcome_statistics(sigma, povm)[0])


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Root fidelity ``|| sqrt(rho) sqrt(sigma) ||_1``."""
    _same_dim(rho, sigma)
    a = spectral_fn(rho.matrix, np.sqrt, support_only=True, eig=rho.eig)
    b = spectral_fn(sigma.matrix, np.sqrt, support_only=True, eig=sigma.eig)
    return float(np.sum(np.linalg.svd(a @ b, compute_uv=False)))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    _same_dim(rho, sigma)
    return 0.5 * trace_norm(rho.matrix - sigma.matrix)
