"""Seeded samplers for states, measurements and stochastic matrices.

Every draw comes from a Philox (counter-based) generator keyed by
``(seed, index)``, so instance ``index`` of a batch can be regenerated on
its own, in any process, without replaying the earlier ones.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import SingularNormalizer
from .linalg import SUPPORT_TOL, eig_hermitian, spectral_fn
from .objects import DensityMatrix, Instrument, KrausMap, Povm, StochasticMatrix

MAX_NORMALIZER_ATTEMPTS = 8


@dataclass(frozen=True)
class SamplerConfig:
    seed: int = 0
    dim: int = 2
    outcome_count: int = 2
    rank: int | None = None
    kraus_count: int = 1
    index: int = 0

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.index,))
        return np.random.Generator(np.random.Philox(ss))

    def with_(self, **kw) -> "SamplerConfig":
        return replace(self, **kw)


def ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def haar_isometry(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Haar-distributed ``rows x cols`` isometry via QR with phase fix."""
    q, r = np.linalg.qr(ginibre(rng, rows, cols))
    ph = np.diag(r).copy()
    ph = np.where(np.abs(ph) > 0, ph / np.abs(ph), 1.0)
    return q * ph[None, :]


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    return haar_isometry(rng, dim, dim)


def random_pure(cfg: SamplerConfig, rng: np.random.Generator | None = None) -> DensityMatrix:
    rng = rng or cfg.rng()
    psi = ginibre(rng, cfg.dim, 1)[:, 0]
    return DensityMatrix.pure(psi)


def random_mixed(cfg: SamplerConfig, rng: np.random.Generator | None = None) -> DensityMatrix:
    """``G G^dagger / tr`` for a ``dim x rank`` complex Gaussian ``G``."""
    rng = rng or cfg.rng()
    rank = cfg.dim if cfg.rank is None else cfg.rank
    if not 1 <= rank <= cfg.dim:
        raise ValueError(f"rank must lie in [1, {cfg.dim}], got {rank}")
    g = ginibre(rng, cfg.dim, rank)
    m = g @ g.conj().T
    return DensityMatrix(m / np.real(np.trace(m)))


def random_povm(
    cfg: SamplerConfig,
    rng: np.random.Generator | None = None,
    projective: bool = False,
) -> Povm:
    """Random POVM with ``cfg.outcome_count`` elements.

    General mode normalizes Wishart draws ``G_i G_i^dagger`` by
    ``S^{-1/2} (.) S^{-1/2}`` with ``S`` their sum. Projective mode splits a
    Haar-random basis into ``outcome_count`` contiguous groups (rank-one when
    ``outcome_count == dim``).
    """
    rng = rng or cfg.rng()
    d, k = cfg.dim, cfg.outcome_count
    if k < 1:
        raise ValueError("outcome_count must be at least 1")
    if projective:
        if k > d:
            raise ValueError(f"a projective POVM on dim {d} has at most {d} outcomes")
        u = haar_unitary(rng, d)
        groups = np.array_split(np.arange(d), k)
        return Povm(np.stack([u[:, g] @ u[:, g].conj().T for g in groups]))
    rank = d if cfg.rank is None else cfg.rank
    for _ in range(MAX_NORMALIZER_ATTEMPTS):
        gs = [ginibre(rng, d, rank) for _ in range(k)]
        wish = np.stack([g @ g.conj().T for g in gs])
        total = wish.sum(axis=0)
        w = eig_hermitian(total).eigenvalues
        if w[-1] <= SUPPORT_TOL * w[0]:
            continue
        s = spectral_fn(total, lambda x: 1 / np.sqrt(x))
        return Povm(np.einsum("ij,kjl,lm->kim", s, wish, s))
    raise SingularNormalizer(f"normalizer singular after {MAX_NORMALIZER_ATTEMPTS} attempts")


def random_commuting_povm(cfg: SamplerConfig, rng: np.random.Generator | None = None) -> Povm:
    """POVM diagonal in a Haar-random basis with flat-simplex likelihoods ``p(i|x)``."""
    rng = rng or cfg.rng()
    u = haar_unitary(rng, cfg.dim)
    lik = rng.dirichlet(np.ones(cfg.outcome_count), size=cfg.dim).T  # [i, x]
    return Povm(np.einsum("ix,ax,bx->iab", lik, u, u.conj()))


def random_instrument(cfg: SamplerConfig, rng: np.random.Generator | None = None) -> Instrument:
    """Cut a Haar isometry ``d -> d * outcomes * kraus`` into ``d x d`` Kraus blocks."""
    rng = rng or cfg.rng()
    d, k, m = cfg.dim, cfg.outcome_count, cfg.kraus_count
    w = haar_isometry(rng, d * k * m, d)
    blocks = w.reshape(k, m, d, d)
    return Instrument(tuple(KrausMap(b) for b in blocks))


def random_stochastic(
    cfg: SamplerConfig,
    rows: int,
    cols: int,
    rng: np.random.Generator | None = None,
    mode: str = "flat",
) -> StochasticMatrix:
    """Column-stochastic ``rows x cols`` matrix.

    ``mode`` is ``"flat"`` (Dirichlet(1) columns), ``"identity"`` (requires
    ``rows == cols``) or ``"deterministic"`` (random 0/1 map hitting every
    row when ``rows <= cols``; a permutation when square).
    """
    rng = rng or cfg.rng()
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    if mode == "identity":
        if rows != cols:
            raise ValueError("identity mode needs a square matrix")
        return StochasticMatrix(np.eye(rows))
    if mode == "deterministic":
        targets = rng.permutation(np.resize(np.arange(rows), cols)) if rows <= cols else rng.integers(0, rows, cols)
        v = np.zeros((rows, cols))
        v[targets, np.arange(cols)] = 1.0
        return StochasticMatrix(v)
    if mode != "flat":
        raise ValueError(f"unknown mode {mode!r}")
    if rows == 1:
        return StochasticMatrix(np.ones((1, cols)))
    return StochasticMatrix(rng.dirichlet(np.ones(rows), size=cols).T)
