"""States, measurements and their classical shadows.

Outcome labels are plain hashables (``str`` / ``int``); composed sequences
use tuples ``(i1, ..., in)`` ordered lexicographically. Arrays held by the
objects below are made read-only on construction.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import InitVar, dataclass, field
from functools import cached_property
from typing import Hashable, Sequence

import numpy as np

from .errors import (
    BranchExplosion,
    DimensionMismatch,
    InvariantViolation,
    NotNormalized,
    NotPositive,
    WeightError,
    ZeroVolumeOutcome,
)
from .linalg import (
    PSD_TOL,
    SUPPORT_TOL,
    EigenDecomposition,
    eig_hermitian,
    hermitize,
    spectral_fn,
)

POVM_SUM_TOL = 1e-8
INSTRUMENT_TP_TOL = 1e-8
PROB_FLOOR = 1e-12
BRANCH_CAP = 10**6

# below this size a mismatch is treated as rounding and left alone; keeps
# parse/serialize round-trips bit-stable
_REPAIR_THRESHOLD = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


def _check_labels(labels, n: int) -> tuple:
    labels = tuple(range(n)) if labels is None else tuple(labels)
    if len(labels) != n:
        raise InvariantViolation(f"{len(labels)} labels for {n} outcomes")
    if len(set(labels)) != n:
        raise InvariantViolation(f"duplicate outcome labels in {labels!r}")
    return labels


# --------------------------------------------------------------------------
# states


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Unit-trace PSD operator.

    Eigenvalues down to ``-PSD_TOL`` are clipped to zero and a trace within
    ``1e-6`` of one is renormalized; anything worse is rejected.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = hermitize(self.matrix)
        w, v = eig_hermitian(m)
        if w.size and w[-1] < -PSD_TOL:
            raise NotPositive(f"state has eigenvalue {w[-1]:.3g} < -{PSD_TOL:g}")
        if w.size and w[-1] < -_REPAIR_THRESHOLD:
            w = np.clip(w, 0.0, None)
            m = (v * w) @ v.conj().T
        tr = float(np.real(np.trace(m)))
        if abs(tr - 1) > 1e-6:
            raise NotNormalized(f"state trace is {tr!r}")
        if abs(tr - 1) > _REPAIR_THRESHOLD:
            m = m / tr
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def eig(self) -> EigenDecomposition:
        w, v = eig_hermitian(self.matrix)
        return EigenDecomposition(_frozen(np.clip(w, 0.0, None)), _frozen(v))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim) / dim)

    @classmethod
    def pure(cls, vector) -> "DensityMatrix":
        psi = np.asarray(vector, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def diagonal(cls, probs) -> "DensityMatrix":
        return cls(np.diag(np.asarray(probs, dtype=float)))

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


# --------------------------------------------------------------------------
# measurements


@dataclass(frozen=True, eq=False)
class Povm:
    """Finite POVM ``{Pi_i}`` with explicit outcome labels.

    ``elements`` has shape ``(k, d, d)``. Elements that are numerically zero
    carry no statistics and are dropped with a warning unless
    ``drop_empty=False`` (used internally where element positions must line
    up with a stochastic matrix or another POVM).
    """

    elements: np.ndarray
    labels: tuple = None
    drop_empty: InitVar[bool] = True

    def __post_init__(self, drop_empty):
        els = np.asarray(self.elements, dtype=complex)
        if els.ndim != 3 or els.shape[1] != els.shape[2] or len(els) == 0:
            raise InvariantViolation(f"POVM elements must have shape (k, d, d), got {els.shape}")
        labels = _check_labels(self.labels, len(els))
        d = els.shape[1]
        els = np.stack([hermitize(e) for e in els])
        for lab, e in zip(labels, els):
            lo = np.linalg.eigvalsh(e)[0]
            if lo < -PSD_TOL:
                raise NotPositive(f"POVM element {lab!r} has eigenvalue {lo:.3g}")
        total = els.sum(axis=0)
        dev = np.max(np.abs(total - np.eye(d)))
        if dev > POVM_SUM_TOL:
            raise InvariantViolation(f"POVM elements do not sum to the identity (max deviation {dev:.3g} > {POVM_SUM_TOL:g})")
        if dev > _REPAIR_THRESHOLD:
            s = spectral_fn(total, lambda x: 1 / np.sqrt(x))
            els = np.einsum("ij,kjl,lm->kim", s, els, s)
        if drop_empty:
            keep = [np.max(np.abs(e)) > SUPPORT_TOL for e in els]
            if not all(keep):
                dropped = [lab for lab, k in zip(labels, keep) if not k]
                warnings.warn(f"dropping zero POVM element(s) {dropped!r}", stacklevel=3)
                els = els[np.array(keep)]
                labels = tuple(lab for lab, k in zip(labels, keep) if k)
        object.__setattr__(self, "elements", _frozen(els))
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self):
        return len(self.elements)

    @cached_property
    def volumes(self) -> np.ndarray:
        return _frozen(np.real(np.einsum("kii->k", self.elements)))

    def index(self, label) -> int:
        return self.labels.index(label)

    @classmethod
    def computational(cls, dim: int) -> "Povm":
        return cls(np.stack([np.diag(np.eye(dim)[i]) for i in range(dim)]))

    @classmethod
    def from_basis(cls, basis, labels=None) -> "Povm":
        """Rank-one projective POVM on the columns of a unitary ``basis``."""
        u = np.asarray(basis, dtype=complex)
        return cls(np.einsum("ik,jk->kij", u, u.conj()), labels)

    @classmethod
    def trivial(cls, dim: int) -> "Povm":
        return cls(np.eye(dim)[None].astype(complex))

    def __repr__(self):
        return f"Povm(dim={self.dim}, outcomes={len(self)})"


@dataclass(frozen=True, eq=False)
class KrausMap:
    """Completely positive, trace non-increasing map ``x -> sum_m K x K^dagger``.

    ``kraus`` has shape ``(m, d_out, d_in)``.
    """

    kraus: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kraus, dtype=complex)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3 or len(k) == 0:
            raise InvariantViolation(f"Kraus array must have shape (m, d_out, d_in), got {k.shape}")
        if not np.all(np.isfinite(k)):
            raise InvariantViolation("Kraus operators have non-finite entries")
        top = np.linalg.eigvalsh(self._adjoint(k, np.eye(k.shape[1])))[-1]
        if top > 1 + PSD_TOL:
            raise InvariantViolation(f"map is trace-increasing (largest eigenvalue {top:.6g})")
        object.__setattr__(self, "kraus", _frozen(k))

    @staticmethod
    def _adjoint(k, y):
        return np.einsum("mji,jk,mkl->il", k.conj(), y, k)

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    def __call__(self, x) -> np.ndarray:
        k = self.kraus
        return np.einsum("mij,jk,mlk->il", k, np.asarray(x), k.conj())

    def adjoint(self, y) -> np.ndarray:
        return self._adjoint(self.kraus, np.asarray(y))

    def effect(self) -> np.ndarray:
        """``A^dagger(1)``, the POVM element this branch induces."""
        return self.adjoint(np.eye(self.dim_out))


@dataclass(frozen=True, eq=False)
class Instrument:
    """Quantum instrument: CP branches whose sum is trace preserving."""

    branches: tuple
    labels: tuple = None

    def __post_init__(self):
        branches = tuple(b if isinstance(b, KrausMap) else KrausMap(b) for b in self.branches)
        if not branches:
            raise InvariantViolation("instrument needs at least one branch")
        labels = _check_labels(self.labels, len(branches))
        din, dout = branches[0].dim_in, branches[0].dim_out
        for b in branches:
            if (b.dim_in, b.dim_out) != (din, dout):
                raise DimensionMismatch("instrument branches have different dimensions")
        total = sum(b.effect() for b in branches)
        dev = np.max(np.abs(total - np.eye(din)))
        if dev > INSTRUMENT_TP_TOL:
            raise InvariantViolation(f"instrument is not trace preserving (deviation {dev:.3g})")
        object.__setattr__(self, "branches", branches)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.branches[0].dim_in

    @property
    def dim_out(self) -> int:
        return self.branches[0].dim_out

    def __len__(self):
        return len(self.branches)

    @classmethod
    def luders(cls, povm: Povm) -> "Instrument":
        """Lueders instrument ``rho -> sqrt(Pi) rho sqrt(Pi)``."""
        roots = [spectral_fn(e, np.sqrt, support_only=True) for e in povm.elements]
        return cls(tuple(KrausMap(r) for r in roots), povm.labels)

    @classmethod
    def from_kraus(cls, kraus_sets: Sequence, labels=None) -> "Instrument":
        return cls(tuple(KrausMap(np.asarray(k)) for k in kraus_sets), labels)

    @classmethod
    def identity(cls, dim: int) -> "Instrument":
        return cls((KrausMap(np.eye(dim)),))

    def __repr__(self):
        return f"Instrument(dim={self.dim}, outcomes={len(self)})"


def as_instrument(c: Povm | Instrument) -> Instrument:
    """Promote a POVM to its Lueders instrument; instruments pass through."""
    if isinstance(c, Instrument):
        return c
    if isinstance(c, Povm):
        return Instrument.luders(c)
    raise TypeError(f"cannot interpret {type(c).__name__} as an instrument")


@dataclass(frozen=True, eq=False)
class CoarseGrainingSequence:
    steps: tuple

    def __post_init__(self):
        steps = tuple(as_instrument(s) for s in self.steps)
        if not steps:
            raise InvariantViolation("a sequence needs at least one coarse-graining")
        d = steps[0].dim
        for s in steps:
            if s.dim != d or s.dim_out != d:
                raise DimensionMismatch("all steps of a sequence must act on the same dimension")
        object.__setattr__(self, "steps", steps)

    @property
    def dim(self) -> int:
        return self.steps[0].dim

    def __len__(self):
        return len(self.steps)

    @property
    def branch_count(self) -> int:
        return math.prod(len(s) for s in self.steps)

    def extended(self, step: Povm | Instrument) -> "CoarseGrainingSequence":
        return CoarseGrainingSequence(self.steps + (as_instrument(step),))

    def prefix(self, n: int) -> "CoarseGrainingSequence":
        return CoarseGrainingSequence(self.steps[:n])


# --------------------------------------------------------------------------
# classical side


@dataclass(frozen=True, eq=False)
class ClassicalDistribution:
    probs: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).ravel()
        labels = _check_labels(self.labels, len(p))
        if not np.all(np.isfinite(p)):
            raise InvariantViolation("distribution has non-finite entries")
        if np.any(p < -PROB_FLOOR):
            raise NotPositive(f"distribution has negative entry {p.min():.3g}")
        p = np.clip(p, 0.0, None)
        if abs(p.sum() - 1) > 1e-9:
            raise NotNormalized(f"distribution sums to {p.sum()!r}")
        object.__setattr__(self, "probs", _frozen(p))
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_counts(cls, counts, labels=None) -> "ClassicalDistribution":
        c = np.asarray(counts, dtype=float)
        if np.any(c < 0) or c.sum() <= 0:
            raise InvariantViolation("counts must be non-negative with a positive total")
        return cls(c / c.sum(), labels)

    def __len__(self):
        return len(self.probs)

    def as_dict(self) -> dict:
        return dict(zip(self.labels, self.probs.tolist()))


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    """Column-stochastic matrix ``v[j, i]``: probability of output ``j`` given input ``i``."""

    matrix: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.matrix, dtype=float)
        if v.ndim != 2 or v.size == 0:
            raise InvariantViolation(f"stochastic matrix must be 2-d, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < -PROB_FLOOR):
            raise NotPositive("stochastic matrix has negative or non-finite entries")
        v = np.clip(v, 0.0, None)
        dev = np.max(np.abs(v.sum(axis=0) - 1))
        if dev > 1e-10:
            raise NotNormalized(f"stochastic matrix columns do not sum to 1 (max deviation {dev:.3g})")
        object.__setattr__(self, "matrix", _frozen(v))

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @classmethod
    def identity(cls, n: int) -> "StochasticMatrix":
        return cls(np.eye(n))

    @classmethod
    def total(cls, n: int) -> "StochasticMatrix":
        return cls(np.ones((1, n)))


# --------------------------------------------------------------------------
# operations


def povm_of_instrument(c: Instrument) -> Povm:
    return Povm(np.stack([b.effect() for b in c.branches]), c.labels, drop_empty=False)


def compose_sequence(seq: CoarseGrainingSequence, cap: int = BRANCH_CAP) -> Instrument:
    """Flatten a sequence into one instrument indexed by multi-indices.

    Branch ``(i1, ..., in)`` has Kraus operators ``K_{in} ... K_{i1}``; branches
    come out in lexicographic order of the multi-index.
    """
    if seq.branch_count > cap:
        raise BranchExplosion(f"sequence has {seq.branch_count} branches (cap {cap})")
    if len(seq) == 1:
        return seq.steps[0]
    kraus = [b.kraus for b in seq.steps[0].branches]
    labels = [(lab,) for lab in seq.steps[0].labels]
    for step in seq.steps[1:]:
        new_kraus, new_labels = [], []
        for ka, la in zip(kraus, labels):
            for b, lb in zip(step.branches, step.labels):
                kb = b.kraus
                prod = np.einsum("bij,ajk->abik", kb, ka).reshape(-1, kb.shape[1], ka.shape[2])
                new_kraus.append(prod)
                new_labels.append(la + (lb,))
        kraus, labels = new_kraus, new_labels
    return Instrument(tuple(KrausMap(k) for k in kraus), tuple(labels))


def sequence_povm(seq: CoarseGrainingSequence) -> Povm:
    """POVM of a sequence by the Heisenberg recursion ``Pi_{i^n, j} = A_{i^n}^dagger(Pi_j)``.

    Works backwards from the last step without ever forming composed Kraus
    operators, so it is an independent route to ``povm_of_instrument(compose_sequence(seq))``.
    """
    effects = [np.eye(seq.dim, dtype=complex)]
    labels: list[tuple] = [()]
    for step in reversed(seq.steps):
        effects = [b.adjoint(e) for b in step.branches for e in effects]
        labels = [(lb,) + rest for lb in step.labels for rest in labels]
    if len(seq) == 1:
        labels = [lab[0] for lab in labels]
    return Povm(np.stack(effects), tuple(labels), drop_empty=False)


def _povm(c) -> Povm:
    if isinstance(c, Povm):
        return c
    if isinstance(c, Instrument):
        return povm_of_instrument(c)
    if isinstance(c, CoarseGrainingSequence):
        return povm_of_instrument(compose_sequence(c))
    raise TypeError(f"not a coarse-graining: {type(c).__name__}")


def as_povm(c: Povm | Instrument | CoarseGrainingSequence) -> Povm:
    return _povm(c)


def flatten(c: Povm | Instrument | CoarseGrainingSequence) -> Instrument:
    """Single instrument for any coarse-graining description."""
    if isinstance(c, CoarseGrainingSequence):
        return compose_sequence(c)
    return as_instrument(c)


def outcome_statistics(rho: DensityMatrix, c) -> tuple[ClassicalDistribution, np.ndarray]:
    """Outcome distribution ``p_i = tr(Pi_i rho)`` and volumes ``V_i = tr Pi_i``."""
    povm = _povm(c)
    if povm.dim != rho.dim:
        raise DimensionMismatch(f"state has dim {rho.dim}, measurement has dim {povm.dim}")
    p = np.real(np.einsum("kij,ji->k", povm.elements, rho.matrix))
    p = np.clip(p, 0.0, None)
    return ClassicalDistribution(p, povm.labels), povm.volumes


def branch_probabilities(rho: DensityMatrix, c: Instrument) -> np.ndarray:
    """``tr A_i(rho)`` evaluated through the Kraus operators (Schroedinger picture)."""
    return np.array([np.real(np.trace(b(rho.matrix))) for b in c.branches])


def post_measurement_states(rho: DensityMatrix, c) -> list[tuple[Hashable, float, DensityMatrix]]:
    """``(label, p_i, A_i(rho)/p_i)`` for every branch with ``p_i > PROB_FLOOR``."""
    inst = flatten(c)
    if inst.dim != rho.dim:
        raise DimensionMismatch(f"state has dim {rho.dim}, instrument has dim {inst.dim}")
    out = []
    for lab, b in zip(inst.labels, inst.branches):
        unnorm = b(rho.matrix)
        p = float(np.real(np.trace(unnorm)))
        if p > PROB_FLOOR:
            out.append((lab, p, DensityMatrix(unnorm / p)))
    return out


def measuring_channel(c) -> KrausMap:
    """The qc-channel ``rho -> sum_i tr(Pi_i rho) |i><i|`` as a Kraus map.

    Kraus operators are ``|i><k| K_{im}`` for every branch ``i``, Kraus index
    ``m`` and output basis vector ``k``.
    """
    inst = flatten(c)
    n, dout, din = len(inst), inst.dim_out, inst.dim
    ops = []
    for i, b in enumerate(inst.branches):
        for km in b.kraus:
            for k in range(dout):
                op = np.zeros((n, din), dtype=complex)
                op[i] = km[k]
                ops.append(op)
    return KrausMap(np.stack(ops))


def apply_stochastic(c: Povm, v: StochasticMatrix, labels=None) -> Povm:
    """Post-processed POVM ``Pi'_j = sum_i v[j, i] Pi_i``."""
    if v.shape[1] != len(c):
        raise DimensionMismatch(f"stochastic matrix has {v.shape[1]} columns for {len(c)} outcomes")
    els = np.einsum("ji,ikl->jkl", v.matrix, c.elements)
    return Povm(els, labels, drop_empty=False)


def backward_stochastic(c: Povm, v: StochasticMatrix) -> StochasticMatrix:
    """Backward matrix ``vt[i, j] = v[j, i] V_i / V'_j``; each column ``j`` sums to one."""
    if v.shape[1] != len(c):
        raise DimensionMismatch(f"stochastic matrix has {v.shape[1]} columns for {len(c)} outcomes")
    vol = c.volumes
    vol_out = v.matrix @ vol
    if np.any(vol_out <= SUPPORT_TOL):
        j = int(np.argmin(vol_out))
        raise ZeroVolumeOutcome(f"coarse outcome {j} has volume {vol_out[j]:.3g}")
    return StochasticMatrix(v.matrix.T * vol[:, None] / vol_out[None, :])


def mix_povms(povms: Sequence[Povm], weights) -> Povm:
    """Convex combination ``Pi_i = sum_k w_k Pi_{i|k}``.

    Label sets are merged in order of first appearance; a POVM lacking a label
    contributes a zero element there.
    """
    w = _check_weights(weights, len(povms))
    d = povms[0].dim
    if any(p.dim != d for p in povms):
        raise DimensionMismatch("POVMs to mix must share a dimension")
    labels = aligned_labels(povms)
    return Povm(np.einsum("k,kiab->iab", w, padded_elements(povms, labels)), labels, drop_empty=False)


def aligned_labels(povms: Sequence[Povm]) -> tuple:
    return tuple(dict.fromkeys(itertools.chain.from_iterable(p.labels for p in povms)))


def padded_elements(povms: Sequence[Povm], labels: tuple) -> np.ndarray:
    """Array ``(K, len(labels), d, d)`` with zero blocks for missing labels."""
    d = povms[0].dim
    out = np.zeros((len(povms), len(labels), d, d), dtype=complex)
    pos = {lab: n for n, lab in enumerate(labels)}
    for k, p in enumerate(povms):
        for lab, e in zip(p.labels, p.elements):
            out[k, pos[lab]] = e
    return out


def _check_weights(weights, n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float).ravel()
    if len(w) != n:
        raise WeightError(f"{len(w)} weights for {n} components")
    if np.any(w <= 0) or abs(w.sum() - 1) > 1e-9:
        raise WeightError("weights must be positive and sum to one")
    return w


def mix_states(rhos: Sequence[DensityMatrix], weights) -> DensityMatrix:
    w = _check_weights(weights, len(rhos))
    if len({r.dim for r in rhos}) != 1:
        raise DimensionMismatch("states to mix must share a dimension")
    return DensityMatrix(np.einsum("k,kij->ij", w, np.stack([r.matrix for r in rhos])))
