"""Verifiers for the observational-entropy identities, bounds and equality cases.

Each ``*_report`` function evaluates both sides of every relation on one
instance and returns a :class:`VerificationReport`. Identities record a
residual ``|lhs - rhs|``, inequalities ``lhs >= rhs`` record the slack
``lhs - rhs``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .entropy import (
    fidelity,
    kl_divergence,
    observational_entropy,
    observed_relative_entropy,
    quantum_relative_entropy,
    trace_distance,
    von_neumann_entropy,
)
from .errors import DimensionMismatch
from .linalg import SUPPORT_TOL, trace_norm
from .objects import (
    PROB_FLOOR,
    CoarseGrainingSequence,
    DensityMatrix,
    Instrument,
    Povm,
    StochasticMatrix,
    _check_weights,
    aligned_labels,
    apply_stochastic,
    as_instrument,
    as_povm,
    backward_stochastic,
    compose_sequence,
    mix_povms,
    mix_states,
    outcome_statistics,
    padded_elements,
    post_measurement_states,
)
from .recovery import petz_recovered_state, recovered_state

TOL_IDENTITY = 1e-9
TOL_INEQ = 1e-8
TOL_EQ = 1e-9
STATE_EQ_TOL = 1e-7
DIST_EQ_TOL = 1e-9
PETZ_TOL = 1e-8
BACKWARD_SUM_TOL = 1e-10
SUMMARY_MAX_ENTRIES = 10**5

PASSED, FAILED, INDETERMINATE = "passed", "failed", "indeterminate"


@dataclass
class Check:
    name: str
    kind: str  # "identity" | "inequality"
    lhs: float
    rhs: float
    tol: float
    status: str
    residual: float | None = None
    slack: float | None = None

    @property
    def passed(self) -> bool:
        return self.status == PASSED

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind, "lhs": _num(self.lhs), "rhs": _num(self.rhs),
             "tol": self.tol, "status": self.status}
        if self.residual is not None:
            d["residual"] = _num(self.residual)
        if self.slack is not None:
            d["slack"] = _num(self.slack)
        return d


def _num(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def identity(name: str, lhs: float, rhs: float, tol: float = TOL_IDENTITY) -> Check:
    if math.isinf(lhs) or math.isinf(rhs):
        return Check(name, "identity", lhs, rhs, tol, INDETERMINATE)
    r = abs(lhs - rhs)
    return Check(name, "identity", lhs, rhs, tol, PASSED if r <= tol else FAILED, residual=r)


def inequality(name: str, lhs: float, rhs: float, tol: float = TOL_INEQ) -> Check:
    """Check ``lhs >= rhs - tol``."""
    if math.isinf(lhs) or math.isinf(rhs):
        if lhs == math.inf and not math.isinf(rhs):
            return Check(name, "inequality", lhs, rhs, tol, PASSED, slack=math.inf)
        if rhs == -math.inf and not math.isinf(lhs):
            return Check(name, "inequality", lhs, rhs, tol, PASSED, slack=math.inf)
        return Check(name, "inequality", lhs, rhs, tol, INDETERMINATE)
    s = lhs - rhs
    return Check(name, "inequality", lhs, rhs, tol, PASSED if s >= -tol else FAILED, slack=s)


@dataclass
class VerificationReport:
    theorem: str
    quantities: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    equality_condition_holds: bool | None = None
    # whether "gap vanishes" and the stated equality condition agree
    equality_consistent: bool | None = None
    vectors: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.status != FAILED for c in self.checks)

    @property
    def failures(self) -> list:
        return [c for c in self.checks if c.status == FAILED]

    @property
    def indeterminate(self) -> list:
        return [c for c in self.checks if c.status == INDETERMINATE]

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def max_residual(self) -> float:
        r = [c.residual for c in self.checks if c.residual is not None]
        return max(r) if r else 0.0

    def min_slack(self) -> float:
        s = [c.slack for c in self.checks if c.slack is not None]
        return min(s) if s else math.inf

    def to_dict(self, verbose: bool = False) -> dict:
        d = {
            "theorem": self.theorem,
            "passed": self.passed,
            "quantities": {k: _num(v) for k, v in self.quantities.items()},
            "checks": [c.to_dict() for c in self.checks],
            "equality_condition_holds": self.equality_condition_holds,
            "equality_consistent": self.equality_consistent,
            "tolerances": self.tolerances,
        }
        vecs = {}
        for k, v in self.vectors.items():
            v = np.asarray(v)
            if verbose or v.size <= SUMMARY_MAX_ENTRIES:
                vecs[k] = v.tolist()
            else:
                vecs[k] = {"size": int(v.size), "summarized": True}
        if vecs:
            d["vectors"] = vecs
        return d


def _tolerances(**extra) -> dict:
    base = {"identity": TOL_IDENTITY, "inequality": TOL_INEQ, "equality": TOL_EQ}
    base.update(extra)
    return base


def _check_dim(rho: DensityMatrix, d: int):
    if rho.dim != d:
        raise DimensionMismatch(f"state has dim {rho.dim}, measurement has dim {d}")


# --------------------------------------------------------------------------
# lower bound by von Neumann entropy, recovered state


def thm2_report(rho: DensityMatrix, c: Povm | Instrument | CoarseGrainingSequence) -> VerificationReport:
    """``S_C - S = D_KL(p1 || q1) >= D(rho || rho_rec) >= -2 ln F(rho, rho_rec)``.

    Also checks the Fuchs-van de Graaf sandwich for ``(rho, rho_rec)`` and that
    the Petz recovery of the measuring channel reproduces ``rho_rec``.
    """
    inst = compose_sequence(c) if isinstance(c, CoarseGrainingSequence) else c
    povm = as_povm(inst)
    _check_dim(rho, povm.dim)
    dist, vol = outcome_statistics(rho, povm)
    p = dist.probs
    s_obs = observational_entropy(rho, povm)
    s_vn = von_neumann_entropy(rho)
    gap = s_obs - s_vn

    lam, psi = rho.eig
    # r[i, j] = <psi_j| Pi_i |psi_j>
    r = np.clip(np.real(np.einsum("aj,iab,bj->ij", psi.conj(), povm.elements, psi)), 0.0, None)
    ratio = np.where(vol > SUPPORT_TOL, p / np.where(vol > SUPPORT_TOL, vol, 1.0), 0.0)
    p1 = lam[None, :] * r
    q1 = ratio[:, None] * r
    kl1 = kl_divergence(p1, q1)

    rec = recovered_state(rho, povm)
    petz = petz_recovered_state(rho, as_instrument(inst))
    d_rec = quantum_relative_entropy(rho, rec)
    f = fidelity(rho, rec)
    t = trace_distance(rho, rec)
    neg2lnf = -2 * math.log(f) if f > 0 else math.inf
    petz_gap = trace_norm(petz.matrix - rec.matrix)

    checks = [
        identity("gap_equals_kl_p1_q1", gap, kl1),
        inequality("gap_ge_relent_rec", gap, d_rec),
        inequality("relent_rec_ge_neg2lnF", d_rec, neg2lnf),
        inequality("gap_ge_zero", gap, 0.0),
        inequality("fvdg_lower", t, 1 - f),
        inequality("fvdg_upper", math.sqrt(max(0.0, 1 - f * f)), t),
        identity("petz_two_path", petz_gap, 0.0, PETZ_TOL),
    ]
    states_equal = 2 * t <= STATE_EQ_TOL
    gap_zero = gap <= TOL_EQ
    return VerificationReport(
        "thm2",
        quantities={
            "observational_entropy": s_obs,
            "von_neumann_entropy": s_vn,
            "gap": gap,
            "kl_p1_q1": kl1,
            "relative_entropy_to_recovered": d_rec,
            "fidelity": f,
            "trace_distance": t,
            "petz_trace_norm_difference": petz_gap,
            "dim": rho.dim,
            "outcomes": len(povm),
        },
        checks=checks,
        equality_condition_holds=states_equal,
        equality_consistent=gap_zero == states_equal,
        vectors={"p1": p1.ravel(), "q1": q1.ravel(), "p": p, "volumes": vol},
        tolerances=_tolerances(state_equality=STATE_EQ_TOL, petz=PETZ_TOL),
    )


# --------------------------------------------------------------------------
# sequential measurements


def _joint_sequence_vectors(rho: DensityMatrix, seq: CoarseGrainingSequence, nxt: Instrument):
    """Statistics of ``C^n`` and ``C^{n+1}``, arranged as ``[i^n, i_{n+1}]``."""
    ext = seq.extended(nxt)
    dist_n, vol_n = outcome_statistics(rho, seq)
    dist_n1, vol_n1 = outcome_statistics(rho, ext)
    k = len(ext.steps[-1])
    pn, pn1 = dist_n.probs, dist_n1.probs.reshape(-1, k)
    vn1 = vol_n1.reshape(-1, k)
    return ext, pn, vol_n, pn1, vn1


def monotone_chain_report(rho: DensityMatrix, seq: CoarseGrainingSequence) -> VerificationReport:
    """``S(rho) <= S_{C^n} <= ... <= S_{C^1} <= ln d`` over all prefixes."""
    _check_dim(rho, seq.dim)
    s_vn = von_neumann_entropy(rho)
    s = [observational_entropy(rho, seq.prefix(n)) for n in range(1, len(seq) + 1)]
    ln_d = math.log(rho.dim)
    checks = [inequality("ln_d_ge_S_C1", ln_d, s[0])]
    for n in range(1, len(s)):
        checks.append(inequality(f"S_C{n}_ge_S_C{n + 1}", s[n - 1], s[n], TOL_INEQ * n))
    checks.append(inequality(f"S_C{len(s)}_ge_S", s[-1], s_vn))
    q = {"von_neumann_entropy": s_vn, "ln_d": ln_d}
    q.update({f"S_C{n + 1}": v for n, v in enumerate(s)})
    return VerificationReport("chain", quantities=q, checks=checks, tolerances=_tolerances())


def thm_sequential_report(
    rho: DensityMatrix, seq: CoarseGrainingSequence, next: Povm | Instrument
) -> VerificationReport:
    """Adding a measurement: ``S_{C^n} - S_{C^{n+1}} = D_KL(p_{n+1} || q_{n+1}) >= 0``.

    ``q_{n+1}`` propagates ``p_{i^n}`` forward with the conditional volumes
    ``V_{i^{n+1}} / V_{i^n}``. The gap is also evaluated as the mean observed
    relative entropy of ``next`` between the post-measurement states of
    ``rho`` and of the maximally mixed state.
    """
    nxt = as_instrument(next)
    _check_dim(rho, seq.dim)
    ext, pn, vn, pn1, vn1 = _joint_sequence_vectors(rho, seq, nxt)
    s_n = observational_entropy(rho, seq)
    s_n1 = observational_entropy(rho, ext)
    gap = s_n - s_n1

    vol_ok = vn > SUPPORT_TOL
    cond_vol = np.where(vol_ok[:, None], vn1 / np.where(vol_ok, vn, 1.0)[:, None], 0.0)
    q = cond_vol * pn[:, None]
    kl = kl_divergence(pn1, q)
    inconsistent = bool(np.any(~vol_ok & (pn > PROB_FLOOR)))

    live = pn > PROB_FLOOR
    cond_p = pn1[live] / pn[live][:, None]
    memoryless = bool(np.all(np.abs(cond_p - cond_vol[live]) <= DIST_EQ_TOL))

    mixed = DensityMatrix.maximally_mixed(rho.dim)
    post_rho = post_measurement_states(rho, seq)
    post_mix = {lab: st for lab, _, st in post_measurement_states(mixed, seq)}
    mean_observed = sum(pr * observed_relative_entropy(st, post_mix[lab], nxt) for lab, pr, st in post_rho)

    chain = monotone_chain_report(rho, ext)
    checks = [
        inequality("gap_ge_zero", gap, 0.0),
        identity("gap_equals_kl_pn1_qn1", gap, kl),
        identity("gap_equals_mean_observed_relent", gap, mean_observed),
    ] + chain.checks
    return VerificationReport(
        "sequential",
        quantities={
            "S_Cn": s_n,
            "S_Cn1": s_n1,
            "gap": gap,
            "kl_pn1_qn1": kl,
            "mean_observed_relative_entropy": mean_observed,
            "inconsistent_zero_volume": inconsistent,
            "dim": rho.dim,
            "steps": len(ext),
        },
        checks=checks,
        equality_condition_holds=memoryless,
        equality_consistent=(gap <= TOL_EQ) == memoryless,
        vectors={"p_n1": pn1.ravel(), "q_n1": q.ravel(), "p_n": pn, "V_n": vn, "V_n1": vn1.ravel()},
        tolerances=_tolerances(conditional=DIST_EQ_TOL),
    )


def thm_sandwich_report(
    rho: DensityMatrix, seq: CoarseGrainingSequence, next: Povm | Instrument
) -> VerificationReport:
    """``<D(rho_{i^n} || sigma_{i^n})> >= S_{C^n} - S_{C^{n+1}} = D_KL(p_{n+1} || q_{n+1}) >= 0``.

    ``sigma_{i^n}`` are the post-measurement states of the maximally mixed
    state. Also reports the lower bound ``S_{C^n} - S - <D>`` on the
    information lost to the first ``n`` measurements.
    """
    nxt = as_instrument(next)
    _check_dim(rho, seq.dim)
    ext, pn, vn, pn1, vn1 = _joint_sequence_vectors(rho, seq, nxt)
    s_n = observational_entropy(rho, seq)
    s_n1 = observational_entropy(rho, ext)
    s_vn = von_neumann_entropy(rho)
    gap = s_n - s_n1
    vol_ok = vn > SUPPORT_TOL
    q = np.where(vol_ok[:, None], vn1 / np.where(vol_ok, vn, 1.0)[:, None], 0.0) * pn[:, None]
    kl = kl_divergence(pn1, q)

    mixed = DensityMatrix.maximally_mixed(rho.dim)
    post_mix = {lab: st for lab, _, st in post_measurement_states(mixed, seq)}
    mean_d = 0.0
    full_support = True
    for lab, pr, st in post_measurement_states(rho, seq):
        dval = quantum_relative_entropy(st, post_mix[lab])
        if math.isinf(dval):
            full_support = False
            mean_d = math.inf
        elif not math.isinf(mean_d):
            mean_d += pr * dval
    lost = s_n - s_vn - mean_d

    checks = [
        inequality("mean_relent_ge_gap", mean_d, gap),
        identity("gap_equals_kl_pn1_qn1", gap, kl),
        inequality("kl_ge_zero", kl, 0.0),
    ]
    return VerificationReport(
        "sandwich",
        quantities={
            "S_Cn": s_n,
            "S_Cn1": s_n1,
            "von_neumann_entropy": s_vn,
            "gap": gap,
            "kl_pn1_qn1": kl,
            "mean_relative_entropy": mean_d,
            "lost_information_lower_bound": lost,
            "full_support": full_support,
            "dim": rho.dim,
        },
        checks=checks,
        equality_condition_holds=mean_d <= TOL_EQ,
        vectors={"p_n1": pn1.ravel(), "q_n1": q.ravel()},
        tolerances=_tolerances(),
    )


# --------------------------------------------------------------------------
# post-processing


def thm_refinement_report(rho: DensityMatrix, c: Povm, v: StochasticMatrix) -> VerificationReport:
    """``S_{C'} - S_C = D_KL(p2 || q2) >= D_KL(p || q) >= 0`` for ``C' = v(C)``."""
    _check_dim(rho, c.dim)
    coarse = apply_stochastic(c, v)
    vt = backward_stochastic(c, v)
    p = outcome_statistics(rho, c)[0].probs
    pc = outcome_statistics(rho, coarse)[0].probs
    s_fine = observational_entropy(rho, c)
    s_coarse = observational_entropy(rho, coarse)
    gap = s_coarse - s_fine

    p2 = v.matrix.T * p[:, None]  # [i, j]
    q2 = vt.matrix * pc[None, :]
    q_marg = vt.matrix @ pc
    kl2 = kl_divergence(p2, q2)
    kl1 = kl_divergence(p, q_marg)
    col_dev = float(np.max(np.abs(vt.matrix.sum(axis=0) - 1)))
    equal = bool(np.all(np.abs(p - q_marg) <= DIST_EQ_TOL))

    checks = [
        identity("gap_equals_kl_p2_q2", gap, kl2),
        inequality("kl_joint_ge_kl_marginal", kl2, kl1),
        inequality("kl_marginal_ge_zero", kl1, 0.0),
        inequality("gap_ge_zero", gap, 0.0),
        identity("backward_column_sums", col_dev, 0.0, BACKWARD_SUM_TOL),
    ]
    return VerificationReport(
        "refinement",
        quantities={
            "S_fine": s_fine,
            "S_coarse": s_coarse,
            "gap": gap,
            "kl_p2_q2": kl2,
            "kl_p_q": kl1,
            "backward_column_deviation": col_dev,
            "dim": rho.dim,
        },
        checks=checks,
        equality_condition_holds=equal,
        equality_consistent=(gap <= TOL_EQ) == equal,
        vectors={"p2": p2.ravel(), "q2": q2.ravel(), "p": p, "q": q_marg, "backward": vt.matrix.ravel()},
        tolerances=_tolerances(distribution=DIST_EQ_TOL, backward=BACKWARD_SUM_TOL),
    )


# --------------------------------------------------------------------------
# concavity


def state_concavity_report(rhos: Sequence[DensityMatrix], weights, c: Povm) -> VerificationReport:
    w = _check_weights(weights, len(rhos))
    mix = mix_states(rhos, w)
    _check_dim(mix, c.dim)
    lhs = float(np.dot(w, [observational_entropy(r, c) for r in rhos]))
    rhs = observational_entropy(mix, c)
    dists = np.stack([outcome_statistics(r, c)[0].probs for r in rhos])
    same = bool(np.max(np.abs(dists - dists[0])) <= DIST_EQ_TOL)
    return VerificationReport(
        "concavity_state",
        quantities={"mean_entropy": lhs, "entropy_of_mixture": rhs, "gap": rhs - lhs, "dim": c.dim},
        checks=[inequality("mixture_ge_mean", rhs, lhs)],
        equality_condition_holds=same,
        equality_consistent=(rhs - lhs <= TOL_EQ) == same,
        vectors={"distributions": dists.ravel()},
        tolerances=_tolerances(distribution=DIST_EQ_TOL),
    )


def povm_concavity_report(povms: Sequence[Povm], weights, rho: DensityMatrix) -> VerificationReport:
    w = _check_weights(weights, len(povms))
    mixed = mix_povms(povms, w)
    _check_dim(rho, mixed.dim)
    lhs = float(np.dot(w, [observational_entropy(rho, c) for c in povms]))
    rhs = observational_entropy(rho, mixed)

    labels = aligned_labels(povms)
    els = padded_elements(povms, labels)  # [k, i, a, b]
    pk = np.real(np.einsum("kiab,ba->ki", els, rho.matrix))
    vk = np.real(np.einsum("kiaa->ki", els))
    p, vol = outcome_statistics(rho, mixed)
    nonzero = np.max(np.abs(els), axis=(2, 3)) > SUPPORT_TOL
    ratio_k = np.where(nonzero, pk / np.where(nonzero, vk, 1.0), 0.0)
    ratio = p.probs / vol
    same_ratio = bool(np.all(np.abs(ratio_k - ratio[None, :])[nonzero] <= DIST_EQ_TOL))
    return VerificationReport(
        "concavity_povm",
        quantities={"mean_entropy": lhs, "entropy_of_mixed_povm": rhs, "gap": rhs - lhs, "dim": rho.dim},
        checks=[inequality("mixed_povm_ge_mean", rhs, lhs)],
        equality_condition_holds=same_ratio,
        equality_consistent=(rhs - lhs <= TOL_EQ) == same_ratio,
        vectors={"ratios_per_component": ratio_k.ravel(), "ratios": ratio},
        tolerances=_tolerances(distribution=DIST_EQ_TOL),
    )


def thm_concavity_report(
    weights,
    *,
    rhos: Sequence[DensityMatrix] | None = None,
    povm: Povm | None = None,
    povms: Sequence[Povm] | None = None,
    rho: DensityMatrix | None = None,
) -> VerificationReport:
    """State mode (``rhos`` + ``povm``) or POVM mode (``povms`` + ``rho``)."""
    if rhos is not None and povm is not None:
        return state_concavity_report(rhos, weights, povm)
    if povms is not None and rho is not None:
        return povm_concavity_report(povms, weights, rho)
    raise TypeError("pass either rhos= and povm=, or povms= and rho=")
