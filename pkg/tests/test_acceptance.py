"""Acceptance battery: one test per criterion, each printing PASS/FAIL in the summary.

Run alone with ``pytest tests/test_acceptance.py -v`` (or ``python3 tests/test_acceptance.py``).
Tolerances are the contract values; nothing here is loosened.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from obsent import io
from obsent.entropy import observational_entropy, von_neumann_entropy
from obsent.linalg import trace_norm
from obsent.objects import (
    ClassicalDistribution,
    CoarseGrainingSequence,
    DensityMatrix,
    Instrument,
    Povm,
    StochasticMatrix,
    as_povm,
    outcome_statistics,
)
from obsent.recovery import commuting_basis, jeffrey_retrodict, recovered_state
from obsent.sampling import (
    SamplerConfig,
    random_commuting_povm,
    random_instrument,
    random_mixed,
    random_povm,
    random_stochastic,
)
from obsent.theorems import (
    povm_concavity_report,
    state_concavity_report,
    thm2_report,
    thm_refinement_report,
    thm_sandwich_report,
    thm_sequential_report,
)

from conftest import HADAMARD, record

DIMS = (2, 3, 4, 5, 6)
SEED = 20240611


def _cfg(tag: int, i: int) -> tuple[SamplerConfig, np.random.Generator, int]:
    cfg = SamplerConfig(seed=SEED + tag, index=i)
    rng = cfg.rng()
    d = int(DIMS[i % len(DIMS)])
    return cfg.with_(dim=d), rng, d


def _state(cfg, rng, d):
    return random_mixed(cfg.with_(rank=int(rng.integers(1, d + 1))), rng)


def _povm(cfg, rng, d):
    k = int(rng.integers(2, 6))
    if rng.integers(2):
        return random_povm(cfg.with_(outcome_count=min(k, d)), rng, projective=True)
    return random_povm(cfg.with_(outcome_count=k), rng)


def _instrument(cfg, rng, d, kmax=4):
    k = int(rng.integers(2, kmax + 1))
    return random_instrument(cfg.with_(outcome_count=k, kraus_count=int(rng.integers(1, 3))), rng)


def _oracle_gap_and_kl(rho: DensityMatrix, povm: Povm) -> tuple[float, float]:
    """Gap and D_KL(p1 || q1) from the raw definitions with plain numpy."""
    lam, psi = np.linalg.eigh(rho.matrix)
    els = povm.elements
    p = np.array([np.trace(e @ rho.matrix).real for e in els])
    v = np.array([np.trace(e).real for e in els])
    live = p > 1e-12
    s_obs = -np.sum(p[live] * np.log(p[live] / v[live]))
    lam_live = lam[lam > 1e-12]
    s_vn = -np.sum(lam_live * np.log(lam_live))
    r = np.array([[(psi[:, j].conj() @ e @ psi[:, j]).real for j in range(len(lam))] for e in els])
    p1 = lam[None, :] * r
    q1 = np.where(v[:, None] > 0, (p / v)[:, None], 0.0) * r
    m = p1 > 1e-12
    kl = float(np.sum(p1[m] * np.log(p1[m] / q1[m])))
    return float(s_obs - s_vn), kl


def _summary(values) -> str:
    return f"max={max(values):.2e}" if values else "empty"


# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def thm2_ensemble():
    out = []
    for i in range(1000):
        cfg, rng, d = _cfg(1, i)
        out.append((_state(cfg, rng, d), _povm(cfg, rng, d)))
    return out


def test_criterion_01_identity(thm2_ensemble):
    t0 = time.perf_counter()
    reports = [thm2_report(rho, c) for rho, c in thm2_ensemble]
    elapsed = time.perf_counter() - t0
    res_lib = [r.check("gap_equals_kl_p1_q1").residual for r in reports]
    res_oracle = []
    for rho, c in thm2_ensemble:
        gap, kl = _oracle_gap_and_kl(rho, c)
        res_oracle.append(abs(gap - kl))
    ok = max(res_lib) <= 1e-9 and max(res_oracle) <= 1e-9 and elapsed <= 30
    record("1 gap = D_KL(p1||q1), 1000 instances",
           ok, f"library {_summary(res_lib)}, oracle {_summary(res_oracle)}, {elapsed:.1f}s")
    assert ok


def test_criterion_02_inequality_chain(thm2_ensemble):
    names = ("gap_ge_relent_rec", "relent_rec_ge_neg2lnF", "fvdg_lower", "fvdg_upper")
    worst = {n: math.inf for n in names}
    for rho, c in thm2_ensemble:
        rep = thm2_report(rho, c)
        for n in names:
            ch = rep.check(n)
            assert ch.status != "indeterminate", (n, ch)
            worst[n] = min(worst[n], ch.slack)
    ok = all(s >= -1e-8 for s in worst.values())
    record("2 gap >= D(rho||rho_rec) >= -2lnF, FvdG", ok,
           "min slack " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()))
    assert ok


def test_criterion_03_petz_two_path():
    diffs = []
    for i in range(1000):
        cfg, rng, d = _cfg(3, i)
        rep = thm2_report(_state(cfg, rng, d), _instrument(cfg, rng, d, 5))
        diffs.append(rep.quantities["petz_trace_norm_difference"])
    ok = max(diffs) <= 1e-8
    record("3 Petz path = direct recovered state, 1000 instruments", ok, _summary(diffs))
    assert ok


def test_criterion_04_equality_cases():
    # (i) maximally mixed state, arbitrary coarse-grainings including sequences
    dev_mixed = []
    for i in range(200):
        cfg, rng, d = _cfg(4, i)
        kind = i % 3
        if kind == 0:
            c = _povm(cfg, rng, d)
        elif kind == 1:
            c = _instrument(cfg, rng, d)
        else:
            c = CoarseGrainingSequence((_instrument(cfg, rng, d, 3), _instrument(cfg, rng, d, 3)))
        dev_mixed.append(abs(observational_entropy(DensityMatrix.maximally_mixed(d), c) - math.log(d)))

    # (ii) rank-one projective measurement in the eigenbasis of rho
    gaps, dists = [], []
    for i in range(200):
        cfg, rng, d = _cfg(40, i)
        rho = _state(cfg, rng, d)
        _, vecs = np.linalg.eigh(rho.matrix)
        c = Povm.from_basis(vecs)
        gaps.append(observational_entropy(rho, c) - von_neumann_entropy(rho))
        dists.append(trace_norm(rho.matrix - recovered_state(rho, c).matrix))

    # (iii) worked qubit example against its scalar value
    rho = DensityMatrix.diagonal([0.75, 0.25])
    rep = thm2_report(rho, Povm.from_basis(HADAMARD))
    scalar = math.log(2) + 0.75 * math.log(0.75) + 0.25 * math.log(0.25)
    q = rep.quantities
    worked = (abs(q["gap"] - 0.130812) <= 1e-6
              and abs(q["relative_entropy_to_recovered"] - 0.130812) <= 1e-6
              and abs(scalar - 0.130812) <= 1e-6)

    ok = max(dev_mixed) <= 1e-10 and max(gaps) <= 1e-9 and max(dists) <= 1e-8 and worked
    record("4 equality cases", ok,
           f"|S_C-ln d| {_summary(dev_mixed)}, eigenbasis gap {_summary(gaps)}, "
           f"||rho-rho_rec|| {_summary(dists)}, qubit gap={q['gap']:.9f}")
    assert ok


@pytest.fixture(scope="module")
def sequence_ensemble():
    out = []
    for i in range(500):
        cfg, rng, d = _cfg(5, i)
        first = _instrument(cfg, rng, d, 3) if rng.integers(2) else _povm(cfg, rng, d)
        second = _instrument(cfg, rng, d, 3) if rng.integers(2) else _povm(cfg, rng, d)
        out.append((_state(cfg, rng, d), CoarseGrainingSequence((first,)), second))
    return out


def test_criterion_05_sequential(sequence_ensemble):
    slack, resid = [], []
    for rho, seq, nxt in sequence_ensemble:
        rep = thm_sequential_report(rho, seq, nxt)
        slack.append(rep.check("gap_ge_zero").slack)
        resid.append(rep.check("gap_equals_kl_pn1_qn1").residual)

    rep_gap, rep_mem = [], []
    for i in range(200):
        cfg, rng, d = _cfg(50, i)
        k = int(rng.integers(2, d + 1))
        p = random_povm(cfg.with_(outcome_count=k), rng, projective=True)
        rep = thm_sequential_report(_state(cfg, rng, d), CoarseGrainingSequence((p,)), p)
        rep_gap.append(abs(rep.quantities["gap"]))
        rep_mem.append(rep.equality_condition_holds)

    ok = min(slack) >= -1e-8 and max(resid) <= 1e-9 and max(rep_gap) <= 1e-9 and all(rep_mem)
    record("5 S_C1 - S_C2 = D_KL(p2||q2) >= 0; repeated projective", ok,
           f"min slack {min(slack):.1e}, residual {_summary(resid)}, repeated gap {_summary(rep_gap)}, "
           f"memoryless {sum(rep_mem)}/{len(rep_mem)}")
    assert ok


def test_criterion_06_sandwich(sequence_ensemble):
    slacks, used = [], 0
    for rho, seq, nxt in sequence_ensemble:
        rep = thm_sandwich_report(rho, seq, nxt)
        if not rep.quantities["full_support"]:
            continue
        used += 1
        slacks.append(rep.check("mean_relent_ge_gap").slack)

    rank_one = []
    for i in range(100):
        cfg, rng, d = _cfg(60, i)
        first = random_povm(cfg.with_(outcome_count=d), rng, projective=True)
        rep = thm_sandwich_report(_state(cfg, rng, d), CoarseGrainingSequence((first,)), _instrument(cfg, rng, d))
        rank_one.append(rep.quantities["mean_relative_entropy"])

    ok = used > 0 and min(slacks) >= -1e-8 and max(rank_one) <= 1e-9
    record("6 <D(rho_i||sigma_i)> >= gap; rank-1 first step", ok,
           f"{used} full-support instances, min slack {min(slacks):.1e}, rank-1 <D> {_summary(rank_one)}")
    assert ok


def test_criterion_07_refinement():
    resid, joint, marg, cols = [], [], [], []
    for i in range(500):
        cfg, rng, d = _cfg(7, i)
        k = int(rng.integers(2, 6))
        c = random_povm(cfg.with_(outcome_count=k), rng)
        rows = int(rng.integers(1, k + 2))
        v = random_stochastic(cfg, rows, k, rng)
        rep = thm_refinement_report(_state(cfg, rng, d), c, v)
        resid.append(rep.check("gap_equals_kl_p2_q2").residual)
        joint.append(rep.check("kl_joint_ge_kl_marginal").slack)
        marg.append(rep.check("kl_marginal_ge_zero").slack)
        cols.append(rep.quantities["backward_column_deviation"])
    ok = max(resid) <= 1e-9 and min(joint) >= -1e-8 and min(marg) >= -1e-8 and max(cols) <= 1e-10
    record("7 S_C' - S_C = D_KL(p2||q2) >= D_KL(p||q) >= 0", ok,
           f"residual {_summary(resid)}, min slacks {min(joint):.1e}/{min(marg):.1e}, columns {_summary(cols)}")
    assert ok


def test_criterion_08_concavity():
    state_slack, povm_slack, disjoint = [], [], []
    for i in range(500):
        cfg, rng, d = _cfg(8, i)
        m = int(rng.integers(2, 5))
        w = rng.dirichlet(np.ones(m))
        rhos = [_state(cfg, rng, d) for _ in range(m)]
        state_slack.append(state_concavity_report(rhos, w, _povm(cfg, rng, d)).min_slack())
        povms = [_povm(cfg, rng, d) for _ in range(m)]
        rho = _state(cfg, rng, d)
        povm_slack.append(povm_concavity_report(povms, w, rho).min_slack())
        # relabel so the components share no outcome
        tagged = [Povm(p.elements, tuple((n, lab) for lab in p.labels)) for n, p in enumerate(povms)]
        disjoint.append(abs(povm_concavity_report(tagged, w, rho).quantities["gap"]))
    ok = min(state_slack) >= -1e-8 and min(povm_slack) >= -1e-8 and max(disjoint) <= 1e-9
    record("8 concavity in state and POVM; disjoint equality", ok,
           f"min slacks {min(state_slack):.1e}/{min(povm_slack):.1e}, disjoint gap {_summary(disjoint)}")
    assert ok


def test_criterion_09_monotone_chain():
    worst = math.inf
    for i in range(200):
        cfg, rng, d = _cfg(9, i)
        rho = _state(cfg, rng, d)
        seq = CoarseGrainingSequence(tuple(_instrument(cfg, rng, d, 3) for _ in range(3)))
        s1, s2, s3 = (observational_entropy(rho, seq.prefix(n)) for n in (1, 2, 3))
        s = von_neumann_entropy(rho)
        ln_d = math.log(d)
        # each link with its own 1e-8: S3 >= S, S3 <= S2, S2 <= S1, S1 <= ln d
        margins = (s3 - s + 1e-8, s2 - s3 + 1e-8, s1 - s2 + 1e-8, ln_d - s1 + 1e-8)
        worst = min(worst, *margins)
    ok = worst >= 0
    record("9 S <= S_C3 <= S_C2 <= S_C1 <= ln d, 200 chains", ok, f"min margin {worst:.1e}")
    assert ok


def test_criterion_10_jeffrey_agreement():
    diffs = []
    for i in range(200):
        cfg, rng, d = _cfg(10, i)
        c = random_commuting_povm(cfg.with_(outcome_count=int(rng.integers(2, 6))), rng)
        found, u = commuting_basis(c)
        assert found
        rho = _state(cfg, rng, d)
        stats, _ = outcome_statistics(rho, c)
        rec = recovered_state(rho, c)
        # likelihood s(i|x) = <x|Pi_i|x> in the common eigenbasis
        lik = np.real(np.einsum("ax,iab,bx->ix", u.conj(), c.elements, u))
        prior = ClassicalDistribution(np.full(d, 1 / d))
        post = jeffrey_retrodict(prior, StochasticMatrix(lik), stats)
        diag = np.real(np.einsum("ax,ab,bx->x", u.conj(), rec.matrix, u))
        diffs.append(float(np.max(np.abs(post.probs - diag))))
    ok = max(diffs) <= 1e-9
    record("10 Jeffrey posterior = diag(rho_rec), 200 commuting POVMs", ok, _summary(diffs))
    assert ok


def _cli(*args, **kw):
    return subprocess.run([sys.executable, "-m", "obsent.cli", *map(str, args)],
                          capture_output=True, text=True, **kw)


def test_criterion_11_cli(tmp_path):
    t0 = time.perf_counter()
    runs = [_cli("verify", "--suite", "all", "--n", 200, "--seed", 7) for _ in range(2)]
    codes = [r.returncode for r in runs]
    aggs = [json.loads(r.stdout)["aggregate"] for r in runs]
    reproducible = aggs[0] == aggs[1] and runs[0].stdout == runs[1].stdout
    # and across worker counts
    par = _cli("verify", "--suite", "all", "--n", 200, "--seed", 7, "--workers", 2)
    reproducible = reproducible and json.loads(par.stdout)["aggregate"] == aggs[0]

    io.save(DensityMatrix.maximally_mixed(2), tmp_path / "rho.json")
    doc = io.to_document(Povm.computational(2))
    doc["elements"][1]["matrix"][0][1] = [0.4, 0.0]
    (tmp_path / "povm.json").write_text(json.dumps(doc))
    bad = _cli("entropy", tmp_path / "rho.json", tmp_path / "povm.json")
    path_ok = "povm.json: $.elements[1].matrix[" in bad.stderr
    elapsed = time.perf_counter() - t0

    ok = codes == [0, 0] and reproducible and bad.returncode == 3 and path_ok
    record("11 CLI verify all reproducible; corrupted file exits 3", ok,
           f"exit codes {codes}, reproducible={reproducible}, corrupted exit {bad.returncode} "
           f"({bad.stderr.strip()[:90]}), {elapsed:.1f}s")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
