"""Randomized verification suites.

Instance ``index`` of suite ``name`` under ``seed`` is generated from its
own Philox stream, so any failing instance can be replayed alone and
results do not depend on how instances are distributed over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .objects import CoarseGrainingSequence, Povm
from .sampling import (
    SamplerConfig,
    random_instrument,
    random_mixed,
    random_povm,
    random_stochastic,
)
from .theorems import (
    VerificationReport,
    povm_concavity_report,
    state_concavity_report,
    thm2_report,
    thm_refinement_report,
    thm_sandwich_report,
    thm_sequential_report,
)

SUITES = ("thm2", "seq", "sandwich", "refine", "concavity")
DEFAULT_DIMS = tuple(range(2, 7))

# distinct streams per suite under one user seed
_SUITE_KEYS = {name: n for n, name in enumerate(SUITES)}


def _setup(suite: str, seed: int, index: int, dims: Sequence[int]):
    cfg = SamplerConfig(seed=seed, index=index)
    ss = np.random.SeedSequence(seed, spawn_key=(_SUITE_KEYS[suite], index))
    rng = np.random.Generator(np.random.Philox(ss))
    d = int(dims[rng.integers(len(dims))])
    return cfg.with_(dim=d), rng, d


def _state(cfg, rng, d):
    return random_mixed(cfg.with_(rank=int(rng.integers(1, d + 1))), rng)


def _measurement(cfg, rng, d):
    """POVM (general or projective) or a general instrument, chosen at random."""
    k = int(rng.integers(2, 6))
    kind = rng.integers(3)
    if kind == 0:
        return random_povm(cfg.with_(outcome_count=k), rng)
    if kind == 1:
        return random_povm(cfg.with_(outcome_count=min(k, d)), rng, projective=True)
    return random_instrument(cfg.with_(outcome_count=k, kraus_count=int(rng.integers(1, 3))), rng)


def _instrument(cfg, rng, d, max_outcomes=4):
    k = int(rng.integers(2, max_outcomes + 1))
    if rng.integers(2):
        return random_instrument(cfg.with_(outcome_count=k, kraus_count=int(rng.integers(1, 3))), rng)
    return random_povm(cfg.with_(outcome_count=k), rng)


def instance_thm2(seed, index, dims):
    cfg, rng, d = _setup("thm2", seed, index, dims)
    return thm2_report(_state(cfg, rng, d), _measurement(cfg, rng, d))


def _sequence_instance(suite, seed, index, dims):
    cfg, rng, d = _setup(suite, seed, index, dims)
    rho = _state(cfg, rng, d)
    n = int(rng.integers(1, 3))
    seq = CoarseGrainingSequence(tuple(_instrument(cfg, rng, d, 3) for _ in range(n)))
    return rho, seq, _instrument(cfg, rng, d, 3)


def instance_seq(seed, index, dims):
    return thm_sequential_report(*_sequence_instance("seq", seed, index, dims))


def instance_sandwich(seed, index, dims):
    return thm_sandwich_report(*_sequence_instance("sandwich", seed, index, dims))


def instance_refine(seed, index, dims):
    cfg, rng, d = _setup("refine", seed, index, dims)
    rho = _state(cfg, rng, d)
    k = int(rng.integers(2, 6))
    c = random_povm(cfg.with_(outcome_count=k), rng)
    rows = int(rng.integers(1, k + 2))
    mode = "flat" if rng.random() < 0.8 else "deterministic"
    if mode == "deterministic" and rows > k:
        rows = k
    return thm_refinement_report(rho, c, random_stochastic(cfg, rows, k, rng, mode=mode))


def instance_concavity(seed, index, dims):
    cfg, rng, d = _setup("concavity", seed, index, dims)
    m = int(rng.integers(2, 4))
    w = rng.dirichlet(np.ones(m))
    w = np.clip(w, 1e-3, None)
    w = w / w.sum()
    k = int(rng.integers(2, 6))
    if index % 2 == 0:
        rhos = [_state(cfg, rng, d) for _ in range(m)]
        return state_concavity_report(rhos, w, random_povm(cfg.with_(outcome_count=k), rng))
    povms = [random_povm(cfg.with_(outcome_count=int(rng.integers(2, 6))), rng) for _ in range(m)]
    return povm_concavity_report(povms, w, _state(cfg, rng, d))


INSTANCES: dict[str, Callable] = {
    "thm2": instance_thm2,
    "seq": instance_seq,
    "sandwich": instance_sandwich,
    "refine": instance_refine,
    "concavity": instance_concavity,
}


@dataclass
class SuiteResult:
    suite: str
    seed: int
    start: int
    reports: list = field(default_factory=list)

    @property
    def failures(self) -> list[tuple[int, VerificationReport]]:
        return [(self.start + n, r) for n, r in enumerate(self.reports) if not r.passed]

    def aggregate(self) -> dict:
        residuals = [r.max_residual() for r in self.reports]
        slacks = [r.min_slack() for r in self.reports]
        min_slack = min(slacks) if slacks else math.inf
        return {
            "suite": self.suite,
            "seed": self.seed,
            "start": self.start,
            "instances": len(self.reports),
            "max_residual": max(residuals) if residuals else 0.0,
            "min_slack": "inf" if math.isinf(min_slack) else min_slack,
            "failures": len(self.failures),
            "indeterminate": sum(len(r.indeterminate) for r in self.reports),
            "equality_instances": sum(bool(r.equality_condition_holds) for r in self.reports),
        }


def _run_one(args):
    suite, seed, index, dims = args
    return INSTANCES[suite](seed, index, dims)


def run_suite(
    suite: str,
    n: int,
    seed: int = 0,
    dims: Sequence[int] = DEFAULT_DIMS,
    start: int = 0,
    workers: int = 1,
) -> SuiteResult:
    if suite not in INSTANCES:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    dims = tuple(int(d) for d in dims)
    jobs = [(suite, seed, start + i, dims) for i in range(n)]
    if workers > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_one, jobs, chunksize=max(1, n // (4 * workers))))
    else:
        reports = [_run_one(j) for j in jobs]
    return SuiteResult(suite, seed, start, reports)
