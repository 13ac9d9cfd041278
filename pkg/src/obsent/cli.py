"""Command-line interface: ``obsent {entropy,recover,verify,random}``.

Exit codes: 0 success, 1 verification failure, 2 parse error or bad flags,
3 invariant violation, 4 dimension or label mismatch.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import fields


from . import io
from .entropy import (
    fidelity,
    observational_entropy,
    quantum_relative_entropy,
    trace_distance,
    von_neumann_entropy,
)
from .errors import DimensionMismatch, DocumentError, InvariantViolation, ObsentError
from .objects import (
    ClassicalDistribution,
    CoarseGrainingSequence,
    DensityMatrix,
    Instrument,
    Povm,
    StochasticMatrix,
    as_povm,
    outcome_statistics,
)
from .recovery import recovered_state
from .sampling import (
    SamplerConfig,
    random_commuting_povm,
    random_instrument,
    random_mixed,
    random_povm,
    random_pure,
    random_stochastic,
)
from .suites import DEFAULT_DIMS, SUITES, run_suite
from .theorems import (
    povm_concavity_report,
    state_concavity_report,
    thm2_report,
    thm_refinement_report,
    thm_sandwich_report,
    thm_sequential_report,
)

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_INVARIANT, EXIT_DIM = 0, 1, 2, 3, 4
LN2 = math.log(2)


class UsageError(Exception):
    pass


def _seed(value) -> int:
    if value is not None:
        return value
    env = os.environ.get("OBSENT_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"OBSENT_SEED must be an integer, got {env!r}")


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _dims(text: str) -> tuple[int, ...]:
    """``"2..6"``, ``"3"`` or ``"2,4,5"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            dims = tuple(range(int(lo), int(hi) + 1))
        else:
            dims = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dimension range {text!r}")
    if not dims or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"bad dimension range {text!r}")
    return dims


def _emit(doc: dict, out: str | None):
    text = json.dumps(doc, indent=1, allow_nan=False) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _scale(x: float, bits: bool) -> float | str:
    if math.isinf(x):
        return "inf"
    return x / LN2 if bits else x


def _label_out(lab):
    return list(lab) if isinstance(lab, tuple) else lab


def _expect(obj, types, what: str, path: str):
    if not isinstance(obj, types):
        raise DocumentError(f"{path}: expected {what}, got a {type(obj).__name__} document")
    return obj


# --------------------------------------------------------------------------
# commands


def cmd_entropy(args) -> int:
    rho = _expect(io.load(args.state), DensityMatrix, "a state", args.state)
    c = _expect(io.load(args.measurement), (Povm, Instrument, CoarseGrainingSequence), "a measurement", args.measurement)
    dist, vol = outcome_statistics(rho, c)
    s_obs = observational_entropy(rho, c)
    s_vn = von_neumann_entropy(rho)
    b = args.bits
    doc = {
        "schema": io.SCHEMA,
        "kind": "entropy_report",
        "units": "bits" if b else "nats",
        "observational_entropy": _scale(s_obs, b),
        "von_neumann_entropy": _scale(s_vn, b),
        "gap": _scale(s_obs - s_vn, b),
        "outcomes": [
            {"label": _label_out(lab), "p": float(p), "V": float(v), "p_over_V": float(p / v) if v > 0 else 0.0}
            for lab, p, v in zip(dist.labels, dist.probs, vol)
        ],
    }
    _emit(doc, args.out)
    return EXIT_OK


def cmd_recover(args) -> int:
    data = _expect(io.load(args.data), (DensityMatrix, ClassicalDistribution), "a state or distribution", args.data)
    povm = as_povm(_expect(io.load(args.povm), (Povm, Instrument), "a POVM or instrument", args.povm))
    true_state = data if isinstance(data, DensityMatrix) else None
    if args.state:
        true_state = _expect(io.load(args.state), DensityMatrix, "a state", args.state)
    if isinstance(data, ClassicalDistribution) and data.labels != povm.labels:
        # integer-labelled count vectors may omit labels; match by position then
        if data.labels == tuple(range(len(data))) and len(data) == len(povm):
            data = ClassicalDistribution(data.probs, povm.labels)
        else:
            raise DimensionMismatch(
                f"{args.data}: labels {list(data.labels)!r} do not match POVM labels {list(povm.labels)!r}"
            )
    rec = recovered_state(data, povm)
    doc = {"schema": io.SCHEMA, "kind": "recover_report", "recovered_state": io.to_document(rec)}
    if isinstance(data, ClassicalDistribution):
        doc["normalized_statistics"] = [{"label": _label_out(k), "p": v} for k, v in zip(data.labels, data.probs.tolist())]
    if true_state is not None:
        if true_state.dim != povm.dim:
            raise DimensionMismatch(f"state has dim {true_state.dim}, POVM has dim {povm.dim}")
        b = args.bits
        s_obs = observational_entropy(true_state, povm)
        s_vn = von_neumann_entropy(true_state)
        d_rec = quantum_relative_entropy(true_state, rec)
        doc["diagnostics"] = {
            "units": "bits" if b else "nats",
            "relative_entropy_to_recovered": _scale(d_rec, b),
            "fidelity": fidelity(true_state, rec),
            "trace_distance": trace_distance(true_state, rec),
            "observational_entropy": _scale(s_obs, b),
            "von_neumann_entropy": _scale(s_vn, b),
            "gap": _scale(s_obs - s_vn, b),
            "certified_bound_holds": (s_obs - s_vn) >= d_rec - 1e-8,
        }
    _emit(doc, args.out)
    return EXIT_OK


def _user_instance(args):
    """Build a single report from files given to ``verify``; None if no files given."""
    given = any([args.state, args.measurement, args.next, args.stochastic, args.weights])
    if not given:
        return None
    states = [_expect(io.load(p), DensityMatrix, "a state", p) for p in args.state or []]
    meas = [io.load(p) for p in args.measurement or []]
    suite = args.suite
    if suite == "thm2":
        if len(states) != 1 or len(meas) != 1:
            raise UsageError("thm2 needs one --state and one --measurement")
        return thm2_report(states[0], meas[0])
    if suite in ("seq", "sandwich"):
        if len(states) != 1 or len(meas) != 1 or not args.next:
            raise UsageError(f"{suite} needs --state, --measurement (the sequence so far) and --next")
        seq = meas[0]
        if not isinstance(seq, CoarseGrainingSequence):
            seq = CoarseGrainingSequence((seq,))
        nxt = io.load(args.next)
        fn = thm_sequential_report if suite == "seq" else thm_sandwich_report
        return fn(states[0], seq, nxt)
    if suite == "refine":
        if len(states) != 1 or len(meas) != 1 or not args.stochastic:
            raise UsageError("refine needs --state, --measurement (a POVM) and --stochastic")
        v = _expect(io.load(args.stochastic), StochasticMatrix, "a stochastic matrix", args.stochastic)
        return thm_refinement_report(states[0], as_povm(meas[0]), v)
    if suite == "concavity":
        if not args.weights:
            raise UsageError("concavity needs --weights")
        w = [float(x) for x in args.weights.split(",")]
        if len(states) > 1 and len(meas) == 1:
            return state_concavity_report(states, w, as_povm(meas[0]))
        if len(states) == 1 and len(meas) > 1:
            return povm_concavity_report([as_povm(m) for m in meas], w, states[0])
        raise UsageError("concavity needs several --state with one --measurement, or one --state with several")
    raise UsageError("user-supplied instances need a single suite, not 'all'")


def cmd_verify(args) -> int:
    report = _user_instance(args)
    if report is not None:
        doc = {"schema": io.SCHEMA, "kind": "verification", "suite": args.suite, "report": report.to_dict(args.verbose)}
        _emit(doc, args.out)
        if not report.passed:
            for c in report.failures:
                print(f"FAILED {args.suite}: {c.name} lhs={c.lhs!r} rhs={c.rhs!r}", file=sys.stderr)
            return EXIT_FAIL
        return EXIT_OK

    seed = _seed(args.seed)
    suites = SUITES if args.suite == "all" else (args.suite,)
    results = []
    for name in suites:
        t0 = time.perf_counter()
        res = run_suite(name, args.n, seed=seed, dims=args.dims, start=args.start, workers=args.workers)
        results.append(res)
        agg = res.aggregate()
        print(
            f"{name:10s} n={agg['instances']:<6d} max_residual={agg['max_residual']:.3e} "
            f"min_slack={agg['min_slack'] if isinstance(agg['min_slack'], str) else format(agg['min_slack'], '.3e')} "
            f"failures={agg['failures']} ({time.perf_counter() - t0:.1f}s)",
            file=sys.stderr,
        )
        for index, rep in res.failures:
            names = ", ".join(c.name for c in rep.failures)
            print(
                f"  FAILED suite={name} seed={seed} index={index} checks=[{names}] "
                f"replay: obsent verify --suite {name} --seed {seed} --start {index} --n 1",
                file=sys.stderr,
            )
    failures = sum(len(r.failures) for r in results)
    doc = {
        "schema": io.SCHEMA,
        "kind": "verification",
        "seed": seed,
        "dims": list(args.dims),
        "aggregate": {r.suite: r.aggregate() for r in results},
        "failures": failures,
    }
    if args.out:
        doc["instances"] = {
            r.suite: [dict(index=r.start + n, **rep.to_dict(args.verbose)) for n, rep in enumerate(r.reports)]
            for r in results
        }
        _emit(doc, args.out)
    else:
        _emit(doc, None)
    return EXIT_OK if failures == 0 else EXIT_FAIL


def _load_config(path: str | None) -> dict:
    """Sampler settings from a JSON object; flags given on the command line win."""
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise DocumentError(f"{path}: cannot read file ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    allowed = {f.name for f in fields(SamplerConfig)}
    if not isinstance(cfg, dict) or not set(cfg) <= allowed:
        extra = sorted(set(cfg) - allowed) if isinstance(cfg, dict) else cfg
        raise DocumentError(f"{path}: $: unknown sampler settings {extra!r}; allowed {sorted(allowed)}")
    return cfg


def cmd_random(args) -> int:
    conf = _load_config(args.config)
    seed = args.seed if args.seed is not None else conf.get("seed")
    flags = {
        "dim": args.dim,
        "outcome_count": args.outcomes,
        "rank": args.rank,
        "kraus_count": args.kraus,
        "index": args.index,
    }
    conf.update({k: v for k, v in flags.items() if v is not None})
    conf["seed"] = _seed(seed)
    try:
        cfg = SamplerConfig(**conf)
    except TypeError as exc:
        raise UsageError(str(exc))
    kind = args.kind
    if kind == "state":
        obj = random_pure(cfg) if args.pure else random_mixed(cfg)
    elif kind == "povm":
        if args.commuting:
            obj = random_commuting_povm(cfg)
        else:
            obj = random_povm(cfg, projective=args.projective)
    elif kind == "instrument":
        obj = random_instrument(cfg)
    elif kind == "sequence":
        rng = cfg.rng()
        obj = CoarseGrainingSequence(tuple(random_instrument(cfg, rng) for _ in range(args.steps)))
    else:
        rows = args.rows if args.rows is not None else 1
        cols = args.cols if args.cols is not None else cfg.outcome_count
        obj = random_stochastic(cfg, rows, cols, mode=args.mode)
    _emit(io.to_document(obj), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="obsent", description="Observational entropy, recovered states and theorem checks.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("entropy", help="observational and von Neumann entropy of a state")
    e.add_argument("state")
    e.add_argument("measurement", help="POVM, instrument or sequence document")
    e.add_argument("--bits", action="store_true", help="report entropies in bits")
    e.add_argument("--out")
    e.set_defaults(func=cmd_entropy)

    r = sub.add_parser("recover", help="recovered state sum_i (p_i/V_i) Pi_i")
    r.add_argument("data", help="state or distribution (probs or counts) document")
    r.add_argument("povm")
    r.add_argument("--state", help="true state, for distance diagnostics")
    r.add_argument("--bits", action="store_true")
    r.add_argument("--out")
    r.set_defaults(func=cmd_recover)

    v = sub.add_parser("verify", help="run theorem verification suites")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--n", type=int, default=100)
    v.add_argument("--dims", type=_dims, default=DEFAULT_DIMS)
    v.add_argument("--seed", type=_u64)
    v.add_argument("--start", type=int, default=0, help="first instance index (for replay)")
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--out")
    v.add_argument("--verbose", action="store_true", help="keep large joint vectors in reports")
    v.add_argument("--state", action="append", help="user-supplied state (repeatable)")
    v.add_argument("--measurement", action="append", help="user-supplied POVM/instrument/sequence (repeatable)")
    v.add_argument("--next", help="instrument appended to the sequence (seq, sandwich)")
    v.add_argument("--stochastic", help="post-processing matrix (refine)")
    v.add_argument("--weights", help="comma-separated mixing weights (concavity)")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("random", help="sample a random object document")
    g.add_argument("kind", choices=("state", "povm", "instrument", "sequence", "stochastic"))
    g.add_argument("--dim", type=int)
    g.add_argument("--outcomes", type=int)
    g.add_argument("--rank", type=int)
    g.add_argument("--kraus", type=int)
    g.add_argument("--steps", type=int, default=2)
    g.add_argument("--rows", type=int)
    g.add_argument("--cols", type=int)
    g.add_argument("--mode", choices=("flat", "identity", "deterministic"), default="flat")
    g.add_argument("--pure", action="store_true")
    g.add_argument("--projective", action="store_true")
    g.add_argument("--commuting", action="store_true")
    g.add_argument("--seed", type=_u64)
    g.add_argument("--index", type=int)
    g.add_argument("--config", help="JSON object of sampler settings (seed, dim, outcome_count, ...)")
    g.add_argument("--out")
    g.set_defaults(func=cmd_random)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DocumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DimensionMismatch as exc:
        print(f"error: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIM
    except InvariantViolation as exc:
        print(f"error: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ObsentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
