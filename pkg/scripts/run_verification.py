"""Run the randomized verification suites and write a JSON summary.

    python3 scripts/run_verification.py --n 500 --seed 7 --out summary.json
"""

import argparse
import json
import time
from dataclasses import asdict, dataclass, field

from obsent.suites import DEFAULT_DIMS, SUITES, run_suite


@dataclass
class BatteryConfig:
    n: int = 200
    seed: int = 7
    dims: tuple = DEFAULT_DIMS
    suites: tuple = SUITES
    workers: int = 1
    out: str | None = None


@dataclass
class BatteryResult:
    config: BatteryConfig
    aggregates: dict = field(default_factory=dict)
    seconds: dict = field(default_factory=dict)

    @property
    def failures(self) -> int:
        return sum(a["failures"] for a in self.aggregates.values())


def run(cfg: BatteryConfig) -> BatteryResult:
    res = BatteryResult(cfg)
    for name in cfg.suites:
        t0 = time.perf_counter()
        out = run_suite(name, cfg.n, seed=cfg.seed, dims=cfg.dims, workers=cfg.workers)
        res.seconds[name] = time.perf_counter() - t0
        res.aggregates[name] = out.aggregate()
    return res


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--suites", nargs="+", choices=SUITES, default=list(SUITES))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    a = p.parse_args()
    cfg = BatteryConfig(n=a.n, seed=a.seed, suites=tuple(a.suites), workers=a.workers, out=a.out)
    res = run(cfg)

    print(f"{'suite':10s} {'n':>6s} {'max residual':>13s} {'min slack':>11s} {'fail':>5s} {'eq':>5s} {'sec':>6s}")
    for name, agg in res.aggregates.items():
        slack = agg["min_slack"]
        slack = slack if isinstance(slack, str) else f"{slack:.2e}"
        print(f"{name:10s} {agg['instances']:6d} {agg['max_residual']:13.2e} {slack:>11s} "
              f"{agg['failures']:5d} {agg['equality_instances']:5d} {res.seconds[name]:6.1f}")
    if cfg.out:
        with open(cfg.out, "w") as fh:
            json.dump({"config": asdict(cfg), "aggregates": res.aggregates, "seconds": res.seconds}, fh, indent=1)
    raise SystemExit(1 if res.failures else 0)


if __name__ == "__main__":
    main()
