#!/usr/bin/env python3
"""Sweep ring sizes over a scenario, print verdicts, save reports.

Example:

    python scripts/run_scenarios.py --scenario token --sizes 1 2 8 32 --laps 5
    python scripts/run_scenarios.py --scenario mutex --sizes 4 8 --laps 3 --out reports/
"""

import argparse
import sys
import time
from pathlib import Path

from pipering.harness import (
    launch,
    save_report,
    verify_chain,
    verify_mutex,
    verify_token,
)
from pipering.protocol import NodeBehavior, Scenario
from pipering.ring import RingSpec

SCENARIOS = {
    "identify": Scenario.IDENTIFY_ONLY,
    "token": Scenario.CIRCULATE,
    "mutex": Scenario.MUTEX,
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scenario", choices=sorted(SCENARIOS), default="token")
    parser.add_argument("--sizes", type=int, nargs="+", default=[1, 2, 4, 8, 16])
    parser.add_argument("--laps", type=int, default=3)
    parser.add_argument("--hold", type=int, default=0, metavar="MS")
    parser.add_argument("--out", type=Path, default=Path("reports"))
    args = parser.parse_args()

    scenario = SCENARIOS[args.scenario]
    laps = 0 if scenario is Scenario.IDENTIFY_ONLY else args.laps
    args.out.mkdir(parents=True, exist_ok=True)

    print(f"{'n':>4}  {'wall':>7}  {'exit':>4}  {'events':>6}  verdicts")
    failures = 0
    for n in args.sizes:
        spec = RingSpec(n=n, revolutions=laps)
        behavior = NodeBehavior(
            scenario=scenario, revolutions=laps, cs_hold=args.hold / 1000.0
        )
        started = time.monotonic()
        report = launch(spec, behavior)
        wall = time.monotonic() - started

        report.verdicts["chain"] = verify_chain(report)
        if scenario is not Scenario.IDENTIFY_ONLY:
            report.verdicts["token"] = verify_token(report, laps)
        if scenario is Scenario.MUTEX:
            report.verdicts["mutex"] = verify_mutex(report)

        path = args.out / f"{args.scenario}_n{n}.jsonl"
        save_report(report, path)

        summary = "  ".join(
            f"{name}={'ok' if v.passed else 'FAIL'}"
            for name, v in sorted(report.verdicts.items())
        )
        failures += sum(not v.passed for v in report.verdicts.values())
        print(
            f"{n:>4}  {wall:>6.2f}s  {report.exit_codes[1]:>4}  "
            f"{len(report.events):>6}  {summary}  -> {path}"
        )
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
