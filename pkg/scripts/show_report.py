#!/usr/bin/env python3
"""Summarize a saved ring report (JSONL) on stdout.

    python scripts/show_report.py reports/token_n8.jsonl [--events]
"""

import argparse
import sys
from collections import Counter

from pipering.harness import load_report
from pipering.events import format_event


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("path")
    parser.add_argument("--events", action="store_true", help="dump every event line")
    args = parser.parse_args()

    report = load_report(args.path)
    spec = report.spec
    print(f"ring: n={spec.n} revolutions={spec.revolutions} "
          f"max_payload={spec.max_payload} teardown_timeout={spec.teardown_timeout}")
    print(f"exit codes: {dict(sorted(report.exit_codes.items()))}")
    for name, verdict in sorted(report.verdicts.items()):
        mark = "ok " if verdict.passed else "FAIL"
        print(f"  [{mark}] {name}: {verdict.detail}")
    counts = Counter(ev.event.value for ev in report.events)
    print("event counts:")
    for name, count in sorted(counts.items()):
        print(f"  {name:<16} {count}")
    if report.residue:
        print(f"residue lines: {len(report.residue)}")
        for line in report.residue:
            print(f"  | {line}")
    if args.events:
        print("events:")
        for ev in report.events:
            print(f"  {format_event(ev)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
