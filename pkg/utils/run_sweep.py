#!/usr/bin/python3
"""
Runs a scenario once per value of one config key and prints the checks as a
table.  For example:

python3 utils/run_sweep.py coupled_linear solver.dt 0.02 0.01 0.005
python3 utils/run_sweep.py gyro_smallness material.ell 0.5 1.0 2.0 --override-gate
"""

import argparse
import logging
from pathlib import Path

from phasonsim import ScenarioName
from phasonsim.argparser import add_common_arguments, key_value
from phasonsim.errors import GateError, NumericalError
from phasonsim.output import write_table
from phasonsim.scenarios import run_scenario

LOGGER = logging.getLogger(__name__)


def main() -> None:
    parser = argparse.ArgumentParser(description="Sweep one key of a scenario.")
    add_common_arguments(parser)
    parser.add_argument("name", choices=[s.value for s in ScenarioName])
    parser.add_argument("key", help="Config key to vary, e.g. solver.dt")
    parser.add_argument("values", nargs="+", help="Values to try")
    parser.add_argument("-o", "--out", default="runs/sweep", help="Output root")
    parser.add_argument("-s", "--set", type=key_value, action="append", default=[])
    args = parser.parse_args()

    logging.basicConfig(level=args.log.upper())

    rows = []
    names: list[str] = []
    for value in args.values:
        overrides = dict(args.set)
        overrides[args.key] = value
        overrides["output.name"] = f"{args.name}_{args.key}_{value}"
        if args.override_gate:
            overrides["run.override_gate"] = "true"
        try:
            result = run_scenario(args.name, Path(args.out), overrides)
        except (GateError, NumericalError) as e:
            LOGGER.warning(f"{args.key}={value}: {e}")
            continue
        names = sorted(set(names) | set(result.checks))
        rows.append((value, result.checks))

    table = [
        [value] + [checks.get(n, float("nan")) for n in names] for value, checks in rows
    ]
    path = write_table(
        Path(args.out) / f"{args.name}_sweep.csv", [args.key] + names, table
    )
    print(",".join([args.key] + names))
    for row in table:
        print(",".join(str(v) for v in row))
    print(f"Wrote {path}")


if __name__ == "__main__":
    main()
