"""
Command-line arguments for the simulator.  Used by the cli, and by the scripts
in utils/, so factored out.
"""

import argparse
import os

from phasonsim import DEFAULT_LOGGING, LOGGING_ENV, ScenarioName


def key_value(text: str) -> tuple[str, str]:
    """Parses a ``section.key=value`` override."""
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"expected section.key=value, not {text!r}")
    return key.strip(), value.strip()


def add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "-l",
        "--log",
        default=os.environ.get(LOGGING_ENV, DEFAULT_LOGGING),
        help="Logging level",
    )
    parser.add_argument(
        "--override-gate",
        action="store_true",
        help="Run even when the theorem hypotheses are not met (logged as a warning)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasonsim",
        description="Quasicrystal elastodynamics with phason diffusion.",
    )
    add_common_arguments(parser)
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Run a configuration file")
    simulate.add_argument("config", help="Path to a section.key = value config")
    simulate.add_argument(
        "-o", "--out", default=None, help="Output root; the run goes to OUT/<name>"
    )

    scenario = commands.add_parser("scenario", help="Run a built-in scenario")
    scenario.add_argument(
        "name", choices=[s.value for s in ScenarioName], help="Scenario to run"
    )
    scenario.add_argument(
        "-o", "--out", default=None, help="Output root; the run goes to OUT/<name>"
    )
    scenario.add_argument(
        "-s",
        "--set",
        type=key_value,
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config key of the scenario, e.g. solver.dt=0.005",
    )

    validate = commands.add_parser(
        "validate", help="Parse a config and check the hypothesis gate only"
    )
    validate.add_argument("config", help="Path to a section.key = value config")
    return parser


def parse_arguments(argv: list[str] | None = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)
