"""
Entry point of the ``phasonsim`` command.

Exit codes: 0 success, 2 configuration error (including unknown scenarios and
unreadable files), 3 hypothesis gate refused the run, 4 numerical failure.
"""

import dataclasses
import logging
import os
from pathlib import Path

from phasonsim import DEFAULT_OUTPUT_DIRECTORY, OUTPUT_ROOT_ENV

from .argparser import parse_arguments
from .config import RunConfig, parse_config
from .dynamics import check_theorem_hypotheses
from .errors import (
    ConfigError,
    ExitCode,
    GateError,
    ManufacturedSolutionError,
    NumericalError,
    ScenarioError,
)
from .scenarios import execute, run_scenario

LOGGER = logging.getLogger(__name__)


def output_root(cli_out: str | None, cfg: RunConfig | None = None) -> Path:
    """``--out`` wins over the environment, which wins over the config."""
    if cli_out:
        return Path(cli_out)
    if env := os.environ.get(OUTPUT_ROOT_ENV):
        return Path(env)
    return Path(cfg.output.directory if cfg else DEFAULT_OUTPUT_DIRECTORY)


def _read_config(path: str, override_gate: bool) -> tuple[RunConfig, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}")
    cfg = parse_config(text)
    if override_gate and not cfg.override_gate:
        cfg = dataclasses.replace(cfg, override_gate=True)
    return cfg, text


def _simulate(config: str, out: str | None, override_gate: bool) -> None:
    cfg, text = _read_config(config, override_gate)
    result = execute(cfg, output_root(out, cfg) / cfg.output.name, text)
    print(result.run_dir)


def _scenario(
    name: str, out: str | None, settings: list[tuple[str, str]], override_gate: bool
) -> None:
    overrides = dict(settings)
    if override_gate:
        overrides["run.override_gate"] = "true"
    result = run_scenario(name, output_root(out), overrides)
    for key, value in sorted(result.checks.items()):
        print(f"{key} = {value!r}")
    print(result.run_dir)


def _validate(config: str, override_gate: bool) -> None:
    cfg, _ = _read_config(config, override_gate)
    grid = cfg.build_grid()
    report = check_theorem_hypotheses(
        cfg.material, grid, cfg.initial_state(grid), cfg.model
    )
    print(report)
    if not report.passed:
        if not cfg.override_gate:
            raise GateError(report)
        LOGGER.warning("Gate failed but is overridden")


def main(argv: list[str] | None = None) -> int:
    args = parse_arguments(argv)
    logging.basicConfig(level=args.log.upper())

    try:
        match args.command:
            case "simulate":
                _simulate(args.config, args.out, args.override_gate)
            case "scenario":
                _scenario(args.name, args.out, args.set, args.override_gate)
            case "validate":
                _validate(args.config, args.override_gate)
    except (ConfigError, ScenarioError, ManufacturedSolutionError, OSError) as e:
        LOGGER.error(f"{e}")
        return ExitCode.CONFIG_ERROR
    except GateError as e:
        LOGGER.error(f"{e}")
        return ExitCode.GATE_FAILURE
    except NumericalError as e:
        LOGGER.error(f"{e}")
        return ExitCode.NUMERICAL_FAILURE
    return ExitCode.SUCCESS


if __name__ == "__main__":
    raise SystemExit(main())
