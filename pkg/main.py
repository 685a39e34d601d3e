"""
nhphase: geometric phases and adiabatic cyclic states of periodic non-Hermitian Hamiltonians
Main entry point for the batch command line
"""

import argparse
import asyncio
import logging
import sys
from typing import List, Optional

from config.settings import LOG_FILE, LOG_LEVEL
from handlers.cli_handlers import EXIT_FAILURE, CLIHandlers
from utils.logger import setup_logger

logger = logging.getLogger(__name__)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    model = common.add_argument_group("model")
    model.add_argument("--E", help="energy scale, complex allowed (e.g. 1 or 1+0.1j)")
    model.add_argument("--theta", type=float, help="polar angle of the precessing field, in [0, pi]")
    model.add_argument("--phi-i", dest="phi_i", type=float, help="imaginary part of the azimuth")
    model.add_argument("--omega", type=float, help="precession frequency, > 0")
    model.add_argument("--hamiltonian-file", dest="hamiltonian_file",
                       help="JSON file {\"period\": T, \"samples\": [...]} instead of the built-in model")

    numerics = common.add_argument_group("numerics")
    numerics.add_argument("--samples", type=int, help="frame samples N over one period")
    numerics.add_argument("--steps", type=int, help="integrator steps over one period (>= 4N)")
    numerics.add_argument("--mode", type=int, help="mode label (1 or 2 for the built-in model)")

    output = common.add_argument_group("output")
    output.add_argument("--output", help="destination file (default stdout)")
    output.add_argument("--format", choices=["json", "csv"])
    output.add_argument("--log-level", dest="log_level", default=LOG_LEVEL)
    output.add_argument("--log-file", dest="log_file", default=LOG_FILE,
                        help="rotating log file, empty string disables it")
    output.add_argument("--quiet", action="store_true", help="only warnings and errors on stderr")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="nhphase",
        description="Real and complex geometric phases of adiabatic cyclic states",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sub.add_parser("two-level", parents=[common], help="closed-form vs numeric phases of the precessing model")

    sweep = sub.add_parser("sweep", parents=[common], help="CSV of closed-form phases over a (theta, phi_i) grid")
    for name, label in (("theta", "theta"), ("phi-i", "phi_i")):
        sweep.add_argument(f"--{name}-min", dest=f"{label}_min", type=float)
        sweep.add_argument(f"--{name}-max", dest=f"{label}_max", type=float)
        sweep.add_argument(f"--{name}-count", dest=f"{label}_count", type=int)
    sweep.add_argument("--allow-endpoints", dest="allow_endpoints", action="store_true", default=None,
                       help="permit theta = 0 or pi in the grid")
    sweep.add_argument("--numeric", action="store_true", default=None,
                       help="compute every row from the sampled frame instead of the closed forms")

    for name, text in (("verify", "propagate the adiabatic cyclic state and grade its cyclicity"),
                       ("floquet", "exact cyclic states from the eigenvectors of U(T)")):
        command = sub.add_parser(name, parents=[common], help=text)
        command.add_argument("--integrator", choices=["rk4", "magnus4"])
        if name == "floquet":
            command.add_argument("--with-adiabatic", dest="with_adiabatic", action="store_true", default=None,
                                 help="distance of each eigenvector to the adiabatic cyclic states")
    return parser


class NHPhaseApp:
    def __init__(self):
        self.handlers = None
        self.args = None

    def setup(self, argv: Optional[List[str]] = None):
        """Parse arguments and configure logging"""
        self.args = build_parser().parse_args(argv)
        setup_logger(self.args.log_level, self.args.log_file, quiet=self.args.quiet)
        self.handlers = CLIHandlers()
        logger.debug(f"Arguments: {vars(self.args)}")

    async def run(self) -> int:
        """Run the selected subcommand"""
        options = {k: v for k, v in vars(self.args).items() if k not in ("log_level", "log_file", "quiet")}
        try:
            return await self.handlers.dispatch(options)
        except Exception as e:
            logger.exception(f"Unexpected error in {self.args.subcommand}: {e}")
            print(f"nhphase: unexpected error: {e}", file=sys.stderr)
            return EXIT_FAILURE
        finally:
            self.cleanup()

    def cleanup(self):
        """Flush log handlers"""
        for handler in logging.getLogger().handlers:
            handler.flush()


async def main(argv: Optional[List[str]] = None) -> int:
    app = NHPhaseApp()
    app.setup(argv)
    return await app.run()


def cli(argv: Optional[List[str]] = None) -> int:
    return asyncio.run(main(argv))


if __name__ == "__main__":
    sys.exit(cli())
