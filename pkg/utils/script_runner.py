# utils/script_runner.py
"""
Script runner for sub-command command-line tools.

Provides:
- Declarative arguments (ArgumentDefinition) shared by every sub-command
- One handler per sub-command, called with the parsed namespace
- Exit codes taken from the exception hierarchy (0 ok, 2 input, 3 numerical)
- Clear messages on stderr and in the log
"""

import argparse
import sys
from dataclasses import dataclass
from typing import Dict, Any, List, Optional, Callable, Sequence

from utils.logger import setup_logger
from utils.exceptions import RisSimError, NumericalError

logger = setup_logger()

EXIT_OK = 0
EXIT_NUMERICAL = NumericalError.exit_code
EXIT_INTERRUPTED = 130

Handler = Callable[[argparse.Namespace], None]


@dataclass
class ArgumentDefinition:
    """
    Definition for a command-line argument.

    Arguments become --flags when they are optional, have a default, or set
    option=True (a required flag); otherwise they are positional.
    """
    name: str
    type: type = str
    help: str = ""
    default: Any = None
    choices: Optional[List[Any]] = None
    required: bool = True
    action: Optional[str] = None
    metavar: Optional[str] = None
    option: bool = False

    def add_to(self, parser: argparse.ArgumentParser) -> None:
        """Register this argument on a parser."""
        kwargs: Dict[str, Any] = {"help": self.help}

        if self.option or self.default is not None or not self.required:
            arg_name = f"--{self.name.replace('_', '-')}"
            kwargs["default"] = self.default
            kwargs["required"] = self.required
            kwargs["dest"] = self.name
        else:
            arg_name = self.name

        if self.action:
            kwargs["action"] = self.action
            if self.action == "append":
                kwargs["type"] = self.type
        else:
            kwargs["type"] = self.type

        if self.choices:
            kwargs["choices"] = self.choices
        if self.metavar:
            kwargs["metavar"] = self.metavar

        parser.add_argument(arg_name, **kwargs)


@dataclass
class Command:
    """A registered sub-command."""
    name: str
    help: str
    handler: Handler
    arguments: List[ArgumentDefinition]


class ScriptRunner:
    """Sub-command runner with shared arguments and exit-code mapping."""

    def __init__(self, description: str,
                 common_args: Optional[List[ArgumentDefinition]] = None):
        """
        Args:
            description: Tool description for help text
            common_args: Arguments added to every sub-command
        """
        self.description = description
        self.common_args = common_args or []
        self.commands: Dict[str, Command] = {}

    def command(self, name: str, help: str,
                arguments: Optional[List[ArgumentDefinition]] = None) -> Callable[[Handler], Handler]:
        """
        Decorator registering a sub-command handler.

        Example:
            > @runner.command("codebook", "Synthesize a code matrix", [ArgumentDefinition(...)])
            > def cmd_codebook(args): ...
        """
        def register(handler: Handler) -> Handler:
            self.commands[name] = Command(name, help, handler, arguments or [])
            return handler
        return register

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            description=self.description,
            formatter_class=argparse.RawDescriptionHelpFormatter
        )
        subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

        for command in self.commands.values():
            sub = subparsers.add_parser(command.name, help=command.help, description=command.help)
            for arg_def in [*self.common_args, *command.arguments]:
                arg_def.add_to(sub)

        return parser

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """
        Parse arguments and run the selected sub-command.

        Args:
            argv: Argument list (default: sys.argv[1:])

        Returns:
            Process exit code
        """
        parser = self.build_parser()

        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            # argparse exits 2 on usage errors and 0 for --help
            return int(e.code or 0)

        command = self.commands[args.command]
        logger.debug(f"Running '{command.name}' with {vars(args)}")

        try:
            command.handler(args)
            return EXIT_OK
        except RisSimError as e:
            logger.error(f"❌ {command.name} failed: {e}")
            print(f"error: {e}", file=sys.stderr)
            return e.exit_code
        except KeyboardInterrupt:
            logger.info("Interrupted by user")
            return EXIT_INTERRUPTED
        except Exception as e:
            logger.exception(f"Unexpected error in {command.name}: {e}")
            print(f"internal error: {e}", file=sys.stderr)
            return EXIT_NUMERICAL
