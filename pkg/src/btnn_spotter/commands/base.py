"""Abstract base for btnn subcommands."""

import argparse
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional


class BaseCommand(ABC):
    """
    One `btnn` subcommand.

    Each command must implement:
    - add_arguments(): declare its flags on the subparser
    - run(): execute and return the process exit status

    Subclasses register themselves with the @register_command decorator.
    """

    help: str = ""

    def __init__(self, config: Dict[str, Any]):
        """
        Args:
            config: Merged configuration from load_config
        """
        self.config = config

    @classmethod
    @abstractmethod
    def add_arguments(cls, parser: argparse.ArgumentParser) -> None:
        pass

    @abstractmethod
    def run(self, args: argparse.Namespace) -> int:
        pass

    def setting(self, args: argparse.Namespace, flag: str, section: str, key: Optional[str] = None):
        """Flag value when given, else the config value."""
        value = getattr(args, flag, None)
        if value is not None:
            return value
        return self.config[section][key or flag]
