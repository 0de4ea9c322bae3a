from typing import Dict, Type

from .base import BaseCommand

COMMAND_REGISTRY: Dict[str, Type[BaseCommand]] = {}


def register_command(name: str):
    """Decorator to register a command class."""

    def decorator(cls: Type[BaseCommand]):
        COMMAND_REGISTRY[name] = cls
        return cls

    return decorator


def get_command(name: str, config: dict) -> BaseCommand:
    """Factory function to create command instances."""
    command_class = COMMAND_REGISTRY.get(name)
    if not command_class:
        raise ValueError(f"Unknown command: {name}. Available: {list(COMMAND_REGISTRY.keys())}")
    return command_class(config)


def list_available_commands() -> list:
    """Return list of registered command names."""
    return list(COMMAND_REGISTRY.keys())


# Import command modules so they register themselves
from . import calibrate, enroll, evaluate, inspect_model, spot, synth, train  # noqa: E402,F401

__all__ = [
    "BaseCommand",
    "COMMAND_REGISTRY",
    "get_command",
    "list_available_commands",
    "register_command",
]
