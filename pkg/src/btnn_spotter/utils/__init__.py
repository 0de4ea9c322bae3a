from .logging import setup_logging
from .templates import render_template

__all__ = ["setup_logging", "render_template"]
