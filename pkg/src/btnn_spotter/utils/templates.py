"""Plain-text report rendering with jinja2."""

import logging
from pathlib import Path
from typing import Any, Optional

from jinja2 import Environment, FileSystemLoader, StrictUndefined, TemplateError

from ..errors import ConfigurationError

logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).parent.parent / "templates"

_env: Optional[Environment] = None


def _environment() -> Environment:
    global _env
    if _env is None:
        if not TEMPLATE_DIR.exists():
            raise ConfigurationError(f"Template directory not found: {TEMPLATE_DIR}")
        _env = Environment(
            loader=FileSystemLoader(str(TEMPLATE_DIR)),
            autoescape=False,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
            undefined=StrictUndefined,
        )
    return _env


def render_template(template_name: str, **context: Any) -> str:
    """Render a template from the package's templates/ directory."""
    try:
        template = _environment().get_template(template_name)
        return template.render(**context)
    except TemplateError as e:
        logger.error(f"Failed to render template {template_name}: {e}")
        raise ConfigurationError(f"cannot render {template_name}: {e}") from e
