"""FastAPI session service wrapping the engine and explanation loop."""

from .app import create_app
from .models import SCHEMA_VERSION
from .sessions import SessionManager

__all__ = ["SCHEMA_VERSION", "SessionManager", "create_app"]
