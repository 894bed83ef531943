"""Python bindings for the pushdet C++ core."""

from ._pushdet import *  # noqa: F401,F403
from ._pushdet import __version__, PushdetError  # noqa: F401
