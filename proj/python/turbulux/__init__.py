"""Circular-beam transmittance model for turbulent free-space links."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
