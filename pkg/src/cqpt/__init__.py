"""Compilation-based quantum process tomography workbench."""

__version__ = "0.1.0"

from . import channels, manifold, metrics, mqpt, qla, tomography  # noqa: F401,E402
