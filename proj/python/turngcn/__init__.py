"""Dialogue relation extraction with a turn-aware graph convolutional model.

The heavy lifting lives in the compiled `_core` extension; this package
re-exports its surface.
"""

try:
    from ._core import *  # noqa: F401,F403  (installed layout)
    from . import _core as core  # noqa: F401
except ImportError:  # pragma: no cover - build-tree layout
    from _core import *  # noqa: F401,F403
    import _core as core  # noqa: F401

__all__ = [name for name in dir(core) if not name.startswith("_")]
