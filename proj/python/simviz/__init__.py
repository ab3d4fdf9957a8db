"""Similarity-map decomposition, retrieval and rendering."""

try:
    from ._simviz import *  # noqa: F401,F403
    from ._simviz import SimvizError
except ImportError:
    from _simviz import *  # noqa: F401,F403
    from _simviz import SimvizError

__all__ = [name for name in dir() if not name.startswith("_")]
