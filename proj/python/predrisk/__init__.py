"""Vehicle trajectory prediction and collision-risk assessment."""

try:
    from ._core import *  # noqa: F401,F403  (installed layout)
    from ._core import __version__  # noqa: F401
except ImportError:
    # In-tree layout: the extension sits on sys.path next to the build tree.
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
