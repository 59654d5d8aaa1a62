"""Sum-product network hierarchies over graph-induced computational trees.

The heavy lifting lives in the compiled `_gspn` extension; this package
re-exports its surface.
"""

try:
    from ._gspn import *  # noqa: F401,F403
    from ._gspn import __version__  # noqa: F401
except ImportError:  # extension on PYTHONPATH next to the build tree
    from _gspn import *  # type: ignore # noqa: F401,F403
    from _gspn import __version__  # type: ignore # noqa: F401
