"""Stochastic volatility with leverage, local projections and pruned
third-order impulse responses."""

try:
    from ._creditvol import *  # noqa: F401,F403
    from ._creditvol import __version__  # noqa: F401
except ImportError:  # build tree: the extension sits outside the package
    from _creditvol import *  # noqa: F401,F403
    from _creditvol import __version__  # noqa: F401
