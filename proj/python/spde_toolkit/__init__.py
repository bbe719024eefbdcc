from ._spde import *  # noqa: F401,F403
from ._spde import __version__  # noqa: F401
