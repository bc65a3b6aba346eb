from ._fdpband import *  # noqa: F401,F403
from ._fdpband import __doc__  # noqa: F401
