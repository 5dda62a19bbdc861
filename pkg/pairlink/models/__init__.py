from .base_models import *  # noqa: F403
from .config import *  # noqa: F403
from .graph import *  # noqa: F403
from .instance import *  # noqa: F403
from .kb import *  # noqa: F403
from .outputs import *  # noqa: F403
