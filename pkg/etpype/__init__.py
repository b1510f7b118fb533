from . import pipelines  # noqa
from . import nodes  # noqa
from . import utils  # noqa
from .definitions import (  # noqa
    VALID_EXPERIMENTS,
    VALID_MASK_KINDS,
    VALID_FIT_MODELS,
    VALID_ENVELOPES,
    VALID_STATE_MODELS,
    VALID_ACCEPTANCE,
    VALID_SHAPERS,
)

__version__ = "unknown"
try:
    from ._version import __version__  # noqa
except ImportError:
    # We're running in a tree that doesn't have a _version.py
    pass
