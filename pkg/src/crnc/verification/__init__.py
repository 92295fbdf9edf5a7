"""Requirement checking, robustness sweeps and lemma oracles."""

from ..constructions import DeltaVector
from .requirements import *  # noqa: F401,F403
from .requirements import __all__ as _req_all
from .robustness import *  # noqa: F401,F403
from .robustness import __all__ as _rob_all

__all__ = ["DeltaVector", *_req_all, *_rob_all]
from .lemmas import *  # noqa: F401,F403,E402
from .lemmas import __all__ as _lem_all  # noqa: E402

__all__ += list(_lem_all)
