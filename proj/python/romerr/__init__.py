"""Surrogate error data generation and recursive time-series error models.

The compiled extension carries the implementation; this package re-exports it.
For in-tree builds (plain CMake), point ROMERR_MODULE_DIR at the directory
containing the compiled ``_core`` module.
"""

import os
import sys

_module_dir = os.environ.get("ROMERR_MODULE_DIR")
if _module_dir and _module_dir not in sys.path:
    sys.path.insert(0, _module_dir)

try:
    from _core import *  # type: ignore # noqa: F401,F403  (cmake build layout)
    from _core import __doc__ as _core_doc  # type: ignore
except ImportError:
    from ._core import *  # type: ignore # noqa: F401,F403  (installed wheel layout)
    from ._core import __doc__ as _core_doc  # type: ignore

__doc__ = _core_doc or __doc__
