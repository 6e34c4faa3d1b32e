"""Picks the compiled matching kernel when available.

Set ``COMPASSQEC_PURE_PYTHON=1`` to force the pure-Python kernel.
"""

import os

from . import _kernels_py

if os.environ.get("COMPASSQEC_PURE_PYTHON") == "1":
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _kernels_py

BACKEND = "python" if kernels is _kernels_py else "compiled"
Matcher = kernels.Matcher
UnmatchableDefects = (_kernels_py.UnmatchableDefects, getattr(kernels, "UnmatchableDefects", _kernels_py.UnmatchableDefects))
