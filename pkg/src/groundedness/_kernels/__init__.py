"""Kernel backend selection.

The compiled Cython kernel is preferred; the numpy fallback is used when the
extension is not built or when GROUNDEDNESS_KERNEL=python is set. Both follow
the same counter contract, so results do not depend on the choice.
"""

import os

from . import permute_np

if os.environ.get("GROUNDEDNESS_KERNEL", "").lower() == "python":
    _impl = permute_np
else:
    try:
        from . import permute_cy as _impl
    except ImportError:
        _impl = permute_np

count_extreme = _impl.count_extreme
BACKEND = _impl.BACKEND

__all__ = ["count_extreme", "BACKEND", "permute_np"]
