"""Backend selection for the hot loops.

The compiled extension is used when it was built; setting ``CBRL_PURE_PYTHON=1``
forces the fallback.
"""

import os

from cbrl import _fallback

BACKEND = "python"
if not os.environ.get("CBRL_PURE_PYTHON"):
    try:
        from cbrl import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
else:
    _impl = _fallback

label_components = _impl.label_components
channel_mode = _impl.channel_mode
split_stats = _impl.split_stats

__all__ = ["BACKEND", "label_components", "channel_mode", "split_stats"]
