"""Wasserstein-robust value backups, rollout perturbation, and actor-critic training."""

try:
    from ._wrl import *  # noqa: F401,F403
    from ._wrl import __doc__ as _core_doc
except ImportError:
    # In-tree test runs put the extension on sys.path instead of in the package.
    from _wrl import *  # noqa: F401,F403
    from _wrl import __doc__ as _core_doc

__all__ = [n for n in dir() if not n.startswith("_")]
