"""Global numeric tolerance policy.

Every floating-point comparison in the package goes through :func:`get_eps`.
The default is ``1e-9``; the ``DEFECTWB_EPS`` environment variable overrides
it, and :func:`override_eps` scopes a temporary change (used by tests).
"""

from __future__ import annotations

import contextlib
import os

DEFAULT_EPS = 1e-9

_override: float | None = None


def get_eps() -> float:
    if _override is not None:
        return _override
    raw = os.environ.get("DEFECTWB_EPS")
    if raw:
        try:
            value = float(raw)
        except ValueError as exc:
            raise ValueError(f"DEFECTWB_EPS must be a float, got {raw!r}") from exc
        if value <= 0:
            raise ValueError("DEFECTWB_EPS must be positive")
        return value
    return DEFAULT_EPS


@contextlib.contextmanager
def override_eps(value: float):
    global _override
    previous = _override
    _override = float(value)
    try:
        yield
    finally:
        _override = previous
