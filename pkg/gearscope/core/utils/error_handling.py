#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#
import inspect
from functools import wraps

import numpy as np

from gearscope.core.exceptions import GearscopeException, NonFinite


def with_error_context(operation: str):
    """Stamp ``operation`` on any GearscopeException escaping the wrapped function.

    Numpy floating point errors are converted to NonFinite so callers only ever see the gearscope hierarchy.
    """

    def decorator(func):
        @wraps(func)
        def inner_func(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except GearscopeException as e:
                raise e.add_context(operation=operation)
            except FloatingPointError as e:
                raise NonFinite(f'floating point error: {e}', operation=operation) from e

        # Override signature
        sig = inspect.signature(func)
        inner_func.__signature__ = sig
        return inner_func

    return decorator


def ignore_numpy_errors(func):
    """Run ``func`` with numpy floating point warnings silenced (overflowing candidate fits are expected)."""

    @wraps(func)
    def inner_func(*args, **kwargs):
        with np.errstate(all='ignore'):
            return func(*args, **kwargs)

    return inner_func
