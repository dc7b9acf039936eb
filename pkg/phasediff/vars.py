"""
Internal context variables for phasediff.
These carry per-context state, such as scoped runtime overrides, down
through the call stack without passing it as an argument.
"""
from concurrent.futures import ThreadPoolExecutor
from contextvars import ContextVar
from typing import Any, Dict, Optional

# Settings overridden by `runtime.scoped(...)` for the current context only.
settings_override: ContextVar[Optional[Dict[str, Any]]] = ContextVar(
    "settings_override", default=None
)

# ContextVar to hold the dedicated ThreadPoolExecutor for scenario runs.
executor_context: ContextVar[Optional[ThreadPoolExecutor]] = ContextVar(
    "executor_context", default=None
)
