import importlib.util
import os
from contextlib import contextmanager
from copy import deepcopy
from pathlib import Path
from typing import Any, Dict, Iterator, Optional

from .vars import settings_override


_CONFIG_FILENAME = "phasediff_config.py"
_KNOWN_BOUNDARY_POLICIES = {"raise", "warn", "ignore"}
_KNOWN_LOG_LEVELS = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
_KNOWN_CONFIG_KEYS = {
    "decay_tol",
    "boundary_policy",
    "trunc_tol",
    "hermite_cutoff",
    "quadrature_tol",
    "hermitian_tol",
    "threads",
    "error_mode",
    "log_level",
}
_DEFAULTS = {
    "decay_tol": 1e-12,
    "boundary_policy": "warn",
    "trunc_tol": 1e-9,
    "hermite_cutoff": 64,
    "quadrature_tol": 1e-10,
    "hermitian_tol": 1e-8,
    "threads": 1,
    "error_mode": "raise",
    "log_level": "WARNING",
}
_POSITIVE_FLOATS = {"decay_tol", "trunc_tol", "quadrature_tol", "hermitian_tol"}
_POSITIVE_INTS = {"hermite_cutoff", "threads"}


class RuntimeConfig:
    """
    Process-wide numerical settings for phasediff.
    """

    def __init__(self) -> None:
        self.global_defaults: Dict[str, Any] = dict(_DEFAULTS)

    def configure(
        self,
        *,
        config_file: Optional[str] = None,
        decay_tol: Optional[float] = None,
        boundary_policy: Optional[str] = None,
        trunc_tol: Optional[float] = None,
        hermite_cutoff: Optional[int] = None,
        quadrature_tol: Optional[float] = None,
        hermitian_tol: Optional[float] = None,
        threads: Optional[int] = None,
        error_mode: Optional[str] = None,
        log_level: Optional[str] = None,
    ) -> "RuntimeConfig":
        explicit_values = {
            "decay_tol": decay_tol,
            "boundary_policy": boundary_policy,
            "trunc_tol": trunc_tol,
            "hermite_cutoff": hermite_cutoff,
            "quadrature_tol": quadrature_tol,
            "hermitian_tol": hermitian_tol,
            "threads": threads,
            "error_mode": error_mode,
            "log_level": log_level,
        }

        has_non_file_overrides = any(value is not None for value in explicit_values.values())
        should_attempt_autoload = config_file is None and not has_non_file_overrides

        if should_attempt_autoload:
            maybe_path = self._discover_config_file(_CONFIG_FILENAME)
            if maybe_path:
                self._apply_file_settings(maybe_path)
        elif config_file is not None:
            maybe_path = self._resolve_config_file(config_file)
            self._apply_file_settings(maybe_path)

        for key, value in explicit_values.items():
            if value is not None:
                self._set_default(key, value)

        return self

    def _set_default(self, key: str, value: Any) -> None:
        self.global_defaults[key] = _validate(key, value)

    def setting(self, key: str) -> Any:
        """Returns the effective value of a setting in the current context."""
        if key not in _KNOWN_CONFIG_KEYS:
            raise KeyError(f"Unknown phasediff setting: '{key}'")
        overrides = settings_override.get()
        if overrides and key in overrides:
            return overrides[key]
        return self.global_defaults[key]

    @contextmanager
    def scoped(self, **overrides: Any) -> Iterator["RuntimeConfig"]:
        """
        Overrides settings for the current context only. Other threads and
        tasks running in their own contexts keep seeing their own values.
        """
        merged = dict(settings_override.get() or {})
        for key, value in overrides.items():
            if key not in _KNOWN_CONFIG_KEYS:
                raise KeyError(f"Unknown phasediff setting: '{key}'")
            merged[key] = _validate(key, value)
        token = settings_override.set(merged)
        try:
            yield self
        finally:
            settings_override.reset(token)

    def snapshot(self) -> Dict[str, Any]:
        return deepcopy(dict(self.global_defaults))

    def _apply_file_settings(self, config_path: Path) -> None:
        settings = self._load_settings_module(config_path)
        for key in _KNOWN_CONFIG_KEYS:
            if key in settings:
                self._set_default(key, settings[key])

    def _load_settings_module(self, path: Path) -> Dict[str, Any]:
        module_name = f"_phasediff_user_config_{abs(hash(str(path)))}"
        spec = importlib.util.spec_from_file_location(module_name, str(path))
        if spec is None or spec.loader is None:
            raise RuntimeError(f"Could not load config file: {path}")

        module = importlib.util.module_from_spec(spec)
        spec.loader.exec_module(module)

        if hasattr(module, "PHASEDIFF_CONFIG"):
            data = getattr(module, "PHASEDIFF_CONFIG")
            if not isinstance(data, dict):
                raise TypeError("PHASEDIFF_CONFIG in config file must be a dictionary.")
            return data

        result: Dict[str, Any] = {}
        for key in _KNOWN_CONFIG_KEYS:
            if hasattr(module, key):
                result[key] = getattr(module, key)
        return result

    def _resolve_config_file(self, config_file: str) -> Path:
        candidate = Path(config_file)
        if candidate.is_absolute():
            if not candidate.exists():
                raise FileNotFoundError(f"Config file not found: {candidate}")
            return candidate

        if os.path.sep in config_file:
            resolved = Path.cwd() / candidate
            if not resolved.exists():
                raise FileNotFoundError(f"Config file not found: {resolved}")
            return resolved

        discovered = self._discover_config_file(config_file)
        if discovered is None:
            raise FileNotFoundError(f"Config file not found: {config_file}")
        return discovered

    def _discover_config_file(self, filename: str) -> Optional[Path]:
        current = Path.cwd()
        search_roots = [current, *current.parents]
        for root in search_roots:
            candidate = root / filename
            if candidate.exists():
                return candidate
        return None


def _validate(key: str, value: Any) -> Any:
    if key == "boundary_policy" and value not in _KNOWN_BOUNDARY_POLICIES:
        raise ValueError("boundary_policy must be one of: 'raise', 'warn', 'ignore'")
    if key == "error_mode" and value not in {"raise", "return"}:
        raise ValueError("error_mode must be one of: 'raise', 'return'")
    if key == "log_level":
        if str(value).upper() not in _KNOWN_LOG_LEVELS:
            allowed = "', '".join(sorted(_KNOWN_LOG_LEVELS))
            raise ValueError(f"log_level must be one of: '{allowed}'")
        return str(value).upper()
    if key in _POSITIVE_FLOATS:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
            raise ValueError(f"{key} must be a positive number")
        return float(value)
    if key in _POSITIVE_INTS:
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise ValueError(f"{key} must be a positive integer")
    return value


runtime = RuntimeConfig()


def config(
    *,
    config_file: Optional[str] = None,
    decay_tol: Optional[float] = None,
    boundary_policy: Optional[str] = None,
    trunc_tol: Optional[float] = None,
    hermite_cutoff: Optional[int] = None,
    quadrature_tol: Optional[float] = None,
    hermitian_tol: Optional[float] = None,
    threads: Optional[int] = None,
    error_mode: Optional[str] = None,
    log_level: Optional[str] = None,
) -> RuntimeConfig:
    """
    Configure process-wide phasediff numerical settings.

    Calling `phasediff.config()` with no args attempts to autoload
    `phasediff_config.py` from the current working directory or one of its
    parents.
    """

    return runtime.configure(
        config_file=config_file,
        decay_tol=decay_tol,
        boundary_policy=boundary_policy,
        trunc_tol=trunc_tol,
        hermite_cutoff=hermite_cutoff,
        quadrature_tol=quadrature_tol,
        hermitian_tol=hermitian_tol,
        threads=threads,
        error_mode=error_mode,
        log_level=log_level,
    )
