"""
Experiment configuration files.

A configuration is flat `key = value` text in six sections:

    [scenario]     name, seed, output
    [model]        hbar, mass, a, b, n
    [grid]         points, aspect ("auto" for b/a)
    [hamiltonian]  name and the factory's keyword arguments
    [evolution]    the EvolutionConfig fields ("auto" cutoff for the runtime default)
    [options]      scenario specific knobs

`ExperimentConfig.emit()` and `ExperimentConfig.parse()` are inverse to each
other: floats are written with repr, so a round trip is exact.
"""
import configparser
import io
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

from .core import ModelParams, PhaseGrid
from .dynamics import EvolutionConfig
from .hamiltonians import HAMILTONIANS, HamiltonianSpec, build_hamiltonian

SECTIONS = ("scenario", "model", "grid", "hamiltonian", "evolution", "options")
_AUTO = "auto"


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one scenario run needs, apart from the runtime settings."""

    scenario: str
    params: ModelParams = field(default_factory=ModelParams)
    points: int = 128
    aspect: Optional[float] = None
    hamiltonian: str = "harmonic"
    hamiltonian_args: Dict[str, float] = field(default_factory=dict)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    output: str = "results"
    seed: int = 0
    options: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.scenario:
            raise ValueError("scenario name must not be empty")
        if self.hamiltonian not in HAMILTONIANS:
            known = ", ".join(sorted(HAMILTONIANS))
            raise ValueError(f"Unknown Hamiltonian '{self.hamiltonian}'. Known: {known}.")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")
        self.grid()

    def grid(self) -> PhaseGrid:
        return PhaseGrid.from_params(self.params, self.points, self.aspect)

    def build_hamiltonian(self, params: Optional[ModelParams] = None) -> HamiltonianSpec:
        return build_hamiltonian(self.hamiltonian, params or self.params, **self.hamiltonian_args)

    def option(self, key: str, default: Any) -> Any:
        """An option coerced to the type of `default`."""
        if key not in self.options:
            return default
        value = self.options[key]
        if isinstance(default, bool):
            return str(value).lower() in {"1", "true", "yes", "on"}
        if isinstance(default, float):
            return float(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, tuple):
            kind = type(default[0]) if default else str
            return tuple(kind(part) for part in _split_list(value))
        return value

    def replace(self, **changes: Any) -> "ExperimentConfig":
        return replace(self, **changes)

    def emit(self) -> str:
        parser = _new_parser()
        parser["scenario"] = {"name": self.scenario, "seed": str(self.seed), "output": self.output}
        parser["model"] = {
            "hbar": repr(self.params.hbar),
            "mass": repr(self.params.mass),
            "a": repr(self.params.a),
            "b": repr(self.params.b),
            "n": str(self.params.n),
        }
        parser["grid"] = {
            "points": str(self.points),
            "aspect": _AUTO if self.aspect is None else repr(float(self.aspect)),
        }
        section = {"name": self.hamiltonian}
        section.update({key: repr(float(value)) for key, value in sorted(self.hamiltonian_args.items())})
        parser["hamiltonian"] = section
        evo = self.evolution
        parser["evolution"] = {
            "dt": repr(evo.dt),
            "t_end": repr(evo.t_end),
            "scheme": evo.scheme,
            "substeps": str(evo.substeps),
            "hermite_cutoff": _AUTO if evo.hermite_cutoff is None else str(evo.hermite_cutoff),
            "record_every": str(evo.record_every),
            "cfl_max": repr(evo.cfl_max),
        }
        parser["options"] = {key: _emit_option(value) for key, value in sorted(self.options.items())}
        buffer = io.StringIO()
        parser.write(buffer)
        return buffer.getvalue()

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_text(self.emit(), encoding="utf-8")
        return path

    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        """
        Reads configuration text. Missing sections and keys take their
        defaults; unknown sections or keys raise ValueError.
        """
        parser = _new_parser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ValueError(f"Malformed configuration: {exc}") from exc
        unknown = set(parser.sections()) - set(SECTIONS)
        if unknown:
            raise ValueError(f"Unknown configuration sections: {', '.join(sorted(unknown))}")

        def section(name: str) -> Dict[str, str]:
            return dict(parser[name]) if parser.has_section(name) else {}

        scenario = section("scenario")
        _reject_unknown("scenario", scenario, {"name", "seed", "output"})
        if "name" not in scenario:
            raise ValueError("[scenario] needs a name")

        model = section("model")
        _reject_unknown("model", model, {"hbar", "mass", "a", "b", "n"})
        model_kwargs: Dict[str, Any] = {
            key: _to_float("model", key, value) for key, value in model.items() if key != "n"
        }
        if "n" in model:
            model_kwargs["n"] = _to_int("model", "n", model["n"])
        params = ModelParams(**model_kwargs)

        grid = section("grid")
        _reject_unknown("grid", grid, {"points", "aspect"})
        points = _to_int("grid", "points", grid.get("points", "128"))
        aspect_text = grid.get("aspect", _AUTO)
        aspect = None if aspect_text == _AUTO else _to_float("grid", "aspect", aspect_text)

        hamiltonian = section("hamiltonian")
        name = hamiltonian.pop("name", "harmonic")
        hamiltonian_args = {key: _to_float("hamiltonian", key, value) for key, value in hamiltonian.items()}

        evolution = section("evolution")
        known = {f.name for f in fields(EvolutionConfig)}
        _reject_unknown("evolution", evolution, known)
        evo_kwargs: Dict[str, Any] = {}
        for key, value in evolution.items():
            if key == "scheme":
                evo_kwargs[key] = value
            elif key == "hermite_cutoff":
                evo_kwargs[key] = None if value == _AUTO else _to_int("evolution", key, value)
            elif key in ("substeps", "record_every"):
                evo_kwargs[key] = _to_int("evolution", key, value)
            else:
                evo_kwargs[key] = _to_float("evolution", key, value)

        options = {key: _parse_option(value) for key, value in section("options").items()}
        return cls(
            scenario=scenario["name"],
            params=params,
            points=points,
            aspect=aspect,
            hamiltonian=name,
            hamiltonian_args=hamiltonian_args,
            evolution=EvolutionConfig(**evo_kwargs),
            output=scenario.get("output", "results"),
            seed=_to_int("scenario", "seed", scenario.get("seed", "0")),
            options=options,
        )

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        return cls.parse(Path(path).read_text(encoding="utf-8"))


def _new_parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    return parser


def _reject_unknown(section: str, values: Dict[str, str], known: set) -> None:
    extra = set(values) - known
    if extra:
        raise ValueError(f"[{section}] has unknown keys: {', '.join(sorted(extra))}")


def _to_float(section: str, key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ValueError(f"[{section}] {key} must be a number, got {value!r}") from None


def _to_int(section: str, key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"[{section}] {key} must be an integer, got {value!r}") from None


def _split_list(value: Any) -> list:
    if isinstance(value, (list, tuple)):
        return list(value)
    return [part.strip() for part in str(value).split(",") if part.strip()]


def _emit_option(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_emit_option(part) for part in value)
    return str(value)


def _parse_option(value: str) -> Any:
    for kind in (int, float):
        try:
            return kind(value)
        except ValueError:
            continue
    return value
