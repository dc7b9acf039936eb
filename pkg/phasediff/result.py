import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Union

SCHEMA_VERSION = 1
CSV_COLUMNS = ("experiment", "quantity", "value", "reference", "criterion", "passed")

Number = Union[int, float, complex]


def format_number(value: Any) -> str:
    """
    Fixed notation for magnitudes in [1e-3, 1e4), exponent notation outside,
    "re+imj" for complex values with a nonzero imaginary part.
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, complex):
        if value.imag == 0.0:
            return format_number(value.real)
        sign = "-" if value.imag < 0 else "+"
        return f"{format_number(value.real)}{sign}{format_number(abs(value.imag))}j"
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if value == 0.0:
        return "0"
    if 1e-3 <= abs(value) < 1e4:
        return f"{value:.10g}"
    return f"{value:.9e}"


@dataclass
class ResultRow:
    """One checked quantity of one experiment."""

    experiment: str
    quantity: str
    value: Any
    reference: Any
    criterion: str
    passed: bool
    runtime: float = 0.0

    def csv_fields(self) -> List[str]:
        return [
            self.experiment,
            self.quantity,
            format_number(self.value),
            format_number(self.reference),
            self.criterion,
            "PASS" if self.passed else "FAIL",
        ]


class ResultTable:
    """
    The rows produced by one or more scenario runs.
    Supports lookup by experiment and quantity, iteration in insertion order,
    and the pass/fail verdict the command line turns into an exit status.
    """

    def __init__(self, error_mode: str = "raise") -> None:
        if error_mode not in {"raise", "return"}:
            raise ValueError("error_mode must be one of: 'raise', 'return'")
        self._error_mode = error_mode
        self._rows: List[ResultRow] = []
        self._errors: Dict[str, Exception] = {}
        self.timings: Dict[str, float] = {}
        self.exception: Optional[Exception] = None

    @property
    def error_mode(self) -> str:
        return self._error_mode

    @property
    def errors(self) -> Dict[str, Exception]:
        return self._errors

    @property
    def experiments(self) -> List[str]:
        """Experiment names in the order their first row or error was added."""
        seen: Dict[str, None] = {}
        for row in self._rows:
            seen.setdefault(row.experiment, None)
        for name in self._errors:
            seen.setdefault(name, None)
        return list(seen)

    def __getitem__(self, key: Union[str, tuple]) -> Any:
        """
        table["rapid-motion"] returns that experiment's rows, and
        table["rapid-motion", "quantity"] one row. If the experiment failed,
        its exception is raised (or returned, in 'return' mode).
        """
        experiment, quantity = (key, None) if isinstance(key, str) else key
        if experiment in self._errors:
            if self._error_mode == "return":
                return self._errors[experiment]
            raise self._errors[experiment]
        rows = [row for row in self._rows if row.experiment == experiment]
        if not rows:
            raise KeyError(experiment)
        if quantity is None:
            return rows
        for row in rows:
            if row.quantity == quantity:
                return row
        raise KeyError(key)

    def __iter__(self) -> Iterator[ResultRow]:
        return iter(self._rows)

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def passed(self) -> bool:
        """True when there is at least one row, every row passed and nothing raised."""
        return bool(self._rows) and not self._errors and all(row.passed for row in self._rows)

    @property
    def failures(self) -> List[ResultRow]:
        return [row for row in self._rows if not row.passed]

    def add(
        self,
        experiment: str,
        quantity: str,
        value: Any,
        reference: Any,
        criterion: str,
        passed: bool,
    ) -> ResultRow:
        if any(row.experiment == experiment and row.quantity == quantity for row in self._rows):
            raise ValueError(f"{experiment}: quantity '{quantity}' already recorded")
        row = ResultRow(experiment, quantity, value, reference, criterion, bool(passed))
        self._rows.append(row)
        return row

    def check_close(
        self,
        experiment: str,
        quantity: str,
        value: Number,
        reference: Number,
        rtol: float = 0.0,
        atol: float = 0.0,
    ) -> ResultRow:
        """|value - reference| <= atol + rtol |reference|."""
        error = abs(value - reference)
        limit = atol + rtol * abs(reference)
        parts = []
        if rtol:
            parts.append(f"rel<={rtol:g}")
        if atol:
            parts.append(f"abs<={atol:g}")
        criterion = " + ".join(parts) or "exact"
        passed = bool(error <= limit) and not math.isnan(error)
        return self.add(experiment, quantity, value, reference, criterion, passed)

    def check_bound(
        self,
        experiment: str,
        quantity: str,
        value: float,
        upper: Optional[float] = None,
        lower: Optional[float] = None,
    ) -> ResultRow:
        """lower <= value <= upper, with either side optional."""
        if upper is None and lower is None:
            raise ValueError("check_bound needs an upper or a lower limit")
        if upper is not None and lower is not None:
            criterion = f"in [{lower:g}, {upper:g}]"
            reference: Any = f"[{format_number(lower)}, {format_number(upper)}]"
            passed = lower <= value <= upper
        elif upper is not None:
            criterion = f"<= {upper:g}"
            reference = upper
            passed = value <= upper
        else:
            criterion = f">= {lower:g}"
            reference = lower
            passed = value >= lower
        return self.add(experiment, quantity, value, reference, criterion, bool(passed))

    def extend(self, other: "ResultTable") -> None:
        """Appends another table's rows, errors and timings."""
        for row in other:
            self._rows.append(row)
        for name, error in other.errors.items():
            self._add_error(name, error)
        self.timings.update(other.timings)

    def _add_error(self, experiment: str, error: Exception) -> None:
        if self.exception is None:
            self.exception = error
        self._errors[experiment] = error

    def _add_timing(self, experiment: str, duration: float) -> None:
        """Records the scenario's wall time and stamps it on the scenario's rows."""
        self.timings[experiment] = duration
        for row in self._rows:
            if row.experiment == experiment:
                row.runtime = duration

    def write_csv(self, path: Union[str, Path], generated: Optional[datetime] = None) -> Path:
        """
        Writes the versioned CSV. Only the 'generated' line depends on the
        clock; the rest is a function of the rows.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        generated = generated or datetime.now(timezone.utc)
        with path.open("w", encoding="utf-8", newline="") as handle:
            handle.write(f"# schema_version={SCHEMA_VERSION}\n")
            handle.write(f"# generated={generated.isoformat(timespec='seconds')}\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in self._rows:
                writer.writerow(row.csv_fields())
            for name, error in self._errors.items():
                writer.writerow([name, "error", type(error).__name__, "", "no exception", "FAIL"])
        return path

    def summary(self) -> str:
        """Structured text: one block per experiment with its rows and runtime."""
        lines: List[str] = []
        for experiment in self.experiments:
            rows = [row for row in self._rows if row.experiment == experiment]
            verdict = "FAIL" if experiment in self._errors or any(not r.passed for r in rows) else "PASS"
            runtime = self.timings.get(experiment)
            timing = f" ({runtime:.2f}s)" if runtime is not None else ""
            lines.append(f"[{experiment}] {verdict}{timing}")
            for row in rows:
                mark = "ok  " if row.passed else "FAIL"
                lines.append(
                    f"  {mark} {row.quantity} = {format_number(row.value)}"
                    f"  (reference {format_number(row.reference)}, {row.criterion})"
                )
            if experiment in self._errors:
                error = self._errors[experiment]
                lines.append(f"  FAIL raised {type(error).__name__}: {error}")
        total = len(self._rows)
        lines.append(f"{total - len(self.failures)}/{total} rows passed, {len(self._errors)} errors")
        return "\n".join(lines) + "\n"

    def write_summary(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.summary(), encoding="utf-8")
        return path


def write_data(path: Union[str, Path], columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    A per-scenario data file: one header line naming the columns (with
    units in brackets), then the rows with the table's number format.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_number(value) for value in row])
    return path
