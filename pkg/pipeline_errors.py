"""
Pipeline Errors
Exception hierarchy shared by every stage of the seizure detection pipeline.
Each error knows the stage it came from and the exit code the CLI reports.
"""

from typing import Iterable, Optional


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class PipelineError(Exception):
    """Base class for all pipeline failures."""

    stage = 'pipeline'
    exit_code = EXIT_DATA
    context: Optional[str] = None

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(message)
        if stage:
            self.stage = stage

    def diagnostic(self) -> str:
        """One-line message naming the stage, as printed by the CLI."""
        where = f" ({self.context})" if self.context else ''
        return f"[{self.stage}] {type(self).__name__}{where}: {self}"


class ConfigError(PipelineError, ValueError):
    stage = 'cli'
    exit_code = EXIT_USAGE


# ---- data errors -----------------------------------------------------------

class ParseError(PipelineError):
    """A corpus file line that is not a number."""

    stage = 'ingest'

    def __init__(self, path, line_number: int, content: str = ''):
        self.path = str(path)
        self.line_number = line_number
        super().__init__(f"{self.path}: line {line_number} is not numeric: {content!r}")


class LengthError(PipelineError):
    stage = 'ingest'

    def __init__(self, path, found: int, expected: int):
        self.path = str(path)
        self.found = found
        self.expected = expected
        super().__init__(f"{self.path}: {found} samples, expected {expected}")


class MissingFiles(PipelineError):
    """Segments absent from a set directory."""

    stage = 'ingest'

    def __init__(self, set_id: str, indices: Iterable[int], directory=None):
        self.set_id = set_id
        self.indices = sorted(indices)
        self.directory = str(directory) if directory is not None else None
        where = f" in {self.directory}" if self.directory else ''
        super().__init__(
            f"set {set_id}: {len(self.indices)} segment file(s) missing{where}: "
            f"{_compress_indices(self.indices)}"
        )


class AliasError(PipelineError, ValueError):
    stage = 'ingest'


class SchemaError(PipelineError):
    """A feature CSV whose header or values do not match the expected layout."""

    stage = 'features'

    def __init__(self, path, column: str, reason: str):
        self.path = str(path)
        self.column = column
        super().__init__(f"{self.path}: column {column!r}: {reason}")


# ---- numerical errors ------------------------------------------------------

class NumericalError(PipelineError):
    exit_code = EXIT_NUMERICAL


class DesignError(NumericalError, ValueError):
    stage = 'preprocess'


class SignalTooShort(NumericalError, ValueError):
    stage = 'dwt'


class LevelError(NumericalError, ValueError):
    stage = 'dwt'


class DegenerateBand(NumericalError):
    stage = 'features'


class ZeroEnergy(NumericalError):
    stage = 'features'


class DimensionMismatch(NumericalError, ValueError):
    stage = 'classifiers'


class InvalidSigma(NumericalError, ValueError):
    stage = 'classifiers'


class SingleClass(NumericalError, ValueError):
    stage = 'classifiers'


class InvalidNeighbours(NumericalError, ValueError):
    """k-NN neighbour count that is not odd or exceeds the training rows."""

    stage = 'classifiers'


class NonConvergence(NumericalError):
    stage = 'classifiers'


class TooFewSamples(NumericalError, ValueError):
    stage = 'eval'


class EmptyMatrix(NumericalError, ValueError):
    stage = 'eval'


def _compress_indices(indices) -> str:
    """Render [1,2,3,7] as '1-3,7'."""
    if not indices:
        return ''
    runs = []
    start = prev = indices[0]
    for value in indices[1:]:
        if value == prev + 1:
            prev = value
            continue
        runs.append((start, prev))
        start = prev = value
    runs.append((start, prev))
    return ','.join(f"{a}" if a == b else f"{a}-{b}" for a, b in runs)
