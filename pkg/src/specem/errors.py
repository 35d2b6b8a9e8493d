"""Exception hierarchy shared by all specem modules."""


class SpecEMError(Exception):
    """Base class for every error raised by specem."""


class DataError(SpecEMError):
    """Input data cannot be processed (CLI exit code 2)."""


class ZeroVarianceSeries(DataError):
    pass


class EmptySpectrum(DataError):
    pass


class MixedGrids(DataError):
    pass


class ZeroTotalWeight(DataError):
    pass


class EmptyCluster(SpecEMError):
    def __init__(self, clusters):
        self.clusters = list(clusters)
        super().__init__(f"clusters with no responsibility mass: {self.clusters}")


class DegenerateRun(SpecEMError):
    pass


class UndefinedNEC(SpecEMError):
    pass


class TooFewPoints(SpecEMError):
    pass


class RecordingTooShort(DataError):
    pass


class DegenerateComponent(SpecEMError):
    pass


class InvalidSpec(DataError):
    pass


class OverlapError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, row=None, col=None, path=None):
        self.row = row
        self.col = col
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        if col is not None:
            where.append(f"col {col}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class RaggedData(DataError):
    pass


class EmptyFile(DataError):
    pass


class AmbiguousColumns(DataError):
    pass
