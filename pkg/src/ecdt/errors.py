"""Exception hierarchy for the eCDT toolkit."""


class EcdtError(Exception):
    """Base class for all toolkit errors."""


class StreamError(EcdtError, ValueError):
    pass


class OutOfBounds(StreamError):
    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"event {index} lies outside the sensor bounds")


class UnsortedTimestamps(StreamError):
    def __init__(self, index):
        self.index = index
        super().__init__(f"event {index} has a timestamp earlier than its predecessor")


class EmptyStream(StreamError):
    def __init__(self, message="event stream is empty"):
        super().__init__(message)


class BothEmpty(EcdtError, ValueError):
    def __init__(self):
        super().__init__("IoU is undefined for two empty pixel sets")


class EmptyWindow(EcdtError, ValueError):
    def __init__(self, t_k):
        self.t_k = t_k
        super().__init__(f"moving-average window at t={t_k!r} contains no events")


class ParseError(EcdtError, ValueError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class NumericError(EcdtError, ArithmeticError):
    """Failures of the numeric evaluation path (exit code 3 in the CLI)."""


class PoseOutOfRange(NumericError):
    def __init__(self, t, chain_id=None):
        self.t = t
        self.chain_id = chain_id
        where = f"track {chain_id} " if chain_id is not None else ""
        super().__init__(f"{where}timestamp {t!r} is not covered by the pose trajectory")


class NoConvergence(NumericError):
    pass


class TriangulationError(NumericError):
    pass


class InsufficientObservations(TriangulationError):
    pass


class BehindCamera(TriangulationError):
    pass
