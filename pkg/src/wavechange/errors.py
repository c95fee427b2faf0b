"""Exception types shared across the pipeline."""


class WavechangeError(Exception):
    pass


class DimensionMismatch(WavechangeError, ValueError):
    pass


class ShapeMismatch(WavechangeError, ValueError):
    pass


class UnsupportedFormat(WavechangeError, ValueError):
    pass


class CorruptImage(WavechangeError, ValueError):
    pass


class IoFailure(WavechangeError, OSError):
    pass


class RecordMismatch(WavechangeError, ValueError):
    pass


class NumericFailure(WavechangeError, ArithmeticError):
    pass
