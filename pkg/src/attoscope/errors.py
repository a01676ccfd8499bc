"""Exception types."""


class ConfigurationError(ValueError):
    """Invalid grid, model, pulse or run configuration."""


class GridMismatchError(ValueError):
    """Two wavefunctions live on different spatial grids."""


class SamplingError(ValueError):
    """A trace is sampled too coarsely or too sparsely for the requested analysis."""


class UnitarityError(RuntimeError):
    """Total norm drifted beyond tolerance during propagation."""


class ScanError(RuntimeError):
    """A propagation inside a delay scan failed.

    The failing point is available as ``delay`` (fs) and ``phase`` (rad).
    """

    def __init__(self, message, delay, phase):
        super().__init__(f"{message} (delay={delay!r} fs, phase={phase!r} rad)")
        self.delay = delay
        self.phase = phase
        self._message = message

    def __reduce__(self):
        return (type(self), (self._message, self.delay, self.phase))
