"""Exception types shared across modules; the CLI maps them to exit codes."""


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class NumericalError(RuntimeError):
    """A numerical consistency check failed."""


class TruncationError(NumericalError, ValueError):
    """A Fock cutoff discards more probability than allowed."""

    def __init__(self, amplitude: complex, cutoff: int, deficit: float, required: int):
        self.amplitude = amplitude
        self.cutoff = cutoff
        self.deficit = deficit
        self.required_cutoff = required
        super().__init__(
            f"cutoff {cutoff} truncates |alpha|={abs(amplitude):.4g} with deficit "
            f"{deficit:.3e}; use cutoff >= {required}"
        )


class EmptySelectionError(ValueError):
    """No measurement tuple satisfies the post-selection rule."""


class DegenerateSelectionError(NumericalError):
    """Post-selection admitted tuples but left zero total weight."""
