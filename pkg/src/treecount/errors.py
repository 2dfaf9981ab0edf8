"""Exception types raised by treecount."""


class TreeCountError(Exception):
    """Base class for all library errors."""


class GraphFormatError(TreeCountError, ValueError):
    """Malformed edge-list input."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DisconnectedGraphError(TreeCountError, ValueError):
    def __init__(self, message="graph is disconnected"):
        super().__init__(message)


class SolverError(TreeCountError, RuntimeError):
    """Laplacian solve did not reach its tolerance within the iteration cap."""

    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(f"{message} (relative residual {residual:.3e})")


class SelectionError(TreeCountError, RuntimeError):
    """No uncorrelated subset found within the retry cap."""
