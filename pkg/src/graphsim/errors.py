class ConfigError(ValueError):
    """Invalid experiment configuration or learner/input mismatch."""


class GraphError(ConfigError):
    """Malformed graph, labeling or path input."""


class NumericalError(ArithmeticError):
    """Numerical breakdown (unexpected null space, non-finite weights, walk cap)."""


class PoolCapExceeded(RuntimeError):
    """The hallucinated-history pool outgrew its configured cap."""
