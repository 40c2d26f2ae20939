class DomainError(ValueError):
    """A point lies outside the fundamental domain of its leaf or chart."""


class ArgumentError(ValueError):
    """Invalid arguments (bad ladder, mismatched models, degenerate input)."""
