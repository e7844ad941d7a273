"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes (see ``cwswap.cli``).
"""


class CwswapError(Exception):
    pass


class DomainError(CwswapError, ValueError):
    """A physical quantity or argument outside its allowed domain."""


class UnitError(CwswapError, TypeError):
    """Arithmetic or comparison between incompatible units."""


class ConfigError(CwswapError):
    pass


class ResolutionError(CwswapError):
    """A numerical grid too coarse (or too small) for the requested accuracy."""


class MemoryBudgetError(CwswapError):
    """A full-stream run that would exceed the configured event budget."""


class FitError(CwswapError):
    pass
