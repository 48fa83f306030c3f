"""Exception hierarchy shared by the pricing engine and the CLI."""

from typing import Dict, Optional

EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3


class PricerError(Exception):
    """Base class for all pricer errors"""

    exit_code = EXIT_FAILURE


class ConfigurationError(PricerError, ValueError):
    """Invalid parameters, plans or config files.

    Args:
        message: Human readable description
        field: Dotted path of the offending field (e.g. ``copula.rho``)
        line: Line number in the config text for syntax errors
    """

    exit_code = EXIT_CONFIG_ERROR

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        prefix = ''
        if field:
            prefix = f"{field}: "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(f"{prefix}{message}")


class NumericalError(PricerError):
    """Root finding failed for the k-th default time of a path"""

    exit_code = EXIT_NUMERICAL_ERROR

    def __init__(self, message: str, k: int, params: Dict[str, float],
                 path_index: Optional[int] = None, block_index: Optional[int] = None):
        self.detail = message
        self.k = k
        self.params = dict(params)
        self.path_index = path_index
        self.block_index = block_index
        super().__init__(self._render())

    def _render(self) -> str:
        where = f"k={self.k}"
        if self.path_index is not None:
            where += f", path {self.path_index}"
        if self.block_index is not None:
            where += f", block {self.block_index}"
        params = ', '.join(f"{key}={value}" for key, value in self.params.items())
        return f"{self.detail} ({where}; {params})"

    def locate(self, path_offset: int, block_index: int) -> 'NumericalError':
        """Return a copy tagged with the global path index and block id"""
        local = self.path_index or 0
        return NumericalError(self.detail, self.k, self.params,
                              path_index=path_offset + local, block_index=block_index)


class ContractMisuseError(PricerError):
    """A contract operation was called without the data it needs"""


class DegenerateContractError(PricerError):
    """The fee leg has no value, so no swap rate exists"""


class UnsupportedModelError(PricerError, ValueError):
    """Analytic formulas requested outside the model they hold for"""

    exit_code = EXIT_CONFIG_ERROR


class MergeError(PricerError):
    """Partial accumulators from different plans cannot be merged"""
