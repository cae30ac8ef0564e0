"""Exception hierarchy.

Every error carries a short machine-readable ``code`` so the command line
front end can print a one-line ``error: <code>: <message>`` and exit nonzero.
"""


class DriftPacError(Exception):
    code = "error"


class SchemaError(DriftPacError, ValueError):
    code = "invalid-schema"


class AdmissibilityError(DriftPacError, ValueError):
    code = "inadmissible-value"


class DimensionError(DriftPacError, ValueError):
    code = "dimension-mismatch"


class ParameterDomainError(DriftPacError, ValueError):
    code = "parameter-domain"


class UnboundedRequirementError(ParameterDomainError):
    code = "unbounded-requirement"


class NumericError(DriftPacError, ArithmeticError):
    code = "numeric"


class BudgetExceededError(DriftPacError):
    code = "world-budget-exceeded"


class ConfigError(DriftPacError, ValueError):
    code = "config"


class FormatError(DriftPacError, ValueError):
    code = "file-format"
