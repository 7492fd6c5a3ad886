"""Exception hierarchy shared by all modules."""


class BlabError(Exception):
    pass


class DomainError(BlabError, ValueError):
    """Argument outside the open unit disk or another stated domain."""


class ConfigurationError(BlabError, ValueError):
    pass


class NotSelfMapError(DomainError):
    pass


class InapplicableError(BlabError):
    pass


class ContractViolation(BlabError, ValueError):
    pass


class ResolutionError(BlabError):
    pass


class AccuracyError(BlabError, ArithmeticError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class TruncationError(BlabError, ArithmeticError):
    def __init__(self, message, required_kmax=None):
        super().__init__(message)
        self.required_kmax = required_kmax
