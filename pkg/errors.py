#!/usr/bin/env python3
"""
Exceptions shared by the hyperbolic graph toolkit.
"""


class HRGError(Exception):
    """Base class for every error raised by this package"""


class ConfigError(HRGError):
    """Invalid configuration value or command-line combination"""


class DomainError(HRGError, ValueError):
    """An operation was called outside of its documented domain"""


class DegenerateLevelsError(DomainError):
    """The layer radii do not satisfy l_min < l_mid < l_max"""

    def __init__(self, inequality, levels=None):
        self.inequality = inequality
        self.levels = levels
        super().__init__(f"degenerate levels: {inequality} does not hold")


class DisconnectedGraphError(DomainError):
    """A connected component was required"""


class GuardExceededError(HRGError):
    """A size guard refused to run an exact (super-linear) algorithm"""

    def __init__(self, what, size, cap, hint=None):
        self.what = what
        self.size = size
        self.cap = cap
        self.hint = hint
        msg = f"{what}: size {size} exceeds guard {cap}"
        if hint:
            msg += f" ({hint})"
        super().__init__(msg)


class ConvergenceError(HRGError):
    """An iterative solver stopped before reaching the requested tolerance"""

    def __init__(self, message, best_value=None, best_vector=None, residual=None, iterations=0):
        self.best_value = best_value
        self.best_vector = best_vector
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (best={best_value}, residual={residual}, iterations={iterations})")


class CertificateError(HRGError):
    """A flow summary cannot be labelled as a Sinclair certificate"""


class SchemaVersionError(HRGError):
    """A result file carries an unknown schema version"""
