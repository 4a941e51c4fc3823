# Copyright (c) 2026 RTBContracts contributors. All rights reserved.

"""
Exception hierarchy. Every error carries the exit code the command line
tool reports when it reaches the top level.
"""


class RTBError(Exception):
    exit_code = 1


class ParameterError(RTBError, ValueError):
    exit_code = 3


class SizeError(ParameterError):
    pass


class SupplyExceededError(RTBError, ValueError):
    exit_code = 3

    def __init__(self, requested, capacity, message=None):
        self.requested = float(requested)
        self.capacity = float(capacity)
        super().__init__(message or 'requested supply %.6g exceeds capacity %.6g' % (requested, capacity))


class ConfigurationError(RTBError):
    exit_code = 3


class InputError(RTBError):
    exit_code = 3


class InfeasibleError(RTBError):
    exit_code = 2

    def __init__(self, message, contracts=(), required=0.0, capacity=0.0):
        self.contracts = tuple(contracts)
        self.required = float(required)
        self.capacity = float(capacity)
        super().__init__(message)


class SolverError(RTBError):
    exit_code = 4

    def __init__(self, message, diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)
