"""Exception hierarchy.

The three top-level categories map onto CLI exit codes: configuration
problems, bad input data, and judge backend failures.
"""


class ChildtalkError(Exception):
    exit_code = 1


class ConfigError(ChildtalkError):
    exit_code = 2


class DataError(ChildtalkError):
    exit_code = 3


class BackendError(ChildtalkError):
    exit_code = 4


class EmptyInput(DataError, ValueError):
    pass
