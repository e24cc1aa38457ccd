"""
Exception hierarchy.

Each category maps to a process exit code used by the CLI.

Copyright (c) 2024 ROX Automation
"""


class BsdlabError(Exception):
    """Base class for all bsdlab errors"""

    exit_code = 1


class ConfigError(BsdlabError):
    """Bad configuration, mapping file or argument"""

    exit_code = 2


class DataError(BsdlabError):
    """Input data is malformed or inconsistent"""

    exit_code = 3


class NumericError(BsdlabError):
    """Numerical failure: precision, convergence or budget"""

    exit_code = 4


def exit_code_for(exc: BaseException) -> int:
    """exit code for an exception, 1 for anything unexpected"""
    if isinstance(exc, BsdlabError):
        return exc.exit_code
    return 1
