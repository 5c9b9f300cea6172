"""Python surface of the stochastic evolution equation laboratory.

Thin re-export of the compiled core: fixture registry lookups, one-shot
path solves with scheme selection, and the declarative experiment runner
used by the spde_lab CLI.
"""

from ._core import (
    ConfigError,
    chart_names,
    describe_registry,
    moment_bound_constant,
    problem_names,
    run_config,
    semigroup_names,
    solve,
    validate_config,
    version,
)

__version__ = version()

__all__ = [
    "ConfigError",
    "chart_names",
    "describe_registry",
    "moment_bound_constant",
    "problem_names",
    "run_config",
    "semigroup_names",
    "solve",
    "validate_config",
    "version",
    "__version__",
]
