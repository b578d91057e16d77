"""
Check registry
"""

import inspect
import logging
from typing import Callable, Dict

from ..core.errors import PreconditionError
from .geometry import check_hamming_tightness, check_isoperimetric_sets, check_walk_bound
from .inequalities import (
    check_easytosee,
    check_forward_bb,
    check_reverse_bb,
    check_reverse_holder,
    check_two_function,
    check_two_point_coefficients,
)
from .report import CheckReport
from .structure import (
    check_aks_bound,
    check_conditional_hit_monotonicity,
    check_fkg_measure,
    check_maj_crossover,
    check_small_player_optimality,
    check_tpower_diagnostic,
)

logger = logging.getLogger(__name__)

CHECKS: Dict[str, Callable[..., CheckReport]] = {
    fn.__name__: fn
    for fn in (
        check_forward_bb,
        check_reverse_bb,
        check_two_function,
        check_two_point_coefficients,
        check_reverse_holder,
        check_easytosee,
        check_isoperimetric_sets,
        check_hamming_tightness,
        check_walk_bound,
        check_fkg_measure,
        check_conditional_hit_monotonicity,
        check_maj_crossover,
        check_tpower_diagnostic,
        check_small_player_optimality,
        check_aks_bound,
    )
}


def run_check(name: str, **options) -> CheckReport:
    """
    Run a registered check with the options it accepts

    Options a check does not take (for example trials for a deterministic
    check) are dropped; options set to None keep the check's default.

    Raises:
        PreconditionError: unknown check name
    """
    if name not in CHECKS:
        raise PreconditionError(f"unknown check {name!r}; choose from {', '.join(sorted(CHECKS))}")
    check = CHECKS[name]
    accepted = inspect.signature(check).parameters
    kwargs = {k: v for k, v in options.items() if k in accepted and v is not None}
    dropped = sorted(k for k, v in options.items() if k not in accepted and v is not None)
    if dropped:
        logger.debug(f"{name} ignores {', '.join(dropped)}")
    logger.info(f"Running {name} with {kwargs}")
    return check(**kwargs)
