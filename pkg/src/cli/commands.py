"""
Command handlers

Each handler takes a validated RunConfig, computes its report and returns
(payload, csv rows, csv columns, exit code).
"""

import logging
import math
from typing import Callable, Dict, List, Optional, Tuple

from ..core.cube import CubeFunction, lazy_walk_probability, parse_boolean_function
from ..core.errors import InapplicableHypotheses, PreconditionError
from ..core.formats import load_chain, load_instance
from ..core.gaussian import (
    isop_conditional_bound,
    laurent_exponent,
    log_star_majority_limit,
    noise_exponent,
    rate_slope_diagnostic,
    star_majority_lower_estimate,
    walk_bound,
    walk_error_term,
    walk_exponent,
)
from ..core.markov import (
    StayQuery,
    chain_summary,
    equality_case_check,
    projection_norm_bound,
    projection_operator_norm,
    stay_report,
)
from ..core.nicd import (
    NicdInstance,
    Protocol,
    brute_force_success,
    monotonize,
    path_closed_form,
    path_instance,
    path_instance_from_gaps,
    star_instance,
    success_probability,
)
from ..core.search import (
    Family,
    best_simple_protocol,
    counterexample_search,
    exhaustive_protocol_search,
    path_nondictator_ratio,
    star_ratio_experiment,
)
from ..verify import CHECKS, run_check
from ..verify.sampling import hamming_ball
from .config import RunConfig
from .output import (
    CHECK_COLUMNS,
    HIT_COLUMNS,
    INSTANCE_COLUMNS,
    RATIO_COLUMNS,
    STAR_COLUMNS,
    emit,
)

logger = logging.getLogger(__name__)

Result = Tuple[object, List[dict], Tuple[str, ...], int]


def _path_gaps_of(inst: NicdInstance) -> Optional[List[int]]:
    """Spacings of the players when the instance is a path 0-1-...-m, else None"""
    m = inst.vertex_count - 1
    if inst.edges != tuple((i, i + 1) for i in range(m)) or len(inst.players) < 2:
        return None
    positions = sorted(inst.players)
    if positions[0] != 0 or positions[-1] != m:
        return None
    return [b - a for a, b in zip(positions, positions[1:])]


def _closed_form_bound(inst: NicdInstance, prot: Protocol) -> Tuple[Optional[float], str]:
    gaps = _path_gaps_of(inst)
    if gaps is None or not prot.is_simple():
        return None, ""
    return path_closed_form(gaps, inst.rho), "path dictator value"


def eval_command(config: RunConfig) -> Result:
    if config.gaps is not None:
        inst = path_instance_from_gaps(config.gaps, config.rho, config.n)
        prot = None
    else:
        inst, prot = load_instance(config.input_path)
    if config.protocol is not None:
        f = parse_boolean_function(config.protocol, inst.n)
        prot = Protocol.simple(inst.players, f, config.allow_unbalanced)
    if prot is None:
        raise PreconditionError("the instance file has no protocol; pass --protocol")
    success = success_probability(inst, prot)
    bound, note = _closed_form_bound(inst, prot)
    notes = [note] if note else []
    if prot.allow_unbalanced:
        notes.append("unbalanced override")
    payload = {
        "instance": inst.describe(),
        "protocol": prot.encodings(),
        "success": success,
        "bound": bound,
    }
    if config.brute_force:
        payload["brute_force"] = brute_force_success(inst, prot, config.brute_force_limit)
        notes.append(f"brute force {payload['brute_force']:.17g}")
    if config.monotonize:
        shifted, passes = monotonize(prot)
        payload["monotone"] = {
            "protocol": shifted.encodings(),
            "success": success_probability(inst, shifted),
            "passes": passes,
        }
        notes.append(f"monotone success {payload['monotone']['success']:.17g}")
    payload["note"] = "; ".join(notes)
    row = {"instance": payload["instance"], "protocol": ";".join(f"{v}={e}" for v, e in payload["protocol"].items()),
           "success": success, "bound": bound, "note": payload["note"]}
    return payload, [row], INSTANCE_COLUMNS, 0


def search_command(config: RunConfig) -> Result:
    if config.input_path is not None:
        inst, _ = load_instance(config.input_path)
    elif config.path_length is not None:
        inst = path_instance(config.path_length, config.rho, config.n)
    else:
        inst = star_instance(config.star_leaves, config.rho, config.n)
    family = config.family
    if config.named:
        family = [parse_boolean_function(e.strip(), inst.n) for e in config.named.split(",") if e.strip()]
    f, value = best_simple_protocol(inst, family, config.jobs)
    payload = {"instance": inst.describe(), "family": config.family if not config.named else "named",
               "best_function": f.label, "success": value}
    note = ""
    if config.exhaustive:
        result = exhaustive_protocol_search(inst)
        payload["exhaustive"] = {
            "value": result.value,
            "searched": result.searched,
            "maximisers": [p.encodings() for p in result.protocols],
        }
        note = f"exhaustive optimum {result.value:.17g} over {result.searched} protocols"
    if config.path_length is not None and not config.named and inst.n >= 2:
        ratio = path_nondictator_ratio(inst.rho, inst.n, config.path_length, config.family)
        payload["nondictator_ratio"] = vars(ratio)
        note = "; ".join(x for x in (note, f"per-edge non-dictator ratio {ratio.ratio:.17g}") if x)
    row = {"instance": payload["instance"], "protocol": f.label, "success": value, "bound": None, "note": note}
    return payload, [row], INSTANCE_COLUMNS, 0


def counterexample_command(config: RunConfig) -> Result:
    report = counterexample_search(config.rho, config.n, range(config.k1_max + 1), range(config.k2_max + 1),
                                   Family(config.family), config.jobs)
    rows = [{"k1": h.k1, "k2": h.k2, "mixed": h.mixed, "best_simple": h.best_simple,
             "best_function": h.best_function, "ratio": h.ratio} for h in report.hits]
    return report.to_dict(), rows, HIT_COLUMNS, 0


def star_asym_command(config: RunConfig) -> Result:
    ks = config.k_grid or [config.k or 3]
    rho = config.rho
    nu = noise_exponent(rho)
    if config.ratio_n is not None:
        ratios = star_ratio_experiment(rho, ks, config.ratio_n)
        rows = [{"k": r.k, "rho": rho, "n": config.ratio_n, "best_function": r.best_function,
                 "best_value": r.best_simple, "limit_prob": r.limit, "ratio": r.ratio} for r in ratios]
        return {"rho": rho, "nu": nu, "n": config.ratio_n, "ratios": rows}, rows, RATIO_COLUMNS, 0
    slope = None
    try:
        slope = rate_slope_diagnostic(rho, ks)
    except PreconditionError:
        logger.debug("k grid too short for a slope fit")
    rows = []
    for k in ks:
        rows.append({
            "k": k,
            "rho": rho,
            "nu": nu,
            "limit_prob": math.exp(log_star_majority_limit(k, rho)),
            "lower_estimate": star_majority_lower_estimate(k, nu),
            "slope": slope.raw_slope if slope else None,
        })
    payload = {"rho": rho, "nu": nu, "rows": rows, "slope": slope.to_dict() if slope else None}
    return payload, rows, STAR_COLUMNS, 0


def markov_bound_command(config: RunConfig) -> Result:
    chain = load_chain(config.chain_path, config.max_states)
    if config.k is not None:
        query = StayQuery.constant(chain, config.sets[0], config.k)
    else:
        query = StayQuery([chain] * (len(config.sets) - 1), config.sets)
    report = stay_report(query, config.solver, config.probability_tolerance)
    payload = {"chain": chain_summary(chain, config.solver), "stay": report}
    first, second = config.sets[0], config.sets[1] if len(config.sets) > 1 else config.sets[0]
    payload["projection"] = {
        "norm": projection_operator_norm(chain, first, second, config.solver),
        "bound": projection_norm_bound(chain, first, second, config.solver),
    }
    try:
        equality = equality_case_check(chain, config.sets[0], config.solver, config.operator_tolerance)
        payload["equality"] = equality.to_dict()
    except InapplicableHypotheses as e:
        logger.warning(f"Equality characterisation does not apply: {e}")
        payload["equality"] = {"applicable": False, "reason": str(e)}
    row = {"instance": f"chain r={chain.size} k={query.steps}", "protocol": None,
           "success": report["exact"], "bound": report["bound"], "note": f"ratio {report['ratio']}"}
    return payload, [row], INSTANCE_COLUMNS, 0


def walk_command(config: RunConfig) -> Result:
    steps = config.tau * config.n
    if abs(steps - round(steps)) > 1e-9:
        logger.warning(f"tau*n = {steps} is not an integer; the exact walk uses {round(steps)} steps")
    payload = {
        "sigma": config.sigma,
        "alpha": config.alpha,
        "tau": config.tau,
        "n": config.n,
        "exponent": walk_exponent(config.alpha, config.tau),
        "laurent_exponent": laurent_exponent(config.tau),
        "main_term": walk_bound(config.sigma, config.alpha, config.tau, config.n),
        "error_term": walk_error_term(config.sigma, config.alpha, config.tau, config.n),
        "isoperimetric_bound": isop_conditional_bound(config.sigma, config.alpha, math.exp(-config.tau)),
    }
    if config.exact:
        size = 1 << config.n
        start = hamming_ball(config.n, max(1, int(round(config.sigma * size))), 1)
        target = hamming_ball(config.n, max(1, int(round(config.sigma ** config.alpha * size))), -1)
        payload["exact_opposed_balls"] = lazy_walk_probability(
            CubeFunction.indicator(config.n, start), CubeFunction.indicator(config.n, target), int(round(steps)))
    row = {"instance": f"walk n={config.n} tau={config.tau}", "protocol": None,
           "success": payload.get("exact_opposed_balls"), "bound": payload["main_term"],
           "note": f"error term {payload['error_term']:.17g}"}
    return payload, [row], INSTANCE_COLUMNS, 0


def verify_command(config: RunConfig) -> Result:
    names = sorted(CHECKS) if config.check == "all" else [config.check]
    options = {"seed": config.seed, "trials": config.trials, "jobs": config.jobs, "tolerance": config.tolerance}
    reports = [run_check(name, **options) for name in names]
    for report in reports:
        if not report.passed:
            logger.warning(f"{report.name} failed: worst slack {report.worst_slack:.3g}, witness {report.witness}")
    code = 0 if all(r.passed for r in reports) else 1
    payload = reports[0].to_dict() if len(reports) == 1 else [r.to_dict() for r in reports]
    rows = [r.to_dict() for r in reports]
    return payload, rows, CHECK_COLUMNS, code


HANDLERS: Dict[str, Callable[[RunConfig], Result]] = {
    "eval": eval_command,
    "search": search_command,
    "counterexample": counterexample_command,
    "star-asym": star_asym_command,
    "markov-bound": markov_bound_command,
    "walk": walk_command,
    "verify": verify_command,
}


def run(config: RunConfig) -> int:
    """Dispatch a validated configuration and emit its report"""
    logger.info(f"Running {config.command}")
    payload, rows, columns, code = HANDLERS[config.command](config)
    emit(payload, rows, columns, config.output_format, config.output_path)
    return code
