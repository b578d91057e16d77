"""
Command-line parser and run configuration
"""

import argparse
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from ..core.errors import DomainError, PreconditionError, RhoOutOfRange
from ..core.gaussian import geometric_k_grid
from ..core.markov import SOLVERS
from ..core.search import Family
from ..core.settings import LabSettings
from ..verify import CHECKS

logger = logging.getLogger(__name__)

COMMANDS = ("eval", "search", "counterexample", "star-asym", "markov-bound", "walk", "verify")
FORMATS = ("json", "csv")
MAX_SEED = (1 << 64) - 1


def parse_int_list(text: str) -> List[int]:
    """'1,2,3' -> [1, 2, 3]"""
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def parse_k_grid(text: str) -> List[int]:
    """Either 'a,b,c' or 'min:max:points' for a geometric grid"""
    if ":" in text:
        try:
            low, high, points = (int(x) for x in text.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected min:max:points, got {text!r}")
        if not 1 <= low < high or points < 2:
            raise argparse.ArgumentTypeError(f"need 1 <= min < max and points >= 2, got {text!r}")
        return geometric_k_grid(low, high, points)
    return parse_int_list(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--settings", type=Path, help="JSON settings file (default ./nicd_lab.json)")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    common.add_argument("--jobs", type=int, help="worker threads")
    common.add_argument("--seed", type=int, help="64-bit seed for every random draw")
    common.add_argument("--trials", type=int, help="trial budget of randomized checks")
    common.add_argument("--format", dest="output_format", choices=FORMATS, help="report format")
    common.add_argument("--output", type=Path, help="write the report here instead of standard output")

    parser = argparse.ArgumentParser(
        prog="nicd-lab",
        description="Exact evaluation of correlation distillation protocols on trees and numerical "
                    "checks of the inequalities behind them",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="success probability of a protocol on an instance")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", type=Path, help="instance file")
    source.add_argument("--path-gaps", type=parse_int_list, help="players along a path at these spacings")
    p.add_argument("--protocol", help="encoding of a simple protocol used by every player")
    p.add_argument("--rho", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--allow-unbalanced", action="store_true")
    p.add_argument("--brute-force", action="store_true", help="cross-check by joint enumeration")
    p.add_argument("--monotonize", action="store_true", help="also evaluate the monotone-shifted protocol")

    p = sub.add_parser("search", parents=[common], help="best simple protocol on an instance")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", type=Path, help="instance file")
    source.add_argument("--path", dest="path_length", type=int, help="path with this many edges, all vertices play")
    source.add_argument("--star", dest="star_leaves", type=int, help="star with this many playing leaves")
    p.add_argument("--rho", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--family", choices=[f.value for f in Family if f is not Family.NAMED], default="balanced")
    p.add_argument("--named", help="comma-separated encodings forming the family")
    p.add_argument("--exhaustive", action="store_true", help="also search non-simple protocols (n <= 2)")

    p = sub.add_parser("counterexample", parents=[common], help="star-plus-path scan for non-simple optima")
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--k1-max", type=int, default=200)
    p.add_argument("--k2-max", type=int, default=200)
    p.add_argument("--family", choices=[f.value for f in Family if f is not Family.NAMED], default="balanced")

    p = sub.add_parser(
        "star-asym", parents=[common], help="majority limit on large stars",
        description="Majority limit on large stars. A grid of k also reports the fitted decay: slope is the raw "
                    "least-squares fit of log limit on log k and corrected_slope removes the slowly varying "
                    "prefactor; compare corrected_slope, not slope, with -(1/rho^2 - 1).")
    p.add_argument("--rho", type=float, required=True)
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--k", type=int)
    grid.add_argument("--k-grid", type=parse_k_grid,
                      help="'a,b,c' or 'min:max:points'; the decay band applies to corrected_slope")
    p.add_argument("--ratio-n", type=int, help="also compare the best simple protocol on n bits")

    p = sub.add_parser("markov-bound", parents=[common], help="stay probability against the spectral bound")
    p.add_argument("--chain", type=Path, required=True, help="chain file")
    p.add_argument("--set", dest="sets", action="append", type=parse_int_list, required=True,
                   help="state indices; repeat once per time step or give one set with --k")
    p.add_argument("--k", type=int, help="steps for a single repeated set")
    p.add_argument("--solver", choices=SOLVERS)

    p = sub.add_parser("walk", parents=[common], help="lazy random walk bound on the cube")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--exact", action="store_true", help="evaluate opposed Hamming balls of these sizes")

    p = sub.add_parser("verify", parents=[common], help="run a numerical check")
    p.add_argument("check", choices=sorted(CHECKS) + ["all"])
    p.add_argument("--tolerance", type=float)
    return parser


@dataclass
class RunConfig:
    """Validated options of one command-line run"""
    command: str
    seed: int
    trials: int
    jobs: int
    output_format: str
    solver: str
    probability_tolerance: float = 1e-10
    operator_tolerance: float = 1e-9
    brute_force_limit: int = 24
    max_states: int = 4096
    output_path: Optional[Path] = None
    input_path: Optional[Path] = None
    chain_path: Optional[Path] = None
    rho: Optional[float] = None
    n: Optional[int] = None
    k: Optional[int] = None
    k_grid: Optional[List[int]] = None
    k1_max: Optional[int] = None
    k2_max: Optional[int] = None
    tau: Optional[float] = None
    sigma: Optional[float] = None
    alpha: Optional[float] = None
    gaps: Optional[List[int]] = None
    path_length: Optional[int] = None
    star_leaves: Optional[int] = None
    protocol: Optional[str] = None
    family: str = "balanced"
    named: Optional[str] = None
    sets: List[List[int]] = field(default_factory=list)
    check: Optional[str] = None
    tolerance: Optional[float] = None
    ratio_n: Optional[int] = None
    allow_unbalanced: bool = False
    brute_force: bool = False
    monotonize: bool = False
    exhaustive: bool = False
    exact: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace, settings: LabSettings) -> "RunConfig":
        """Flags override settings, settings override defaults"""
        values = vars(args)
        merged = settings.merged({
            "seed": values.get("seed"),
            "trials": values.get("trials"),
            "jobs": values.get("jobs"),
            "output_format": values.get("output_format"),
            "eigen_solver": values.get("solver"),
        })
        config = cls(
            command=args.command,
            seed=int(merged["seed"]),
            trials=int(merged["trials"]),
            jobs=int(merged["jobs"]),
            output_format=str(merged["output_format"]),
            solver=str(merged["eigen_solver"]),
            probability_tolerance=float(merged["tolerance"]),
            operator_tolerance=float(merged["operator_tolerance"]),
            brute_force_limit=int(merged["brute_force_limit"]),
            max_states=int(merged["max_states"]),
            output_path=values.get("output"),
            input_path=values.get("input"),
            chain_path=values.get("chain"),
            rho=values.get("rho"),
            n=values.get("n"),
            k=values.get("k"),
            k_grid=values.get("k_grid"),
            k1_max=values.get("k1_max"),
            k2_max=values.get("k2_max"),
            tau=values.get("tau"),
            sigma=values.get("sigma"),
            alpha=values.get("alpha"),
            gaps=values.get("path_gaps"),
            path_length=values.get("path_length"),
            star_leaves=values.get("star_leaves"),
            protocol=values.get("protocol"),
            family=values.get("family") or "balanced",
            named=values.get("named"),
            sets=values.get("sets") or [],
            check=values.get("check"),
            tolerance=values.get("tolerance"),
            ratio_n=values.get("ratio_n"),
            allow_unbalanced=bool(values.get("allow_unbalanced")),
            brute_force=bool(values.get("brute_force")),
            monotonize=bool(values.get("monotonize")),
            exhaustive=bool(values.get("exhaustive")),
            exact=bool(values.get("exact")),
        )
        config.validate()
        return config

    def validate(self):
        """
        Check every numeric option against the preconditions of its command

        Raises:
            PreconditionError, RhoOutOfRange, DomainError
        """
        if self.command not in COMMANDS:
            raise PreconditionError(f"unknown command {self.command!r}")
        if not 0 <= self.seed <= MAX_SEED:
            raise PreconditionError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.trials < 1:
            raise PreconditionError(f"trials must be positive, got {self.trials}")
        if self.jobs < 1:
            raise PreconditionError(f"jobs must be positive, got {self.jobs}")
        if self.output_format not in FORMATS:
            raise PreconditionError(f"output format must be json or csv, got {self.output_format!r}")
        if self.solver not in SOLVERS:
            raise PreconditionError(f"eigen solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.rho is not None and not 0.0 <= self.rho <= 1.0:
            raise RhoOutOfRange(f"rho must lie in [0, 1], got {self.rho}")
        if self.n is not None and not 1 <= self.n <= 24:
            raise PreconditionError(f"n must lie in 1..24, got {self.n}")
        for name in ("k", "k1_max", "k2_max", "path_length", "star_leaves", "ratio_n"):
            value = getattr(self, name)
            if value is not None and value < (0 if name in ("k1_max", "k2_max") else 1):
                raise PreconditionError(f"{name.replace('_', '-')} must be positive, got {value}")
        if self.k_grid is not None and (not self.k_grid or min(self.k_grid) < 1):
            raise PreconditionError("the k grid needs positive integers")
        if self.gaps is not None and (not self.gaps or min(self.gaps) < 1):
            raise PreconditionError("path gaps must be positive integers")
        if self.tau is not None and not self.tau > 0:
            raise DomainError(f"tau must be positive, got {self.tau}")
        if self.sigma is not None and not 0.0 < self.sigma <= 1.0:
            raise DomainError(f"sigma must lie in (0, 1], got {self.sigma}")
        if self.alpha is not None and self.alpha < 0:
            raise DomainError(f"alpha must be nonnegative, got {self.alpha}")
        if self.probability_tolerance < 0 or self.operator_tolerance < 0:
            raise PreconditionError("settings tolerances must be nonnegative")
        if self.tolerance is not None and self.tolerance < 0:
            raise PreconditionError(f"tolerance must be nonnegative, got {self.tolerance}")
        self._validate_command()

    def _validate_command(self):
        needs_rho_n = (self.command == "eval" and self.gaps is not None) or \
                      (self.command == "search" and self.input_path is None)
        if needs_rho_n and (self.rho is None or self.n is None):
            raise PreconditionError(f"{self.command} without an instance file needs --rho and --n")
        if self.command == "eval" and self.gaps is not None and self.protocol is None:
            self.protocol = "dict:1"
        if self.command == "star-asym" and not 0.0 < self.rho < 1.0:
            raise RhoOutOfRange(f"star-asym needs rho in (0, 1), got {self.rho}")
        if self.command == "counterexample" and self.n < 4:
            raise PreconditionError(f"counterexample needs n >= 4, got {self.n}")
        if self.command == "markov-bound" and len(self.sets) == 1 and self.k is None:
            raise PreconditionError("a single --set needs --k steps")
        if self.command == "markov-bound" and len(self.sets) > 1 and self.k is not None:
            raise PreconditionError("give either one --set with --k or one --set per time step")
