"""
Predictor-corrector continuation along the homotopy (t, s).

A branch starts from a round-sphere circle, raises the curvature scale ``s``
at ``t = 0`` where solutions are explicit latitude circles, then deforms the
metric from ``g_0 = g_can`` to ``g_1 = exp(phi) g_can`` at fixed ``s``. Each
accepted state must pass the enabled monitors; a violation ends the branch.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import atan2, pi
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .curve import DiscreteCurve, _normalize, aligned_distance
from .errors import DomainError, SolverError
from .geometry import ConformalMetric
from .solver import CurvatureSpec, SolverOptions, solve_zero
from .verify import SPEED_TOL, Diagnostics, certify


def seed_circle(kappa: float, axis=(0.0, 0.0, 1.0), N: int = 256) -> DiscreteCurve:
    """Uniformly sampled latitude circle of geodesic radius ``arccot(kappa)`` about ``axis``.

    Traversed counter-clockwise around ``axis``, so the cap containing the
    axis is on the left and the round geodesic curvature is ``+kappa``.
    """
    if N < 16:
        raise DomainError("N must be >= 16")
    if kappa < 0:
        raise DomainError("seed curvature must be nonnegative")
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    helper = np.eye(3)[np.argmin(np.abs(a))]
    u1 = _normalize(np.cross(helper, a))
    u2 = np.cross(a, u1)
    r = atan2(1.0, kappa)
    th = 2.0 * pi * np.arange(N) / N
    nodes = np.cos(r) * a + np.sin(r) * (np.cos(th)[:, None] * u1 + np.sin(th)[:, None] * u2)
    return DiscreteCurve(nodes, normalize=True)


@dataclass
class Monitors:
    length_bound: bool = True
    embeddedness: bool = True
    convexity: bool = True
    speed: bool = True


@dataclass
class ContinuationSchedule:
    path: List[Tuple[float, float]]
    max_step: float = 0.05
    min_step: float = 1e-4
    monitors: Monitors = field(default_factory=Monitors)
    continuity_threshold: float = 0.2
    small_curvature_threshold: Optional[float] = None
    start_at_round: bool = True

    def __post_init__(self):
        self.path = [(float(t), float(s)) for t, s in self.path]
        if len(self.path) < 1:
            raise DomainError("schedule path needs at least one waypoint")
        if self.start_at_round and self.path[0][0] != 0.0:
            raise DomainError("schedule path must start at t = 0")
        for t, s in self.path:
            if not 0.0 <= t <= 1.0 or s < 0.0:
                raise DomainError(f"waypoint (t={t}, s={s}) outside [0,1] x [0,inf)")
        if not 0 < self.min_step <= self.max_step:
            raise DomainError("need 0 < min_step <= max_step")

    def check_small_curvature(self, spec: CurvatureSpec):
        if self.small_curvature_threshold is None:
            return
        cmax = spec.with_scale(1.0).max_value()
        worst = max(s for _, s in self.path) * cmax
        if worst > self.small_curvature_threshold:
            raise DomainError(
                f"s * max c = {worst:.4g} exceeds the small-curvature threshold {self.small_curvature_threshold:.4g}")


def default_schedule(s_target: float = 1.0, s_steps: int = 21, t_steps: int = 41, **kwargs) -> ContinuationSchedule:
    """Raise s from 0 to ``s_target`` at t = 0, then t from 0 to 1 at fixed s."""
    path = [(0.0, float(x)) for x in np.linspace(0.0, s_target, s_steps)]
    path += [(float(x), float(s_target)) for x in np.linspace(0.0, 1.0, t_steps)[1:]]
    return ContinuationSchedule(path, **kwargs)


@dataclass
class BranchState:
    t: float
    s: float
    curve: DiscreteCurve
    diagnostics: Diagnostics
    solve: Dict[str, float] = field(default_factory=dict)


@dataclass
class Branch:
    seed_id: str
    states: List[BranchState] = field(default_factory=list)
    status: str = "complete"
    forensics: Dict[str, object] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return self.status == "complete"

    @property
    def terminal(self) -> Optional[BranchState]:
        return self.states[-1] if self.states else None


def monitor_violations(diag: Diagnostics, monitors: Monitors) -> List[str]:
    out = []
    if monitors.embeddedness and not diag.embedded:
        out.append("embeddedness")
    if monitors.length_bound and not diag.length_ok:
        out.append(f"length bound ({diag.length:.6g} > {diag.length_bound:.6g})")
    if monitors.speed and not diag.speed_variation < SPEED_TOL:
        out.append(f"speed variation {diag.speed_variation:.3e}")
    if monitors.convexity and not diag.min_gauss_curvature > 0:
        out.append(f"convexity (min K = {diag.min_gauss_curvature:.6g})")
    return out


class PreconditionError(ValueError):
    pass


def _interp(a, b, lam):
    return (a[0] + lam * (b[0] - a[0]), a[1] + lam * (b[1] - a[1]))


def continue_path(seed: DiscreteCurve, metric: ConformalMetric, spec: CurvatureSpec,
                  schedule: ContinuationSchedule, opts: Optional[SolverOptions] = None,
                  seed_id: str = "seed") -> Branch:
    """Trace one branch through the schedule's waypoints.

    ``metric.at(t)`` and ``spec.with_scale(s)`` generate the homotopy family.
    Predictor: secant through the last two accepted curves (constant for the
    first step). Corrector: ``solve_zero``. Failed steps are halved down to
    ``schedule.min_step``.
    """
    opts = opts or SolverOptions()
    schedule.check_small_curvature(spec)
    branch = Branch(seed_id)
    t0, s0 = schedule.path[0]
    try:
        first = solve_zero(seed, metric.at(t0), spec.with_scale(s0), opts)
    except SolverError as exc:
        raise PreconditionError(f"seed does not converge at the first waypoint: {exc}") from exc
    if aligned_distance(first.curve, seed) > schedule.continuity_threshold:
        raise PreconditionError("seed is not close to a solution at the first waypoint")

    def accept(t, s, result):
        diag = certify(result.curve, metric.at(t), spec.with_scale(s))
        state = BranchState(t, s, result.curve, diag, result.diagnostics.to_dict())
        bad = monitor_violations(diag, schedule.monitors)
        if bad:
            branch.status = "monitor-violation"
            branch.forensics = {"t": t, "s": s, "violations": bad, "curve": result.curve.nodes.tolist(),
                                "diagnostics": diag.to_dict()}
            return False
        branch.states.append(state)
        return True

    if not accept(t0, s0, first):
        return branch

    # path arclength of accepted states, for the secant predictor
    sigma = [0.0]
    travelled = 0.0
    for a, b in zip(schedule.path[:-1], schedule.path[1:]):
        seg = float(np.hypot(b[0] - a[0], b[1] - a[1]))
        if seg == 0.0:
            continue
        lam = 0.0
        dlam_max = min(1.0, schedule.max_step / seg)
        dlam = dlam_max
        while lam < 1.0:
            target = min(1.0, lam + dlam)
            t, s = _interp(a, b, target)
            here = travelled + target * seg
            last = branch.states[-1].curve
            if len(branch.states) >= 2 and sigma[-1] > sigma[-2]:
                ratio = (here - sigma[-1]) / (sigma[-1] - sigma[-2])
                prev = branch.states[-2].curve
                guess = DiscreteCurve(_normalize(last.nodes + ratio * (last.nodes - prev.nodes)))
            else:
                guess = last
            failure = None
            try:
                result = solve_zero(guess, metric.at(t), spec.with_scale(s), opts)
                jump = aligned_distance(result.curve, last)
                if jump > schedule.continuity_threshold:
                    failure = f"branch jump {jump:.3g} > {schedule.continuity_threshold}"
            except SolverError as exc:
                failure = f"{type(exc).__name__}: {exc}"
                result = None
            if failure is None:
                if not accept(t, s, result):
                    return branch
                sigma.append(here)
                lam = target
                dlam = min(dlam_max, 2.0 * dlam)
                continue
            dlam *= 0.5
            if dlam * seg < schedule.min_step:
                branch.status = "step-collapse"
                branch.forensics = {"t": t, "s": s, "reason": failure, "step": dlam * seg,
                                    "last_accepted": (branch.states[-1].t, branch.states[-1].s)}
                return branch
        travelled += seg
    return branch


@dataclass
class TwoBranchResult:
    branch_a: Branch
    branch_b: Branch
    distinctness: float
    separation_threshold: float

    @property
    def success(self) -> bool:
        return self.branch_a.complete and self.branch_b.complete and self.distinctness > self.separation_threshold

    @property
    def merged(self) -> bool:
        return self.branch_a.complete and self.branch_b.complete and not self.distinctness > self.separation_threshold


def run_branches(seeds: Sequence[Tuple[str, DiscreteCurve]], metric, spec, schedule, opts=None,
                 threads: int = 1) -> List[Branch]:
    """Run independent branches, optionally in parallel; output ordered by seed id."""
    def one(item):
        sid, seed = item
        try:
            return continue_path(seed, metric, spec, schedule, opts, seed_id=sid)
        except PreconditionError as exc:
            return Branch(sid, status="precondition-failure", forensics={"reason": str(exc)})

    if threads > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            branches = list(pool.map(one, seeds))
    else:
        branches = [one(item) for item in seeds]
    return sorted(branches, key=lambda b: b.seed_id)


def two_branch_run(metric: ConformalMetric, spec: CurvatureSpec, axes=((0.0, 0.0, 1.0), (1.0, 0.0, 0.0)),
                   schedule: Optional[ContinuationSchedule] = None, N: int = 256,
                   opts: Optional[SolverOptions] = None, separation_threshold: float = 0.1,
                   threads: int = 1) -> TwoBranchResult:
    """Continue two round-sphere circles about different axes to the target metric."""
    schedule = schedule or default_schedule()
    t0, s0 = schedule.path[0]
    seeds = []
    for i, axis in enumerate(axes[:2]):
        kappa = max(0.0, float(spec.with_scale(s0)(np.asarray(axis, float) / np.linalg.norm(axis))))
        seeds.append((f"branch-{i}", seed_circle(kappa, axis, N)))
    a, b = run_branches(seeds, metric, spec, schedule, opts, threads)
    if a.terminal is not None and b.terminal is not None:
        distinct = aligned_distance(a.terminal.curve, b.terminal.curve)
    else:
        distinct = float("nan")
    return TwoBranchResult(a, b, distinct, separation_threshold)
