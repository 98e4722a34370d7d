"""
SE-EE trade-off beamforming by successive convex approximation.

The trade-off maximizes alpha * GEE / f2* + (1 - alpha) * SE / f1* under
per-user rate targets, the SIC power ordering and the power budget. The
normalizing constants come from the SE-Max and GEE-Max baselines.
"""

import logging

import numpy as np

from ..config import NomaSettings, get_settings
from ..exceptions import NomaTradeoffError, NumericalFailureError, ValidationError
from ..models.cone import ConeProgram
from ..models.sca import (
    IterationTrace,
    ObjectiveKind,
    ParetoPoint,
    SlackState,
    TradeoffConfig,
)
from ..models.system import BeamformerSolution, ChannelSet, SystemParams
from ..utils import system_model as sm
from .baselines import BaselineController
from .sca_kernel import ScaContext, ScaKernel, project_to_budget

logger = logging.getLogger(__name__)

RATE_TOLERANCE = 1e-6
DOMINANCE_TOLERANCE = 5e-3
VIOLATION_PREFIX = "violates:"


def verify_solution(
    solution: BeamformerSolution,
    cs: ChannelSet,
    params: SystemParams,
    rate_tol: float = RATE_TOLERANCE,
    sic_tol: float = sm.SIC_TOLERANCE,
) -> list[str]:
    """
    Re-check a solution against the exact rate, SIC and budget constraints.

    Returns:
        Names of the violated constraints; empty when all hold
    """
    problems = []
    rates = np.asarray(solution.per_user_rates)
    if np.any(rates < np.asarray(params.rate_thresholds) - rate_tol):
        problems.append("rate")
    if not sm.check_sic_ordering(solution.beamformers, cs, sic_tol):
        problems.append("sic")
    if solution.tx_power > params.p_ava * (1.0 + 1e-8):
        problems.append("power")
    return problems


def solution_status(solution: BeamformerSolution, cs: ChannelSet, params: SystemParams) -> str:
    """``ok``, or ``violates:`` followed by the failed checks joined by ``+``."""
    problems = verify_solution(solution, cs, params)
    return "ok" if not problems else VIOLATION_PREFIX + "+".join(problems)


def mark_dominated(points: list[ParetoPoint], tol: float = DOMINANCE_TOLERANCE) -> list[ParetoPoint]:
    """
    Flag points strictly dominated in both SE and GEE by another point.

    A point is dominated when some other successful point exceeds both of
    its metrics by more than the relative tolerance.
    """
    ok = [p for p in points if p.ok]
    flagged = []
    for p in points:
        dominated = p.ok and any(
            q is not p and q.se > p.se * (1.0 + tol) and q.gee > p.gee * (1.0 + tol)
            for q in ok
        )
        flagged.append(p.model_copy(update={"dominated": dominated}))
    return flagged


class TradeoffController:
    """
    Controller for the weighted SE-EE trade-off design.

    Example:
        >>> from noma_tradeoff.controllers import TradeoffController
        >>>
        >>> tradeoff = TradeoffController()
        >>> f1, f2 = tradeoff.normalize(cs, params)
        >>> solution, trace = tradeoff.solve_tradeoff(cs, params, alpha=0.5)
        >>> trace.to_csv("trace.csv")
    """

    def __init__(
        self,
        settings: NomaSettings | None = None,
        baselines: BaselineController | None = None,
    ) -> None:
        """
        Initialize the controller.

        Args:
            settings: Solver settings. If not provided, loads from environment/.env file.
            baselines: Baseline controller sharing the same kernel
        """
        self.settings = settings or get_settings()
        self.baselines = baselines or BaselineController(self.settings)
        self.kernel: ScaKernel = self.baselines.kernel

    def normalize(self, cs: ChannelSet, params: SystemParams) -> tuple[float, float]:
        """
        Normalization constants: the SE-Max SE and the bandwidth-free GEE-Max GEE.

        Raises:
            NumericalFailureError: If a constant is not positive
        """
        unit = params.model_copy(update={"bandwidth": 1.0})
        f1_star = self.baselines.solve_se_max(cs, unit, with_min_rate=False).se
        f2_star = self.baselines.solve_gee_max(cs, unit).gee
        if f1_star <= 0.0 or f2_star <= 0.0:
            raise NumericalFailureError(
                "Normalization constants must be positive",
                details={"f1_star": f1_star, "f2_star": f2_star},
            )
        logger.info("Normalization: f1* = %.9g, f2* = %.9g", f1_star, f2_star)
        return f1_star, f2_star

    def default_config(self, alpha: float, f1_star: float, f2_star: float) -> TradeoffConfig:
        """TradeoffConfig with the iteration settings of this controller."""
        return TradeoffConfig(
            alpha=alpha,
            f1_star=f1_star,
            f2_star=f2_star,
            eps=self.settings.sca_eps,
            max_outer_iters=self.settings.max_outer_iters,
            taylor_guard=self.settings.taylor_guard,
            envelope_pieces=self.settings.envelope_pieces,
            surrogate=self.settings.surrogate,
            sic_margin=self.settings.sic_margin,
        )

    def context(self, cs: ChannelSet, params: SystemParams, cfg: TradeoffConfig) -> ScaContext:
        return ScaContext(
            cs,
            params,
            ObjectiveKind.TRADEOFF,
            alpha=cfg.alpha,
            f1_star=cfg.f1_star,
            f2_star=cfg.f2_star,
            min_rate=True,
            pieces=cfg.envelope_pieces,
            rho_max=cfg.rho_max,
            surrogate=cfg.surrogate,
            taylor_guard=cfg.taylor_guard,
            sic_margin=cfg.sic_margin,
        )

    def initialize(
        self, cs: ChannelSet, params: SystemParams, cfg: TradeoffConfig
    ) -> SlackState:
        """
        Feasible starting point for the trade-off loop.

        The power-min beamformers are scaled to min(2 P*, P_ava) and every
        slack is set a small margin inside its constraint.

        Raises:
            InfeasibleError: If the rate targets need more than the budget;
                callers fall back to `BaselineController.solve_se_max`
        """
        w0 = self.baselines.starting_beamformers(cs, params, with_min_rate=True)
        return self.kernel.derive_state(w0, self.context(cs, params, cfg))

    def build_subproblem(
        self,
        state: SlackState,
        cfg: TradeoffConfig,
        cs: ChannelSet,
        params: SystemParams,
    ) -> ConeProgram:
        """
        Convex restriction of the trade-off problem around ``state``.

        Raises:
            GuardError: If z - 1 or r - 1 is below the Taylor guard
        """
        return self.kernel.build(state, self.context(cs, params, cfg))

    def solve_tradeoff(
        self,
        cs: ChannelSet,
        params: SystemParams,
        alpha: float,
        cfg: TradeoffConfig | None = None,
    ) -> tuple[BeamformerSolution, IterationTrace]:
        """
        Run the trade-off SCA loop for one weight.

        Args:
            cs: Ordered channel set
            params: System parameters
            alpha: Weight of the normalized GEE, in [0, 1]
            cfg: Run parameters; normalization is computed when omitted

        Returns:
            Tuple of the final beamformers and the iteration trace

        Raises:
            ValidationError: If alpha lies outside [0, 1]
            InfeasibleError: If the rate targets do not fit the budget
            NumericalFailureError: If a subproblem fails mid-run
        """
        if not 0.0 <= alpha <= 1.0:
            raise ValidationError("alpha must lie in [0, 1]", details={"alpha": alpha})
        if cfg is None:
            f1_star, f2_star = self.normalize(cs, params)
            cfg = self.default_config(alpha, f1_star, f2_star)
        else:
            cfg = cfg.model_copy(update={"alpha": alpha})

        ctx = self.context(cs, params, cfg)
        w0 = self.baselines.starting_beamformers(cs, params, with_min_rate=True)
        state = self.kernel.derive_state(w0, ctx)
        state, trace = self.kernel.run(state, ctx, eps=cfg.eps, max_iters=cfg.max_outer_iters)
        if not trace.converged:
            logger.warning(
                "Trade-off run for alpha = %.3g stopped after %d iterations without converging",
                alpha,
                trace.iterations,
            )

        w = project_to_budget(state.w, params.p_ava)
        solution = sm.evaluate(w, cs, params)
        problems = verify_solution(solution, cs, params)
        if problems:
            logger.warning("Trade-off solution violates %s", ", ".join(problems))
        logger.info(
            "Trade-off alpha = %.3g: se = %.6g, gee = %.6g, P = %.6g W (%d iterations)",
            alpha,
            solution.se,
            solution.gee,
            solution.tx_power,
            trace.iterations,
        )
        return solution, trace

    def pareto_sweep(
        self,
        cs: ChannelSet,
        params: SystemParams,
        alpha_grid: list[float],
        cfg: TradeoffConfig | None = None,
        tol: float = DOMINANCE_TOLERANCE,
    ) -> list[ParetoPoint]:
        """
        One trade-off solve per weight, annotated with non-domination flags.

        Failures of single points are recorded and the sweep continues.

        Raises:
            ValidationError: If a weight lies outside [0, 1]
        """
        if any(not 0.0 <= a <= 1.0 for a in alpha_grid):
            raise ValidationError("alpha grid must lie in [0, 1]", details={"grid": alpha_grid})
        if cfg is None:
            f1_star, f2_star = self.normalize(cs, params)
            cfg = self.default_config(0.0, f1_star, f2_star)

        points = []
        for alpha in alpha_grid:
            try:
                solution, _ = self.solve_tradeoff(cs, params, alpha, cfg)
            except NomaTradeoffError as e:
                logger.warning("Pareto point alpha = %.3g failed: %s", alpha, e)
                points.append(
                    ParetoPoint(alpha=alpha, status=type(e).__name__, error=str(e))
                )
                continue
            points.append(
                ParetoPoint(
                    alpha=alpha,
                    se=solution.se,
                    gee=solution.gee,
                    tx_power=solution.tx_power,
                    status=solution_status(solution, cs, params),
                )
            )
        return mark_dominated(points, tol)
