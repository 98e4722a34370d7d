"""
Single-objective baseline solvers.

This module provides power minimization (the feasibility gate), SE
maximization, GEE maximization through Dinkelbach's method and the
green-power search. All of them run the shared SCA kernel with a
dedicated objective kind.
"""

import logging

import numpy as np

from ..config import NomaSettings, get_settings
from ..exceptions import (
    InfeasibleError,
    IterationLimitError,
    NumericalFailureError,
    SolverError,
    ValidationError,
)
from ..models.cone import SolveStatus
from ..models.experiment import FeasibilityResult, GreenPower
from ..models.sca import IterationTrace, ObjectiveKind
from ..models.system import BeamformerSolution, ChannelSet, SystemParams
from ..utils import system_model as sm
from ..utils.cone_builder import ConeProgramBuilder, dot
from .conic_solver import ConicSolver
from .sca_kernel import ScaContext, ScaKernel, align_phases, project_to_budget

logger = logging.getLogger(__name__)

POWER_MIN_EPS = 1e-6
GREEN_POWER_SLACK = 0.01
START_RETRIES = 3
# Direction margins below this multiple of the solver tolerance count as zero.
MARGIN_TOL_FACTOR = 100.0


class BaselineController:
    """
    Power-min, SE-Max and GEE-Max designs for one cell.

    Example:
        >>> from noma_tradeoff.controllers import BaselineController
        >>>
        >>> baselines = BaselineController()
        >>> gate = baselines.feasibility_check(cs, params)
        >>> if gate.feasible:
        ...     best = baselines.solve_gee_max(cs, params)
    """

    def __init__(
        self,
        settings: NomaSettings | None = None,
        kernel: ScaKernel | None = None,
    ) -> None:
        """
        Initialize the controller.

        Args:
            settings: Solver settings. If not provided, loads from environment/.env file.
            kernel: Shared SCA kernel (built from ``settings`` when omitted)
        """
        self.settings = settings or get_settings()
        self.kernel = kernel or ScaKernel(self.settings)
        self.solver: ConicSolver = self.kernel.solver

    def context(
        self,
        cs: ChannelSet,
        params: SystemParams,
        kind: ObjectiveKind,
        **kwargs: object,
    ) -> ScaContext:
        """ScaContext filled from the controller settings."""
        options: dict[str, object] = {
            "pieces": self.settings.envelope_pieces,
            "surrogate": self.settings.surrogate,
            "taylor_guard": self.settings.taylor_guard,
            "sic_margin": self.settings.sic_margin,
        }
        options.update(kwargs)
        return ScaContext(cs, params, kind, **options)  # type: ignore[arg-type]

    # ------------------------------------------------------------------
    # starting points

    def common_direction(self, cs: ChannelSet, weights: np.ndarray | None = None) -> np.ndarray:
        """
        Unit direction u maximizing min_k Re(h_k^H u) / ||h_k||.

        The weakest user's message is decoded at every receiver, so a
        beamformer with positive real gain everywhere exists only if this
        margin is positive. With a single antenna that fails whenever the
        channel phases do not fit in one half-plane (possible from K = 3 on).

        Args:
            cs: Channel set
            weights: Optional positive per-user weights on the margins

        Returns:
            Complex N-vector

        Raises:
            ValidationError: If no direction reaches every user with a positive margin
            NumericalFailureError: If the direction program cannot be solved
        """
        n = cs.num_antennas
        weights = np.ones(cs.num_users) if weights is None else weights
        bld = ConeProgramBuilder()
        u = bld.add_variable("u", 2 * n)
        t = bld.add_variable("t", 1)[0]
        h = cs.channels
        for k in range(cs.num_users):
            coef = np.concatenate([h[k].real, h[k].imag]) / (cs.gains[k] ** 0.5)
            bld.ge(dot(coef, list(u)), t * float(weights[k]))
        bld.soc(1.0, list(u))
        bld.maximize(t)
        program = bld.build()
        report = self.solver.solve(program)
        if report.status != SolveStatus.OPTIMAL:
            raise NumericalFailureError(
                "Common direction program failed", details=report.summary()
            )
        floor = max(1e-6, MARGIN_TOL_FACTOR * self.settings.solver_tol)
        if report.objective <= floor:
            raise ValidationError(
                "Channels admit no beamformer with positive real gain at every receiver",
                details={
                    "margin": report.objective,
                    "num_antennas": cs.num_antennas,
                    "num_users": cs.num_users,
                },
            )
        x = program.variable(report.x, "u")
        direction = x[:n] + 1j * x[n:]
        return direction / np.linalg.norm(direction)

    def constructive_start(
        self,
        cs: ChannelSet,
        params: SystemParams,
        target_power: float | None = None,
        min_rate: bool = True,
        attempt: int = 0,
    ) -> np.ndarray:
        """
        Beamformers w_i = s * ratio^i * u satisfying the SIC chain and the SINR targets.

        Args:
            cs: Ordered channel set
            params: System parameters
            target_power: Transmit power to scale up to (never below the
                power the targets need)
            min_rate: Whether the SINR targets must hold
            attempt: Retry index; positive values perturb the margin weights

        Returns:
            K x N complex beamformers

        Raises:
            ValidationError: If the channels admit no common direction
        """
        weights = None
        if attempt > 0:
            rng = np.random.default_rng(attempt)
            weights = 1.0 + 0.5 * rng.random(cs.num_users)
        u = self.common_direction(cs, weights)

        x = np.conj(cs.channels) @ u
        g = x.real
        noise = np.asarray(params.noise_vars, dtype=float)
        eta = params.sinr_thresholds if min_rate else np.zeros(cs.num_users)
        ratio_sq = 1.5 + 2.0 * float(np.max(eta, initial=0.0)) * float(np.max(np.abs(x) ** 2 / g**2))

        k_users = cs.num_users
        amplitudes = ratio_sq ** (np.arange(k_users) / 2.0)
        scale_sq = 0.0
        for i in range(k_users):
            if eta[i] <= 0.0:
                continue
            for k in range(i + 1):
                interference = np.sum(amplitudes[:i] ** 2) * abs(x[k]) ** 2
                denominator = amplitudes[i] ** 2 * g[k] ** 2 - eta[i] * interference
                scale_sq = max(scale_sq, 1.1 * eta[i] * noise[k] / denominator)

        w = amplitudes[:, None] * u[None, :]
        base = sm.tx_power_of(w)
        needed = scale_sq * base
        power = needed if target_power is None else max(needed, target_power)
        if power <= 0.0:
            power = 1e-6 * params.p_ava
        return w * np.sqrt(power / base)

    # ------------------------------------------------------------------
    # baselines

    def solve_power_min(
        self, cs: ChannelSet, params: SystemParams
    ) -> tuple[float, BeamformerSolution]:
        """
        Minimize the transmit power under the rate targets and the SIC chain.

        Args:
            cs: Ordered channel set
            params: System parameters (the budget is ignored)

        Returns:
            Tuple of P* in watts and the beamformers

        Raises:
            InfeasibleError: If every starting point fails
            ValidationError: If the channels admit no common direction
        """
        if not np.any(params.sinr_thresholds > 0.0):
            w = np.zeros((cs.num_users, cs.num_antennas), dtype=complex)
            return 0.0, sm.evaluate(w, cs, params)

        ctx = self.context(cs, params, ObjectiveKind.POWER_MIN)
        failures: list[str] = []
        for attempt in range(START_RETRIES + 1):
            try:
                w0 = self.constructive_start(cs, params, attempt=attempt)
                state = self.kernel.derive_state(w0, ctx)
                state, trace = self.kernel.run(
                    state, ctx, eps=POWER_MIN_EPS / 2.0, relative=True
                )
            except (InfeasibleError, SolverError) as e:
                logger.warning("Power-min start %d failed: %s", attempt, e)
                failures.append(str(e))
                continue

            p_star = sm.tx_power_of(state.w)
            logger.info(
                "Power minimization: P* = %.6g W after %d iterations",
                p_star,
                trace.iterations,
            )
            return p_star, sm.evaluate(state.w, cs, params)

        raise InfeasibleError(
            "Power minimization failed from every starting point",
            details={
                "attempts": START_RETRIES + 1,
                "failures": failures,
                "sinr_thresholds": params.sinr_thresholds.tolist(),
            },
        )

    def feasibility_check(self, cs: ChannelSet, params: SystemParams) -> FeasibilityResult:
        """Feasible iff the minimum transmit power fits the budget."""
        p_star, solution = self.solve_power_min(cs, params)
        feasible = p_star <= params.p_ava
        if not feasible:
            logger.info("Infeasible instance: P* = %.6g W > P_ava = %.6g W", p_star, params.p_ava)
        return FeasibilityResult(
            feasible=feasible, p_star=p_star, p_ava=params.p_ava, solution=solution
        )

    def starting_beamformers(
        self, cs: ChannelSet, params: SystemParams, with_min_rate: bool = True
    ) -> np.ndarray:
        """
        Feasible beamformers strictly inside the budget.

        With active rate targets this is the power-min solution scaled to
        min(2 P*, P_ava); otherwise a constructive start at half the budget.

        Raises:
            InfeasibleError: If P* exceeds the budget
            ValidationError: If the channels admit no common direction
        """
        if with_min_rate and np.any(params.sinr_thresholds > 0.0):
            gate = self.feasibility_check(cs, params)
            if not gate.feasible:
                raise InfeasibleError(
                    "Rate targets need more power than available; fall back to SE-Max",
                    details={"p_star": gate.p_star, "p_ava": gate.p_ava},
                )
            assert gate.solution is not None
            w = gate.solution.beamformers
            target = min(2.0 * gate.p_star, params.p_ava)
            w = w * np.sqrt(target / gate.p_star)
        else:
            w = self.constructive_start(
                cs, params, target_power=0.5 * params.p_ava, min_rate=False
            )
        return align_phases(w, cs)

    def run_se_max(
        self, cs: ChannelSet, params: SystemParams, with_min_rate: bool = False
    ) -> tuple[BeamformerSolution, IterationTrace]:
        """`solve_se_max` returning the iteration trace as well."""
        w0 = self.starting_beamformers(cs, params, with_min_rate)
        ctx = self.context(cs, params, ObjectiveKind.SUM_RATE, min_rate=with_min_rate)
        state, trace = self.kernel.run(self.kernel.derive_state(w0, ctx), ctx)
        w = project_to_budget(state.w, params.p_ava)
        solution = sm.evaluate(w, cs, params)
        logger.info(
            "SE-Max%s: se = %.6g bits/s/Hz, P = %.6g W",
            " (min-rate)" if with_min_rate else "",
            solution.se,
            solution.tx_power,
        )
        return solution, trace

    def solve_se_max(
        self, cs: ChannelSet, params: SystemParams, with_min_rate: bool = False
    ) -> BeamformerSolution:
        """
        Maximize the spectral efficiency.

        Args:
            cs: Ordered channel set
            params: System parameters
            with_min_rate: Keep the per-user rate targets

        Returns:
            BeamformerSolution

        Raises:
            InfeasibleError: If with_min_rate is set and the targets do not fit the budget
            ValidationError: If the channels admit no common direction
            NumericalFailureError: If a subproblem cannot be solved
        """
        return self.run_se_max(cs, params, with_min_rate)[0]

    def solve_gee_max(self, cs: ChannelSet, params: SystemParams) -> BeamformerSolution:
        """
        Maximize the global energy efficiency with Dinkelbach's method.

        The parametric problem max sum(rho) - lambda * (P_t / eps0 + P_l) is
        solved by SCA for each lambda; lambda starts at the GEE of the
        power-min solution and is updated to the achieved ratio.

        Args:
            cs: Ordered channel set
            params: System parameters

        Returns:
            BeamformerSolution whose GEE carries the configured bandwidth

        Raises:
            InfeasibleError: If the rate targets do not fit the budget
            IterationLimitError: If the outer loop does not converge
            SolverError: If a subproblem cannot be solved
        """
        w = self.starting_beamformers(cs, params, with_min_rate=True)
        unit = params.model_copy(update={"bandwidth": 1.0})
        lam = sm.gee_of(w, cs, unit) if np.any(params.sinr_thresholds > 0.0) else 0.0
        tol = self.settings.dinkelbach_tol
        history: list[float] = []

        for iteration in range(1, self.settings.dinkelbach_max_iter + 1):
            ctx = self.context(cs, params, ObjectiveKind.DINKELBACH, lam=lam)
            state, _ = self.kernel.run(self.kernel.derive_state(w, ctx), ctx)
            w = project_to_budget(state.w, params.p_ava)
            numerator = sm.se_of(w, cs, params)
            denominator = sm.consumed_power(sm.tx_power_of(w), params)
            parametric = numerator - lam * denominator
            history.append(parametric)
            logger.debug(
                "Dinkelbach %d: lambda = %.9g, F = %.3e", iteration, lam, parametric
            )
            if abs(parametric) <= tol * max(1.0, lam * denominator):
                solution = sm.evaluate(w, cs, params)
                logger.info(
                    "GEE-Max: gee = %.6g after %d Dinkelbach iterations, P = %.6g W",
                    solution.gee,
                    iteration,
                    solution.tx_power,
                )
                return solution
            lam = sm.energy_efficiency(numerator, sm.tx_power_of(w), params, bandwidth=1.0)

        raise IterationLimitError(
            "Dinkelbach iteration did not converge",
            details={
                "iterations": self.settings.dinkelbach_max_iter,
                "lambda": lam,
                "parametric_values": history,
            },
        )

    def find_green_power(
        self, cs: ChannelSet, params: SystemParams, p_grid: list[float]
    ) -> GreenPower:
        """
        Smallest budget at which GEE-Max stops using the whole budget.

        A budget counts as saturated when the GEE-Max transmit power is more
        than 1% below it. Budgets whose rate targets do not fit are skipped.

        Args:
            cs: Ordered channel set
            params: System parameters; the budget is replaced by each grid value
            p_grid: Ascending budgets in watts

        Returns:
            GreenPower; ``saturated`` is False when no grid point saturates

        Raises:
            ValidationError: If the grid is empty or not ascending
        """
        if not p_grid:
            raise ValidationError("Power grid cannot be empty")
        if any(b <= a for a, b in zip(p_grid, p_grid[1:], strict=False)):
            raise ValidationError("Power grid must be ascending", details={"grid": p_grid})

        last = GreenPower(power_w=float(p_grid[-1]), saturated=False)
        for p in p_grid:
            try:
                solution = self.solve_gee_max(cs, params.with_budget(p))
            except InfeasibleError:
                logger.info("Budget %.6g W cannot meet the rate targets; skipped", p)
                continue
            last = GreenPower(
                power_w=float(p),
                saturated=False,
                tx_power_w=solution.tx_power,
                gee=solution.gee,
            )
            if solution.tx_power < (1.0 - GREEN_POWER_SLACK) * p:
                logger.info("Green power reached at %.6g W", p)
                return last.model_copy(update={"saturated": True})
        return last.model_copy(update={"power_w": float(p_grid[-1])})
