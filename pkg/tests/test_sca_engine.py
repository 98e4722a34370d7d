"""
Tests for the SCA kernel and the trade-off controller.

Tests cover:
- Closed-form subproblem sizes against assembled programs
- Feasibility of the linearization point in its own subproblem
- Guard handling, budget projection and phase alignment
- Solution verification and Pareto dominance flags
- End-to-end trade-off runs (slow)
"""

import numpy as np
import pytest

from noma_tradeoff.controllers import (
    BaselineController,
    ScaContext,
    ScaKernel,
    TradeoffController,
    subproblem_dimensions,
    verify_solution,
)
from noma_tradeoff.controllers.sca_engine import mark_dominated, solution_status
from noma_tradeoff.controllers.sca_kernel import align_phases, project_to_budget
from noma_tradeoff.exceptions import GuardError, IterationLimitError, ValidationError
from noma_tradeoff.models import (
    ChannelSet,
    ConeKind,
    ObjectiveKind,
    ParetoPoint,
    SystemParams,
    TradeoffConfig,
)
from noma_tradeoff.utils import generate_channels
from noma_tradeoff.utils import system_model as sm
from noma_tradeoff.utils.cones import conic_margin

PIECES = 8

CASES = [
    (ObjectiveKind.TRADEOFF, 0.5, "conservative"),
    (ObjectiveKind.TRADEOFF, 0.5, "taylor"),
    (ObjectiveKind.TRADEOFF, 0.0, "conservative"),
    (ObjectiveKind.TRADEOFF, 1.0, "taylor"),
    (ObjectiveKind.SUM_RATE, 0.0, "conservative"),
    (ObjectiveKind.DINKELBACH, 0.0, "conservative"),
    (ObjectiveKind.POWER_MIN, 0.0, "conservative"),
]


@pytest.fixture
def kernel(settings) -> ScaKernel:
    """Kernel sharing the test settings."""
    return ScaKernel(settings)


@pytest.fixture
def baselines(settings, kernel) -> BaselineController:
    """Baseline controller sharing the kernel."""
    return BaselineController(settings, kernel)


def _context(cs, params, kind, alpha, surrogate) -> ScaContext:
    return ScaContext(
        cs,
        params,
        kind,
        alpha=alpha,
        f1_star=2.0,
        f2_star=0.5,
        lam=0.1,
        pieces=PIECES,
        surrogate=surrogate,
    )


@pytest.fixture
def scalar_pair_solution():
    """Two scalar users with beamformers meeting the SIC order."""
    cs = ChannelSet(channels=np.array([[2.0], [1.0]]), distances=[1.0, 2.0], ordered=True)
    params = SystemParams(
        num_antennas=1,
        num_users=2,
        p_ava=10.0,
        noise_vars=[1.0, 1.0],
        rate_thresholds=[0.5, 0.5],
    )
    return cs, params, np.array([[1.0], [2.0]], dtype=complex)


class TestSubproblemDimensions:
    """Tests for subproblem_dimensions against the assembled programs."""

    @pytest.mark.parametrize("num_antennas,num_users", [(2, 2), (3, 5), (4, 6)])
    @pytest.mark.parametrize("kind,alpha,surrogate", CASES)
    def test_counts_match_build(
        self, kernel, make_params, num_antennas, num_users, kind, alpha, surrogate
    ):
        """Test variable, row, cone and equality counts for every objective kind."""
        distances = [float(d) for d in range(1, num_users + 1)]
        cs = generate_channels(11, distances, 1.0, num_antennas)
        params = make_params(cs, p_ava=100.0)
        ctx = _context(cs, params, kind, alpha, surrogate)
        rng = np.random.default_rng(0)
        w = rng.standard_normal((num_users, num_antennas)) + 1j * rng.standard_normal(
            (num_users, num_antennas)
        )
        state = kernel.derive_state(w, ctx)
        state.z = np.maximum(state.z, 1.5)
        state.r = np.maximum(state.r, 1.5)
        program = kernel.build(state, ctx)

        dims = subproblem_dimensions(
            num_antennas, num_users, PIECES, kind, alpha, surrogate=surrogate
        )
        assert program.num_variables == dims["variables"]
        assert program.count_rows(ConeKind.NONNEG) == dims["nonneg_rows"]
        assert program.count_cones(ConeKind.SECOND_ORDER) == dims["soc_blocks"]
        assert program.num_equalities == dims["equalities"]

    def test_tradeoff_variable_count(self):
        """Test the closed form 2K^2 + 3K + 2NK + 4 of the trade-off program."""
        for n, k in [(2, 2), (3, 5), (4, 6)]:
            dims = subproblem_dimensions(n, k, 64)
            assert dims["variables"] == 2 * k * k + 3 * k + 2 * n * k + 4

    def test_without_min_rate(self, kernel, make_params, two_users):
        """Test that dropping the rate targets removes their cones."""
        params = make_params(two_users, p_ava=100.0)
        ctx = ScaContext(
            two_users, params, ObjectiveKind.SUM_RATE, min_rate=False, pieces=PIECES
        )
        w = np.ones((2, 2), dtype=complex) * np.array([[1.0], [2.0]])
        state = kernel.derive_state(w, ctx)
        state.z = np.maximum(state.z, 1.5)
        program = kernel.build(state, ctx)
        dims = subproblem_dimensions(2, 2, PIECES, ObjectiveKind.SUM_RATE, min_rate_users=0)
        assert program.count_cones(ConeKind.SECOND_ORDER) == dims["soc_blocks"]


class TestLinearizationPoint:
    """Tests for derive_state, pack and the guard."""

    @pytest.mark.parametrize("kind,alpha,surrogate", CASES)
    def test_base_point_is_feasible(
        self, kernel, baselines, make_params, three_users, kind, alpha, surrogate
    ):
        """Test that a feasible point with derived slacks satisfies its own subproblem."""
        params = make_params(three_users, p_ava=100.0, eta=0.2)
        w0 = baselines.constructive_start(three_users, params)
        assert sm.check_sic_ordering(w0, three_users)
        ctx = _context(three_users, params, kind, alpha, surrogate)
        state = kernel.derive_state(w0, ctx)
        program = kernel.build(state, ctx)
        x = kernel.pack(state, program)
        assert conic_margin(program, x) >= -1e-9

        unpacked = kernel.unpack(program, x, ctx)
        np.testing.assert_allclose(unpacked.w, state.w)
        assert kernel.objective(unpacked, ctx) == pytest.approx(kernel.objective(state, ctx))

    def test_guard_raises(self, kernel, make_params, two_users):
        """Test that z - 1 below the guard is rejected."""
        params = make_params(two_users)
        ctx = ScaContext(two_users, params, ObjectiveKind.SUM_RATE, pieces=PIECES)
        state = kernel.derive_state(np.ones((2, 2), dtype=complex), ctx)
        state.z = np.array([1.0 + 1e-9, 2.0])
        with pytest.raises(GuardError):
            kernel.build(state, ctx)
        kernel.build(kernel.clamp(state, ctx), ctx)

    def test_power_min_has_no_guard(self, kernel, make_params, two_users):
        """Test that the power-min kind never checks z."""
        params = make_params(two_users)
        ctx = ScaContext(two_users, params, ObjectiveKind.POWER_MIN)
        state = kernel.derive_state(np.ones((2, 2), dtype=complex), ctx)
        kernel.check_guard(state, ctx)

    def test_solver_iteration_limit_raises(self, settings, make_params, two_users):
        """Test that an exhausted interior-point budget surfaces as IterationLimitError."""
        starved = ScaKernel(settings.model_copy(update={"solver_max_iter": 1}))
        params = make_params(two_users)
        ctx = ScaContext(two_users, params, ObjectiveKind.SUM_RATE, pieces=PIECES)
        state = starved.derive_state(np.ones((2, 2), dtype=complex), ctx)
        with pytest.raises(IterationLimitError) as info:
            starved.run(state, ctx)
        assert info.value.details["solver"]["status"] == "iter_limit"


class TestHelpers:
    """Tests for projection, phase alignment, verification and dominance."""

    def test_project_to_budget(self):
        """Test uniform down-scaling onto the budget."""
        w = np.array([[2.0, 0.0], [0.0, 0.0]], dtype=complex)
        assert sm.tx_power_of(project_to_budget(w, 1.0)) == pytest.approx(1.0)
        np.testing.assert_array_equal(project_to_budget(w, 10.0), w)

    def test_align_phases_keeps_powers(self, three_users):
        """Test that alignment keeps received powers and improves real parts."""
        rng = np.random.default_rng(5)
        w = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        aligned = align_phases(w, three_users)
        np.testing.assert_allclose(
            sm.received_powers(aligned, three_users), sm.received_powers(w, three_users)
        )
        before = np.conj(three_users.channels) @ w.T
        after = np.conj(three_users.channels) @ aligned.T
        for i in range(3):
            assert np.min(after[: i + 1, i].real) >= np.min(before[: i + 1, i].real) - 1e-12

    def test_verify_solution(self, scalar_pair_solution):
        """Test that violated constraints are named."""
        cs, params, w = scalar_pair_solution
        assert verify_solution(sm.evaluate(w, cs, params), cs, params) == []
        strict = params.model_copy(update={"rate_thresholds": [10.0, 0.0]})
        assert verify_solution(sm.evaluate(w, cs, strict), cs, strict) == ["rate"]
        swapped = w[::-1].copy()
        assert "sic" in verify_solution(sm.evaluate(swapped, cs, params), cs, params)
        small = params.with_budget(1.0)
        assert verify_solution(sm.evaluate(w, cs, small), cs, small) == ["power"]

    def test_solution_status(self, scalar_pair_solution):
        """Test the status tag written to result rows."""
        cs, params, w = scalar_pair_solution
        assert solution_status(sm.evaluate(w, cs, params), cs, params) == "ok"
        strict = params.model_copy(update={"rate_thresholds": [10.0, 0.0]}).with_budget(1.0)
        assert solution_status(sm.evaluate(w, cs, strict), cs, strict) == "violates:rate+power"

    def test_mark_dominated(self):
        """Test dominance flags on a synthetic front."""
        points = [
            ParetoPoint(alpha=0.0, se=3.0, gee=1.0),
            ParetoPoint(alpha=0.5, se=2.0, gee=2.0),
            ParetoPoint(alpha=0.7, se=1.5, gee=1.5),
            ParetoPoint(alpha=1.0, status="InfeasibleError"),
        ]
        flags = [p.dominated for p in mark_dominated(points)]
        assert flags == [False, False, True, False]

    def test_mark_dominated_tolerance(self):
        """Test that differences inside the tolerance do not dominate."""
        points = [
            ParetoPoint(alpha=0.0, se=2.0, gee=2.0),
            ParetoPoint(alpha=1.0, se=2.001, gee=2.001),
        ]
        assert not any(p.dominated for p in mark_dominated(points, tol=5e-3))


@pytest.mark.slow
class TestTradeoffController:
    """End-to-end trade-off runs on small instances."""

    @pytest.fixture
    def controller(self, settings, baselines) -> TradeoffController:
        """Trade-off controller sharing the baselines."""
        return TradeoffController(settings, baselines)

    def test_tradeoff_run(self, controller, make_params, two_users):
        """Test a mid-weight run: monotone trace and a verified solution."""
        params = make_params(two_users, p_ava=10.0, eta=0.1)
        solution, trace = controller.solve_tradeoff(two_users, params, alpha=0.5)
        assert trace.converged
        assert trace.is_monotone()
        assert trace.iterations >= 1
        assert verify_solution(solution, two_users, params) == []
        assert solution.tx_power <= params.p_ava * (1.0 + 1e-8)

    def test_single_user_se_endpoint(self, controller, make_params, single_user):
        """Test that alpha = 0 with one user reaches the matched-filter capacity."""
        params = make_params(single_user, p_ava=4.0, eta=0.5)
        solution, _ = controller.solve_tradeoff(single_user, params, alpha=0.0)
        capacity = np.log2(1.0 + 4.0 * single_user.gains[0])
        assert solution.se == pytest.approx(capacity, rel=1e-6)

    def test_endpoints_match_baselines(self, controller, baselines, make_params, two_users):
        """Test alpha = 0 against SE-Max with rate targets and alpha = 1 against GEE-Max."""
        params = make_params(two_users, p_ava=10.0, eta=0.1)
        f1, f2 = controller.normalize(two_users, params)
        cfg = controller.default_config(0.0, f1, f2)

        se_end, _ = controller.solve_tradeoff(two_users, params, 0.0, cfg)
        ee_end, _ = controller.solve_tradeoff(two_users, params, 1.0, cfg)
        se_max = baselines.solve_se_max(two_users, params, with_min_rate=True)
        gee_max = baselines.solve_gee_max(two_users, params)

        assert se_end.se == pytest.approx(se_max.se, rel=1e-2)
        assert ee_end.gee == pytest.approx(gee_max.gee, rel=1e-2)
        assert se_end.se >= ee_end.se - 1e-6
        assert ee_end.gee >= se_end.gee - 1e-6

    def test_invalid_alpha(self, controller, make_params, two_users):
        """Test weight validation."""
        params = make_params(two_users)
        cfg = TradeoffConfig(f1_star=1.0, f2_star=1.0)
        with pytest.raises(ValidationError):
            controller.solve_tradeoff(two_users, params, alpha=1.5, cfg=cfg)
        with pytest.raises(ValidationError):
            controller.pareto_sweep(two_users, params, [0.0, 2.0], cfg=cfg)

    def test_pareto_sweep(self, controller, make_params, two_users):
        """Test that a sweep returns one flagged point per weight."""
        params = make_params(two_users, p_ava=10.0, eta=0.1)
        points = controller.pareto_sweep(two_users, params, [0.0, 0.5, 1.0])
        assert [p.alpha for p in points] == [0.0, 0.5, 1.0]
        assert all(p.ok for p in points)
        assert {p.status for p in points} == {"ok"}
        assert points[0].se >= points[-1].se - 1e-6
