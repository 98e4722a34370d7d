"""
Shared machinery of every SCA loop.

A subproblem linearizes the non-convex NOMA constraints around the current
SlackState and is solved by the conic solver. The same assembly serves the
trade-off objective and the sum-rate, Dinkelbach and power-minimization
baselines; each objective kind allocates only the variable blocks it needs.

Variable blocks (trade-off kind, conservative surrogate)::

    w       2NK   real and imaginary parts of every beamformer
    rho     K     rate slacks
    z, r    K     SINR-plus-one slacks of the SE and EE chains
    a, xi   K(K+1)/2  interference amplitudes, pairs (i, k) with k <= i
    q       K(K-1)    SIC chain epigraphs
    b, v    1, 1      consumed-power amplitude and its square bound
    gamma1, gamma2    weighted normalized objective slacks

for a total of 2K^2 + 3K + 2NK + 4 variables.
"""

import logging
from typing import Any, Literal

import numpy as np

from ..config import NomaSettings, get_settings
from ..exceptions import GuardError, IterationLimitError, NumericalFailureError
from ..models.cone import ConeProgram, SolveStatus
from ..models.sca import IterationRecord, IterationTrace, ObjectiveKind, SlackState
from ..models.system import ChannelSet, SystemParams
from ..utils import system_model as sm
from ..utils.cone_builder import Affine, ConeProgramBuilder, VariableBlock
from ..utils.envelope import default_rho_max, envelope_inverse
from .conic_solver import ConicSolver

logger = logging.getLogger(__name__)

SLACK_HEADROOM = 1e-6
INIT_MARGIN = 1e-6


def pair_index(i: int, k: int) -> int:
    """Position of the pair (i, k), k <= i, in a triangular block."""
    return i * (i + 1) // 2 + k


def subproblem_dimensions(
    num_antennas: int,
    num_users: int,
    pieces: int,
    kind: ObjectiveKind = ObjectiveKind.TRADEOFF,
    alpha: float = 0.5,
    min_rate_users: int | None = None,
    surrogate: Literal["conservative", "taylor"] = "conservative",
) -> dict[str, int]:
    """
    Closed-form sizes of an assembled subproblem.

    Args:
        num_antennas: N
        num_users: K
        pieces: Secant pieces per exponential constraint
        kind: Objective kind
        alpha: Trade-off weight (only the endpoints change the counts)
        min_rate_users: Number of users with a positive SINR threshold
            (defaults to K); every such user i adds i + 1 min-rate cones
        surrogate: Bilinear surrogate

    Returns:
        Dictionary with ``variables``, ``nonneg_rows``, ``soc_blocks`` and
        ``equalities``
    """
    n, k = num_antennas, num_users
    t = k * (k + 1) // 2
    sic = k * (k - 1)
    eta_users = k if min_rate_users is None else min_rate_users
    # users with positive thresholds are taken as the weakest ones
    min_rate_cones = sum(i + 1 for i in range(k - eta_users, k))
    conservative = surrogate == "conservative"

    if kind == ObjectiveKind.POWER_MIN:
        return {
            "variables": 2 * n * k + sic + 1,
            "nonneg_rows": sic,
            "soc_blocks": sic + min_rate_cones + 1,
            "equalities": 0,
        }

    # rate chain: rho, z, a, envelopes with box, z lower bounds
    variables = 2 * n * k + 2 * k + t + sic
    nonneg = k * pieces + 2 * k + k + sic
    soc = t + sic + min_rate_cones + 1
    soc += t if conservative else 0
    nonneg += 0 if conservative else t
    equalities = 0

    if kind == ObjectiveKind.SUM_RATE:
        return {"variables": variables, "nonneg_rows": nonneg, "soc_blocks": soc, "equalities": 0}

    with_v = kind == ObjectiveKind.DINKELBACH or conservative
    variables += 1 + (1 if with_v else 0)
    nonneg += 1 + (1 if with_v else 0)
    soc += 1 + (1 if with_v else 0)
    if kind == ObjectiveKind.DINKELBACH:
        return {
            "variables": variables,
            "nonneg_rows": nonneg,
            "soc_blocks": soc,
            "equalities": 0,
        }

    # efficiency chain r, xi and the objective slacks
    variables += k + t + 2
    nonneg += k * pieces + k + 2
    soc += t + (t if conservative else 0)
    nonneg += 0 if conservative else t
    if alpha < 1.0:
        nonneg += 1
    else:
        equalities += 1
    if alpha > 0.0:
        if conservative:
            soc += 1
        else:
            nonneg += 1
    else:
        equalities += 1
    return {
        "variables": variables,
        "nonneg_rows": nonneg,
        "soc_blocks": soc,
        "equalities": equalities,
    }


class ScaContext:
    """Run-level constants of one SCA loop."""

    def __init__(
        self,
        cs: ChannelSet,
        params: SystemParams,
        kind: ObjectiveKind,
        *,
        alpha: float = 0.0,
        f1_star: float = 1.0,
        f2_star: float = 1.0,
        lam: float = 0.0,
        min_rate: bool = True,
        pieces: int = 64,
        rho_max: float | None = None,
        surrogate: Literal["conservative", "taylor"] = "conservative",
        taylor_guard: float = 1e-6,
        sic_margin: float = 1e-6,
    ) -> None:
        self.cs = cs
        self.params = params
        self.kind = kind
        self.alpha = alpha
        self.f1_star = f1_star
        self.f2_star = f2_star
        self.lam = lam
        self.min_rate = min_rate
        self.pieces = pieces
        self.surrogate = surrogate
        self.taylor_guard = taylor_guard
        self.sic_margin = sic_margin
        self.rho_lo = 0.0
        self.rho_hi = rho_max or default_rho_max(
            params.p_ava, float(np.max(cs.gains)), float(np.min(params.noise_vars))
        )
        self.b_max = 2.0 * np.sqrt(params.p_ava / params.eps0 + params.p_loss) + 1.0
        self.v_max = self.b_max**2

        h = cs.channels
        self.re_coef = np.hstack([h.real, h.imag])
        self.im_coef = np.hstack([-h.imag, h.real])

    @property
    def num_users(self) -> int:
        return self.cs.num_users

    @property
    def num_antennas(self) -> int:
        return self.cs.num_antennas

    @property
    def uses_rate_chain(self) -> bool:
        return self.kind != ObjectiveKind.POWER_MIN

    @property
    def uses_ee_chain(self) -> bool:
        return self.kind == ObjectiveKind.TRADEOFF

    @property
    def uses_v(self) -> bool:
        return self.kind == ObjectiveKind.DINKELBACH or (
            self.kind == ObjectiveKind.TRADEOFF and self.surrogate == "conservative"
        )

    @property
    def uses_b(self) -> bool:
        return self.kind in (ObjectiveKind.TRADEOFF, ObjectiveKind.DINKELBACH)

    def min_rate_active(self, i: int) -> bool:
        return self.min_rate and float(self.params.sinr_thresholds[i]) > 0.0

    def with_updates(self, **changes: Any) -> "ScaContext":
        clone = object.__new__(ScaContext)
        clone.__dict__.update(self.__dict__)
        clone.__dict__.update(changes)
        return clone


class _Beamformers:
    """Affine views of h_k^H w_j in real coordinates."""

    def __init__(self, block: VariableBlock, ctx: ScaContext) -> None:
        self.block = block
        self.ctx = ctx
        self.width = 2 * ctx.num_antennas

    def _indices(self, j: int) -> range:
        start = self.block.start + j * self.width
        return range(start, start + self.width)

    def re(self, k: int, j: int) -> Affine:
        return Affine.linear(self._indices(j), self.ctx.re_coef[k])

    def im(self, k: int, j: int) -> Affine:
        return Affine.linear(self._indices(j), self.ctx.im_coef[k])

    def interference(self, k: int, i: int) -> list[Affine | float]:
        entries: list[Affine | float] = []
        for j in range(i):
            entries += [self.re(k, j), self.im(k, j)]
        entries.append(float(np.sqrt(self.ctx.params.noise_vars[k])))
        return entries

    def entries(self) -> list[Affine]:
        return list(self.block)


class ScaKernel:
    """
    Assembles, solves and iterates SCA subproblems.

    Example:
        >>> kernel = ScaKernel()
        >>> ctx = ScaContext(cs, params, ObjectiveKind.SUM_RATE)
        >>> state = kernel.derive_state(w0, ctx)
        >>> state, trace = kernel.run(state, ctx)
    """

    def __init__(
        self, settings: NomaSettings | None = None, solver: ConicSolver | None = None
    ) -> None:
        self.settings = settings or get_settings()
        self.solver = solver or ConicSolver(self.settings)

    # ------------------------------------------------------------------
    # assembly

    def check_guard(self, state: SlackState, ctx: ScaContext) -> None:
        """Raise GuardError when a linearization point is too close to z = 1."""
        if not ctx.uses_rate_chain:
            return
        slacks = [("z", state.z)] + ([("r", state.r)] if ctx.uses_ee_chain else [])
        for name, values in slacks:
            low = np.flatnonzero(values < 1.0 + ctx.taylor_guard)
            if low.size:
                raise GuardError(
                    f"Linearization point too close to {name} = 1",
                    details={"slack": name, "users": low.tolist(), "guard": ctx.taylor_guard},
                )

    def build(self, state: SlackState, ctx: ScaContext) -> ConeProgram:
        """
        Assemble the convex subproblem around ``state``.

        Raises:
            GuardError: If z - 1 or r - 1 is below the Taylor guard
        """
        self.check_guard(state, ctx)
        k_users, n_ant = ctx.num_users, ctx.num_antennas
        pairs = k_users * (k_users + 1) // 2
        bld = ConeProgramBuilder()

        w = _Beamformers(bld.add_variable("w", 2 * n_ant * k_users), ctx)
        x0 = np.conj(ctx.cs.channels) @ state.w.T

        if ctx.uses_rate_chain:
            rho = bld.add_variable("rho", k_users)
            z = bld.add_variable("z", k_users)
            a = bld.add_variable("a", pairs)
            self._rate_chain(bld, w, ctx, rho, z, a, state.z, state.a, with_box=True)
        if ctx.uses_ee_chain:
            r = bld.add_variable("r", k_users)
            xi = bld.add_variable("xi", pairs)
            self._rate_chain(bld, w, ctx, rho, r, xi, state.r, state.xi, with_box=False)
        if k_users > 1:
            q = bld.add_variable("q", k_users * (k_users - 1))
            self._sic_chain(bld, w, ctx, q, x0)
        self._min_rate(bld, w, ctx)

        if ctx.kind == ObjectiveKind.POWER_MIN:
            t = bld.add_variable("t", 1)
            bld.soc(t[0], w.entries())
            bld.maximize(-t[0])
            return bld.build()

        bld.soc(float(np.sqrt(ctx.params.p_ava)), w.entries())
        sum_rho = sum(rho, Affine())

        if ctx.uses_b:
            b = bld.add_variable("b", 1)
            scale = 1.0 / np.sqrt(ctx.params.eps0)
            bld.soc(b[0], [e * scale for e in w.entries()] + [float(np.sqrt(ctx.params.p_loss))])
            bld.le(b[0], ctx.b_max)
            if ctx.uses_v:
                v = bld.add_variable("v", 1)
                bld.rotated_soc([b[0]], v[0], 1.0)
                bld.le(v[0], ctx.v_max)

        if ctx.kind == ObjectiveKind.SUM_RATE:
            bld.maximize(sum_rho)
            return bld.build()
        if ctx.kind == ObjectiveKind.DINKELBACH:
            bld.maximize(sum_rho - v[0] * ctx.lam)
            return bld.build()

        g1 = bld.add_variable("gamma1", 1)[0]
        g2 = bld.add_variable("gamma2", 1)[0]
        bld.ge(g1, 0.0)
        bld.ge(g2, 0.0)
        if ctx.alpha < 1.0:
            bld.ge(sum_rho, g1 * (ctx.f1_star / (1.0 - ctx.alpha)))
        else:
            bld.eq(g1, 0.0)
        if ctx.alpha > 0.0:
            g2n = max(state.gamma2, 1e-9)
            if ctx.surrogate == "conservative":
                c = state.v / g2n
                bld.rotated_soc(
                    [g2 * np.sqrt(c), v[0] / np.sqrt(c)],
                    sum_rho * (2.0 * ctx.alpha / ctx.f2_star),
                    1.0,
                )
            else:
                bn = state.b
                bilinear = g2n * bn**2 + (b[0] - bn) * (2.0 * bn * g2n) + (g2 - g2n) * bn**2
                bld.ge(sum_rho, bilinear * (ctx.f2_star / ctx.alpha))
        else:
            bld.eq(g2, 0.0)
        bld.maximize(g1 + g2)
        return bld.build()

    def _rate_chain(
        self,
        bld: ConeProgramBuilder,
        w: _Beamformers,
        ctx: ScaContext,
        rho: VariableBlock,
        z: VariableBlock,
        a: VariableBlock,
        z_base: np.ndarray,
        a_base: np.ndarray,
        with_box: bool,
    ) -> None:
        for i in range(ctx.num_users):
            zn = float(z_base[i])
            root = float(np.sqrt(zn - 1.0))
            for k in range(i + 1):
                a_ik = a[pair_index(i, k)]
                bld.soc(a_ik, w.interference(k, i))
                an = float(a_base[i, k])
                re = w.re(k, i)
                if ctx.surrogate == "conservative":
                    # sqrt(z-1) a <= (c (z-1) + a^2 / c) / 2, tight at the base point
                    c = an / root
                    bld.rotated_soc([a_ik], c, re * 2.0 - (z[i] - 1.0) * c)
                else:
                    bld.ge(
                        re,
                        root * an + (z[i] - zn) * (an / (2.0 * root)) + (a_ik - an) * root,
                    )
            bld.ge(z[i], 1.0 + ctx.taylor_guard)
            bld.exp_upper_envelope(
                z[i], rho[i], ctx.rho_lo, ctx.rho_hi, ctx.pieces, with_box=with_box
            )

    def _sic_chain(
        self,
        bld: ConeProgramBuilder,
        w: _Beamformers,
        ctx: ScaContext,
        q: VariableBlock,
        x0: np.ndarray,
    ) -> None:
        width = ctx.num_users - 1
        for rcv in range(ctx.num_users):
            for j in range(width):
                q_rj = q[rcv * width + j]
                bld.rotated_soc([w.re(rcv, j), w.im(rcv, j)], q_rj, 1.0)
                base = x0[rcv, j + 1]
                power = float(abs(base) ** 2)
                lower = (
                    w.re(rcv, j + 1) * (2.0 * base.real)
                    + w.im(rcv, j + 1) * (2.0 * base.imag)
                    - power
                )
                bld.ge(lower, q_rj + ctx.sic_margin * power)

    def _min_rate(self, bld: ConeProgramBuilder, w: _Beamformers, ctx: ScaContext) -> None:
        eta = ctx.params.sinr_thresholds
        for i in range(ctx.num_users):
            if not ctx.min_rate_active(i):
                continue
            for k in range(i + 1):
                bld.soc(w.re(k, i) / float(np.sqrt(eta[i])), w.interference(k, i))

    # ------------------------------------------------------------------
    # slack bookkeeping

    def derive_state(
        self, w: np.ndarray, ctx: ScaContext, margin: float = INIT_MARGIN
    ) -> SlackState:
        """
        Slack values making every subproblem constraint hold at ``w``.

        Amplitude slacks get an absolute headroom; the SINR, rate and
        objective slacks sit a relative ``margin`` inside their bounds.
        """
        w = np.asarray(w, dtype=complex)
        state = SlackState.from_beamformers(w)
        cs, params = ctx.cs, ctx.params
        k_users = ctx.num_users
        x = np.conj(cs.channels) @ w.T
        powers = np.abs(x) ** 2
        noise = np.asarray(params.noise_vars, dtype=float)

        if k_users > 1:
            q = np.empty((k_users, k_users - 1))
            for rcv in range(k_users):
                for j in range(k_users - 1):
                    low = powers[rcv, j]
                    high = powers[rcv, j + 1] * (1.0 - ctx.sic_margin)
                    q[rcv, j] = low + max(high - low, 0.0) / 2.0
            state.q = q

        if ctx.uses_rate_chain:
            a = np.zeros((k_users, k_users))
            z = np.ones(k_users)
            for i in range(k_users):
                ratios = []
                for k in range(i + 1):
                    a[i, k] = np.sqrt(np.sum(powers[k, :i]) + noise[k]) + SLACK_HEADROOM
                    ratios.append(max(x[k, i].real, 0.0) / a[i, k])
                z[i] = 1.0 + min(ratios) ** 2 * (1.0 - margin)
            floor = 1.0 + ctx.taylor_guard
            if np.any(z < floor):
                logger.warning(
                    "Initial SINR slack clamped to the Taylor guard for users %s",
                    np.flatnonzero(z < floor).tolist(),
                )
                z = np.maximum(z, floor)
            state.a = a
            state.xi = a.copy()
            state.z = z
            state.r = z.copy()
            rho = envelope_inverse(z, ctx.rho_lo, ctx.rho_hi, ctx.pieces)
            state.rho = np.clip(rho * (1.0 - margin), ctx.rho_lo, ctx.rho_hi)

        if ctx.uses_b:
            state.b = float(
                np.sqrt(sm.tx_power_of(w) / params.eps0 + params.p_loss) + SLACK_HEADROOM
            )
            state.v = state.b**2 + SLACK_HEADROOM

        if ctx.kind == ObjectiveKind.TRADEOFF:
            total = float(np.sum(state.rho))
            state.gamma1 = (1.0 - ctx.alpha) * total / ctx.f1_star * (1.0 - margin)
            state.gamma2 = ctx.alpha * total / (ctx.f2_star * state.v) * (1.0 - margin)
        return state

    def unpack(self, program: ConeProgram, x: np.ndarray, ctx: ScaContext) -> SlackState:
        """Read a SlackState out of a subproblem solution."""
        k_users, n_ant = ctx.num_users, ctx.num_antennas
        flat = program.variable(x, "w").reshape(k_users, 2 * n_ant)
        state = SlackState.from_beamformers(flat[:, :n_ant] + 1j * flat[:, n_ant:])

        def tri(name: str) -> np.ndarray:
            out = np.zeros((k_users, k_users))
            values = program.variable(x, name)
            for i in range(k_users):
                for k in range(i + 1):
                    out[i, k] = values[pair_index(i, k)]
            return out

        names = program.variable_names
        if "rho" in names:
            state.rho = program.variable(x, "rho").copy()
            state.z = program.variable(x, "z").copy()
            state.a = tri("a")
            state.r = state.z.copy()
            state.xi = state.a.copy()
        if "r" in names:
            state.r = program.variable(x, "r").copy()
            state.xi = tri("xi")
        if "q" in names:
            state.q = program.variable(x, "q").reshape(k_users, k_users - 1).copy()
        if "b" in names:
            state.b = float(program.variable(x, "b")[0])
        if "v" in names:
            state.v = float(program.variable(x, "v")[0])
        elif "b" in names:
            state.v = state.b**2
        if "gamma1" in names:
            state.gamma1 = float(program.variable(x, "gamma1")[0])
            state.gamma2 = float(program.variable(x, "gamma2")[0])
        return state

    def pack(self, state: SlackState, program: ConeProgram) -> np.ndarray:
        """Primal vector of ``program`` holding the values of ``state``; inverse of unpack."""
        x = np.zeros(program.num_variables)
        k_users = state.num_users

        def tri(values: np.ndarray) -> list[float]:
            return [float(values[i, k]) for i in range(k_users) for k in range(i + 1)]

        blocks: dict[str, Any] = {
            "w": np.hstack([state.w.real, state.w.imag]).ravel(),
            "rho": state.rho,
            "z": state.z,
            "a": tri(state.a),
            "r": state.r,
            "xi": tri(state.xi),
            "q": state.q.ravel(),
            "b": [state.b],
            "v": [state.v],
            "gamma1": [state.gamma1],
            "gamma2": [state.gamma2],
            "t": [np.linalg.norm(state.w)],
        }
        for name, (start, stop) in program.variable_names.items():
            x[start:stop] = np.asarray(blocks[name], dtype=float)
        return x

    def objective(self, state: SlackState, ctx: ScaContext) -> float:
        """Subproblem objective evaluated at a state."""
        if ctx.kind == ObjectiveKind.TRADEOFF:
            return state.objective
        if ctx.kind == ObjectiveKind.SUM_RATE:
            return float(np.sum(state.rho))
        if ctx.kind == ObjectiveKind.DINKELBACH:
            return float(np.sum(state.rho) - ctx.lam * state.v)
        return -float(np.sqrt(sm.tx_power_of(state.w)))

    def clamp(self, state: SlackState, ctx: ScaContext) -> SlackState:
        floor = 1.0 + ctx.taylor_guard
        return state.model_copy(
            update={"z": np.maximum(state.z, floor), "r": np.maximum(state.r, floor)}
        )

    # ------------------------------------------------------------------
    # iteration

    def run(
        self,
        state: SlackState,
        ctx: ScaContext,
        eps: float | None = None,
        max_iters: int | None = None,
        relative: bool = False,
    ) -> tuple[SlackState, IterationTrace]:
        """
        Iterate subproblems until the objective change drops below ``eps``.

        A step whose objective falls below the current one is rejected and
        ends the run, so the recorded objective sequence never decreases.

        Args:
            state: Starting point
            ctx: Run constants
            eps: Threshold on |obj_next - obj| relative to max(1, |obj|)
            max_iters: Iteration budget
            relative: Measure the change against |obj| alone

        Returns:
            Final state and the trace of accepted iterates

        Raises:
            NumericalFailureError: If a subproblem cannot be solved
            IterationLimitError: If a subproblem exhausts its interior-point budget
        """
        eps = self.settings.sca_eps if eps is None else eps
        max_iters = self.settings.max_outer_iters if max_iters is None else max_iters
        accept_tol = max(1e-6, 100.0 * self.settings.solver_tol)

        trace = IterationTrace(kind=ctx.kind)
        obj = self.objective(state, ctx)
        trace.append(self._record(0, obj, state, ctx, "initial", 0))

        for iteration in range(1, max_iters + 1):
            try:
                program = self.build(state, ctx)
            except GuardError as err:
                logger.warning("Clamping linearization point: %s", err)
                trace.clamps += 1
                state = self.clamp(state, ctx)
                program = self.build(state, ctx)

            report = self.solver.solve(program)
            if not report.within(accept_tol):
                error = (
                    IterationLimitError
                    if report.status == SolveStatus.ITER_LIMIT
                    else NumericalFailureError
                )
                raise error(
                    f"SCA subproblem failed at iteration {iteration}: {report.status.value}",
                    details={
                        "kind": ctx.kind.value,
                        "iteration": iteration,
                        "solver": report.summary(),
                        "trace": [r.model_dump() for r in trace.records],
                    },
                )
            if report.status != SolveStatus.OPTIMAL:
                logger.warning(
                    "Accepting inaccurate subproblem solution (%s)", report.status.value
                )

            candidate = self.unpack(program, report.x, ctx)
            new_obj = float(report.objective)
            if new_obj < obj:
                if ctx.surrogate == "taylor" and new_obj < obj - 1e-8:
                    logger.warning(
                        "Objective decreased from %.9g to %.9g; keeping previous iterate",
                        obj,
                        new_obj,
                    )
                trace.converged = True
                break

            state = candidate
            trace.append(
                self._record(iteration, new_obj, state, ctx, report.status.value, report.iterations)
            )
            logger.info(
                "SCA %s iteration %d: objective %.9g (%d IPM iterations)",
                ctx.kind.value,
                iteration,
                new_obj,
                report.iterations,
            )
            change = new_obj - obj
            obj = new_obj
            scale = abs(obj) if relative else max(1.0, abs(obj))
            if change <= eps * scale:
                trace.converged = True
                break

        return state, trace

    def _record(
        self,
        iteration: int,
        objective: float,
        state: SlackState,
        ctx: ScaContext,
        status: str,
        ipm_iterations: int,
    ) -> IterationRecord:
        se = sm.se_of(state.w, ctx.cs, ctx.params)
        tx_power = sm.tx_power_of(state.w)
        return IterationRecord(
            iter=iteration,
            objective=objective,
            se=se,
            gee=sm.energy_efficiency(se, tx_power, ctx.params, bandwidth=1.0),
            tx_power=tx_power,
            solver_status=status,
            solver_iterations=ipm_iterations,
        )


def project_to_budget(w: np.ndarray, p_ava: float) -> np.ndarray:
    """Uniformly scale beamformers down onto the power budget if they exceed it."""
    power = sm.tx_power_of(w)
    if power <= p_ava:
        return w
    return w * np.sqrt(p_ava / power)


def align_phases(w: np.ndarray, cs: ChannelSet, grid: int = 256) -> np.ndarray:
    """
    Rotate each beamformer by a phase maximizing min_{k<=i} Re(h_k^H w_i).

    Per-user phase rotations leave every received power unchanged.
    """
    w = np.array(w, dtype=complex)
    x = np.conj(cs.channels) @ w.T
    phases = np.linspace(0.0, 2.0 * np.pi, grid, endpoint=False)
    for i in range(w.shape[0]):
        candidates = np.concatenate([phases, -np.angle(x[: i + 1, i])])
        rotated = np.real(np.exp(1j * candidates)[:, None] * x[None, : i + 1, i])
        best = candidates[int(np.argmax(np.min(rotated, axis=1)))]
        w[i] *= np.exp(1j * best)
    return w
