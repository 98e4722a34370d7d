"""
Dense primal-dual interior-point solver for conic programs.

The solver handles the nonnegative orthant, second-order cones and PSD cones
in svec form. It runs a homogeneous self-dual embedding so infeasibility
certificates come out of the same iteration, with Nesterov-Todd scaling and
a Mehrotra predictor-corrector step.
"""

import logging
from pathlib import Path

import numpy as np
from scipy import io as sio
from scipy import linalg, sparse

from ..config import NomaSettings, get_settings
from ..exceptions import ValidationError
from ..models.cone import ConeBlock, ConeKind, ConeProgram, SolveReport, SolveStatus
from ..utils.cones import Cone, Scaling, make_cone
from ..utils.envelope import secant_lines

logger = logging.getLogger(__name__)

STEP_FRACTION = 0.99
REGULARIZATION_RETRIES = 3
REGULARIZATION_GROWTH = 100.0


class _KKTSystem:
    """Reduced KKT factorization for a fixed scaling."""

    def __init__(
        self,
        G: np.ndarray,
        A: np.ndarray,
        slices: list[slice],
        scalings: list[Scaling],
        reg: float,
    ) -> None:
        self.slices = slices
        self.scalings = scalings
        self.n = G.shape[1]
        self.p = A.shape[0]

        Gs = np.empty_like(G)
        for sl, sc in zip(slices, scalings, strict=True):
            Gs[sl] = sc.apply_inv_t(G[sl])
        self.Gs = Gs

        M = Gs.T @ Gs
        K = np.zeros((self.n + self.p, self.n + self.p))
        K[: self.n, : self.n] = M
        K[: self.n, self.n :] = A.T
        K[self.n :, : self.n] = A
        self.K = K

        K_reg = K.copy()
        K_reg[: self.n, : self.n] += reg * np.eye(self.n)
        K_reg[self.n :, self.n :] -= reg * np.eye(self.p)
        self.lu = linalg.lu_factor(K_reg, check_finite=True)
        if not np.all(np.isfinite(self.lu[0])):
            raise np.linalg.LinAlgError("non-finite KKT factor")
        if np.min(np.abs(np.diag(self.lu[0]))) == 0.0:
            raise np.linalg.LinAlgError("singular KKT factor")

    def _blockwise(self, v: np.ndarray, op: str) -> np.ndarray:
        out = np.empty_like(v)
        for sl, sc in zip(self.slices, self.scalings, strict=True):
            out[sl] = getattr(sc, op)(v[sl])
        return out

    def solve(
        self, r1: np.ndarray, r2: np.ndarray, r3: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Solve A^T dy + G^T dz = r1, A dx = r2, G dx - W^T W dz = r3."""
        r3s = self._blockwise(r3, "apply_inv_t")
        rhs = np.concatenate([r1 + self.Gs.T @ r3s, r2])
        sol = linalg.lu_solve(self.lu, rhs)
        sol = sol + linalg.lu_solve(self.lu, rhs - self.K @ sol)
        dx, dy = sol[: self.n], sol[self.n :]
        dz = self._blockwise(self.Gs @ dx - r3s, "apply_inv")
        return dx, dy, dz


class ConicSolver:
    """
    Interior-point solver for ConeProgram instances.

    The solver is stateless between calls and safe to share between threads.

    Example:
        >>> from noma_tradeoff.controllers import ConicSolver
        >>>
        >>> solver = ConicSolver()
        >>> report = solver.solve(program)
        >>> if report.is_optimal:
        ...     print(report.objective)
    """

    def __init__(self, settings: NomaSettings | None = None) -> None:
        """
        Initialize the solver.

        Args:
            settings: Solver settings. If not provided, loads from environment/.env file.
        """
        self.settings = settings or get_settings()

    def solve(
        self,
        program: ConeProgram,
        tol: float | None = None,
        max_iter: int | None = None,
    ) -> SolveReport:
        """
        Maximize c^T x subject to G x + s = h, s in K, A x = b.

        Args:
            program: Conic program
            tol: Relative residual and gap tolerance (defaults to settings)
            max_iter: Iteration budget (defaults to settings)

        Returns:
            SolveReport; infeasible statuses carry normalized certificates

        Raises:
            ValidationError: If the program or the tolerance is malformed
        """
        tol = self.settings.solver_tol if tol is None else tol
        max_iter = self.settings.solver_max_iter if max_iter is None else max_iter
        if not 0.0 < tol <= 1e-2:
            raise ValidationError("Tolerance must lie in (0, 1e-2]", details={"tol": tol})
        if program.num_conic_rows == 0:
            raise ValidationError("Program has no conic rows")

        d_row, e_row = _equilibrate(program)
        G = program.G * d_row[:, None]
        h = program.h * d_row
        A = program.A * e_row[:, None]
        b = program.b * e_row

        report = self._solve_scaled(
            c=-program.c,
            G=G,
            h=h,
            A=A,
            b=b,
            blocks=program.cones,
            tol=tol,
            max_iter=max_iter,
        )
        report.z = report.z * d_row
        report.s = report.s / d_row
        report.y = report.y * e_row
        return report

    def _solve_scaled(
        self,
        c: np.ndarray,
        G: np.ndarray,
        h: np.ndarray,
        A: np.ndarray,
        b: np.ndarray,
        blocks: list[ConeBlock],
        tol: float,
        max_iter: int,
    ) -> SolveReport:
        m, n = G.shape
        p = A.shape[0]
        cones: list[Cone] = [make_cone(block) for block in blocks]
        slices = []
        start = 0
        for cone in cones:
            slices.append(slice(start, start + cone.dim))
            start += cone.dim
        nu = sum(cone.degree for cone in cones)
        e = np.concatenate([cone.identity() for cone in cones])

        def blockwise(fn: str, *vecs: np.ndarray) -> np.ndarray:
            return np.concatenate(
                [getattr(cone, fn)(*(v[sl] for v in vecs)) for cone, sl in zip(cones, slices, strict=True)]
            )

        def min_eig(v: np.ndarray) -> float:
            return min(cone.min_eig(v[sl]) for cone, sl in zip(cones, slices, strict=True))

        def max_step(v: np.ndarray, dv: np.ndarray) -> float:
            return min(cone.max_step(v[sl], dv[sl]) for cone, sl in zip(cones, slices, strict=True))

        def inv_prod(scalings: list[Scaling], v: np.ndarray) -> np.ndarray:
            return np.concatenate(
                [
                    cone.inv_prod(sc, v[sl])
                    for cone, sc, sl in zip(cones, scalings, slices, strict=True)
                ]
            )

        def apply(scalings: list[Scaling], op: str, v: np.ndarray) -> np.ndarray:
            return np.concatenate(
                [getattr(sc, op)(v[sl]) for sc, sl in zip(scalings, slices, strict=True)]
            )

        reg = self.settings.static_regularization
        identity_scalings = [
            Scaling(W=np.ones(cone.dim), W_inv=np.ones(cone.dim), lam=cone.identity())
            for cone in cones
        ]

        def factor(scalings: list[Scaling]) -> _KKTSystem | None:
            delta = reg
            for attempt in range(REGULARIZATION_RETRIES + 1):
                try:
                    return _KKTSystem(G, A, slices, scalings, delta)
                except (np.linalg.LinAlgError, ValueError) as err:
                    logger.warning(
                        "KKT factorization failed (attempt %d, reg=%.1e): %s",
                        attempt + 1,
                        delta,
                        err,
                    )
                    delta *= REGULARIZATION_GROWTH
            return None

        def failure(iteration: int) -> SolveReport:
            return _report(
                SolveStatus.NUMERICAL_FAILURE,
                np.zeros(n),
                np.zeros(p),
                np.zeros(m),
                np.zeros(m),
                1.0,
                np.inf,
                np.inf,
                np.inf,
                iteration,
                c,
                b,
                h,
            )

        def finish(status: SolveStatus, iteration: int) -> SolveReport:
            """Best iterate under ``status``; optimal only if it met ``tol``."""
            if best is None:
                return failure(iteration)
            if max(best.primal_residual, best.dual_residual, best.gap) <= tol:
                return best
            return _status(best, status)

        kkt = factor(identity_scalings)
        if kkt is None:
            return failure(0)

        x, y_unused, neg_s = kkt.solve(np.zeros(n), b, h)
        s = -neg_s
        x_dual, y, z = kkt.solve(-c, np.zeros(p), np.zeros(m))
        del y_unused, x_dual

        for vec in (s, z):
            shift = min_eig(vec)
            if shift <= 1e-8 * max(np.linalg.norm(vec), 1.0):
                vec += (1.0 - shift) * e

        tau = kappa = 1.0
        norm_c = max(1.0, float(np.linalg.norm(c)))
        norm_bh = max(1.0, float(np.linalg.norm(np.concatenate([b, h]))))

        best: SolveReport | None = None
        best_score = np.inf

        logger.debug(
            "%4s %12s %12s %9s %9s %9s %7s", "it", "pcost", "dcost", "pres", "dres", "gap", "step"
        )
        step = 0.0
        for iteration in range(max_iter + 1):
            hx = A.T @ y + G.T @ z + c * tau
            hy = -A @ x + b * tau
            hz = s + G @ x - h * tau
            htau = kappa + c @ x + b @ y + h @ z
            mu = (s @ z + tau * kappa) / (nu + 1)

            cx, by_hz = float(c @ x), float(b @ y + h @ z)
            pcost = cx / tau
            dcost = -by_hz / tau
            pres = float(np.linalg.norm(np.concatenate([hy, hz]))) / tau / norm_bh
            dres = float(np.linalg.norm(hx)) / tau / norm_c
            gap = float(s @ z) / tau**2 / max(1.0, abs(pcost))

            logger.debug(
                "%4d %12.5e %12.5e %9.2e %9.2e %9.2e %7.4f",
                iteration,
                pcost,
                dcost,
                pres,
                dres,
                gap,
                step,
            )

            current = _report(
                SolveStatus.OPTIMAL,
                x / tau,
                y / tau,
                z / tau,
                s / tau,
                1.0,
                pres,
                dres,
                gap,
                iteration,
                c,
                b,
                h,
            )
            score = max(pres, dres, gap)
            if score < best_score:
                best, best_score = current, score

            if score <= tol:
                return current

            if by_hz < 0.0 and tau < kappa:
                pinf = float(np.linalg.norm(A.T @ y + G.T @ z)) / norm_c / -by_hz
                if pinf <= tol:
                    return _certificate(
                        SolveStatus.PRIMAL_INFEASIBLE, x, y / -by_hz, z / -by_hz, s, iteration, pres, dres, gap
                    )
            if cx < 0.0 and tau < kappa:
                dinf = (
                    max(
                        float(np.linalg.norm(A @ x)) / max(1.0, float(np.linalg.norm(b))),
                        float(np.linalg.norm(G @ x + s)) / max(1.0, float(np.linalg.norm(h))),
                    )
                    / -cx
                )
                if dinf <= tol:
                    return _certificate(
                        SolveStatus.DUAL_INFEASIBLE, x / -cx, y, z, s / -cx, iteration, pres, dres, gap
                    )

            if iteration == max_iter:
                break

            try:
                scalings = [
                    cone.scaling(s[sl], z[sl]) for cone, sl in zip(cones, slices, strict=True)
                ]
                kkt = factor(scalings)
                if kkt is None:
                    return finish(SolveStatus.NUMERICAL_FAILURE, iteration)

                lam = np.concatenate([sc.lam for sc in scalings])
                lam_sq = blockwise("jordan", lam, lam)

                # tau/kappa are scalars; u1 solves the system with rhs (-c, b, h).
                u1x, u1y, u1z = kkt.solve(-c, b, h)
                q_u1 = c @ u1x + b @ u1y + h @ u1z

                def direction(
                    eta: float, ds_target: np.ndarray, dtau_target: float
                ) -> tuple[np.ndarray, ...]:
                    """Newton direction; also returns W dz and W^-T ds."""
                    r = 1.0 - eta
                    scaled = inv_prod(scalings, ds_target)
                    u0x, u0y, u0z = kkt.solve(
                        -r * hx, r * hy, -r * hz - apply(scalings, "apply_t", scaled)
                    )
                    q_u0 = c @ u0x + b @ u0y + h @ u0z
                    dtau = (-r * htau - q_u0 - dtau_target / tau) / (q_u1 - kappa / tau)
                    dx = u0x + dtau * u1x
                    dy = u0y + dtau * u1y
                    dz = u0z + dtau * u1z
                    dkappa = (dtau_target - kappa * dtau) / tau
                    dz_w = apply(scalings, "apply", dz)
                    ds_w = scaled - dz_w
                    ds = apply(scalings, "apply_t", ds_w)
                    return dx, dy, dz, ds, dz_w, ds_w, dtau, dkappa

                def step_length(
                    dz_w: np.ndarray, ds_w: np.ndarray, dtau: float, dkappa: float
                ) -> float:
                    # s = W^T lam and z = W^-1 lam, so both steps are measured at lam.
                    alpha = min(max_step(lam, ds_w), max_step(lam, dz_w))
                    if dtau < 0.0:
                        alpha = min(alpha, -tau / dtau)
                    if dkappa < 0.0:
                        alpha = min(alpha, -kappa / dkappa)
                    return alpha

                _, _, _, _, dz_a, ds_a, dtau_a, dkappa_a = direction(
                    0.0, -lam_sq, -tau * kappa
                )
                alpha_a = min(1.0, step_length(dz_a, ds_a, dtau_a, dkappa_a))
                sigma = (1.0 - alpha_a) ** 3

                cross = blockwise("jordan", ds_a, dz_a)
                dx, dy, dz, ds, dz_w, ds_w, dtau, dkappa = direction(
                    sigma,
                    -lam_sq - cross + sigma * mu * e,
                    -tau * kappa - dtau_a * dkappa_a + sigma * mu,
                )
                if not all(np.all(np.isfinite(v)) for v in (dx, dy, dz, ds)):
                    raise FloatingPointError("non-finite search direction")
                step = min(1.0, STEP_FRACTION * step_length(dz_w, ds_w, dtau, dkappa))
            except (np.linalg.LinAlgError, ValueError, FloatingPointError) as err:
                logger.warning("Interior-point breakdown at iteration %d: %s", iteration, err)
                return finish(SolveStatus.NUMERICAL_FAILURE, iteration)

            x = x + step * dx
            y = y + step * dy
            z = z + step * dz
            s = s + step * ds
            tau = tau + step * dtau
            kappa = kappa + step * dkappa

        return finish(SolveStatus.ITER_LIMIT, max_iter)


def _report(
    status: SolveStatus,
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
    s: np.ndarray,
    scale: float,
    pres: float,
    dres: float,
    gap: float,
    iterations: int,
    c: np.ndarray,
    b: np.ndarray,
    h: np.ndarray,
) -> SolveReport:
    return SolveReport(
        status=status,
        x=x,
        y=y,
        z=z,
        s=s,
        objective=float(-(c @ x)) * scale,
        dual_objective=float(b @ y + h @ z) * scale,
        iterations=iterations,
        primal_residual=pres,
        dual_residual=dres,
        gap=gap,
    )


def _certificate(
    status: SolveStatus,
    x: np.ndarray,
    y: np.ndarray,
    z: np.ndarray,
    s: np.ndarray,
    iterations: int,
    pres: float,
    dres: float,
    gap: float,
) -> SolveReport:
    objective = np.inf if status == SolveStatus.DUAL_INFEASIBLE else -np.inf
    return SolveReport(
        status=status,
        x=x,
        y=y,
        z=z,
        s=s,
        objective=objective,
        dual_objective=objective,
        iterations=iterations,
        primal_residual=pres,
        dual_residual=dres,
        gap=gap,
    )


def _status(report: SolveReport | None, status: SolveStatus) -> SolveReport:
    assert report is not None
    return report.model_copy(update={"status": status})


def _equilibrate(program: ConeProgram) -> tuple[np.ndarray, np.ndarray]:
    """Row scaling: per row on the orthant, one factor per SOC/PSD block."""
    norms = np.linalg.norm(program.G, axis=1)
    d = np.ones(program.num_conic_rows)
    for block, sl in program.cone_slices():
        if block.kind == ConeKind.NONNEG:
            rows = norms[sl]
            d[sl] = np.where(rows > 0.0, 1.0 / np.where(rows > 0.0, rows, 1.0), 1.0)
        else:
            top = float(np.max(norms[sl]))
            if top > 0.0:
                d[sl] = 1.0 / top
    e_norms = np.linalg.norm(program.A, axis=1)
    e = np.where(e_norms > 0.0, 1.0 / np.where(e_norms > 0.0, e_norms, 1.0), 1.0)
    return d, e


def add_exp_upper_envelope(
    program: ConeProgram,
    z_index: int,
    rho_index: int,
    rho_lo: float,
    rho_hi: float,
    pieces: int,
) -> ConeProgram:
    """
    Append the secant inner approximation of z >= 2^rho to a program.

    Adds ``pieces`` rows slope_m * rho - z <= -intercept_m and the box
    rho in [rho_lo, rho_hi] as one new NONNEG block.

    Args:
        program: Program to extend
        z_index: Column of z
        rho_index: Column of rho
        rho_lo: Lower end of the envelope range
        rho_hi: Upper end of the envelope range
        pieces: Number of secant pieces

    Returns:
        A new ConeProgram

    Raises:
        ValidationError: If rho_hi <= rho_lo or pieces < 1

    Example:
        >>> program = add_exp_upper_envelope(program, z_index=1, rho_index=0,
        ...                                  rho_lo=0.0, rho_hi=8.0, pieces=64)
    """
    slopes, intercepts = secant_lines(rho_lo, rho_hi, pieces)
    n = program.num_variables
    for index in (z_index, rho_index):
        if not 0 <= index < n:
            raise ValidationError("Variable index out of range", details={"index": index})

    rows = np.zeros((pieces + 2, n))
    rows[:pieces, rho_index] = slopes
    rows[:pieces, z_index] = -1.0
    rows[pieces, rho_index] = -1.0
    rows[pieces + 1, rho_index] = 1.0
    rhs = np.concatenate([-intercepts, [-rho_lo, rho_hi]])

    return ConeProgram(
        c=program.c,
        G=np.vstack([program.G, rows]),
        h=np.concatenate([program.h, rhs]),
        A=program.A,
        b=program.b,
        cones=[*program.cones, ConeBlock(kind=ConeKind.NONNEG, dim=pieces + 2)],
        variable_names=program.variable_names,
    )


def dump_matrix_market(program: ConeProgram, stem: str | Path) -> list[Path]:
    """
    Write a program as matrix-market files for offline inspection.

    Produces ``<stem>.G.mtx``, ``<stem>.A.mtx`` (coordinate format) and
    ``<stem>.chb.mtx`` (dense columns c, h and b padded with zeros). The cone
    list is stored in the header comment of the G file.

    Returns:
        Paths written
    """
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    cones = " ".join(
        f"{block.kind.value}:{block.dim}" + (f":{block.order}" if block.order else "")
        for block in program.cones
    )
    paths = [
        stem.with_suffix(".G.mtx"),
        stem.with_suffix(".A.mtx"),
        stem.with_suffix(".chb.mtx"),
    ]
    sio.mmwrite(str(paths[0]), sparse.coo_matrix(program.G), comment=f"cones {cones}")
    sio.mmwrite(str(paths[1]), sparse.coo_matrix(program.A), comment="equalities")
    length = max(program.num_variables, program.num_conic_rows, program.num_equalities)
    dense = np.zeros((length, 3))
    dense[: program.num_variables, 0] = program.c
    dense[: program.num_conic_rows, 1] = program.h
    dense[: program.num_equalities, 2] = program.b
    sio.mmwrite(str(paths[2]), dense, comment="columns: c (maximized), h, b")
    return paths
