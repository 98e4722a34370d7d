"""
Semidefinite-relaxation benchmark for the transmit power.

For given target rates the power-minimization problem is lifted to
W_i = w_i w_i^H, the rank-one requirement is dropped and the resulting SDP
is solved with the same conic solver. Each Hermitian W_i is carried by its
real symmetric embedding X_i of order 2N, with W_i = E^H X_i E and
E = [I; -iI], so that tr(H W_i) = tr(H~ X_i) for the real embedding H~ of H.
"""

import logging

import numpy as np

from ..config import NomaSettings, get_settings
from ..exceptions import BenchmarkError, NumericalFailureError, RankFailureError, ValidationError
from ..models.cone import SolveStatus
from ..models.sdp import SdpProgram, SdpReport
from ..models.system import BeamformerSolution, ChannelSet, SystemParams
from ..utils import system_model as sm
from ..utils.cone_builder import ConeProgramBuilder, dot
from ..utils.cones import PsdCone
from .conic_solver import ConicSolver

logger = logging.getLogger(__name__)

RANK_THRESHOLD = 1e-4
RATE_TOLERANCE = 1e-6


def real_embedding(H: np.ndarray) -> np.ndarray:
    """[[Re H, -Im H], [Im H, Re H]]."""
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def embed_hermitian(W: np.ndarray) -> np.ndarray:
    """Real symmetric X with recover_hermitian(X) == W."""
    return real_embedding(np.asarray(W, dtype=complex)) / 2.0


def recover_hermitian(X: np.ndarray) -> np.ndarray:
    """W = (X11 + X22) + i (X21 - X12) for X of order 2N."""
    n = X.shape[0] // 2
    X11, X12 = X[:n, :n], X[:n, n:]
    X21, X22 = X[n:, :n], X[n:, n:]
    W = (X11 + X22) + 1j * (X21 - X12)
    return (W + W.conj().T) / 2.0


def rank_ratio(W: np.ndarray) -> float:
    """lambda2 / lambda1 of a Hermitian matrix, clipped to [0, 1]."""
    eigenvalues = np.linalg.eigvalsh(W)[::-1]
    if eigenvalues.size < 2 or eigenvalues[0] <= 0.0:
        return 0.0
    return float(np.clip(max(eigenvalues[1], 0.0) / eigenvalues[0], 0.0, 1.0))


class SdpBenchmarkController:
    """
    Controller for the relaxation benchmark.

    Example:
        >>> from noma_tradeoff.controllers import SdpBenchmarkController
        >>>
        >>> bench = SdpBenchmarkController()
        >>> sdp = bench.build_sdr(cs, params, target_rates=solution.per_user_rates)
        >>> report = bench.solve_sdp(sdp)
        >>> print(report.p_star, report.rank_ratios)
    """

    def __init__(
        self,
        settings: NomaSettings | None = None,
        solver: ConicSolver | None = None,
    ) -> None:
        """
        Initialize the controller.

        Args:
            settings: Solver settings. If not provided, loads from environment/.env file.
            solver: Conic solver to share
        """
        self.settings = settings or get_settings()
        self.solver = solver or ConicSolver(self.settings)

    def build_sdr(
        self,
        cs: ChannelSet,
        params: SystemParams,
        target_rates: list[float] | np.ndarray | None = None,
    ) -> SdpProgram:
        """
        Assemble the relaxation for the given target rates.

        Rows, in order: SINR rows for every pair (i, k <= i), then the SIC
        ordering rows tr(H_r W_{j+1}) >= tr(H_r W_j).

        Args:
            cs: Ordered channel set
            params: System parameters (noise variances)
            target_rates: Rates R_i* in bits/s/Hz; defaults to the rate thresholds

        Returns:
            SdpProgram

        Raises:
            ValidationError: If a target rate is not positive or the length is wrong
        """
        rates = np.asarray(
            params.rate_thresholds if target_rates is None else target_rates, dtype=float
        )
        k_users, n_ant = cs.num_users, cs.num_antennas
        if rates.shape != (k_users,):
            raise ValidationError(
                "One target rate per user is required",
                details={"rates": rates.tolist(), "num_users": k_users},
            )
        if np.any(rates <= 0.0):
            raise ValidationError(
                "Target rates must be positive", details={"rates": rates.tolist()}
            )
        eta = np.exp2(rates) - 1.0
        order = 2 * n_ant
        cone = PsdCone(order)
        noise = np.asarray(params.noise_vars, dtype=float)

        bld = ConeProgramBuilder()
        blocks = [bld.add_variable(f"X{i}", cone.dim) for i in range(k_users)]
        gains = [cone.svec(real_embedding(np.outer(h, h.conj()))) for h in cs.channels]

        def trace(k: int, j: int):  # type: ignore[no-untyped-def]
            return dot(gains[k], list(blocks[j]))

        for i in range(k_users):
            for k in range(i + 1):
                interference = sum((trace(k, j) for j in range(i)), 0.0)
                bld.ge(trace(k, i) - interference * eta[i], eta[i] * noise[k])
        for r in range(k_users):
            for j in range(k_users - 1):
                bld.ge(trace(r, j + 1), trace(r, j))
        for block in blocks:
            bld.psd(list(block), order)

        identity = cone.svec(np.eye(order))
        bld.maximize(-sum((dot(identity, list(b)) for b in blocks), 0.0))

        return SdpProgram(
            channels=cs,
            noise_vars=list(params.noise_vars),
            target_rates=rates.tolist(),
            sinr_targets=eta.tolist(),
            program=bld.build(),
            num_sinr_rows=k_users * (k_users + 1) // 2,
            num_order_rows=k_users * (k_users - 1),
        )

    def solve_sdp(self, sdp: SdpProgram, tol: float | None = None) -> SdpReport:
        """
        Solve the relaxation.

        Args:
            sdp: Assembled relaxation
            tol: Solver tolerance (defaults to the SDP tolerance setting)

        Returns:
            SdpReport with the relaxed optimum, the recovered matrices, the
            rank ratios and principal-eigenvector beamformers

        Raises:
            NumericalFailureError: If the solver breaks down
        """
        tol = self.settings.sdp_tol if tol is None else tol
        report = self.solver.solve(sdp.program, tol=tol)
        if report.status == SolveStatus.NUMERICAL_FAILURE and not report.within(10.0 * tol):
            raise NumericalFailureError(
                "Relaxation solve broke down", details=report.summary()
            )

        order = 2 * sdp.num_antennas
        cone = PsdCone(order)
        matrices = []
        beamformers = []
        for i in range(sdp.num_users):
            X = cone.smat(sdp.program.variable(report.x, f"X{i}"))
            W = recover_hermitian(X)
            eigenvalues, vectors = np.linalg.eigh(W)
            matrices.append(W)
            beamformers.append(np.sqrt(max(eigenvalues[-1], 0.0)) * vectors[:, -1])
        ratios = [rank_ratio(W) for W in matrices]
        p_star = float(sum(np.trace(W).real for W in matrices))

        logger.info(
            "Relaxation: status %s, P* = %.9g W, max rank ratio %.3e",
            report.status.value,
            p_star,
            max(ratios),
        )
        return SdpReport(
            status=report.status,
            p_star=p_star,
            matrices=np.array(matrices),
            rank_ratios=ratios,
            beamformers=np.array(beamformers),
            gap=report.gap,
            iterations=report.iterations,
        )

    def extract_beamformers(
        self,
        report: SdpReport,
        sdp: SdpProgram,
        params: SystemParams,
        threshold: float = RANK_THRESHOLD,
    ) -> BeamformerSolution:
        """
        Principal-eigenvector beamformers of a rank-one relaxation solution.

        Args:
            report: Solved relaxation
            sdp: The relaxation that produced it
            params: System parameters used to re-evaluate the rates
            threshold: Largest accepted rank ratio

        Returns:
            BeamformerSolution meeting the target rates

        Raises:
            BenchmarkError: If the report is not optimal or the rates are missed
            RankFailureError: If any rank ratio exceeds the threshold
        """
        if report.status != SolveStatus.OPTIMAL:
            raise BenchmarkError(
                "Cannot extract beamformers from a non-optimal relaxation",
                details={"status": report.status.value},
            )
        if not report.rank_one(threshold):
            logger.warning("Relaxation is not rank one: %s", report.rank_ratios)
            raise RankFailureError(
                "Relaxation solution is not rank one",
                details={"rank_ratios": report.rank_ratios, "threshold": threshold},
            )
        assert report.beamformers is not None
        solution = sm.evaluate(report.beamformers, sdp.channels, params)
        shortfall = np.asarray(sdp.target_rates) - np.asarray(solution.per_user_rates)
        if np.any(shortfall > RATE_TOLERANCE):
            raise BenchmarkError(
                "Extracted beamformers miss the target rates",
                details={"shortfall": shortfall.tolist()},
            )
        return solution
