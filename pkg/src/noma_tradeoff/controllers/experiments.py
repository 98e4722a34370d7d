"""
Experiment suite: weight and TX-SNR sweeps, the relaxation benchmark table,
the feasibility map and Pareto fronts.

Every runner expands the configuration into cells, evaluates them inline or
on a bounded process pool, and writes one versioned CSV plus a companion
summary with per-coordinate mean and sample standard deviation. Rows always
come out in configuration order.
"""

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from ..config import ExperimentConfig, NomaSettings
from ..exceptions import InfeasibleError, NomaTradeoffError, RankFailureError
from ..models.experiment import (
    AlphaSweepRow,
    BenchmarkRow,
    FeasibilityRow,
    ParetoRow,
    SnrSweepRow,
    format_rates,
)
from ..models.system import BeamformerSolution, ChannelSet, SystemParams
from ..utils import system_model as sm
from .baselines import BaselineController
from .benchmark_sdp import SdpBenchmarkController
from .sca_engine import VIOLATION_PREFIX, TradeoffController, solution_status

logger = logging.getLogger(__name__)

CSV_VERSION = "v1"
FLOAT_FORMAT = "%.12g"
SATURATION_SLACK = 0.01

ALPHA_COLUMNS = [
    "seed", "tx_snr_db", "alpha", "se", "sum_rate_bps", "gee", "tx_power_w", "iters", "status",
]
SNR_COLUMNS = ALPHA_COLUMNS + ["saturated", "green_power_w"]
BENCHMARK_COLUMNS = [
    "seed", "tx_snr_db", "eta_th", "alpha", "rates", "sca_power_w", "sdr_power_w",
    "gap", "max_rank_ratio", "status",
]
FEASIBILITY_COLUMNS = ["seed", "tx_snr_db", "eta_th", "p_star_w", "p_ava_w", "feasible", "status"]
PARETO_COLUMNS = ["seed", "alpha", "se", "gee", "tx_power_w", "dominated", "status"]

FALLBACK = "se_max_fallback"


def solver_settings(cfg: ExperimentConfig) -> NomaSettings:
    """Settings whose numerical knobs come from the ``[solver]`` block."""
    return NomaSettings(
        solver_tol=cfg.solver.solver_tol,
        sdp_tol=cfg.solver.sdp_tol,
        sca_eps=cfg.solver.eps,
        max_outer_iters=cfg.solver.max_outer_iters,
        envelope_pieces=cfg.solver.envelope_pieces,
        surrogate=cfg.solver.surrogate,
    )


def make_instance(
    cfg: ExperimentConfig, seed: int, tx_snr_db: float, eta_th: float
) -> tuple[ChannelSet, SystemParams]:
    """Channels of one seed and the parameters of one grid point."""
    system = cfg.system
    cs = sm.generate_channels(seed, system.distances, system.path_loss_exp, system.num_antennas)
    k = system.num_users
    params = SystemParams.from_sinr_thresholds(
        [eta_th] * k,
        num_antennas=system.num_antennas,
        num_users=k,
        p_ava=sm.tx_snr_to_power(tx_snr_db, system.noise_var),
        noise_vars=[system.noise_var] * k,
        eps0=system.eps0,
        p_loss=sm.dbm_to_watts(system.p_loss_dbm),
        bandwidth=system.bandwidth_hz,
    )
    return cs, params.reordered(cs.permutation)


def _metrics(solution: BeamformerSolution) -> dict[str, float]:
    return {
        "se": solution.se,
        "sum_rate_bps": solution.sum_rate,
        "gee": solution.gee,
        "tx_power_w": solution.tx_power,
    }


# ----------------------------------------------------------------------
# cell workers (module level so the process pool can pickle them)


def tradeoff_cell(cfg: ExperimentConfig, seed: int, tx_snr_db: float) -> list[AlphaSweepRow]:
    """All weights of one (seed, TX-SNR) cell; infeasible cells fall back to SE-Max."""
    cs, params = make_instance(cfg, seed, tx_snr_db, cfg.sweep.eta_th[0])
    tradeoff = TradeoffController(solver_settings(cfg))
    base = {"seed": seed, "tx_snr_db": tx_snr_db}
    try:
        f1_star, f2_star = tradeoff.normalize(cs, params)
    except InfeasibleError:
        logger.info("Seed %d at %.3g dB is infeasible; using SE-Max", seed, tx_snr_db)
        return _fallback_rows(tradeoff.baselines, cs, params, base, cfg.sweep.alphas)
    except NomaTradeoffError as e:
        logger.warning("Normalization failed for seed %d at %.3g dB: %s", seed, tx_snr_db, e)
        return [
            AlphaSweepRow(**base, alpha=a, status=type(e).__name__) for a in cfg.sweep.alphas
        ]

    rows = []
    for alpha in cfg.sweep.alphas:
        run_cfg = tradeoff.default_config(alpha, f1_star, f2_star)
        try:
            solution, trace = tradeoff.solve_tradeoff(cs, params, alpha, run_cfg)
        except NomaTradeoffError as e:
            logger.warning("Cell seed=%d snr=%.3g alpha=%.3g failed: %s", seed, tx_snr_db, alpha, e)
            rows.append(AlphaSweepRow(**base, alpha=alpha, status=type(e).__name__))
            continue
        rows.append(
            AlphaSweepRow(
                **base,
                alpha=alpha,
                iters=trace.iterations,
                status=solution_status(solution, cs, params),
                **_metrics(solution),
            )
        )
    return rows


def _fallback_rows(
    baselines: BaselineController,
    cs: ChannelSet,
    params: SystemParams,
    base: dict[str, Any],
    alphas: list[float],
) -> list[AlphaSweepRow]:
    try:
        solution, trace = baselines.run_se_max(cs, params, with_min_rate=False)
    except NomaTradeoffError as e:
        return [AlphaSweepRow(**base, alpha=a, status=type(e).__name__) for a in alphas]
    relaxed = params.model_copy(update={"rate_thresholds": [0.0] * params.num_users})
    status = solution_status(solution, cs, relaxed)
    status = FALLBACK if status == "ok" else status
    return [
        AlphaSweepRow(**base, alpha=a, iters=trace.iterations, status=status, **_metrics(solution))
        for a in alphas
    ]


def benchmark_cell(cfg: ExperimentConfig, seed: int) -> list[BenchmarkRow]:
    """Trade-off power against the relaxation optimum at the achieved rates."""
    snr, eta = cfg.sweep.benchmark_tx_snr_db, cfg.sweep.benchmark_eta_th
    cs, params = make_instance(cfg, seed, snr, eta)
    settings = solver_settings(cfg)
    tradeoff = TradeoffController(settings)
    bench = SdpBenchmarkController(settings, tradeoff.kernel.solver)
    base = {"seed": seed, "tx_snr_db": snr, "eta_th": eta}

    try:
        f1_star, f2_star = tradeoff.normalize(cs, params)
    except InfeasibleError:
        return [BenchmarkRow(**base, alpha=a, status=FALLBACK) for a in cfg.sweep.alphas]
    except NomaTradeoffError as e:
        return [BenchmarkRow(**base, alpha=a, status=type(e).__name__) for a in cfg.sweep.alphas]

    rows = []
    for alpha in cfg.sweep.alphas:
        try:
            solution, _ = tradeoff.solve_tradeoff(
                cs, params, alpha, tradeoff.default_config(alpha, f1_star, f2_star)
            )
            sdp = bench.build_sdr(cs, params, solution.per_user_rates)
            report = bench.solve_sdp(sdp)
        except NomaTradeoffError as e:
            rows.append(BenchmarkRow(**base, alpha=alpha, status=type(e).__name__))
            continue

        status = solution_status(solution, cs, params)
        if status == "ok":
            try:
                bench.extract_beamformers(report, sdp, params)
            except RankFailureError:
                status = "rank_failure"
            except NomaTradeoffError as e:
                status = type(e).__name__
        rows.append(
            BenchmarkRow(
                **base,
                alpha=alpha,
                rates=format_rates(solution.per_user_rates),
                sca_power_w=solution.tx_power,
                sdr_power_w=report.p_star,
                gap=(solution.tx_power - report.p_star) / report.p_star,
                max_rank_ratio=max(report.rank_ratios),
                status=status,
            )
        )
    return rows


def feasibility_cell(cfg: ExperimentConfig, seed: int, eta_th: float) -> list[FeasibilityRow]:
    """P* of one (seed, threshold) pair compared with every budget of the grid."""
    snrs = cfg.sweep.tx_snr_db
    cs, params = make_instance(cfg, seed, snrs[0], eta_th)
    baselines = BaselineController(solver_settings(cfg))
    try:
        p_star, _ = baselines.solve_power_min(cs, params)
        status = "ok"
    except NomaTradeoffError as e:
        p_star, status = float("inf"), type(e).__name__

    rows = []
    for snr in snrs:
        p_ava = sm.tx_snr_to_power(snr, cfg.system.noise_var)
        rows.append(
            FeasibilityRow(
                seed=seed,
                tx_snr_db=snr,
                eta_th=eta_th,
                p_star_w=p_star,
                p_ava_w=p_ava,
                feasible=p_star <= p_ava,
                status=status,
            )
        )
    return rows


def pareto_cell(cfg: ExperimentConfig, seed: int) -> list[ParetoRow]:
    """Pareto front of one seed at the first TX-SNR of the sweep."""
    cs, params = make_instance(cfg, seed, cfg.sweep.tx_snr_db[0], cfg.sweep.eta_th[0])
    tradeoff = TradeoffController(solver_settings(cfg))
    grid = np.linspace(0.0, 1.0, cfg.sweep.pareto_points).tolist()
    if cfg.sweep.pareto_points == 1:
        grid = [1.0]
    try:
        points = tradeoff.pareto_sweep(cs, params, grid)
    except NomaTradeoffError as e:
        return [ParetoRow(seed=seed, alpha=a, status=type(e).__name__) for a in grid]
    return [
        ParetoRow(
            seed=seed,
            alpha=p.alpha,
            se=p.se,
            gee=p.gee,
            tx_power_w=p.tx_power,
            dominated=p.dominated,
            status=p.status,
        )
        for p in points
    ]


def _call(task: tuple[Callable[..., list[Any]], tuple[Any, ...]]) -> list[Any]:
    fn, args = task
    return fn(*args)


# ----------------------------------------------------------------------
# runner


class ExperimentRunner:
    """
    Runs the experiment suite for one configuration.

    Example:
        >>> from noma_tradeoff.config import load_experiment_config
        >>> from noma_tradeoff.controllers import ExperimentRunner
        >>>
        >>> cfg = load_experiment_config("sweep.toml")
        >>> runner = ExperimentRunner(cfg, jobs=4)
        >>> path = runner.run_alpha_sweep()
    """

    def __init__(self, config: ExperimentConfig, jobs: int = 1) -> None:
        """
        Initialize the runner.

        Args:
            config: Validated experiment configuration
            jobs: Worker processes; 1 evaluates cells inline
        """
        self.config = config
        self.jobs = max(1, int(jobs))

    def _map(
        self, fn: Callable[..., list[Any]], args: Iterable[tuple[Any, ...]]
    ) -> list[Any]:
        tasks = [(fn, (self.config, *a)) for a in args]
        logger.info("Evaluating %d cells with %d worker(s)", len(tasks), self.jobs)
        if self.jobs == 1:
            results = [_call(t) for t in tasks]
        else:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                results = list(pool.map(_call, tasks))
        return [row for chunk in results for row in chunk]

    def _write(
        self, name: str, rows: list[Any], columns: list[str], keys: list[str]
    ) -> Path:
        out = Path(self.config.output_dir)
        out.mkdir(parents=True, exist_ok=True)

        # Rows that fail the constraint re-checks never reach the result file.
        rejected = [r for r in rows if r.status.startswith(VIOLATION_PREFIX)]
        rejected_path = out / f"{name}_rejected.{CSV_VERSION}.csv"
        if rejected:
            logger.warning(
                "%d %s rows failed the constraint re-checks; written to %s",
                len(rejected),
                name,
                rejected_path,
            )
            pd.DataFrame([r.as_row() for r in rejected], columns=columns).to_csv(
                rejected_path, index=False, float_format=FLOAT_FORMAT, encoding="utf-8"
            )
        else:
            rejected_path.unlink(missing_ok=True)

        accepted = [r for r in rows if not r.status.startswith(VIOLATION_PREFIX)]
        frame = pd.DataFrame([r.as_row() for r in accepted], columns=columns)
        path = out / f"{name}.{CSV_VERSION}.csv"
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, encoding="utf-8")
        summarize(frame, keys).to_csv(
            out / f"{name}_summary.{CSV_VERSION}.csv",
            index=False,
            float_format=FLOAT_FORMAT,
            encoding="utf-8",
        )
        logger.info("Wrote %d rows to %s", len(frame), path)
        return path

    def run_alpha_sweep(self) -> Path:
        """One row per (seed, TX-SNR, weight)."""
        sweep = self.config.sweep
        rows = self._map(
            tradeoff_cell, [(s, snr) for s in sweep.seeds for snr in sweep.tx_snr_db]
        )
        return self._write("alpha_sweep", rows, ALPHA_COLUMNS, ["tx_snr_db", "alpha"])

    def run_snr_sweep(self) -> Path:
        """
        Rows per (seed, weight, TX-SNR), flagging green-power saturation.

        For alpha = 1 a row is saturated when its transmit power stays more
        than 1% below the budget; ``green_power_w`` is the first saturated
        budget of the seed.
        """
        sweep = self.config.sweep
        cells = self._map(
            tradeoff_cell, [(s, snr) for s in sweep.seeds for snr in sweep.tx_snr_db]
        )
        noise = self.config.system.noise_var
        rows: list[SnrSweepRow] = []
        for seed in sweep.seeds:
            mine = [r for r in cells if r.seed == seed]
            green = float("nan")
            flagged = []
            for r in mine:
                budget = sm.tx_snr_to_power(r.tx_snr_db, noise)
                saturated = (
                    r.alpha == 1.0
                    and r.status == "ok"
                    and r.tx_power_w < (1.0 - SATURATION_SLACK) * budget
                )
                if saturated and np.isnan(green):
                    green = budget
                flagged.append((r, saturated))
            for alpha in sweep.alphas:
                for r, saturated in flagged:
                    if r.alpha == alpha:
                        rows.append(
                            SnrSweepRow(**r.model_dump(), saturated=saturated, green_power_w=green)
                        )
        return self._write("snr_sweep", rows, SNR_COLUMNS, ["alpha", "tx_snr_db"])

    def run_benchmark_table(self) -> Path:
        """Relaxation benchmark rows per (seed, weight)."""
        rows = self._map(benchmark_cell, [(s,) for s in self.config.sweep.seeds])
        return self._write("benchmark", rows, BENCHMARK_COLUMNS, ["alpha"])

    def run_feasibility_map(self) -> Path:
        """Feasibility of every (seed, threshold, TX-SNR) point."""
        sweep = self.config.sweep
        rows = self._map(feasibility_cell, [(s, e) for e in sweep.eta_th for s in sweep.seeds])
        rows.sort(
            key=lambda r: (
                sweep.eta_th.index(r.eta_th),
                sweep.tx_snr_db.index(r.tx_snr_db),
                sweep.seeds.index(r.seed),
            )
        )
        return self._write("feasibility", rows, FEASIBILITY_COLUMNS, ["eta_th", "tx_snr_db"])

    def run_pareto(self) -> Path:
        """Pareto fronts of every seed."""
        rows = self._map(pareto_cell, [(s,) for s in self.config.sweep.seeds])
        return self._write("pareto", rows, PARETO_COLUMNS, ["alpha"])


def summarize(frame: pd.DataFrame, keys: list[str]) -> pd.DataFrame:
    """
    Mean and sample standard deviation of the numeric columns per key.

    Only rows with status ``ok`` contribute; ``count`` gives their number.
    """
    ok = frame[frame["status"] == "ok"]
    metrics = [
        c
        for c in frame.columns
        if c not in keys and c != "seed" and pd.api.types.is_numeric_dtype(frame[c])
        and not pd.api.types.is_bool_dtype(frame[c])
    ]
    if ok.empty or not metrics:
        return pd.DataFrame(columns=[*keys, "count"])
    grouped = ok.groupby(keys, sort=False)[metrics].agg(["mean", "std"])
    grouped.columns = [f"{col}_{stat}" for col, stat in grouped.columns]
    counts = ok.groupby(keys, sort=False).size().rename("count")
    return grouped.join(counts).reset_index()
