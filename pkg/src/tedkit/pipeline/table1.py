"""End-to-end reproduction of the accuracy table for both use cases."""

from __future__ import annotations

from collections.abc import Sequence

import structlog

from tedkit.datasets import loan, tictactoe
from tedkit.learners.forest import ForestLearner
from tedkit.learners.mlp import MlpLearner
from tedkit.models import (
    AggregateReport,
    ExperimentReport,
    ProtocolConfig,
    SplitSpec,
    Table1Report,
    ToleranceCheck,
    Tolerances,
)
from tedkit.pipeline.experiment import run_baseline, run_repeated, run_ted

logger = structlog.get_logger(__name__)


def _band(name: str, observed: float, target: float, band: float) -> ToleranceCheck:
    return ToleranceCheck(
        name=name,
        observed=observed,
        expected=f"{target:.1f} +/- {band:.1f}",
        passed=abs(observed - target) <= band,
    )


def _at_least(name: str, observed: float, minimum: float) -> ToleranceCheck:
    return ToleranceCheck(
        name=name, observed=observed, expected=f">= {minimum:g}", passed=observed >= minimum
    )


def seeds_improved(baseline: AggregateReport, ted: AggregateReport) -> int:
    """Seeds on which the TED run's Y accuracy is at least the baseline's."""
    by_seed = {run.seed: run.y_accuracy for run in baseline.runs}
    return sum(1 for run in ted.runs if run.y_accuracy >= by_seed.get(run.seed, 2.0))


def tolerance_checks(
    tictactoe_baseline: ExperimentReport,
    tictactoe_ted: ExperimentReport,
    loan_baseline: AggregateReport,
    loan_ted: AggregateReport,
    tolerances: Tolerances,
) -> list[ToleranceCheck]:
    """Compare observed accuracies, in percent, with the acceptance thresholds."""
    t = tolerances
    ttt_base_y = 100.0 * tictactoe_baseline.y_accuracy
    ttt_ted_y = 100.0 * tictactoe_ted.y_accuracy
    ttt_ted_e = 100.0 * (tictactoe_ted.e_accuracy or 0.0)
    return [
        _band("tictactoe baseline Y", ttt_base_y, t.tictactoe_baseline_y, t.tictactoe_band),
        _band("tictactoe TED Y", ttt_ted_y, t.tictactoe_ted_y, t.tictactoe_band),
        _band("tictactoe TED E", ttt_ted_e, t.tictactoe_ted_e, t.tictactoe_band),
        _at_least(
            "tictactoe TED Y vs baseline",
            ttt_ted_y - ttt_base_y,
            -t.tictactoe_ted_y_max_loss,
        ),
        _at_least(
            "loan baseline Y (mean)",
            100.0 * loan_baseline.summary["y_accuracy"].mean,
            t.loan_baseline_y_min,
        ),
        _at_least(
            "loan TED E (mean)",
            100.0 * loan_ted.summary["e_accuracy"].mean,
            t.loan_ted_e_min,
        ),
        _at_least(
            "loan seeds with TED Y >= baseline Y",
            float(seeds_improved(loan_baseline, loan_ted)),
            t.loan_min_seeds_improved,
        ),
    ]


def reproduce_table1(
    protocol: ProtocolConfig,
    seed: int,
    n_jobs: int = 1,
    seeds: Sequence[int] | None = None,
) -> Table1Report:
    """Run every cell of the table.

    Tic-tac-toe: one split and one MLP per training input. Loan: one synthetic
    dataset, then one forest run per training input and loan seed.

    Args:
        protocol: Hyperparameters, sizes and tolerances.
        seed:     Default for every seed the protocol leaves unset.
        n_jobs:   Parallel loan runs.
        seeds:    Loan run seeds; default ``seed .. seed + n_seeds - 1``.
    """
    lp = protocol.loan
    loan_seeds = list(range(seed, seed + lp.n_seeds)) if seeds is None else list(seeds)
    log = logger.bind(seed=seed)
    log.info("table1.start", loan_seeds=loan_seeds)

    ttt_spec = SplitSpec(
        train_fraction=protocol.train_fraction,
        seed=seed if protocol.tictactoe.seed is None else protocol.tictactoe.seed,
    )
    mlp = MlpLearner(protocol.tictactoe.mlp)
    boards = tictactoe.build_dataset(with_explanations=True)
    ttt_baseline = run_baseline(boards.without_explanations(), mlp, ttt_spec)
    ttt_ted = run_ted(boards, mlp, ttt_spec, derive_y_from_e=False)

    applications = loan.generate_synthetic(
        lp.n, seed if lp.generation_seed is None else lp.generation_seed
    )
    # Parallelism lives at the seed level.
    forest = ForestLearner(lp.forest.model_copy(update={"n_jobs": 1}))
    loan_baseline = run_repeated(
        applications.without_explanations(),
        forest,
        "baseline",
        loan_seeds,
        train_fraction=protocol.train_fraction,
        n_jobs=n_jobs,
    )
    loan_ted = run_repeated(
        applications,
        forest,
        "ted",
        loan_seeds,
        train_fraction=protocol.train_fraction,
        derive_y_from_e=lp.derive_y_from_e,
        n_jobs=n_jobs,
    )

    report = Table1Report(
        tictactoe_baseline=ttt_baseline,
        tictactoe_ted=ttt_ted,
        loan_baseline=loan_baseline,
        loan_ted=loan_ted,
        checks=tolerance_checks(
            ttt_baseline, ttt_ted, loan_baseline, loan_ted, protocol.tolerances
        ),
    )
    log.info(
        "table1.complete",
        passed=report.passed,
        failed=[c.name for c in report.checks if not c.passed],
    )
    return report
