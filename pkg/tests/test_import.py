"""
Basic import tests to verify package structure.
"""


def test_import_package():
    """Test that the main package can be imported."""
    import noma_tradeoff

    assert noma_tradeoff.__version__ == "0.1.0"


def test_import_config():
    """Test that config module can be imported."""
    from noma_tradeoff.config import NomaSettings, get_settings, load_experiment_config

    assert NomaSettings is not None
    assert get_settings is not None
    assert load_experiment_config is not None


def test_import_controllers():
    """Test that all controllers can be imported."""
    from noma_tradeoff.controllers import (
        BaselineController,
        ConicSolver,
        ExperimentRunner,
        ScaKernel,
        SdpBenchmarkController,
        TradeoffController,
    )

    assert ConicSolver is not None
    assert ScaKernel is not None
    assert BaselineController is not None
    assert TradeoffController is not None
    assert SdpBenchmarkController is not None
    assert ExperimentRunner is not None


def test_import_exceptions():
    """Test that exceptions can be imported."""
    from noma_tradeoff.exceptions import (
        BenchmarkError,
        ConfigurationError,
        ContractViolationError,
        GuardError,
        InfeasibleError,
        IterationLimitError,
        NomaTradeoffError,
        NumericalFailureError,
        RankFailureError,
        SolverError,
        ValidationError,
    )

    assert issubclass(ConfigurationError, NomaTradeoffError)
    assert issubclass(ValidationError, NomaTradeoffError)
    assert issubclass(ContractViolationError, NomaTradeoffError)
    assert issubclass(SolverError, NomaTradeoffError)
    assert issubclass(NumericalFailureError, SolverError)
    assert issubclass(IterationLimitError, SolverError)
    assert issubclass(InfeasibleError, NomaTradeoffError)
    assert issubclass(GuardError, NomaTradeoffError)
    assert issubclass(RankFailureError, BenchmarkError)


def test_import_models():
    """Test that models can be imported."""
    from noma_tradeoff.models import (
        BeamformerSolution,
        ChannelSet,
        ConeProgram,
        IterationTrace,
        SdpReport,
        SlackState,
        SystemParams,
    )

    assert SystemParams is not None
    assert ChannelSet is not None
    assert BeamformerSolution is not None
    assert ConeProgram is not None
    assert SlackState is not None
    assert IterationTrace is not None
    assert SdpReport is not None


def test_cli_entry_point():
    """Test that the console entry point resolves."""
    from noma_tradeoff.cli import main

    assert callable(main)
