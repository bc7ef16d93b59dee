import pytest

from schrolab import OperatorParams, SolverConfig, build_grid, full_decomposition


@pytest.fixture(scope="session")
def oscillator():
    return OperatorParams(0.0, 2.0, 3, pure_laplacian=True)


@pytest.fixture(scope="session")
def model():
    return OperatorParams(1.0, 3.0, 3)


@pytest.fixture(scope="session")
def model_decomp(model):
    grid = SolverConfig(n_cells=512).grid(model)
    return full_decomposition(model, grid, l_max=12, n_per_mode=8)


@pytest.fixture(scope="session")
def deep_decomp(model):
    # deep truncation for tail asymptotics
    grid = SolverConfig(n_cells=1024, truncation_tol=1e-40).grid(model)
    return full_decomposition(model, grid, l_max=0, n_per_mode=3)


@pytest.fixture(scope="session")
def oscillator_decomp(oscillator):
    return full_decomposition(oscillator, build_grid(oscillator, 512, 8.0), l_max=2, n_per_mode=3)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
