"""Shared fixtures plus the acceptance-report terminal section."""

import numpy as np
import pytest

from phononherald import config as config_mod

# populated by tests/test_acceptance.py, printed after the run so the
# one-line-per-criterion report survives pytest's output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def default_config():
    return config_mod.default_config()


@pytest.fixture
def fast_config():
    """Inflated rates so small Monte Carlo runs produce coincidences."""
    cfg = config_mod.default_config()
    chain = cfg.chain.__class__(
        eta_path1=0.5, eta_path2=0.5, eta_qe1=0.8, eta_qe2=0.8,
        eta_fc=1.0, eta_c=1.0, dark_rate_hz=cfg.chain.dark_rate_hz,
        leak_fraction=cfg.chain.leak_fraction,
        window_write_ns=cfg.chain.window_write_ns,
        window_read_ns=cfg.chain.window_read_ns)
    proto = cfg.protocol.__class__(p_pair=0.1, eps_read=0.5,
                                   delta_t_list_ns=(100.0,), trials=100_000)
    return cfg.replace(chain=chain, protocol=proto)


@pytest.fixture(autouse=True)
def _seed_numpy():
    np.random.seed(0)
