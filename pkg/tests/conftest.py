import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from nasatd3.config import RunConfig  # noqa: E402

LONG = os.environ.get("NASATD3_LONG", "") == "1"


def pytest_collection_modifyitems(config, items):
    if LONG:
        return
    skip = pytest.mark.skip(reason="multi-hour learning run; set NASATD3_LONG=1")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def tiny_config(**kw):
    """Structurally complete but small config for fast loop tests."""
    base = dict(image_size=16, z_dim=8, filters=4, actor_hidden=32, critic_hidden=32, predictor_hidden=16,
                batch_size=8, G=2, warmup_steps=10, buffer_capacity=500, total_steps=40, eval_every=20,
                eval_episodes=2, episode_steps=10)
    base.update(kw)
    return RunConfig(**base)


@pytest.fixture
def tiny_cfg(tmp_path):
    return tiny_config(out_dir=str(tmp_path / "run"))


_acceptance = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance[name] = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        if report.when == "call" and report.outcome == "failed":
            _acceptance[name] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    from test_acceptance import CRITERIA

    terminalreporter.section("acceptance")
    for name, text in CRITERIA.items():
        if name in _acceptance:
            terminalreporter.write_line(f"{_acceptance[name]:4}  criterion {text}")
