import math
import os
import subprocess

import numpy as np
import pytest

import qps


def test_version():
    assert qps.version.startswith("qps ")


def test_free_lyapunov_at_three():
    L, err = qps.lyapunov(qps.golden, 3.0, 1.0, potential="zero", n=4000, x_samples=10)
    assert L == pytest.approx(math.log((3 + math.sqrt(5)) / 2), abs=1e-3)
    assert err >= 0


def test_eigenvalues_match_numpy():
    a, b, x, lam = -5, 5, 0.17, 7.0
    ev = qps.eigenvalues(a, b, x, qps.golden, lam)
    n = np.arange(a, b + 1)
    H = np.diag(lam * 2 * np.cos(2 * np.pi * (x + n * qps.golden))) - np.eye(len(n), k=1) - np.eye(len(n), k=-1)
    np.testing.assert_allclose(ev, np.linalg.eigvalsh(H), atol=1e-10)


def test_log_det_matches_numpy():
    sign, logabs = qps.log_det(0, 20, 0.3, qps.golden, 50.0, 1.5)
    n = np.arange(0, 21)
    H = np.diag(50.0 * 2 * np.cos(2 * np.pi * (0.3 + n * qps.golden)) - 1.5)
    H -= np.eye(21, k=1) + np.eye(21, k=-1)
    s, l = np.linalg.slogdet(H)
    assert sign == s
    assert logabs == pytest.approx(l, rel=1e-10)


def test_schedule():
    assert qps.schedule() == [4, 16, 200]
    with pytest.raises(ValueError):
        qps.schedule(tau=0.7)


def test_suite_report():
    assert "A" in qps.suite_names()
    rep = qps.run_suite("F", seed=2, trials=20)
    assert rep["suite"] == "F"
    assert isinstance(rep["pass"], bool)
    with pytest.raises(ValueError):
        qps.run_suite("nope")


@pytest.mark.skipif("QPS_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_version():
    out = subprocess.run([os.environ["QPS_CLI"], "--version"], capture_output=True, text=True, check=True)
    assert qps.version in out.stdout
