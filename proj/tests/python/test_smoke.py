import math
import os
import subprocess

import pytest

pacbandit = pytest.importorskip("pacbandit")


def test_binary_kl_and_inverse():
    assert pacbandit.binary_kl(0.3, 0.3) == 0.0
    q = pacbandit.kl_inverse_lower(0.8, 0.05)
    assert q < 0.8
    assert math.isclose(pacbandit.binary_kl(0.8, q), 0.05, abs_tol=1e-9)


def test_bound_reports_are_dicts():
    ha = pacbandit.ha_bound(0.7, 1000, 0.1, 50.0, 0.5, 0.05)
    kl = pacbandit.kl_family_bound(0.7, 1000, 0.1, 0.5, 0.05)
    pin = pacbandit.kl_family_bound(0.7, 1000, 0.1, 0.5, 0.05, pinsker=True)
    assert {"value", "terms"} <= set(ha)
    assert kl["value"] >= pin["value"] - 1e-9


def test_env_and_online():
    means = pacbandit.gen_mab_binary(10, 3)
    assert len(means) == 10 and max(means) == 0.8
    regret = pacbandit.online_regret("exp3", means, 200, 1)
    assert len(regret) == 200 and regret[-1] >= 0


def test_experiment_deterministic():
    cfg = pacbandit.preset_config("fig3", 0, 1)
    cfg["sweep_K"] = [5]
    a, fa = pacbandit.run_experiment(cfg)
    b, fb = pacbandit.run_experiment(cfg)
    assert not fa and not fb
    assert a == b and len(a) == 4


def test_bad_config_raises():
    with pytest.raises(pacbandit.PacBanditError):
        pacbandit.run_experiment({"preset": "fig3", "delta": 2.0})


def test_cli_exit_codes(tmp_path):
    bench = os.environ.get("PACBANDIT_BENCH")
    if not bench:
        pytest.skip("bench binary not provided")
    ok = subprocess.run([bench, "bounds", "--bound", "kl_inverse", "--out-dir", str(tmp_path)], capture_output=True)
    assert ok.returncode == 0
    bad = subprocess.run([bench, "offline", "--preset", "nope", "--out-dir", str(tmp_path)], capture_output=True)
    assert bad.returncode == 2
