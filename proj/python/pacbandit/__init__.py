"""Python access to the pacbandit C++ core."""

import csv
import io
import json

from . import _core
from ._core import (
    PacBanditError,
    binary_kl,
    gen_mab_binary,
    kl_categorical,
    kl_inverse_lower,
    online_regret,
)

__all__ = [
    "PacBanditError",
    "binary_kl",
    "kl_inverse_lower",
    "kl_categorical",
    "gen_mab_binary",
    "online_regret",
    "ha_bound",
    "kl_family_bound",
    "bernstein_bound",
    "preset_config",
    "run_experiment",
]


def ha_bound(r_hat, n, kappa, lambda_, kl, delta):
    return json.loads(_core.ha_from_stats(r_hat, n, kappa, lambda_, kl, delta))


def kl_family_bound(r_hat, n, kappa, kl, delta, pinsker=False):
    return json.loads(_core.kl_family_from_stats(r_hat, n, kappa, kl, delta, pinsker))


def bernstein_bound(r_hat, n, kappa, lambda_, kl, delta):
    return json.loads(_core.bernstein_from_stats(r_hat, n, kappa, lambda_, kl, delta))


def preset_config(name, seed=0, num_seeds=0):
    return json.loads(_core.preset_config(name, seed, num_seeds))


def run_experiment(config, write_files=False):
    """Run an experiment config (dict); returns (rows, failures)."""
    out = json.loads(_core.run_experiment_json(json.dumps(config), write_files))
    rows = list(csv.DictReader(io.StringIO(out["csv"])))
    return rows, out["failures"]
