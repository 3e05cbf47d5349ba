"""Run configuration: JSON sections per stage plus named dataset profiles."""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

# Per-dataset training settings (I, indi, indj+1, lambda) as published.
# "synth" is the desk-scale profile for the Gaussian fixture: it keeps
# the 200/10/4/20 settings but needs K above the cluster size and a
# larger step size to converge within the epoch budget.
PROFILES = {
    "handwritten-v4": {"train": {"I": 1000, "indi": 10, "indj_plus_1": 4, "lambda": 80}},
    "handwritten-v2": {"train": {"I": 1000, "indi": 10, "indj_plus_1": 4, "lambda": 20}},
    "100leaves": {"train": {"I": 200, "indi": 10, "indj_plus_1": 2, "lambda": 2}},
    "humbi240": {"train": {"I": 1000, "indi": 10, "indj_plus_1": 4, "lambda": 20}},
    "buaa": {"train": {"I": 200, "indi": 10, "indj_plus_1": 4, "lambda": 20}},
    "bbcsport": {"train": {"I": 200, "indi": 10, "indj_plus_1": 4, "lambda": 20}},
    "synth": {
        "dataset": {
            "source": "synth",
            "synth": {"n_clusters": 4, "per_cluster": 50, "dims": [8, 8], "separation": 10.0, "noise": 0.5},
        },
        "similarity": {"knn_k": 60},
        "train": {"I": 200, "indi": 10, "indj_plus_1": 4, "lambda": 20, "lr": 0.02},
        "refine": {"k": 30},
    },
}

DEFAULTS = {
    "seed": 0,
    "profile": None,
    "dataset": {
        "source": "synth",
        "manifest": None,
        "format": "json-manifest",
        "synth": {"n_clusters": 4, "per_cluster": 50, "dims": [8, 8], "separation": 10.0, "noise": 0.5},
        "missing_rate": 0.0,
        "four_view_protocol": False,
    },
    "similarity": {"metric": "cosine", "knn_k": 20},
    "train": {
        "I": 1000,
        "indi": 10,
        "indj_plus_1": 4,
        "lambda": 20,
        "lr": 0.001,
        "momentum": 0.9,
        "weight_decay": 5e-5,
        "epochs": 2000,
        "consistency": "mix",
        "use_constraint": True,
        "early_stop_tol": 1e-8,
        "early_stop_window": 50,
    },
    "fusion": {"aggregation": "formula", "completion": "auto"},
    "refine": {"path_passes": 1, "coneighbor_passes": 1, "k": None},
    "cluster": {"k": None, "maxiter": 20, "singleton_escape": True},
    "metrics": {"nmi_average": "sqrt"},
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def resolve(user: dict | None = None) -> dict:
    """Defaults, then the named profile, then the user's own keys."""
    user = user or {}
    cfg = copy.deepcopy(DEFAULTS)
    profile = user.get("profile")
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile {profile!r}; choose from {sorted(PROFILES)}")
        cfg = _merge(cfg, PROFILES[profile])
    cfg = _merge(cfg, user)
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    return cfg


def load_config(path) -> dict:
    try:
        user = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = resolve(user)
    manifest = cfg["dataset"].get("manifest")
    if manifest and not Path(manifest).is_absolute():
        cfg["dataset"]["manifest"] = str((Path(path).parent / manifest).resolve())
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()
