"""Versioned on-disk cache of per-configuration eigendecompositions.

Keyed by (sample digest, configuration index) so different subcommands
operating on the same scenario reuse one diagonalization.  The cache
directory defaults to ~/.cache/coldscatter and can be redirected with the
COLDSCATTER_CACHE_DIR environment variable.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .core import SampleSpec
from .microscopic import ModeSet

__all__ = ["cache_dir", "load_modes", "store_modes"]

CACHE_FORMAT_VERSION = 1


def cache_dir() -> Path:
    env = os.environ.get("COLDSCATTER_CACHE_DIR")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "coldscatter"


def _entry_path(spec: SampleSpec, config_index: int) -> Path:
    return cache_dir() / f"modes-v{CACHE_FORMAT_VERSION}-{spec.digest()}-{config_index}.npz"


def load_modes(spec: SampleSpec, config_index: int) -> ModeSet | None:
    path = _entry_path(spec, config_index)
    if not path.exists():
        return None
    try:
        with np.load(path) as data:
            if int(data["version"]) != CACHE_FORMAT_VERSION:
                return None
            return ModeSet(
                eigenvalues=data["eigenvalues"],
                vectors=data["vectors"],
                biorthogonality_residual=float(data["biorthogonality_residual"]),
            )
    except (OSError, KeyError, ValueError):
        return None  # treat unreadable entries as misses


def store_modes(spec: SampleSpec, config_index: int, modes: ModeSet) -> Path:
    path = _entry_path(spec, config_index)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp.npz")
    np.savez_compressed(
        tmp,
        version=CACHE_FORMAT_VERSION,
        eigenvalues=modes.eigenvalues,
        vectors=modes.vectors,
        biorthogonality_residual=modes.biorthogonality_residual,
    )
    tmp.replace(path)
    return path
