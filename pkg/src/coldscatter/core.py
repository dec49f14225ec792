"""Scenario description, unit conventions and tabular result containers.

Unit system used throughout the package:

* lengths in units of the reduced resonant wavelength  lbar = c / omega_0
  (so the full wavelength is 2*pi in these units),
* rates, detunings and inverse times in units of the natural decay rate
  gamma,
* cross sections in lbar**2.

Geometric phase factors always use the resonant wavenumber 1/lbar; the
detuning only survives in resonance denominators.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import numpy as np

__all__ = [
    "ConfigError",
    "SampleSpec",
    "SpectrumTable",
    "DecayTrace",
    "derive_atom_count",
    "load_scenario",
    "scenario_to_dict",
]


class ConfigError(ValueError):
    """Raised for invalid scenario parameters or malformed config files."""


def derive_atom_count(eta: float, radius: float) -> int:
    """Number of atoms implied by density ``eta`` and sphere ``radius``.

    N = round(eta * (4/3) * pi * radius**3).  Deterministic: the atom
    number is fixed per scenario, never Poisson sampled, so microscopic
    runs compare against the homogeneous-sphere result at exactly the
    requested mean density.
    """
    if eta <= 0:
        raise ConfigError(f"density must be positive, got {eta}")
    if radius <= 0:
        raise ConfigError(f"radius must be positive, got {radius}")
    n = int(round(eta * (4.0 / 3.0) * math.pi * radius**3))
    if n < 1:
        raise ConfigError(
            f"sample too dilute/small: eta={eta}, radius={radius} give N=0"
        )
    return n


def _check_half_integer(name: str, value: float) -> float:
    doubled = 2.0 * value
    if value < 0 or abs(doubled - round(doubled)) > 1e-12:
        raise ConfigError(f"{name} must be a non-negative half-integer, got {value}")
    return round(doubled) / 2.0


@dataclass(frozen=True)
class SampleSpec:
    """Physical scenario: a cold spherical cloud probed near resonance.

    Attributes
    ----------
    eta : dimensionless density n0 * lbar**3.
    radius : sphere radius in lbar.
    f_ground, f_excited : angular momenta of the closed dipole transition.
    detuning_grid : strictly increasing detunings, units of gamma.
    seed : base RNG seed for configuration sampling.
    """

    eta: float
    radius: float
    f_ground: float = 0.0
    f_excited: float = 1.0
    detuning_grid: tuple[float, ...] = ()
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "f_ground", _check_half_integer("f_ground", self.f_ground))
        object.__setattr__(self, "f_excited", _check_half_integer("f_excited", self.f_excited))
        if self.eta <= 0 or self.radius <= 0:
            raise ConfigError("eta and radius must be positive")
        if abs(self.f_excited - self.f_ground) > 1.0 + 1e-12:
            raise ConfigError(
                "f_excited must be one of f_ground - 1, f_ground, f_ground + 1"
            )
        if self.f_excited < self.f_ground - 1 - 1e-12 or (
            self.f_ground == 0 and self.f_excited == 0
        ):
            raise ConfigError("pair does not admit a closed dipole transition")
        grid = tuple(float(d) for d in self.detuning_grid)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("detuning_grid must be strictly increasing")
        object.__setattr__(self, "detuning_grid", grid)
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must fit in 64 bits")
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def n_atoms(self) -> int:
        return derive_atom_count(self.eta, self.radius)

    def with_detunings(self, grid) -> "SampleSpec":
        return replace(self, detuning_grid=tuple(float(d) for d in grid))

    def digest(self) -> str:
        """Stable hash of the physical content, used as a cache key."""
        payload = json.dumps(
            {
                "eta": self.eta,
                "radius": self.radius,
                "f_ground": self.f_ground,
                "f_excited": self.f_excited,
                "seed": self.seed,
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass
class SpectrumTable:
    """Cross sections versus detuning, all in lbar**2.

    ``method`` tags the origin: "mie", "microscopic-single" or
    "microscopic-averaged".  ``stderr`` is the per-row standard error of
    q_0 when the table is a configuration average.
    """

    delta: np.ndarray
    q_s: np.ndarray
    q_a: np.ndarray
    q_0: np.ndarray
    method: str
    stderr: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.delta = np.asarray(self.delta, dtype=float)
        self.q_s = np.asarray(self.q_s, dtype=float)
        self.q_a = np.asarray(self.q_a, dtype=float)
        self.q_0 = np.asarray(self.q_0, dtype=float)
        n = self.delta.size
        if not (self.q_s.size == self.q_a.size == self.q_0.size == n):
            raise ValueError("column length mismatch")
        if self.method == "mie":
            scale = np.maximum(np.abs(self.q_0), 1e-300)
            closure = np.abs(self.q_0 - self.q_s - self.q_a) / scale
            if np.any(closure > 1e-10):
                raise ValueError("q_0 != q_s + q_a beyond 1e-10 relative")
        if self.method == "microscopic-averaged" and np.any(self.q_0 < 0):
            raise ValueError("averaged cross sections must be non-negative")


@dataclass
class DecayTrace:
    """Excited population P(t) and fluorescence rate I(t) = -dP/dt.

    Times in 1/gamma.  P(0) = 1 for a normalized initial excitation.
    """

    t: np.ndarray
    population: np.ndarray
    intensity: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.population = np.asarray(self.population, dtype=float)
        self.intensity = np.asarray(self.intensity, dtype=float)
        if self.t.size and self.t[0] == 0.0 and abs(self.population[0] - 1.0) > 1e-9:
            raise ValueError("initial excitation must be normalized: P(0) = 1")
        if np.any(self.population < -1e-12):
            raise ValueError("negative excited-state population")


_SCENARIO_KEYS = {"eta", "radius", "f_ground", "f_excited", "detuning", "seed", "n_configs"}
_DETUNING_KEYS = {"min", "max", "count"}


def _scenario_from_dict(data: dict, source: str) -> tuple[SampleSpec, int]:
    unknown = set(data) - _SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown keys {sorted(unknown)}")
    try:
        det = data["detuning"]
    except KeyError:
        raise ConfigError(f"{source}: missing 'detuning' table") from None
    if not isinstance(det, dict):
        raise ConfigError(f"{source}: 'detuning' must be a table with min/max/count")
    unknown = set(det) - _DETUNING_KEYS
    if unknown:
        raise ConfigError(f"{source}: unknown detuning keys {sorted(unknown)}")
    missing = _DETUNING_KEYS - set(det)
    if missing:
        raise ConfigError(f"{source}: detuning missing {sorted(missing)}")
    count = int(det["count"])
    if count < 1 or det["max"] < det["min"] or (count == 1 and det["max"] != det["min"]):
        raise ConfigError(f"{source}: bad detuning range")
    grid = np.linspace(float(det["min"]), float(det["max"]), count)
    try:
        spec = SampleSpec(
            eta=float(data["eta"]),
            radius=float(data["radius"]),
            f_ground=float(data.get("f_ground", 0.0)),
            f_excited=float(data.get("f_excited", data.get("f_ground", 0.0) + 1.0)),
            detuning_grid=tuple(grid),
            seed=int(data.get("seed", 0)),
        )
    except KeyError as exc:
        raise ConfigError(f"{source}: missing key {exc}") from None
    n_configs = int(data.get("n_configs", 1))
    if n_configs < 1:
        raise ConfigError(f"{source}: n_configs must be >= 1")
    return spec, n_configs


def load_scenario(path: str | Path) -> tuple[SampleSpec, int]:
    """Parse a scenario config file (TOML or JSON by extension).

    Returns the sample spec and the requested number of configurations.
    Unknown keys are rejected rather than ignored.
    """
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            data = json.loads(path.read_text())
        else:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a table/object")
    return _scenario_from_dict(data, str(path))


def scenario_to_dict(spec: SampleSpec, n_configs: int = 1) -> dict:
    """Inverse of :func:`load_scenario` for round-tripping and manifests."""
    grid = np.asarray(spec.detuning_grid)
    return {
        "eta": spec.eta,
        "radius": spec.radius,
        "f_ground": spec.f_ground,
        "f_excited": spec.f_excited,
        "detuning": {
            "min": float(grid[0]),
            "max": float(grid[-1]),
            "count": int(grid.size),
        },
        "seed": spec.seed,
        "n_configs": n_configs,
    }
