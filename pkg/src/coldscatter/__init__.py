"""Near-resonant light scattering from a dense, cold, spherical atomic cloud.

Two complementary routes to the same observables:

* a self-consistent bulk permittivity fed into the partial-wave theory of
  a homogeneous sphere (``permittivity``, ``mie``), and
* an exact microscopic solution of single-photon scattering on frozen
  random dipole configurations (``microscopic``), with Monte-Carlo
  configuration averaging and a diffusion-mode reference (``ensemble``).
"""

__version__ = "0.1.0"

from .core import DecayTrace, SampleSpec, SpectrumTable, derive_atom_count

__all__ = [
    "__version__",
    "SampleSpec",
    "SpectrumTable",
    "DecayTrace",
    "derive_atom_count",
]
