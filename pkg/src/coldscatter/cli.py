"""Command-line front end: scenario in, CSV tables + JSON manifest out.

Every run writes its data as headered CSV (full-precision scientific
notation, diff-able goldens) next to a JSON manifest recording the
resolved scenario, seeds, per-stage timings and output digests.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cache import load_modes, store_modes
from .core import ConfigError, SampleSpec, load_scenario, scenario_to_dict
from .ensemble import (
    average_decay,
    average_spectrum,
    holstein_estimate,
    mean_decay_trace,
)
from .mie import mie_spectrum
from .microscopic import (
    build_effective_hamiltonian,
    decay_signal,
    eigenmodes,
    sample_configuration,
    total_cross_section,
)
from .permittivity import (
    coupling_strength,
    critical_density,
    negative_window,
    permittivity_grid,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_RESOURCE = 4


class ResourceCapError(RuntimeError):
    pass


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    rows = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17e}" for v in row) + "\n")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Manifest:
    def __init__(self, args, spec: SampleSpec | None, n_configs: int | None):
        self.data = {
            "tool": "coldscatter",
            "version": __version__,
            "command": args.command,
            "started_unix": time.time(),
            "scenario": scenario_to_dict(spec, n_configs or 1) if spec else None,
            "threads": getattr(args, "threads", None),
            "stages": {},
            "outputs": {},
        }
        self._t0 = time.perf_counter()
        self._last = self._t0

    def stage(self, name: str) -> None:
        now = time.perf_counter()
        self.data["stages"][name] = now - self._last
        self._last = now

    def add_output(self, path: Path) -> None:
        self.data["outputs"][path.name] = _digest(path)

    def write(self, path: Path) -> None:
        self.data["wall_clock"] = time.perf_counter() - self._t0
        path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")


def _load(args) -> tuple[SampleSpec, int]:
    spec, n_configs = load_scenario(args.config)
    if getattr(args, "configs", None) is not None:
        n_configs = args.configs
    return spec, n_configs


def _check_dim(spec: SampleSpec, max_dim: int) -> None:
    dim = 3 * spec.n_atoms
    if dim > max_dim:
        raise ResourceCapError(
            f"requested matrix dimension 3N = {dim} exceeds --max-dim {max_dim}"
        )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_permittivity(args) -> int:
    spec, n_configs = _load(args)
    man = Manifest(args, spec, n_configs)
    deltas = np.asarray(spec.detuning_grid)
    coupling = coupling_strength(spec.eta, spec.f_ground, spec.f_excited)
    eps = permittivity_grid(deltas, coupling)
    root = np.sqrt(eps)
    root = np.where(root.imag < 0, -root, root)
    man.stage("solve")
    out = _out_dir(args) / "permittivity.csv"
    _write_csv(
        out,
        ["delta", "re_eps", "im_eps", "re_sqrt_eps", "im_sqrt_eps"],
        [deltas, eps.real, eps.imag, root.real, root.imag],
    )
    man.add_output(out)
    man.write(out.with_suffix(".manifest.json"))
    return EXIT_OK


def _cmd_mie_spectrum(args) -> int:
    spec, n_configs = _load(args)
    man = Manifest(args, spec, n_configs)
    table = mie_spectrum(spec)
    man.stage("mie")
    out = _out_dir(args) / "mie_spectrum.csv"
    _write_csv(out, ["delta", "q_s", "q_a", "q_0"],
               [table.delta, table.q_s, table.q_a, table.q_0])
    man.add_output(out)
    man.write(out.with_suffix(".manifest.json"))
    return EXIT_OK


def _cmd_micro_spectrum(args) -> int:
    spec, _ = _load(args)
    man = Manifest(args, spec, None)
    _check_dim(spec, args.max_dim)
    config = sample_configuration(spec, args.config_index)
    h = build_effective_hamiltonian(config)
    man.stage("build")
    deltas = np.asarray(spec.detuning_grid)
    q0 = np.array([total_cross_section(h, config, d) for d in deltas])
    man.stage("sweep")
    out = _out_dir(args) / "micro_spectrum.csv"
    _write_csv(out, ["delta", "q_0"], [deltas, q0])
    man.add_output(out)
    man.write(out.with_suffix(".manifest.json"))
    return EXIT_OK


def _get_modes(spec: SampleSpec, config_index: int):
    modes = load_modes(spec, config_index)
    if modes is None:
        config = sample_configuration(spec, config_index)
        h = build_effective_hamiltonian(config)
        modes = eigenmodes(h)
        store_modes(spec, config_index, modes)
    else:
        config = sample_configuration(spec, config_index)
    return config, modes


def _cmd_modes(args) -> int:
    spec, _ = _load(args)
    man = Manifest(args, spec, None)
    _check_dim(spec, args.max_dim)
    _, modes = _get_modes(spec, args.config_index)
    man.stage("eigen")
    out = _out_dir(args) / "modes.csv"
    _write_csv(
        out,
        ["shift", "width"],
        [modes.shifts, modes.widths],
    )
    man.add_output(out)
    man.data["biorthogonality_residual"] = modes.biorthogonality_residual
    man.write(out.with_suffix(".manifest.json"))
    return EXIT_OK


def _time_grid(args) -> np.ndarray:
    return np.linspace(0.0, args.t_max, args.t_points)


def _cmd_decay(args) -> int:
    spec, _ = _load(args)
    man = Manifest(args, spec, None)
    _check_dim(spec, args.max_dim)
    config, modes = _get_modes(spec, args.config_index)
    h = build_effective_hamiltonian(config)
    trace = decay_signal(h, config, _time_grid(args), modes=modes)
    man.stage("decay")
    out = _out_dir(args) / "decay.csv"
    _write_csv(out, ["t", "population", "intensity"],
               [trace.t, trace.population, trace.intensity])
    man.add_output(out)
    man.write(out.with_suffix(".manifest.json"))
    return EXIT_OK


def _cmd_average(args) -> int:
    spec, n_configs = _load(args)
    man = Manifest(args, spec, n_configs)
    _check_dim(spec, args.max_dim)
    out_dir = _out_dir(args)
    if args.what == "spectrum":
        result = average_spectrum(spec, n_configs, max_workers=args.threads)
        man.stage("average")
        out = out_dir / "average_spectrum.csv"
        stderr = result.stderr if result.stderr is not None else np.zeros_like(result.mean)
        _write_csv(out, ["delta", "q_0_mean", "q_0_stderr"],
                   [result.grid, result.mean, stderr])
    else:
        result = average_decay(spec, n_configs, _time_grid(args),
                               max_workers=args.threads)
        man.stage("average")
        out = out_dir / "average_decay.csv"
        stderr = result.stderr if result.stderr is not None else np.zeros_like(result.mean)
        _write_csv(
            out,
            ["t", "population_mean", "population_stderr", "intensity_mean"],
            [result.grid, result.mean, stderr, result.metadata["mean_intensity"]],
        )
    man.add_output(out)
    man.write(out.with_suffix(".manifest.json"))
    return EXIT_OK


def _cmd_critical_density(args) -> int:
    man = Manifest(args, None, None)
    eta_c = critical_density()
    man.stage("bisection")
    window = negative_window(2.0 * eta_c, np.linspace(-10, 10, 2001))
    out = _out_dir(args) / "critical_density.csv"
    _write_csv(out, ["eta_c", "window_lo_at_2eta", "window_hi_at_2eta"],
               [np.array([eta_c]), np.array([window[0]]), np.array([window[1]])])
    man.add_output(out)
    man.write(out.with_suffix(".manifest.json"))
    print(f"critical density eta_c = {eta_c:.4f}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    spec, n_configs = _load(args)
    man = Manifest(args, spec, n_configs)
    _check_dim(spec, args.max_dim)
    mie_table = mie_spectrum(spec)
    man.stage("mie")
    result = average_spectrum(spec, n_configs, max_workers=args.threads)
    man.stage("microscopic")
    stderr = result.stderr if result.stderr is not None else np.zeros_like(result.mean)
    out = _out_dir(args) / "compare.csv"
    _write_csv(
        out,
        ["delta", "q_0_mie", "q_0_micro_mean", "q_0_micro_stderr", "difference"],
        [mie_table.delta, mie_table.q_0, result.mean, stderr,
         result.mean - mie_table.q_0],
    )
    man.add_output(out)
    man.write(out.with_suffix(".manifest.json"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coldscatter",
        description="Near-resonant light scattering from a dense cold atomic "
        "cloud: self-consistent sphere theory vs exact coupled dipoles.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="scenario file (TOML or JSON)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for configuration-parallel work")
        p.add_argument("--max-dim", type=int, default=9000,
                       help="refuse runs whose matrix dimension 3N exceeds this")

    p = sub.add_parser("permittivity", help="self-consistent eps(delta) as CSV")
    common(p)
    p.set_defaults(func=_cmd_permittivity)

    p = sub.add_parser("mie-spectrum", help="partial-wave cross sections vs detuning")
    common(p)
    p.set_defaults(func=_cmd_mie_spectrum)

    p = sub.add_parser("micro-spectrum", help="exact cross section, one configuration")
    common(p)
    p.add_argument("--config-index", type=int, default=0)
    p.set_defaults(func=_cmd_micro_spectrum)

    p = sub.add_parser("modes", help="collective eigenmode shifts and widths")
    common(p)
    p.add_argument("--config-index", type=int, default=0)
    p.set_defaults(func=_cmd_modes)

    p = sub.add_parser("decay", help="fluorescence decay, one configuration")
    common(p)
    p.add_argument("--config-index", type=int, default=0)
    p.add_argument("--t-max", type=float, default=60.0)
    p.add_argument("--t-points", type=int, default=121)
    p.set_defaults(func=_cmd_decay)

    p = sub.add_parser("average", help="configuration-averaged observables")
    common(p)
    p.add_argument("what", choices=["spectrum", "decay"])
    p.add_argument("--configs", type=int, default=None,
                   help="override n_configs from the scenario file")
    p.add_argument("--t-max", type=float, default=60.0)
    p.add_argument("--t-points", type=int, default=121)
    p.set_defaults(func=_cmd_average)

    p = sub.add_parser("critical-density",
                       help="threshold density of the negative-permittivity window")
    common(p, needs_config=False)
    p.set_defaults(func=_cmd_critical_density)

    p = sub.add_parser("compare",
                       help="overlay sphere-theory and averaged microscopic spectra")
    common(p)
    p.add_argument("--configs", type=int, default=None)
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
