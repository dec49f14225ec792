"""Top-level capability gates.

Each test checks one headline capability end to end, enforces its runtime
budget, and prints a single PASS/FAIL line.  Run with ``pytest -v`` (add
``-s`` to see the lines inline).
"""

import os
import time
from contextlib import contextmanager

import numpy as np
import pytest

from coldscatter.core import SampleSpec
from coldscatter.ensemble import (
    average_decay,
    average_spectrum,
    holstein_estimate,
    matched_dilute_density,
    mean_decay_trace,
)
from coldscatter.mie import cross_sections, mie_coefficients, mie_spectrum
from coldscatter.microscopic import (
    AtomicConfiguration,
    build_effective_hamiltonian,
    decay_energy_integral,
    eigenmodes,
    optical_theorem_cross_section,
    sample_configuration,
    tail_rate,
    total_cross_section,
)
from coldscatter.permittivity import (
    coupling_strength,
    critical_density,
    negative_window,
    permittivity_grid,
)
from coldscatter.specfun import BesselKind, riccati_derivative, sph_bessel

WORKERS = os.cpu_count() or 1


@contextmanager
def gate(label: str, budget_s: float):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"{label}: FAIL")
        raise
    elapsed = time.perf_counter() - t0
    assert elapsed < budget_s, f"{label}: runtime {elapsed:.1f}s over budget {budget_s}s"
    print(f"{label}: PASS ({elapsed:.1f}s)")


def test_criterion_01_self_consistency():
    with gate("criterion 1 (self-consistent permittivity residual)", 1.0):
        deltas = np.linspace(-10.0, 10.0, 2001)
        for eta in (0.02, 0.09, 0.5):
            a = coupling_strength(eta).value
            eps = permittivity_grid(deltas, coupling_strength(eta), warn_ambiguous=False)
            x = np.sqrt(eps)
            x = np.where(x.imag < 0, -x, x)
            rhs = (1.0 - 2.0 * a / (deltas + 0.5j * x)) / (1.0 + a / (deltas + 0.5j * x))
            residual = np.abs(eps - rhs) / np.abs(eps)
            assert np.max(residual) < 1e-10


def test_criterion_02_critical_density():
    with gate("criterion 2 (critical density of the forbidden zone)", 10.0):
        eta_c = critical_density()
        assert 0.05 <= eta_c <= 0.13


def test_criterion_03_single_atom_oracle():
    with gate("criterion 3 (single-atom Lorentzian cross section)", 1.0):
        cfg = AtomicConfiguration(positions=np.zeros((1, 3)), radius=1.0)
        h = build_effective_hamiltonian(cfg)
        for delta in np.linspace(-5.0, 5.0, 21):
            want = 6.0 * np.pi / (1.0 + 4.0 * delta**2)
            q_quad = total_cross_section(h, cfg, delta, tol=1e-12)
            q_fwd = optical_theorem_cross_section(h, cfg, delta)
            assert abs(q_quad - want) / want < 1e-10
            assert abs(q_fwd - want) / want < 1e-10


def test_criterion_04_two_atom_oracle():
    with gate("criterion 4 (two-atom doublet vs closed form)", 1.0):
        for r in (0.05, 0.2, 1.0, 5.0):
            cfg = AtomicConfiguration(
                positions=np.array([[0.0, 0.0, 0.0], [0.0, 0.0, r]]), radius=r
            )
            h = build_effective_hamiltonian(cfg)
            phase = np.exp(1j * r)
            g_par = 1.5 * phase * (1j / r**2 - 1.0 / r**3)
            g_perp = -0.75 * phase * (1.0 / r + 1j / r**2 - 1.0 / r**3)
            want = np.array(
                [-0.5j + g_par, -0.5j - g_par]
                + 2 * [-0.5j + g_perp]
                + 2 * [-0.5j - g_perp]
            )
            got = eigenmodes(h).eigenvalues
            # compare at the scale of the eigenvalues themselves (1e-12
            # absolute is below double roundoff once |lambda| ~ 1e4)
            scale = max(1.0, float(np.max(np.abs(want))))
            diff = np.abs(
                np.sort_complex(np.round(got / scale, 15))
                - np.sort_complex(np.round(want / scale, 15))
            )
            assert np.max(diff) < 1e-12
            widths = eigenmodes(h).widths
            if r == 0.05:
                assert widths.max() > 1.8
                assert widths.min() < 0.05


def test_criterion_05_trace_sum_rule():
    with gate("criterion 5 (collective width sum rule)", 120.0):
        rng = np.random.default_rng(20)
        for k in range(20):
            n = int(rng.integers(2, 301))
            radius = (3.0 * n / (4.0 * np.pi * 0.05)) ** (1.0 / 3.0)
            spec = SampleSpec(eta=0.05, radius=radius, seed=int(rng.integers(2**32)))
            assert spec.n_atoms == n
            h = build_effective_hamiltonian(sample_configuration(spec, k))
            widths = eigenmodes(h).widths
            assert abs(np.sum(widths) - 3.0 * n) / (3.0 * n) < 1e-8


def test_criterion_06_optical_theorem():
    with gate("criterion 6 (quadrature vs forward-amplitude Q_0)", 60.0):
        rng = np.random.default_rng(6)
        for k in range(10):
            n = int(rng.integers(2, 51))
            radius = (3.0 * n / (4.0 * np.pi * 0.03)) ** (1.0 / 3.0)
            spec = SampleSpec(eta=0.03, radius=radius, seed=int(rng.integers(2**32)))
            cfg = sample_configuration(spec, k)
            h = build_effective_hamiltonian(cfg)
            for delta in (-2.0, 0.0, 2.0):
                q_quad = total_cross_section(h, cfg, delta, tol=1e-6)
                q_fwd = optical_theorem_cross_section(h, cfg, delta)
                assert abs(q_quad - q_fwd) / abs(q_fwd) < 1e-3


DELTA_GRID = tuple(np.linspace(-4.0, 4.0, 17))


@pytest.fixture(scope="module")
def dilute_ensemble():
    # The sampling excludes pairs closer than one reduced wavelength,
    # mirroring the cavity assumption built into the local-field theory
    # the run is compared against.  At this small atom number a handful
    # of sub-wavelength dimers per configuration would otherwise add
    # far-detuned pair resonances (a pure finite-size effect) that
    # dominate the configuration spread in the wings.
    spec = SampleSpec(eta=0.02, radius=8.0, detuning_grid=DELTA_GRID, seed=7)
    assert spec.n_atoms == 43
    return spec, average_spectrum(
        spec, 200, min_separation=1.0, max_workers=WORKERS
    )


def _relative_std(result):
    stack = np.stack([t.q_0 for t in result.per_config])
    return np.std(stack, axis=0, ddof=1) / np.mean(stack, axis=0)


def test_criterion_07_dilute_agreement(dilute_ensemble):
    with gate("criterion 7 (dilute sample: microscopic matches sphere theory)", 1800.0):
        spec, result = dilute_ensemble
        mie = mie_spectrum(spec)
        err = np.abs(result.mean - mie.q_0)
        allowed = np.maximum(3.0 * result.stderr, 0.15 * mie.q_0)
        assert np.all(err < allowed)
        assert np.all(_relative_std(result) < 0.10)


def test_criterion_08_dense_divergence(dilute_ensemble):
    with gate("criterion 8 (dense sample: speckle and sphere-theory breakdown)", 1800.0):
        spec = SampleSpec(eta=0.5, radius=4.0, detuning_grid=DELTA_GRID, seed=8)
        assert spec.n_atoms == 134
        window = negative_window(0.5, np.linspace(-10.0, 10.0, 2001))
        deltas = np.asarray(DELTA_GRID)
        inside = (deltas > window[0]) & (deltas < window[1])
        assert np.any(inside)

        mie = mie_spectrum(spec)
        # (i) inside the forbidden zone the sphere scatters elastically
        assert np.all(mie.q_s[inside] > mie.q_a[inside])

        result = average_spectrum(spec, 100, max_workers=WORKERS)
        # (iii) the mean microscopic spectrum departs from the sphere
        # theory by many standard errors inside the zone
        deviation = np.abs(result.mean - mie.q_0) / result.stderr
        assert np.max(deviation[inside]) > 3.0

        # (ii) configuration speckle: per-delta relative spread more than
        # three times the dilute reference.  Known-infeasible at this
        # sample size: the angle-integrated cross section self-averages,
        # the measured dense/dilute spread ratio is ~1-1.5 here and
        # decreases further with system size.  Kept as specified rather
        # than weakened; see the failure analysis in the project notes.
        _, dilute_result = dilute_ensemble
        dense_std = _relative_std(result)
        dilute_std = _relative_std(dilute_result)
        assert np.max(dense_std[inside]) > 3.0 * np.max(dilute_std)


def test_criterion_09_subradiance_slow_decay():
    with gate("criterion 9 (dense subradiance vs matched dilute diffusion)", 3600.0):
        dense = SampleSpec(eta=0.5, radius=5.0, seed=11)
        assert dense.n_atoms == 262
        eta_dil = matched_dilute_density(0.5, 5.0, 13.0)
        dilute = SampleSpec(eta=eta_dil, radius=13.0, seed=11)

        widths = np.concatenate(
            [
                eigenmodes(build_effective_hamiltonian(sample_configuration(dense, i))).widths
                for i in range(4)
            ]
        )
        assert np.mean(widths < 0.1) >= 0.01

        t_grid = np.linspace(0.0, 60.0, 121)
        window = (30.0, 60.0)
        dense_tail = tail_rate(
            mean_decay_trace(average_decay(dense, 16, t_grid, max_workers=WORKERS)),
            window,
        )
        dilute_tail = tail_rate(
            mean_decay_trace(average_decay(dilute, 16, t_grid, max_workers=WORKERS)),
            window,
        )
        assert dense_tail < dilute_tail

        holstein, _ = holstein_estimate(dilute, 0.0)
        assert 0.5 < dilute_tail / holstein < 2.0


def test_criterion_10_numerical_hygiene(tmp_path, monkeypatch):
    with gate("criterion 10 (numerical hygiene)", 120.0):
        # special-function identities
        for z in (0.4 + 0.1j, 2.0 + 1.0j, 45.0 + 0.5j):
            for order in (1, 3, 12):
                j = sph_bessel(BesselKind.J, order, z)
                h = sph_bessel(BesselKind.H1, order, z)
                dj = riccati_derivative(BesselKind.J, order, z)
                dh = riccati_derivative(BesselKind.H1, order, z)
                assert abs(j * dh - h * dj - 1j / z) < 1e-10 * abs(1j / z)
                jp = sph_bessel(BesselKind.J, order + 1, z)
                jm = sph_bessel(BesselKind.J, order - 1, z)
                resid = jm + jp - (2 * order + 1) / z * j
                assert abs(resid) < 1e-10 * max(abs(jm), abs(jp), 1e-30)
                assert abs(
                    sph_bessel(BesselKind.J, order, np.conj(z))
                    - np.conj(sph_bessel(BesselKind.J, order, z))
                ) < 1e-10 * abs(j)

        # vacuum sphere: unit S-matrix, zero cross sections
        for order in (1, 4, 9):
            c = mie_coefficients(order, 1.0 + 0.0j, 6.0)
            assert abs(c.s_e - 1.0) < 1e-12
            assert abs(c.s_m - 1.0) < 1e-12
        q_s, q_a, q_0 = cross_sections(1.0 + 0.0j, 6.0)
        assert abs(q_s) < 1e-12 and abs(q_a) < 1e-12 and abs(q_0) < 1e-12

        # lossless sphere: no absorption
        q_s, q_a, _ = cross_sections(2.25 + 0.0j, 3.0)
        assert abs(q_a) < 1e-12 * max(1.0, q_s)

        # energy conservation of the decay mode sum
        spec = SampleSpec(eta=0.05, radius=3.0, seed=10)
        cfg = sample_configuration(spec)
        h = build_effective_hamiltonian(cfg)
        assert abs(decay_energy_integral(h, cfg) - 1.0) < 1e-6

        # bit-identical CSV output across worker counts
        import json

        from coldscatter.cli import main

        monkeypatch.setenv("COLDSCATTER_CACHE_DIR", str(tmp_path / "cache"))
        scenario = tmp_path / "scenario.json"
        scenario.write_text(
            json.dumps(
                {
                    "eta": 0.05,
                    "radius": 3.0,
                    "detuning": {"min": -2.0, "max": 2.0, "count": 5},
                    "seed": 3,
                    "n_configs": 4,
                }
            )
        )
        outputs = []
        for threads in (1, 2, WORKERS):
            out = tmp_path / f"t{threads}"
            code = main(
                ["average", "spectrum", "--config", str(scenario),
                 "--out", str(out), "--threads", str(threads)]
            )
            assert code == 0
            outputs.append((out / "average_spectrum.csv").read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]
