"""Spherical Bessel/Hankel functions of complex argument.

The partial-wave expansion needs j_J, h1_J, h2_J and the Riccati-type
derivative d/dz [z f_J(z)] for complex z (the interior argument carries
the complex refractive index).  The regular solution is generated by
downward (Miller) recurrence, the outgoing/incoming solutions by upward
recurrence from their order-0/1 closed forms; each direction is the
numerically stable one for its solution class.

Declared working domain: |z| <= 200 and order <= 512, enforced up front.
"""

from __future__ import annotations

import cmath
import enum

import numpy as np

__all__ = ["BesselKind", "RangeError", "sph_bessel", "riccati_derivative"]

MAX_ORDER = 512
MAX_ABS_Z = 200.0

_OVERFLOW = 1e250


class RangeError(ArithmeticError):
    """Argument/order outside the supported domain, or overflow within it."""


class BesselKind(enum.Enum):
    J = "regular"
    H1 = "outgoing"
    H2 = "incoming"


def _check_domain(kind: BesselKind, order: int, z: complex) -> complex:
    if order < 0:
        raise RangeError(f"order must be non-negative, got {order}")
    if order > MAX_ORDER:
        raise RangeError(f"order {order} exceeds supported maximum {MAX_ORDER}")
    z = complex(z)
    if abs(z) > MAX_ABS_Z:
        raise RangeError(f"|z| = {abs(z):.3g} exceeds supported maximum {MAX_ABS_Z}")
    if z == 0 and kind is not BesselKind.J:
        raise RangeError("Hankel functions are singular at z = 0")
    return z


def _regular_seq(order: int, z: complex) -> np.ndarray:
    """j_{-1}(z) .. j_order(z) by downward recurrence, index shifted by 1."""
    if z == 0:
        out = np.zeros(order + 2, dtype=complex)
        out[0] = float("inf")  # j_{-1} ~ cos(z)/z, never consumed at z = 0
        out[1] = 1.0
        return out
    # Start well above the target order; the parasitic (growing upward)
    # solution decays over the extra orders.
    order_eff = max(order, 1)  # always carry j_0 and j_1 for the anchor
    start = order_eff + 20 + int(1.2 * abs(z)) + int(2 * np.sqrt(order_eff + 1))
    p_up = 0.0 + 0.0j
    p = 1e-290 + 0.0j
    seq = np.zeros(order_eff + 2, dtype=complex)
    for n in range(start, -2, -1):
        p_dn = (2 * n + 3) / z * p - p_up
        p_up, p = p, p_dn
        if -1 <= n <= order_eff:
            seq[n + 1] = p_dn
        if abs(p) > _OVERFLOW:
            p_up /= _OVERFLOW
            p /= _OVERFLOW
            mask = np.arange(order_eff + 2) > n
            seq[mask] /= _OVERFLOW
    j0 = cmath.sin(z) / z
    j1 = cmath.sin(z) / z**2 - cmath.cos(z) / z
    # Anchor against whichever low order avoids cancellation.
    if abs(seq[1]) >= abs(seq[2]):
        scale = j0 / seq[1]
    else:
        scale = j1 / seq[2]
    seq *= scale
    seq[0] = cmath.cos(z) / z  # closed form; exact where needed
    seq = seq[: order + 2]
    if not np.all(np.isfinite(seq[1:])):
        raise RangeError(f"regular Bessel overflow/underflow at order {order}, z = {z}")
    return seq


def _hankel_seq(kind: BesselKind, order: int, z: complex) -> np.ndarray:
    """h_{-1}(z) .. h_order(z) by upward recurrence, index shifted by 1."""
    sgn = 1.0 if kind is BesselKind.H1 else -1.0
    e = cmath.exp(sgn * 1j * z)
    seq = np.empty(order + 2, dtype=complex)
    seq[0] = e / z
    seq[1] = -sgn * 1j * e / z
    for n in range(1, order + 1):
        seq[n + 1] = (2 * n - 1) / z * seq[n] - seq[n - 1]
        if abs(seq[n + 1]) > _OVERFLOW:
            raise RangeError(
                f"Hankel overflow at order {n}, z = {z}: result out of range"
            )
    if not np.all(np.isfinite(seq)):
        raise RangeError(f"Hankel overflow/underflow at order {order}, z = {z}")
    return seq


def _seq(kind: BesselKind, order: int, z: complex) -> np.ndarray:
    if kind is BesselKind.J:
        return _regular_seq(order, z)
    return _hankel_seq(kind, order, z)


def sph_bessel(kind: BesselKind, order: int, z: complex) -> complex:
    """Spherical Bessel function of the given kind and integer order."""
    z = _check_domain(kind, order, z)
    return complex(_seq(kind, order, z)[order + 1])


def riccati_derivative(kind: BesselKind, order: int, z: complex) -> complex:
    """d/dz [z f_J(z)] = z f_{J-1}(z) - J f_J(z).

    Uses the stable derivative recurrence f'_J = f_{J-1} - (J+1)/z f_J.
    """
    z = _check_domain(kind, order, z)
    if z == 0:
        if kind is BesselKind.J:
            return 1.0 + 0.0j if order == 0 else 0.0 + 0.0j
        raise RangeError("Hankel functions are singular at z = 0")
    seq = _seq(kind, order, z)
    return complex(z * seq[order] - order * seq[order + 1])


def sph_bessel_sequence(kind: BesselKind, order: int, z: complex) -> np.ndarray:
    """All orders 0..order at once (partial-wave sums reuse one recurrence)."""
    z = _check_domain(kind, order, z)
    return _seq(kind, order, z)[1:].copy()


def riccati_derivative_sequence(kind: BesselKind, order: int, z: complex) -> np.ndarray:
    """d/dz [z f_J(z)] for J = 0..order."""
    z = _check_domain(kind, order, z)
    if z == 0:
        raise RangeError("Riccati derivative sequence requires z != 0")
    seq = _seq(kind, order, z)
    orders = np.arange(order + 1)
    return z * seq[:-1] - orders * seq[1:]
