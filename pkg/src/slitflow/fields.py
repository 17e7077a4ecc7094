"""Driving vector fields of the flow and their Lie calculus.

The two field shapes are

    b(z) = -(2/z + b_{-1} + b_0 z + b_1 z^2),
    sigma(z) = -(1 + sigma_0 z + sigma_1 z^2),

with real coefficients.  This module evaluates them, converts the
Stratonovich noise term to Ito form, computes Lie derivatives of
conformal fields (numerically and in closed form on the half-plane
Green's function), classifies sigma by its fixed-point geometry, and
pushes fields forward under Moebius automorphisms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .conformal import MobiusAut, green_half_plane
from .errors import (
    CoincidentPointsError,
    FiniteDifferenceError,
    ParameterRangeError,
    PoleError,
    ShapeViolationError,
)

H_FD_SCALE = 1e-5
TOL_FD = 1e-6


@dataclass(frozen=True)
class FieldCoeffs:
    """Coefficients of a normalized b-field or sigma-field.

    kind 'b' uses (c1, c2, c3) = (b_{-1}, b_0, b_1); kind 'sigma' uses
    (c1, c2) = (sigma_0, sigma_1) and c3 must stay 0.
    Coefficients may be floats or Fractions; evaluation follows the input type.
    """

    kind: str
    c1: float
    c2: float
    c3: float = 0

    def __post_init__(self):
        if self.kind not in ("b", "sigma"):
            raise ParameterRangeError(f"unknown field kind {self.kind!r}")
        if self.kind == "sigma" and self.c3 != 0:
            raise ParameterRangeError("sigma-fields have only two coefficients")

    @staticmethod
    def b_field(bm1, b0, b1) -> "FieldCoeffs":
        return FieldCoeffs("b", bm1, b0, b1)

    @staticmethod
    def sigma_field(s0, s1) -> "FieldCoeffs":
        return FieldCoeffs("sigma", s0, s1)

    @property
    def coeffs(self) -> tuple:
        if self.kind == "b":
            return (self.c1, self.c2, self.c3)
        return (self.c1, self.c2)

    def __call__(self, z):
        return eval_field(self, z)

    def prime(self, z):
        return eval_field_prime(self, z)

    def second(self, z):
        if self.kind == "b":
            return -4.0 / np.asarray(z, dtype=complex) ** 3 - 2.0 * float(self.c3)
        return np.broadcast_to(
            np.asarray(-2.0 * float(self.c2), dtype=complex), np.shape(z)
        ) if np.shape(z) else complex(-2.0 * float(self.c2))

    def as_float(self) -> "FieldCoeffs":
        return FieldCoeffs(self.kind, float(self.c1), float(self.c2), float(self.c3))


def _check_nonzero(z) -> None:
    if np.any(np.asarray(z) == 0):
        raise PoleError("b-field has a pole at z = 0")


def eval_field(c: FieldCoeffs, z):
    """Evaluate the field at z (scalar or array)."""
    if c.kind == "b":
        _check_nonzero(z)
        z = np.asarray(z, dtype=complex) if np.ndim(z) else complex(z)
        return -(2.0 / z + float(c.c1) + float(c.c2) * z + float(c.c3) * z * z)
    z = np.asarray(z, dtype=complex) if np.ndim(z) else complex(z)
    return -(1.0 + float(c.c1) * z + float(c.c2) * z * z)


def eval_field_prime(c: FieldCoeffs, z):
    """Derivative of the field at z."""
    if c.kind == "b":
        _check_nonzero(z)
        z = np.asarray(z, dtype=complex) if np.ndim(z) else complex(z)
        return 2.0 / (z * z) - float(c.c2) - 2.0 * float(c.c3) * z
    z = np.asarray(z, dtype=complex) if np.ndim(z) else complex(z)
    return -float(c.c1) - 2.0 * float(c.c2) * z


def ito_drift(b: FieldCoeffs, sigma: FieldCoeffs, kappa: float, z):
    """Ito-form drift -b(z) + (kappa/2) sigma(z) sigma'(z) of the flow SDE."""
    if b.kind != "b" or sigma.kind != "sigma":
        raise ParameterRangeError("expected a b-field and a sigma-field")
    return -eval_field(b, z) + 0.5 * kappa * eval_field(sigma, z) * eval_field_prime(sigma, z)


@dataclass(frozen=True)
class ConformalWeight:
    """Transformation weight of a conformal field.

    Exactly one of the two modes is active: a (lambda, lambda_*)-differential
    or an additive log-derivative form of order mu.
    """

    mode: str  # 'differential' or 'ppschwarzian'
    lam: complex = 0.0
    lam_star: complex = 0.0
    mu: complex = 0.0

    def __post_init__(self):
        if self.mode not in ("differential", "ppschwarzian"):
            raise ParameterRangeError(f"unknown weight mode {self.mode!r}")

    @staticmethod
    def differential(lam=0.0, lam_star=0.0) -> "ConformalWeight":
        return ConformalWeight("differential", lam=lam, lam_star=lam_star)

    @staticmethod
    def ppschwarzian(mu) -> "ConformalWeight":
        return ConformalWeight("ppschwarzian", mu=mu)


SCALAR = ConformalWeight.differential(0.0, 0.0)


def _wirtinger(f: Callable, nodes: tuple, k: int, h: float):
    """Central-difference Wirtinger derivatives (d, dbar) of f in node k."""
    zs = list(nodes)
    z = zs[k]

    def at(dz):
        zs[k] = z + dz
        return complex(f(tuple(zs)))

    fx = (at(h) - at(-h)) / (2.0 * h)
    fy = (at(1j * h) - at(-1j * h)) / (2.0 * h)
    zs[k] = z
    return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)


def lie_derivative(
    v,
    f: Callable,
    weights,
    nodes: Sequence[complex],
) -> complex:
    """Multi-node Lie derivative of a sampled conformal field.

    v is a FieldCoeffs or a pair of callables (v, v'); f maps a tuple of node
    positions to a scalar; weights is one ConformalWeight per node (or a
    single weight applied to every node).  Derivatives are central finite
    differences with a two-step consistency check.
    """
    nodes = tuple(complex(z) for z in nodes)
    if isinstance(weights, ConformalWeight):
        weights = [weights] * len(nodes)
    if len(weights) != len(nodes):
        raise ParameterRangeError("need one weight per node")
    if isinstance(v, FieldCoeffs):
        v_val = lambda z: eval_field(v, z)
        v_prime = lambda z: eval_field_prime(v, z)
    else:
        v_val, v_prime = v

    f0 = complex(f(nodes))
    total = 0.0 + 0.0j
    for k, (z, wt) in enumerate(zip(nodes, weights)):
        h = H_FD_SCALE * max(1.0, abs(z))
        d1, db1 = _wirtinger(f, nodes, k, h)
        d2, db2 = _wirtinger(f, nodes, k, h / 2.0)
        scale = max(1.0, abs(d2), abs(db2))
        if abs(d1 - d2) > TOL_FD * scale or abs(db1 - db2) > TOL_FD * scale:
            raise FiniteDifferenceError(
                f"finite-difference estimates disagree at node {z}"
            )
        vk = v_val(z)
        vpk = v_prime(z)
        if wt.mode == "differential":
            total += vk * d2 + np.conj(vk) * db2
            total += (wt.lam * vpk + wt.lam_star * np.conj(vpk)) * f0
        else:
            total += vk * d2 + np.conj(vk) * db2 + wt.mu * vpk
    return total


def lie_green_closed(v, z1: complex, z2: complex) -> float:
    """Closed-form Lie derivative of the half-plane Green's function.

    v is a FieldCoeffs, or an integer n in {-2,...,1} selecting
    ell_n(z) = -z^(n+1).  Any sigma-field gives exactly 0; any b-field gives
    4 Im(1/z1) Im(1/z2).
    """
    if abs(z1 - z2) < 1e-13 * max(abs(z1), abs(z2), 1.0):
        raise CoincidentPointsError(f"coincident points {z1}, {z2}")
    if isinstance(v, FieldCoeffs):
        if v.kind == "sigma":
            return 0.0
        # b = 2*ell_{-2} + (Moebius part); ell_{-1}, ell_0, ell_1 annihilate G,
        # so only 2*L_{ell_{-2}}G survives whatever the coefficients are.
        return 4.0 * (1.0 / z1).imag * (1.0 / z2).imag
    n = int(v)
    if not -2 <= n <= 1:
        raise ParameterRangeError("ell_n defined for n in {-2,...,1}")
    p1 = z1 ** (n + 1)
    p2 = z2 ** (n + 1)
    val = (p1 - p2) / (z1 - z2) - (p1 - np.conj(p2)) / (z1 - np.conj(z2))
    return float(np.real(val))


@dataclass(frozen=True)
class SigmaClass:
    """Fixed-point class of a sigma-field with its discriminant."""

    tag: str
    discriminant: float


def sigma_classify(sigma: FieldCoeffs) -> SigmaClass:
    """Classify sigma by the zeros of 1 + sigma_0 z + sigma_1 z^2 on the boundary.

    Two distinct real zeros (counting infinity): hyperbolic; a conjugate
    pair off the axis: elliptic; a double zero or a single zero at infinity:
    parabolic.
    """
    if sigma.kind != "sigma":
        raise ParameterRangeError("expected a sigma-field")
    s0, s1 = float(sigma.c1), float(sigma.c2)
    disc = s0 * s0 - 4.0 * s1
    if s1 != 0.0:
        if disc > 0.0:
            tag = "hyperbolic"
        elif disc < 0.0:
            tag = "elliptic"
        else:
            tag = "parabolic"
    elif s0 != 0.0:
        tag = "hyperbolic"
    else:
        tag = "parabolic"
    return SigmaClass(tag, disc)


_PUSH_SAMPLES = np.array(
    [0.3 + 0.4j, -0.7 + 0.9j, 1.3 + 0.2j, -1.1 + 1.7j, 0.2 + 2.3j,
     2.1 + 0.8j, -2.4 + 0.5j, 0.9 + 1.1j, -0.4 + 0.3j, 1.7 + 1.9j,
     -1.9 + 1.2j, 0.6 + 0.7j]
)


def pushforward(phi: MobiusAut, v: FieldCoeffs, return_scale: bool = False):
    """Pushforward phi_* v, renormalized to the standard field shape.

    The image field phi'(phi^{-1}(z)) v(phi^{-1}(z)) is fitted to the Laurent
    basis {1/z, 1, z, z^2, z^3}.  A positive overall factor (a time change)
    is divided out so that the leading normalization (-2/z for b-fields, -1
    for sigma-fields) is restored; any residual outside the shape raises
    ShapeViolationError.
    """
    inv = phi.inverse()
    zs = _PUSH_SAMPLES
    pre = inv(zs)
    vals = phi.deriv(pre) * eval_field(v, pre)
    basis = np.stack([1.0 / zs, np.ones_like(zs), zs, zs ** 2, zs ** 3], axis=1)
    coef, *_ = np.linalg.lstsq(basis, vals, rcond=None)
    resid = np.max(np.abs(basis @ coef - vals))
    if resid > 1e-9 or abs(coef[4]) > 1e-9:
        raise ShapeViolationError("pushforward leaves the normalized field class")
    if np.max(np.abs(coef.imag)) > 1e-9:
        raise ShapeViolationError("pushforward produced non-real coefficients")
    coef = coef.real
    if v.kind == "b":
        scale = coef[0] / -2.0
        if scale <= 0:
            raise ShapeViolationError("image field is not a normalized b-field")
        out = FieldCoeffs("b", -coef[1] / scale, -coef[2] / scale, -coef[3] / scale)
    else:
        scale = -coef[1]
        if scale <= 0 or abs(coef[0]) > 1e-12:
            raise ShapeViolationError("image field is not a normalized sigma-field")
        out = FieldCoeffs("sigma", -coef[2] / scale, -coef[3] / scale)
    if return_scale:
        return out, float(scale)
    return out


def green_as_sampler(nodes: tuple) -> float:
    """Adapter exposing G_H as a two-node sampler for lie_derivative."""
    return green_half_plane(nodes[0], nodes[1])


def ell_field(n: int):
    """The Laurent generator ell_n(z) = -z^(n+1) as a (value, derivative) pair."""
    if not -2 <= n <= 1:
        raise ParameterRangeError("ell_n defined for n in {-2,...,1}")

    def val(z):
        return -(z ** (n + 1))

    def prime(z):
        return -(n + 1) * z ** n if n != -1 else 0.0 * z

    return val, prime


def exact_b_from_fractions(bm1: Fraction, b0: Fraction, b1: Fraction) -> FieldCoeffs:
    """Build a b-field keeping Fraction coefficients for exact round-trips."""
    return FieldCoeffs("b", bm1, b0, b1)
