"""Deterministic complex-analytic primitives.

Green's function of the upper half-plane, Moebius automorphisms,
strip <-> half-plane transport, the strip-to-triangle Schwarz-Christoffel
map used by the exit-probability oracle, and barycentric coordinates.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, roots_jacobi

from .errors import (
    CoincidentPointsError,
    DomainError,
    OutsideTriangleError,
    ParameterRangeError,
)

COINCIDENT_TOL = 1e-13
TRIANGLE_TOL = 1e-9
_SC_QUAD_ORDER = 48


def require_upper_half_plane(z) -> None:
    """Raise DomainError unless Im z > 0 (elementwise for arrays)."""
    im = np.imag(np.asarray(z))
    if not np.all(np.isfinite(im)) or np.any(im <= 0.0):
        raise DomainError(f"point not in the open upper half-plane: {z!r}")


def green_half_plane(z1: complex, z2: complex) -> float:
    """Green's function of the upper half-plane, log|z1 - conj(z2)| - log|z1 - z2|."""
    require_upper_half_plane(z1)
    require_upper_half_plane(z2)
    d = abs(z1 - z2)
    scale = max(abs(z1), abs(z2), 1.0)
    if d < COINCIDENT_TOL * scale:
        raise CoincidentPointsError(f"coincident points {z1}, {z2}")
    return math.log(abs(z1 - z2.conjugate())) - math.log(d)


def green_half_plane_grid(z1, z2):
    """Vectorized Green's function for broadcastable complex arrays (no domain checks)."""
    z1 = np.asarray(z1)
    z2 = np.asarray(z2)
    return np.log(np.abs(z1 - np.conj(z2))) - np.log(np.abs(z1 - z2))


def green_pullback(w, z1: complex, z2: complex) -> float:
    """Green's function pulled back through a conformal map ``w`` into the half-plane."""
    w1 = w(z1)
    w2 = w(z2)
    if not (np.isfinite(w1.real) and np.isfinite(w1.imag)
            and np.isfinite(w2.real) and np.isfinite(w2.imag)):
        raise DomainError("conformal map undefined at input point")
    return green_half_plane(w1, w2)


@dataclass(frozen=True)
class MobiusAut:
    """Real Moebius automorphism z -> (a z + b) / (c z + d) of the upper half-plane.

    Coefficients are normalized so that a d - b c = 1.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if det <= 0:
            raise ParameterRangeError("Moebius determinant must be positive")
        s = math.sqrt(det)
        object.__setattr__(self, "a", self.a / s)
        object.__setattr__(self, "b", self.b / s)
        object.__setattr__(self, "c", self.c / s)
        object.__setattr__(self, "d", self.d / s)

    @staticmethod
    def identity() -> "MobiusAut":
        return MobiusAut(1.0, 0.0, 0.0, 1.0)

    @staticmethod
    def scaling(s: float) -> "MobiusAut":
        if s <= 0:
            raise ParameterRangeError("scaling factor must be positive")
        return MobiusAut(s, 0.0, 0.0, 1.0)

    @staticmethod
    def translation(x: float) -> "MobiusAut":
        return MobiusAut(1.0, x, 0.0, 1.0)

    def __call__(self, z):
        return (self.a * z + self.b) / (self.c * z + self.d)

    def deriv(self, z):
        return 1.0 / (self.c * z + self.d) ** 2

    def compose(self, other: "MobiusAut") -> "MobiusAut":
        """Composition self after other."""
        return MobiusAut(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "MobiusAut":
        return MobiusAut(self.d, -self.b, -self.c, self.a)


def strip_to_half_plane(z: complex) -> complex:
    """Transport tanh(z/2) from the strip {0 < Im z < pi} onto the upper half-plane."""
    y = z.imag if isinstance(z, complex) else float(np.imag(z))
    if not (0.0 < y < math.pi):
        raise DomainError(f"point not in the open strip: {z!r}")
    return cmath.tanh(z / 2.0)


def half_plane_to_strip(w: complex) -> complex:
    """Inverse transport, 2 artanh(w)."""
    require_upper_half_plane(w)
    return cmath.log((1.0 + w) / (1.0 - w))


@dataclass(frozen=True)
class TriangleSpec:
    """A labelled triangle with interior angles and vertex positions."""

    angle_a: float
    angle_b: float
    angle_c: float
    vertex_a: complex
    vertex_b: complex
    vertex_c: complex

    def __post_init__(self):
        angles = (self.angle_a, self.angle_b, self.angle_c)
        if any(not (0.0 < t < math.pi) for t in angles):
            raise ParameterRangeError(f"triangle angles out of range: {angles}")
        if abs(sum(angles) - math.pi) > 1e-12:
            raise ParameterRangeError("triangle angles must sum to pi")

    @property
    def vertices(self):
        return (self.vertex_a, self.vertex_b, self.vertex_c)


def barycentric(point: complex, tri: TriangleSpec, tol: float = TRIANGLE_TOL):
    """Barycentric coordinates (a, b, c) of ``point`` in ``tri``, renormalized to sum 1."""
    A, B, C = tri.vertices
    m = np.array(
        [
            [(B - A).real, (C - A).real],
            [(B - A).imag, (C - A).imag],
        ]
    )
    rhs = np.array([(point - A).real, (point - A).imag])
    b, c = np.linalg.solve(m, rhs)
    a = 1.0 - b - c
    scale = max(1.0, abs(B - A), abs(C - A))
    if min(a, b, c) < -tol * scale:
        raise OutsideTriangleError(
            f"point {point} outside triangle (coords {a:.3e}, {b:.3e}, {c:.3e})"
        )
    total = a + b + c
    return (a / total, b / total, c / total)


@dataclass
class ScMap:
    """Strip-to-triangle Schwarz-Christoffel map for the dipolar exit problem.

    The map ``f`` sends the strip {0 < Im z < pi} onto a triangle so that
    f(0), f(+inf), f(-inf) are the three vertices.  Evaluation goes through
    h(z) = f(log z): the derivative of h on the upper half-plane is

        h'(z) = C * z**exp_zero * (z - 1)**exp_one

    with exp_one = -4/kappa and exp_zero = -1 + 2(1+alpha)/kappa, principal
    branches throughout.
    """

    kappa: float
    alpha: float
    exp_zero: float = field(init=False)
    exp_one: float = field(init=False)
    exp_inf: float = field(init=False)
    triangle: TriangleSpec = field(init=False)
    scale: complex = field(init=False)

    def __post_init__(self):
        if self.kappa <= 4.0:
            raise ParameterRangeError("kappa must exceed 4")
        if not (-1.0 < self.alpha < 1.0):
            raise ParameterRangeError("alpha must lie in (-1, 1)")
        k, al = self.kappa, self.alpha
        self.exp_one = -4.0 / k
        self.exp_zero = -1.0 + 2.0 * (1.0 + al) / k
        self.exp_inf = -1.0 + 2.0 * (1.0 - al) / k

        # Raw vertices from Euler beta integrals of h' with unit prefactor,
        # h(1) = 0.  B is reached along (1, inf), C along (1, 0).
        b_raw = math.exp(betaln(self.exp_inf + 1.0, self.exp_one + 1.0))
        c_mod = math.exp(betaln(self.exp_zero + 1.0, self.exp_one + 1.0))
        c_raw = -c_mod * cmath.exp(1j * math.pi * self.exp_one)
        # Normalize: A at the origin, B at 1 on the positive real axis.
        self.scale = 1.0 / b_raw
        vertex_a = 0.0 + 0.0j
        vertex_b = 1.0 + 0.0j
        vertex_c = c_raw * self.scale

        angle_a = math.pi * (1.0 + self.exp_one)
        angle_b = math.pi * (1.0 + self.exp_inf)
        angle_c = math.pi * (1.0 + self.exp_zero)
        self.triangle = TriangleSpec(angle_a, angle_b, angle_c, vertex_a, vertex_b, vertex_c)

        self._nodes_one, self._weights_one = roots_jacobi(_SC_QUAD_ORDER, 0.0, self.exp_one)
        self._nodes_zero, self._weights_zero = roots_jacobi(_SC_QUAD_ORDER, 0.0, self.exp_zero)
        self._nodes_inf, self._weights_inf = roots_jacobi(_SC_QUAD_ORDER, 0.0, self.exp_inf)

    # -- half-plane chart ------------------------------------------------

    def h_prime(self, z):
        """Closed-form derivative of the half-plane chart map (principal branches)."""
        z = np.asarray(z, dtype=complex)
        return self.scale * np.exp(
            self.exp_zero * np.log(z) + self.exp_one * np.log(z - 1.0)
        )

    def h_prime_log_deriv(self, z):
        """Analytic h''/h' = exp_zero/z + exp_one/(z-1)."""
        z = np.asarray(z, dtype=complex)
        return self.exp_zero / z + self.exp_one / (z - 1.0)

    def _h_from_one(self, z):
        # h(z) = (z-1)^(1+exp_one) * int_0^1 t^exp_one (1 + (z-1) t)^exp_zero dt
        dz = z - 1.0
        t = 0.5 * (self._nodes_one + 1.0)
        w = self._weights_one * 0.5 ** (self.exp_one + 1.0)
        vals = np.exp(self.exp_zero * np.log(1.0 + dz * t))
        integral = np.sum(w * vals)
        return self.scale * np.exp((1.0 + self.exp_one) * np.log(dz)) * integral

    def _h_from_zero(self, z):
        # h(z) = C_vertex + z^(1+exp_zero) * int_0^1 t^exp_zero (z t - 1)^exp_one dt
        t = 0.5 * (self._nodes_zero + 1.0)
        w = self._weights_zero * 0.5 ** (self.exp_zero + 1.0)
        vals = np.exp(self.exp_one * np.log(z * t - 1.0))
        integral = np.sum(w * vals)
        return self.triangle.vertex_c + self.scale * np.exp(
            (1.0 + self.exp_zero) * np.log(z)
        ) * integral

    def _h_from_inf(self, z):
        # h(z) = B - z^(1+exp_zero+exp_one) * int_0^1 s^exp_inf (1 - s/z)^exp_one ds
        p = 1.0 + self.exp_zero + self.exp_one  # negative
        t = 0.5 * (self._nodes_inf + 1.0)
        w = self._weights_inf * 0.5 ** (self.exp_inf + 1.0)
        vals = np.exp(self.exp_one * np.log(1.0 - t / z))
        integral = np.sum(w * vals)
        return self.triangle.vertex_b - self.scale * np.exp(p * np.log(z)) * integral

    def h(self, z: complex) -> complex:
        """Half-plane chart map onto the triangle; h(1), h(0), h(inf) are the vertices."""
        z = complex(z)
        if z.imag < 0:
            raise DomainError("h is defined on the closed upper half-plane")
        az = abs(z)
        if az >= 4.0:
            return self._h_from_inf(z)
        if abs(z - 1.0) <= az:
            return self._h_from_one(z)
        return self._h_from_zero(z)

    # -- strip chart -----------------------------------------------------

    def __call__(self, z: complex) -> complex:
        """Evaluate the strip chart map f(z) = h(e^z) for z in the closed strip."""
        y = float(np.imag(z))
        if not (0.0 <= y <= math.pi):
            raise DomainError(f"point not in the closed strip: {z!r}")
        x = float(np.real(z))
        if x > 50.0:
            return self.triangle.vertex_b
        if x < -50.0:
            return self.triangle.vertex_c
        return self.h(cmath.exp(complex(z)))

    def exit_probabilities(self, z: complex):
        """Oracle triple (P[swallowed], P[right side], P[left side]) for strip point z."""
        a, b, c = barycentric(self(z), self.triangle, tol=1e-7)
        return (a, b, c)


def sc_map_build(kappa: float, alpha: float) -> ScMap:
    """Build the strip-to-triangle Schwarz-Christoffel map for (kappa, alpha)."""
    return ScMap(kappa, alpha)
