"""
Real spherical harmonics as homogeneous harmonic polynomials in (x, y, z).

Working with the Cartesian (solid harmonic) form keeps everything chart-free:
values, ambient gradients and Hessians are polynomial evaluations, so nothing
is singular at the poles. Restricted to the unit sphere the polynomials agree
with the orthonormal real harmonics (geodesy convention, no Condon-Shortley
phase, ``int Y**2 dA = 1``)::

    m > 0:  sqrt(2) N_lm P_l^m(cos th) cos(m ph)
    m = 0:           N_l0 P_l(cos th)
    m < 0:  sqrt(2) N_l|m| P_l^|m|(cos th) sin(|m| ph)
"""

from dataclasses import dataclass
from functools import lru_cache
from math import factorial, pi, sqrt
from typing import Tuple

import numpy as np
from numpy.polynomial import polynomial as P

HarmonicTerm = Tuple[int, int, float]


def _polymul(a, b):
    """Product of two trivariate polynomials stored as dense coefficient cubes."""
    out = np.zeros(tuple(sa + sb - 1 for sa, sb in zip(a.shape, b.shape)), dtype=np.result_type(a, b))
    for idx in zip(*np.nonzero(a)):
        out[idx[0]:idx[0] + b.shape[0], idx[1]:idx[1] + b.shape[1], idx[2]:idx[2] + b.shape[2]] += a[idx] * b
    return out


def _pad(c, n):
    out = np.zeros((n, n, n), dtype=c.dtype)
    out[:c.shape[0], :c.shape[1], :c.shape[2]] = c
    return out


def _monomial(i, j, k, coeff=1.0):
    c = np.zeros((i + 1, j + 1, k + 1))
    c[i, j, k] = coeff
    return c


@lru_cache(maxsize=None)
def harmonic_polynomial(l: int, m: int) -> np.ndarray:
    """Coefficient cube ``c[i, j, k]`` of ``x**i y**j z**k`` for the real harmonic Y_l^m."""
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid harmonic index (l={l}, m={m})")
    am = abs(m)
    n = l + 3  # room for the r^2 factor before truncation

    def mul(a, b):
        return _polymul(a, b)[:n, :n, :n]

    z = _pad(_monomial(0, 0, 1), n)
    r2 = _pad(_monomial(2, 0, 0), n) + _pad(_monomial(0, 2, 0), n) + _pad(_monomial(0, 0, 2), n)

    # (x + i y)^|m|
    step = _pad(_monomial(1, 0, 0), n) + 1j * _pad(_monomial(0, 1, 0), n)
    xy = _pad(np.ones((1, 1, 1)), n).astype(complex)
    for _ in range(am):
        xy = mul(xy, step)
    azimuthal = xy.real if m >= 0 else xy.imag

    # P_l^m with the sin^m factor stripped, as a polynomial in (z, r^2)
    dfact = 1.0
    for q in range(1, 2 * am, 2):
        dfact *= q
    prev2 = np.zeros((n, n, n))
    prev = _pad(np.full((1, 1, 1), dfact), n)
    for deg in range(am + 1, l + 1):
        cur = ((2 * deg - 1) * mul(z, prev) - (deg + am - 1) * mul(r2, prev2)) / (deg - am)
        prev2, prev = prev, cur

    norm = sqrt((2 * l + 1) / (4 * pi) * factorial(l - am) / factorial(l + am))
    if m != 0:
        norm *= sqrt(2.0)
    return (norm * mul(prev, azimuthal))[:l + 1, :l + 1, :l + 1]


@dataclass(frozen=True)
class _Compiled:
    value: np.ndarray
    grad: Tuple[np.ndarray, np.ndarray, np.ndarray]
    hess: Tuple[Tuple[np.ndarray, ...], ...]
    laplacian: np.ndarray


@lru_cache(maxsize=256)
def _compile(terms: Tuple[HarmonicTerm, ...]) -> _Compiled:
    n = max([l for l, _, _ in terms], default=0) + 1
    value = np.zeros((n, n, n))
    lap = np.zeros((n, n, n))
    for l, m, coeff in terms:
        y = _pad(harmonic_polynomial(l, m), n)
        value += coeff * y
        lap += -l * (l + 1) * coeff * y
    grad = tuple(P.polyder(value, axis=a) for a in range(3))
    hess = tuple(tuple(P.polyder(g, axis=b) for b in range(3)) for g in grad)
    return _Compiled(value, grad, hess, lap)


def _eval(c, p):
    return P.polyval3d(p[..., 0], p[..., 1], p[..., 2], c)


def _coerce_terms(terms) -> Tuple[HarmonicTerm, ...]:
    out = []
    for term in terms:
        if isinstance(term, dict):
            l, m, coeff = term["l"], term["m"], term["coeff"]
        else:
            l, m, coeff = term
        l, m, coeff = int(l), int(m), float(coeff)
        if l < 0 or abs(m) > l:
            raise ValueError(f"invalid harmonic index (l={l}, m={m})")
        if not np.isfinite(coeff):
            raise ValueError(f"non-finite harmonic coefficient for (l={l}, m={m})")
        out.append((l, m, coeff))
    return tuple(out)


@dataclass(frozen=True)
class HarmonicSum:
    """A finite real spherical-harmonic expansion plus a constant offset.

    All evaluators take points of shape ``(..., 3)`` on the unit sphere.
    """

    terms: Tuple[HarmonicTerm, ...] = ()
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "terms", _coerce_terms(self.terms))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def _c(self) -> _Compiled:
        return _compile(self.terms)

    @property
    def is_zero(self) -> bool:
        return self.offset == 0.0 and all(c == 0.0 for _, _, c in self.terms)

    @property
    def is_constant(self) -> bool:
        return all(c == 0.0 or l == 0 for l, _, c in self.terms)

    def value(self, p):
        p = np.asarray(p, dtype=float)
        return _eval(self._c.value, p) + self.offset

    def laplacian(self, p):
        """Round-sphere Laplacian from the eigenvalue identity, no differencing."""
        p = np.asarray(p, dtype=float)
        return _eval(self._c.laplacian, p)

    def ambient_gradient(self, p):
        p = np.asarray(p, dtype=float)
        return np.stack([_eval(g, p) for g in self._c.grad], axis=-1)

    def ambient_hessian(self, p):
        p = np.asarray(p, dtype=float)
        return np.stack([np.stack([_eval(h, p) for h in row], axis=-1) for row in self._c.hess], axis=-2)

    def gradient(self, p):
        """Round-metric surface gradient (ambient gradient projected to the tangent plane)."""
        p = np.asarray(p, dtype=float)
        g = self.ambient_gradient(p)
        return g - np.sum(g * p, axis=-1, keepdims=True) * p

    def gradient_jvp(self, p, d):
        """Derivative of ``gradient`` at ``p`` along a tangent displacement ``d``."""
        p = np.asarray(p, dtype=float)
        g = self.ambient_gradient(p)
        hd = np.einsum("...ij,...j->...i", self.ambient_hessian(p), d)
        gp = np.sum(g * p, axis=-1, keepdims=True)
        return hd - (np.sum(hd * p, axis=-1, keepdims=True) + np.sum(g * d, axis=-1, keepdims=True)) * p - gp * d

    def max_abs_bound(self) -> float:
        """Crude sup-norm bound: |offset| + sum |coeff| * sup|Y_l^m|."""
        # sup |Y_l^m| <= sqrt((2l+1)/4pi) for the orthonormal real harmonics
        return abs(self.offset) + sum(abs(c) * sqrt((2 * l + 1) / (4 * pi)) for l, _, c in self.terms)


def real_sph_harm(l: int, m: int, p) -> np.ndarray:
    """Evaluate a single orthonormal real harmonic at unit points ``p``."""
    return _eval(harmonic_polynomial(l, m), np.asarray(p, dtype=float))


def equal_area_grid(resolution: int):
    """Cell centers and areas of an equal-area (Lambert cylindrical) grid.

    ``resolution`` bands uniform in z times ``2 * resolution`` longitudes; every
    cell has area ``4 pi / (2 resolution**2)``.
    """
    nz, nphi = resolution, 2 * resolution
    z = -1.0 + (np.arange(nz) + 0.5) * 2.0 / nz
    ph = (np.arange(nphi) + 0.5) * 2.0 * pi / nphi
    zz, pp = np.meshgrid(z, ph, indexing="ij")
    rho = np.sqrt(1.0 - zz ** 2)
    pts = np.stack([rho * np.cos(pp), rho * np.sin(pp), zz], axis=-1).reshape(-1, 3)
    area = 4.0 * pi / (nz * nphi)
    return pts, area
