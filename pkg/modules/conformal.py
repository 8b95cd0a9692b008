"""
PolarMap v1.0 - Exterior Conformal Map
Recovers Phi(zeta) = c zeta + mu_0 + mu_1/zeta + ... from the gamma tensors
using truncated Laurent series arithmetic
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DegenerateDomainError,
    MapDomainError,
    NormalizationError,
    NotSimplyConnectedError,
    ResolutionInsufficientError,
    UnsupportedGeometryError,
)
from .gpt import GammaTable

logger = logging.getLogger(__name__)

IMAG_TOL = 1e-6


@dataclass(frozen=True)
class LaurentSeries:
    """
    sum_j coeffs[j] * zeta^(top - j), known down to the exponent `low`.
    Coefficients below `low` are unknown, never zero-filled.
    """

    top: int
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=complex).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def from_list(cls, top: int, coeffs: Sequence[complex], low: Optional[int] = None) -> "LaurentSeries":
        """Polynomially supported series, zero-padded down to `low`"""
        coeffs = list(coeffs)
        if low is not None:
            coeffs += [0.0] * max(0, (top - low + 1) - len(coeffs))
        return cls(top=top, coeffs=np.asarray(coeffs, dtype=complex))

    @property
    def low(self) -> int:
        return self.top - len(self.coeffs) + 1

    @property
    def depth(self) -> int:
        return len(self.coeffs)

    def coefficient(self, exponent: int) -> complex:
        if exponent > self.top:
            return 0j
        if exponent < self.low:
            raise ValueError(f"Coefficient of zeta^{exponent} is below the truncation order {self.low}")
        return complex(self.coeffs[self.top - exponent])

    def truncate(self, low: int) -> "LaurentSeries":
        if low < self.low:
            raise ValueError(f"Cannot extend series from zeta^{self.low} down to zeta^{low}")
        return LaurentSeries(self.top, self.coeffs[: self.top - low + 1])

    def __mul__(self, other: "LaurentSeries") -> "LaurentSeries":
        return series_multiply(self, other)

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        top = max(self.top, other.top)
        low = max(self.low, other.low)
        out = np.zeros(top - low + 1, dtype=complex)
        for s in (self, other):
            part = s.coeffs[: s.top - low + 1]
            out[top - s.top: top - s.top + len(part)] += part
        return LaurentSeries(top, out)

    def evaluate(self, zeta) -> np.ndarray:
        """Horner in 1/zeta on the known coefficients"""
        zeta = np.asarray(zeta, dtype=complex)
        w = 1.0 / zeta
        return zeta ** self.top * np.polyval(self.coeffs[::-1], w)


def series_multiply(a: LaurentSeries, b: LaurentSeries) -> LaurentSeries:
    """Cauchy product, kept only down to the lowest exponent both factors determine"""
    top = a.top + b.top
    low = max(a.low + b.top, b.low + a.top)
    full = np.convolve(a.coeffs, b.coeffs)
    return LaurentSeries(top, full[: top - low + 1])


def series_reciprocal(a: LaurentSeries) -> LaurentSeries:
    """
    1/a for a = a_0 zeta^top (1 + u), u in powers of 1/zeta; same depth as a.

    Raises:
        NormalizationError: vanishing leading coefficient
    """
    lead = a.coeffs[0]
    if lead == 0:
        raise NormalizationError("Leading Laurent coefficient vanishes; series has no reciprocal")
    u = a.coeffs / lead
    b = np.zeros(a.depth, dtype=complex)
    b[0] = 1.0
    for n in range(1, a.depth):
        b[n] = -np.dot(u[1: n + 1], b[n - 1:: -1][:n])
    return LaurentSeries(-a.top, b / lead)


def map_series(c: float, mu: Sequence[complex], low: int) -> LaurentSeries:
    """Phi = c zeta + mu_0 + mu_1/zeta + ..., zero-padded down to zeta^low"""
    return LaurentSeries.from_list(1, [c] + list(mu), low=low)


def reciprocal_powers(c: float, mu: Sequence[complex], order: int) -> Tuple[np.ndarray, List[LaurentSeries]]:
    """
    B_1..B_order of 1/Phi = sum_k B_k / zeta^k and the series Phi^-m for m=1..order,
    each known down to zeta^-order. B_k uses mu_0..mu_{k-2} only.

    Raises:
        NormalizationError: c <= 0
    """
    if not c > 0:
        raise NormalizationError(f"Conformal radius must be positive, got c={c}")
    mu = list(mu)[: max(order - 1, 0)]
    phi = map_series(c, mu, low=2 - order)
    inverse = series_reciprocal(phi)
    b = np.array([inverse.coefficient(-k) for k in range(1, order + 1)])

    powers = [inverse]
    for _ in range(1, order):
        powers.append(series_multiply(powers[-1], inverse).truncate(-order))
    return b, powers


@dataclass(frozen=True)
class ConformalCoefficients:
    """c = mu_{-1} > 0, mu_0..mu_N, and B_1..B_{N+1} of 1/Phi"""

    c: float
    mu: np.ndarray
    B: np.ndarray
    order: int

    @property
    def laurent(self) -> np.ndarray:
        """[mu_{-1}, mu_0, ..., mu_N]"""
        return np.concatenate([[self.c], self.mu])

    def series(self, low: Optional[int] = None) -> LaurentSeries:
        low = -self.order if low is None else low
        return map_series(self.c, self.mu, low=min(low, -self.order))

    def truncated(self, order: int) -> "ConformalCoefficients":
        """Phi_n for n <= N (the recursion does not depend on N)"""
        if order > self.order:
            raise ResolutionInsufficientError(f"Recovered to order {self.order}, cannot truncate to {order}")
        return ConformalCoefficients(c=self.c, mu=self.mu[: order + 1].copy(),
                                     B=self.B[: order + 1].copy(), order=order)

    def identity_residual(self, depth: int = None) -> float:
        """max |coefficient| of Phi * (1/Phi) - 1 through zeta^-depth"""
        depth = self.order if depth is None else depth
        phi = self.series(low=-depth)
        product = series_multiply(phi, series_reciprocal(phi))
        product = product.truncate(max(product.low, -depth))
        resid = product.coeffs.copy()
        resid[0] -= 1.0
        return float(np.abs(resid).max())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "c": float(self.c),
            "mu": [[float(v.real), float(v.imag)] for v in self.mu],
            "B": [[float(v.real), float(v.imag)] for v in self.B],
        }


def _check_conformal_radius(gamma: GammaTable) -> float:
    g = gamma.g2(1, 1)
    if g == 0:
        raise DegenerateDomainError("gamma^2_11 vanishes")
    if abs(g.imag) > IMAG_TOL * abs(g):
        raise NotSimplyConnectedError(
            f"gamma^2_11 = {g:.6g} has imaginary part {g.imag:.3e}; GPTs are under-resolved"
        )
    if g.real >= 0:
        raise NotSimplyConnectedError(
            f"gamma^2_11 = {g.real:.6g} must be negative for a simply connected insulating inclusion"
        )
    c = float(np.sqrt(-g.real))
    if not c > 0:
        raise NormalizationError(f"Conformal radius must be positive, got c={c}")
    return c


def _column_sum(gamma_col: np.ndarray, powers: List[LaurentSeries], level: int) -> complex:
    """coefficient of zeta^-level in sum_{m=1}^{level} gamma_col[m-1] Phi^-m"""
    return complex(sum(gamma_col[m - 1] * powers[m - 1].coefficient(-level) for m in range(1, level + 1)))


def recover_coefficients(gamma: GammaTable, order: int,
                         require_simply_connected: bool = True) -> ConformalCoefficients:
    """
    c = sqrt(-gamma^2_11), mu_0 = -gamma^2_21 / c^2, then for l = 1..N
    mu_l = coefficient of zeta^-l in sum_{m<=l} gamma^1_m1 Phi^-m.

    Raises:
        UnsupportedGeometryError: multi-component GPTs (unless require_simply_connected=False)
        NotSimplyConnectedError: gamma^2_11 not negative real
        ResolutionInsufficientError: gamma order below max(N, 2)
    """
    if require_simply_connected and gamma.num_components > 1:
        raise UnsupportedGeometryError(
            f"Conformal recovery needs a simply connected domain, got {gamma.num_components} components"
        )
    if order < 1:
        raise ResolutionInsufficientError(f"Truncation order must be >= 1, got {order}")
    if gamma.order < max(order, 2):
        raise ResolutionInsufficientError(f"GPT order {gamma.order} is below the truncation order {max(order, 2)}")

    c = _check_conformal_radius(gamma)
    g1 = gamma.gamma1[:, 0]
    mu = [-gamma.g2(2, 1) / c ** 2]
    for level in range(1, order + 1):
        _, powers = reciprocal_powers(c, mu, level)
        mu.append(_column_sum(g1, powers, level))

    b, _ = reciprocal_powers(c, mu, order + 1)
    coeffs = ConformalCoefficients(c=c, mu=np.array(mu, dtype=complex), B=b, order=order)

    check1 = abs(mu[1] - gamma.g1(1, 1) * b[0])
    check2 = abs(mu[2] - (gamma.g1(2, 1) * b[0] ** 2 + gamma.g1(1, 1) * b[1])) if order >= 2 else 0.0
    scale = 1.0 + max(abs(v) for v in mu)
    if max(check1, check2) > 1e-10 * scale:
        logger.warning(f"Low-order closed forms disagree with the recursion by {max(check1, check2):.2e}")
    logger.info(f"Recovered conformal coefficients: c={c:.8g}, mu_0={mu[0]:.6g}, N={order}")
    return coeffs


def evaluate_map(coeffs: ConformalCoefficients, zeta) -> np.ndarray:
    """
    Phi_N(zeta) = c zeta + sum_{j=0}^{N} mu_j zeta^-j.

    Raises:
        MapDomainError: any |zeta| < 1
    """
    zeta = np.asarray(zeta, dtype=complex)
    if np.any(np.abs(zeta) < 1.0 - 1e-12):
        raise MapDomainError("The exterior map is only defined for |zeta| >= 1")
    w = 1.0 / zeta
    return coeffs.c * zeta + np.polyval(coeffs.mu[::-1], w)


def boundary_image(coeffs: ConformalCoefficients, count: int) -> Tuple[np.ndarray, np.ndarray]:
    """(theta, Phi_N(e^{i theta})) on a uniform grid"""
    theta = np.linspace(0.0, 2.0 * np.pi, count, endpoint=False)
    return theta, evaluate_map(coeffs, np.exp(1j * theta))


def vanishing_residuals(coeffs: ConformalCoefficients, gamma: GammaTable,
                        max_level: Optional[int] = None) -> np.ndarray:
    """
    |coefficient of zeta^-l in sum_{m<=l} gamma^2_m1 Phi^-m| for l = 2..max_level.
    Level l needs mu up to l-2 and gamma order l.
    """
    if max_level is None:
        max_level = min(gamma.order, coeffs.order + 2)
    max_level = min(max_level, gamma.order, coeffs.order + 2)
    if max_level < 2:
        return np.zeros(0)
    _, powers = reciprocal_powers(coeffs.c, coeffs.mu, max_level)
    g2 = gamma.gamma2[:, 0]
    return np.array([abs(_column_sum(g2, powers, level)) for level in range(2, max_level + 1)])


@dataclass(frozen=True)
class EquivalentEllipse:
    center: complex
    a: float
    b: float
    angle: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "center": [float(self.center.real), float(self.center.imag)],
            "a": self.a,
            "b": self.b,
            "angle_deg": float(np.degrees(self.angle)),
        }


def equivalent_ellipse(coeffs: ConformalCoefficients) -> EquivalentEllipse:
    """Image of the unit circle under Phi_1 = c zeta + mu_0 + mu_1/zeta"""
    mu1 = complex(coeffs.mu[1]) if coeffs.order >= 1 else 0j
    return EquivalentEllipse(
        center=complex(coeffs.mu[0]),
        a=float(coeffs.c + abs(mu1)),
        b=float(coeffs.c - abs(mu1)),
        angle=float(0.5 * np.angle(mu1)),
    )
