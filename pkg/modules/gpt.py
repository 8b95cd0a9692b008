"""
PolarMap v1.0 - Generalized Polarization Tensors
Contracted GPTs from the boundary integral formulation, the complex tensors
gamma^1/gamma^2, and the perturbed exterior field they predict
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np

from .errors import (
    EvaluationRegionError,
    InvalidConductivityError,
    ResolutionInsufficientError,
)
from .geometry import SampledBoundary
from .potential import DensitySolver, NpMatrix, assemble_np

logger = logging.getLogger(__name__)

MAX_ORDER = 24
BLOCKS = ("cc", "cs", "sc", "ss")


def material_lambda(k: float) -> float:
    """lambda = (k+1) / (2(k-1)); k=0 (insulating inclusion) gives -1/2"""
    if k < 0:
        raise InvalidConductivityError(f"Conductivity must be non-negative, got k={k}")
    if k == 1:
        raise InvalidConductivityError("k=1 means no inclusion (lambda is infinite)")
    return (k + 1.0) / (2.0 * (k - 1.0))


def _as_complex(point) -> np.ndarray:
    arr = np.asarray(point)
    if np.iscomplexobj(arr):
        return arr
    arr = arr.astype(float)
    if arr.shape and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    return arr.astype(complex)


def harmonic_poly(n: int, kind: str, point) -> np.ndarray:
    """
    P_n^c = r^n cos(n theta) = Re z^n, P_n^s = r^n sin(n theta) = Im z^n.
    point: complex scalar/array, or real array with trailing (x, y) axis.
    """
    if n < 1:
        raise ValueError(f"Harmonic polynomial degree must be >= 1, got {n}")
    zn = _as_complex(point) ** n
    if kind == "c":
        return np.real(zn)
    if kind == "s":
        return np.imag(zn)
    raise ValueError(f"kind must be 'c' or 's', got {kind!r}")


def normal_gradient(n: int, kind: str, sb: SampledBoundary) -> np.ndarray:
    """nu . grad P_n^kind at the nodes, from d/dz z^n = n z^(n-1)"""
    if n == 0:
        return np.zeros(sb.size)
    dz = n * sb.nodes ** (n - 1)
    if kind == "c":
        return np.real(dz * sb.normals)
    if kind == "s":
        return np.real(-1j * dz * sb.normals)
    raise ValueError(f"kind must be 'c' or 's', got {kind!r}")


def _power_table(z: np.ndarray, order: int) -> np.ndarray:
    """Columns z^1..z^order by repeated multiplication"""
    table = np.empty((z.shape[0], order), dtype=complex)
    table[:, 0] = z
    for j in range(1, order):
        table[:, j] = table[:, j - 1] * z
    return table


@dataclass(frozen=True)
class HarmonicSource:
    """h = a0 + sum_n r^n (a_n^c cos n theta + a_n^s sin n theta)"""

    a0: float = 0.0
    cos: Sequence[float] = ()
    sin: Sequence[float] = ()

    @property
    def order(self) -> int:
        return max(len(self.cos), len(self.sin))

    def alpha(self, order: Optional[int] = None) -> np.ndarray:
        """alpha_n = a_n^c - i a_n^s for n = 1..order (zero padded)"""
        order = self.order if order is None else order
        a = np.zeros(order, dtype=complex)
        c = np.asarray(self.cos, dtype=float)[:order]
        s = np.asarray(self.sin, dtype=float)[:order]
        a[: len(c)] += c
        a[: len(s)] -= 1j * s
        return a

    def evaluate(self, z) -> np.ndarray:
        z = np.atleast_1d(_as_complex(z))
        if self.order == 0:
            return np.full(z.shape, float(self.a0))
        return self.a0 + np.real(_power_table(z, self.order) @ self.alpha())

    def normal_derivative(self, sb: SampledBoundary) -> np.ndarray:
        if self.order == 0:
            return np.zeros(sb.size)
        n = np.arange(1, self.order + 1)
        dpow = np.ones((sb.size, self.order), dtype=complex)
        if self.order > 1:
            dpow[:, 1:] = _power_table(sb.nodes, self.order - 1)
        grad = (dpow * n[None, :]) @ self.alpha()
        return np.real(grad * sb.normals)


@dataclass(frozen=True)
class GptTable:
    """
    M^{ab}_{mn} = int P_m^a (lambda I - K*)^-1 [nu . grad P_n^b] dsigma for m, n = 1..order.
    Block arrays are indexed [m-1, n-1].
    """

    order: int
    k: float
    lam: float
    cc: np.ndarray
    cs: np.ndarray
    sc: np.ndarray
    ss: np.ndarray
    nodes: int = 0
    num_components: int = 1
    shape: Dict[str, Any] = field(default_factory=dict)

    def block(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def full(self) -> np.ndarray:
        """2N x 2N block matrix [[cc, cs], [sc, ss]]"""
        return np.block([[self.cc, self.cs], [self.sc, self.ss]])

    def entry(self, alpha: str, beta: str, m: int, n: int) -> float:
        return float(self.block(alpha + beta)[m - 1, n - 1])

    def symmetry_error(self) -> float:
        full = self.full()
        scale = max(np.abs(full).max(), np.finfo(float).tiny)
        return float(np.abs(full - full.T).max() / scale)

    def truncated(self, order: int) -> "GptTable":
        if order > self.order:
            raise ResolutionInsufficientError(f"Table has order {self.order}, cannot truncate to {order}")
        blocks = {name: self.block(name)[:order, :order].copy() for name in BLOCKS}
        return GptTable(order=order, k=self.k, lam=self.lam, nodes=self.nodes,
                        num_components=self.num_components, shape=self.shape, **blocks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "k": float(self.k),
            "lambda": float(self.lam),
            "nodes_per_component": self.nodes,
            "components": self.num_components,
            "shape": self.shape,
            "symmetry_error": self.symmetry_error(),
            "blocks": {name: self.block(name).tolist() for name in BLOCKS},
        }


@dataclass(frozen=True)
class GammaTable:
    """gamma^1_mn, gamma^2_mn (complex, indexed [m-1, n-1])"""

    order: int
    gamma1: np.ndarray
    gamma2: np.ndarray
    k: float = 0.0
    nodes: int = 0
    num_components: int = 1
    shape: Dict[str, Any] = field(default_factory=dict)

    def g1(self, m: int, n: int) -> complex:
        return complex(self.gamma1[m - 1, n - 1])

    def g2(self, m: int, n: int) -> complex:
        return complex(self.gamma2[m - 1, n - 1])

    def to_dict(self) -> Dict[str, Any]:
        def pairs(mat):
            return [[[float(v.real), float(v.imag)] for v in row] for row in mat]

        return {
            "order": self.order,
            "k": float(self.k),
            "nodes_per_component": self.nodes,
            "components": self.num_components,
            "shape": self.shape,
            "gamma1": pairs(self.gamma1),
            "gamma2": pairs(self.gamma2),
        }


def compute_gpt(sb: SampledBoundary, k: float, order: int, workers: int = 1,
                np_matrix: Optional[NpMatrix] = None) -> GptTable:
    """
    Contracted GPTs up to the given order.

    One LU factorization of the density matrix serves all 2N right-hand sides;
    with workers > 1 the back-substitutions run on a thread pool.

    Raises:
        ResolutionInsufficientError: order < 1, order > 24 or order > M/8
    """
    m_nodes = sb.nodes_per_component
    if order < 1 or order > MAX_ORDER:
        raise ResolutionInsufficientError(f"GPT order must be in 1..{MAX_ORDER}, got {order}")
    if order > m_nodes // 8:
        raise ResolutionInsufficientError(
            f"GPT order {order} needs at least {8 * order} nodes per component, got {m_nodes}"
        )
    lam = material_lambda(k)
    if np_matrix is None:
        np_matrix = assemble_np(sb)

    powers = _power_table(sb.nodes, order)
    dpowers = np.ones_like(powers)
    if order > 1:
        dpowers[:, 1:] = powers[:, :-1]
    dpowers *= np.arange(1, order + 1)[None, :]
    nu = sb.normals[:, None]
    rhs = np.hstack([np.real(dpowers * nu), np.real(-1j * dpowers * nu)])
    p_values = np.hstack([np.real(powers), np.imag(powers)])

    solver = DensitySolver(np_matrix, lam)
    phi = solver.solve(rhs, workers=workers)
    full = p_values.T @ (sb.weights[:, None] * phi)

    # rows follow the outgoing P_m, columns the incoming source P_n: cs[m, n] pairs cos P_m with sin P_n.
    # gamma2 and the multipole coefficients depend on this orientation; transposing flips cs - sc.
    n = order
    table = GptTable(
        order=order,
        k=float(k),
        lam=lam,
        cc=full[:n, :n],
        cs=full[:n, n:],
        sc=full[n:, :n],
        ss=full[n:, n:],
        nodes=m_nodes,
        num_components=sb.num_components,
        shape=sb.curve.spec.to_dict(),
    )
    sym = table.symmetry_error()
    logger.info(f"Computed GPTs: order={order}, k={k}, nodes={sb.size}, symmetry error {sym:.2e}")
    if sym > 1e-6:
        logger.warning(f"GPT block symmetry error {sym:.2e} above 1e-6; increase --nodes")
    return table


def gamma_tables(gpt: GptTable) -> GammaTable:
    """gamma^1 = (Mcc - Mss + i(Mcs + Msc)) / 4pi m, gamma^2 = (Mcc + Mss - i(Mcs - Msc)) / 4pi m"""
    m = np.arange(1, gpt.order + 1)[:, None]
    pref = 1.0 / (4.0 * np.pi * m)
    gamma1 = pref * (gpt.cc - gpt.ss + 1j * (gpt.cs + gpt.sc))
    gamma2 = pref * (gpt.cc + gpt.ss - 1j * (gpt.cs - gpt.sc))
    return GammaTable(order=gpt.order, gamma1=gamma1, gamma2=gamma2, k=gpt.k,
                      nodes=gpt.nodes, num_components=gpt.num_components, shape=gpt.shape)


@dataclass(frozen=True)
class ExteriorField:
    points: np.ndarray
    beta: np.ndarray
    background: np.ndarray
    multipole: np.ndarray
    direct: np.ndarray

    def discrepancy(self) -> float:
        return float(np.abs(self.multipole - self.direct).max())


def exterior_field(sb: SampledBoundary, k: float, source: HarmonicSource, eval_points,
                   terms: int = 8, gpt: Optional[GptTable] = None) -> ExteriorField:
    """
    Perturbed field u for background h, two ways:
    multipole u = h - Re sum_m beta_m / z^m with beta_m = sum_n gamma1_mn alpha_n + gamma2_mn conj(alpha_n),
    and direct u = h + S[psi] with psi = (lambda I - K*)^-1 [nu . grad h].

    Raises:
        EvaluationRegionError: a point within 1.5x the boundary's radius about the origin
    """
    z = np.atleast_1d(_as_complex(eval_points)).ravel()
    radius = float(np.abs(sb.nodes).max())
    too_close = np.abs(z) < 1.5 * radius
    if np.any(too_close):
        raise EvaluationRegionError(
            f"{int(too_close.sum())} evaluation point(s) inside |z| < {1.5 * radius:.4g}; "
            "the multipole series needs points well outside the boundary"
        )

    order = max(terms, source.order, 1)
    if gpt is None or gpt.order < order:
        gpt = compute_gpt(sb, k, order)
    gamma = gamma_tables(gpt.truncated(order))
    alpha = source.alpha(order)
    beta = gamma.gamma1 @ alpha + gamma.gamma2 @ np.conj(alpha)
    beta = beta[:terms]

    h = source.evaluate(z)
    inv = _power_table(1.0 / z, terms)
    multipole = h - np.real(inv @ beta)

    lam = material_lambda(k)
    psi = DensitySolver(assemble_np(sb), lam).solve(source.normal_derivative(sb))
    log_dist = np.log(np.abs(z[:, None] - sb.nodes[None, :]))
    direct = h + log_dist @ (sb.weights * psi) / (2.0 * np.pi)

    return ExteriorField(points=z, beta=beta, background=h, multipole=multipole, direct=direct)


@dataclass(frozen=True)
class ScalingReport:
    scale: float
    order: int
    max_relative_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_relative_error <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scale": self.scale,
            "order": self.order,
            "max_relative_error": self.max_relative_error,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def gpt_scaling_check(base: GptTable, scaled: GptTable, scale: float,
                      tolerance: float = 1e-6) -> ScalingReport:
    """Check M_mn(s Omega) = s^(m+n) M_mn(Omega) blockwise; mismatches are reported, not raised"""
    order = min(base.order, scaled.order)
    m = np.arange(1, order + 1)
    factor = float(scale) ** (m[:, None] + m[None, :])
    expected = np.stack([factor * base.block(name)[:order, :order] for name in BLOCKS])
    got = np.stack([scaled.block(name)[:order, :order] for name in BLOCKS])
    ref = max(np.abs(expected).max(), np.abs(got).max(), np.finfo(float).tiny)
    worst = float(np.abs(got - expected).max() / ref)
    report = ScalingReport(scale=float(scale), order=order, max_relative_error=worst, tolerance=tolerance)
    if not report.passed:
        logger.warning(f"GPT scaling mismatch at s={scale}: relative error {worst:.2e}")
    return report
