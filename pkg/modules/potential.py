"""
PolarMap v1.0 - Layer Potentials
Nyström matrices for the Neumann-Poincaré operator K* and the single-layer
potential S, plus the deflated density solve (lambda I - K*) phi = f
"""

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.linalg import LinAlgWarning

from .errors import (
    InvalidRhsError,
    NumericalFailureError,
    ResonanceError,
    SingularGeometryError,
    UnsupportedGeometryError,
)
from .geometry import SampledBoundary, min_component_distance

logger = logging.getLogger(__name__)

MEAN_TOL = 1e-10


@dataclass(frozen=True)
class NpMatrix:
    """Dense K* acting on nodal densities (quadrature weights folded into columns)"""

    entries: np.ndarray
    boundary: SampledBoundary

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def apply(self, phi: np.ndarray) -> np.ndarray:
        return self.entries @ phi

    def weighted_adjoint(self) -> np.ndarray:
        """Nyström double-layer K = W^-1 K*^T W, the adjoint in the weighted inner product"""
        w = self.boundary.weights
        return (self.entries.T * w[None, :]) / w[:, None]

    def restricted_eigenvalues(self) -> np.ndarray:
        """Eigenvalues of K* on the weighted-mean-zero subspace (which K* leaves invariant)"""
        q = linalg.null_space(self.boundary.weights[None, :])
        return linalg.eigvals(q.T @ self.entries @ q)


@dataclass(frozen=True)
class SingleLayerMatrix:
    """Dense S with Kress log-split quadrature; W S is symmetric"""

    entries: np.ndarray
    boundary: SampledBoundary

    def apply(self, phi: np.ndarray) -> np.ndarray:
        return self.entries @ phi

    def bilinear(self, phi: np.ndarray, psi: np.ndarray) -> float:
        """<phi, S psi> with the boundary quadrature weights"""
        return float(np.sum(self.boundary.weights * phi * (self.entries @ psi)))


def assemble_np(sb: SampledBoundary) -> NpMatrix:
    """
    K*_ij = (1/2pi) <x_i - x_j, nu_i> / |x_i - x_j|^2 * w_j, diagonal kappa_i/(4pi) * w_i.

    Raises:
        SingularGeometryError: two components share (numerically) a node
    """
    gap = min_component_distance(sb)
    if gap is not None and gap <= 1e-12 * max(1.0, float(np.abs(sb.nodes).max())):
        raise SingularGeometryError(f"Boundary components touch: min inter-component node distance {gap:.3e}")

    z = sb.nodes
    diff = z[:, None] - z[None, :]
    r2 = np.abs(diff) ** 2
    np.fill_diagonal(r2, 1.0)
    numer = np.real(diff * np.conj(sb.normals)[:, None])
    kernel = numer / (2.0 * np.pi * r2)
    np.fill_diagonal(kernel, sb.curvature / (4.0 * np.pi))
    entries = kernel * sb.weights[None, :]
    entries.setflags(write=False)
    logger.info(f"Assembled NP matrix ({sb.size} nodes, {sb.num_components} component(s))")
    return NpMatrix(entries=entries, boundary=sb)


def kress_log_weights(m: int) -> np.ndarray:
    """
    R_d for d = 0..m-1: trapezoid-style weights integrating ln(4 sin^2((t-s)/2)) f(s)
    exactly for trigonometric polynomials f of degree < m/2.
    """
    half = m // 2
    d = np.arange(m)
    k = np.arange(1, half)
    cos_terms = np.cos(np.outer(k, d) * (2.0 * np.pi / m)) / k[:, None]
    return -(4.0 * np.pi / m) * cos_terms.sum(axis=0) - (4.0 * np.pi / m ** 2) * np.cos(np.pi * d)


def assemble_single_layer(sb: SampledBoundary) -> SingleLayerMatrix:
    """
    S_ij = (1/2pi) [ 1/2 R_|i-j| + (2pi/M) L2_ij ] * speed_j where
    L2 = ln|x(t)-x(s)| - 1/2 ln(4 sin^2((t-s)/2)) is smooth, with L2_ii = ln speed_i.

    Raises:
        UnsupportedGeometryError: more than one component
    """
    if sb.num_components != 1:
        raise UnsupportedGeometryError(
            f"Single-layer matrix needs a single closed curve, got {sb.num_components} components"
        )
    m = sb.size
    t = sb.t
    speed = sb.speed
    dt = t[:, None] - t[None, :]
    dist = np.abs(sb.nodes[:, None] - sb.nodes[None, :])
    sin2 = 4.0 * np.sin(0.5 * dt) ** 2
    np.fill_diagonal(dist, 1.0)
    np.fill_diagonal(sin2, 1.0)
    smooth = np.log(dist) - 0.5 * np.log(sin2)
    np.fill_diagonal(smooth, np.log(speed))

    log_weights = linalg.circulant(kress_log_weights(m))
    entries = (0.5 * log_weights + (2.0 * np.pi / m) * smooth) * speed[None, :] / (2.0 * np.pi)
    entries.setflags(write=False)
    logger.info(f"Assembled single-layer matrix ({m} nodes, Kress log quadrature)")
    return SingleLayerMatrix(entries=entries, boundary=sb)


class DensitySolver:
    """
    LU factorization of the deflated matrix lambda I - K* + (3/2 - lambda) 1 w^T / |dOmega|.
    On weighted-mean-zero vectors it coincides with lambda I - K*; the rank-one term
    maps the constant direction to itself, so the factorization is regular whenever
    lambda is not an eigenvalue of K* on the mean-zero subspace.
    """

    def __init__(self, np_matrix: NpMatrix, lam: float):
        if abs(lam) < 0.5:
            raise ResonanceError(f"|lambda| must be >= 1/2 for the transmission problem, got {lam}")
        self.logger = logging.getLogger(__name__)
        self.np_matrix = np_matrix
        self.lam = float(lam)
        sb = np_matrix.boundary
        self.weights = sb.weights
        self.length = sb.length

        n = np_matrix.size
        a = lam * np.eye(n) - np_matrix.entries
        a += (1.5 - lam) * np.outer(np.ones(n), self.weights) / self.length
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", LinAlgWarning)
                self._lu = linalg.lu_factor(a, check_finite=True)
        except (LinAlgWarning, ValueError, linalg.LinAlgError) as e:
            raise NumericalFailureError(f"Factorization of the density matrix failed: {e}") from e

        diag = np.abs(np.diag(self._lu[0]))
        if diag.min() <= np.finfo(float).eps * n * diag.max():
            raise NumericalFailureError(
                f"Density matrix is numerically singular (pivot ratio {diag.min() / diag.max():.2e})"
            )
        self.logger.debug(f"Factorized density matrix: n={n}, lambda={lam}")

    def weighted_mean(self, values: np.ndarray) -> np.ndarray:
        return (self.weights @ values) / self.length

    def solve(self, rhs: np.ndarray, workers: int = 1) -> np.ndarray:
        """
        Solve for one right-hand side (vector) or many (columns of a matrix).

        Raises:
            InvalidRhsError: a right-hand side with non-negligible weighted mean
        """
        rhs = np.asarray(rhs, dtype=float)
        single = rhs.ndim == 1
        cols = rhs[:, None] if single else rhs
        if cols.shape[0] != self.np_matrix.size:
            raise InvalidRhsError(f"Right-hand side has {cols.shape[0]} rows, expected {self.np_matrix.size}")

        means = self.weighted_mean(cols)
        scale = np.maximum(1.0, np.abs(cols).max(axis=0))
        bad = np.abs(means) > MEAN_TOL * scale
        if np.any(bad):
            worst = float(np.max(np.abs(means) / scale))
            raise InvalidRhsError(f"Right-hand side weighted mean {worst:.3e} exceeds {MEAN_TOL:g}")
        cols = cols - means[None, :]

        if workers > 1 and cols.shape[1] > 1:
            out = np.empty_like(cols)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = {j: pool.submit(linalg.lu_solve, self._lu, cols[:, j]) for j in range(cols.shape[1])}
                for j, future in futures.items():
                    out[:, j] = future.result()
        else:
            out = linalg.lu_solve(self._lu, cols)

        if not np.all(np.isfinite(out)):
            raise NumericalFailureError("Density solve produced non-finite values")
        return out[:, 0] if single else out


def solve_density(np_matrix: NpMatrix, lam: float, rhs: np.ndarray,
                  solver: Optional[DensitySolver] = None) -> np.ndarray:
    """(lambda I - K*)^-1 rhs on the weighted-mean-zero subspace"""
    if solver is None:
        solver = DensitySolver(np_matrix, lam)
    return solver.solve(rhs)


def calderon_residual(sl: SingleLayerMatrix, np_matrix: NpMatrix) -> float:
    """
    Spectral norm of S K* - K S on weighted-mean-zero densities, measured in the
    weighted L2 norm (K is the weighted adjoint of K*).
    """
    w = np_matrix.boundary.weights
    root = np.sqrt(w)
    residual = sl.entries @ np_matrix.entries - np_matrix.weighted_adjoint() @ sl.entries
    transformed = root[:, None] * residual / root[None, :]
    q = linalg.null_space(root[None, :])
    return float(np.linalg.norm(transformed @ q, 2))
