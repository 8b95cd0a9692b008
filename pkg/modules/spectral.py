"""
PolarMap v1.0 - Neumann-Poincaré Spectrum
Eigenpairs of K* in the energy inner product <phi, psi>_H = -<phi, S psi>
and the spectral representation of the GPTs
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy import linalg

from .errors import (
    NumericalFailureError,
    ResolutionInsufficientError,
    ResonanceError,
    UnsupportedGeometryError,
)
from .geometry import SampledBoundary
from .gpt import BLOCKS, GptTable, normal_gradient
from .potential import NpMatrix, SingleLayerMatrix

logger = logging.getLogger(__name__)

EDGE_TOL = 1e-6
RESONANCE_TOL = 1e-12


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues sorted by decreasing |lambda_j|; eigenvector columns are H-orthonormal"""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    discarded: int = 0

    @property
    def count(self) -> int:
        return int(self.eigenvalues.shape[0])

    def fredholm(self) -> np.ndarray:
        """1/lambda_j, inf where lambda_j = 0"""
        lam = self.eigenvalues
        out = np.full(lam.shape, np.inf)
        np.divide(1.0, lam, out=out, where=lam != 0)
        return out

    def gram(self, sl: SingleLayerMatrix) -> np.ndarray:
        """H-Gram matrix of the retained eigenvectors"""
        w = sl.boundary.weights
        return -(self.eigenvectors.T * w[None, :]) @ (sl.entries @ self.eigenvectors)

    def truncated(self, count: int) -> "SpectralData":
        return SpectralData(self.eigenvalues[:count], self.eigenvectors[:, :count], self.discarded)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "count": self.count,
            "discarded": self.discarded,
            "eigenvalues": self.eigenvalues.tolist(),
        }


def _metric(sl: SingleLayerMatrix) -> np.ndarray:
    g = -sl.boundary.weights[:, None] * sl.entries
    return 0.5 * (g + g.T)


def np_eigendecomposition(np_matrix: NpMatrix, sl: SingleLayerMatrix,
                          count: Optional[int] = None) -> SpectralData:
    """
    Solve Q^T G K* Q y = lambda Q^T G Q y with G = -W S and Q an orthonormal basis of
    weighted-mean-zero vectors; eigenvectors phi = Q y.

    count=None keeps every mode; an explicit count must not exceed M/4.

    Raises:
        UnsupportedGeometryError: multi-component boundary
        ResolutionInsufficientError: count > M/4
        NumericalFailureError: -S not positive definite on mean-zero vectors
    """
    sb = np_matrix.boundary
    if sb.num_components != 1:
        raise UnsupportedGeometryError("NP eigendecomposition needs a single closed curve")
    m = sb.size
    if count is not None and (count < 0 or count > m // 4):
        raise ResolutionInsufficientError(f"Mode count must be in 0..{m // 4} for {m} nodes, got {count}")

    q = linalg.null_space(sb.weights[None, :])
    g = _metric(sl)
    a = q.T @ g @ np_matrix.entries @ q
    a = 0.5 * (a + a.T)
    b = q.T @ g @ q
    b = 0.5 * (b + b.T)
    try:
        lam, y = linalg.eigh(a, b)
    except linalg.LinAlgError as e:
        raise NumericalFailureError(f"Energy metric is not positive definite on mean-zero densities: {e}") from e

    keep = np.abs(lam) < 0.5 - EDGE_TOL
    discarded = int((~keep).sum())
    if discarded:
        logger.warning(f"Discarded {discarded} eigenpair(s) with |lambda| >= 1/2 - {EDGE_TOL:g}")
    lam, y = lam[keep], y[:, keep]
    order = np.lexsort((-lam, -np.abs(lam)))
    lam, phi = lam[order], (q @ y)[:, order]
    if count is not None:
        lam, phi = lam[:count], phi[:, :count]

    logger.info(f"NP eigendecomposition: {lam.shape[0]} modes retained of {m - 1}")
    return SpectralData(eigenvalues=lam, eigenvectors=phi, discarded=discarded)


def _projections(spec: SpectralData, sl: SingleLayerMatrix, f: np.ndarray) -> np.ndarray:
    """<f, phi_j>_H for every retained j (f may hold several columns)"""
    w = sl.boundary.weights
    return -((w[:, None] * (sl.entries @ spec.eigenvectors)).T @ f)


def _spectral_factor(spec: SpectralData, lam: float) -> np.ndarray:
    if abs(lam) < 0.5:
        raise ResonanceError(f"|lambda| must be >= 1/2, got {lam}")
    gap = np.abs(lam - spec.eigenvalues)
    if gap.size and gap.min() < RESONANCE_TOL:
        raise ResonanceError(f"lambda={lam} coincides with a retained NP eigenvalue")
    return -1.0 / ((lam - spec.eigenvalues) * (spec.eigenvalues - 0.5))


def gpt_spectral(spec: SpectralData, sl: SingleLayerMatrix, lam: float, m: int, n: int,
                 alpha: str, beta: str, sb: SampledBoundary) -> float:
    """
    M^{alpha beta}_{mn} = -sum_j <f_n^beta, phi_j>_H <f_m^alpha, phi_j>_H / ((lambda - lambda_j)(lambda_j - 1/2))
    with f = nu . grad P.
    """
    factor = _spectral_factor(spec, lam)
    if spec.count == 0:
        return 0.0
    pm = _projections(spec, sl, normal_gradient(m, alpha, sb))
    pn = _projections(spec, sl, normal_gradient(n, beta, sb))
    return float(np.sum(pn * pm * factor))


def spectral_gpt_table(spec: SpectralData, sl: SingleLayerMatrix, lam: float, order: int,
                       sb: SampledBoundary, k: float = 0.0) -> GptTable:
    """Every entry of the spectral sum up to `order`, packed like compute_gpt's output"""
    factor = _spectral_factor(spec, lam)
    f = np.column_stack(
        [normal_gradient(j, "c", sb) for j in range(1, order + 1)]
        + [normal_gradient(j, "s", sb) for j in range(1, order + 1)]
    )
    proj = _projections(spec, sl, f)
    full = proj.T @ (factor[:, None] * proj)
    n = order
    blocks = dict(zip(BLOCKS, (full[:n, :n], full[:n, n:], full[n:, :n], full[n:, n:])))
    return GptTable(order=order, k=float(k), lam=float(lam), nodes=sb.nodes_per_component,
                    num_components=1, shape=sb.curve.spec.to_dict(), **blocks)
