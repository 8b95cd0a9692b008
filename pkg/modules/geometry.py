"""
PolarMap v1.0 - Geometry
Parametrized closed boundary curves and their quadrature-ready samplings
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from .errors import InvalidResolutionError, InvalidShapeError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
MIN_NODES = 16

# Default kite (cos t + a2 cos 2t + a1, b sin t)
KITE_DEFAULTS = {"a1": -0.65, "a2": 0.65, "b": 1.5}
PERTURBED_ELLIPSE_DEFAULTS = {"a": 2.0, "b": 1.0, "modes": {3: (0.1, 0.0)}}


@dataclass(frozen=True)
class ShapeSpec:
    """Named shape descriptor plus a similarity transform (center, rotation, scale)"""

    name: str
    params: Dict[str, Any] = field(default_factory=dict)
    center: complex = 0j
    rotation: float = 0.0
    scale: float = 1.0

    @property
    def factor(self) -> complex:
        return self.scale * complex(math.cos(self.rotation), math.sin(self.rotation))

    def with_transform(self, center: complex = None, rotation: float = None,
                       scale: float = None) -> "ShapeSpec":
        """Copy of this spec with some transform fields replaced"""
        return ShapeSpec(
            name=self.name,
            params=dict(self.params),
            center=self.center if center is None else complex(center),
            rotation=self.rotation if rotation is None else float(rotation),
            scale=self.scale if scale is None else float(scale),
        )

    def describe(self) -> str:
        """Compact text form, e.g. 'star:2,0.4,3'"""
        if self.name == "union":
            body = ";".join(",".join(_fmt(v) for v in disk) for disk in self.params["disks"])
        elif self.name == "perturbed-ellipse":
            modes = ",".join(
                f"{k}:{_fmt(ab[0])}:{_fmt(ab[1])}" for k, ab in sorted(self.params["modes"].items())
            )
            body = f"{_fmt(self.params['a'])},{_fmt(self.params['b'])}" + (f",{modes}" if modes else "")
        else:
            body = ",".join(_fmt(v) for v in self.params.values())
        return f"{self.name}:{body}" if body else self.name

    def to_dict(self) -> Dict[str, Any]:
        params = {}
        for key, value in self.params.items():
            if key == "modes":
                params[key] = {str(k): [float(ab[0]), float(ab[1])] for k, ab in sorted(value.items())}
            elif key == "disks":
                params[key] = [[float(v) for v in disk] for disk in value]
            else:
                params[key] = float(value)
        return {
            "name": self.name,
            "text": self.describe(),
            "params": params,
            "center": [float(self.center.real), float(self.center.imag)],
            "rotation_deg": float(np.degrees(self.rotation)),
            "scale": float(self.scale),
        }


def _fmt(value) -> str:
    return f"{float(value):g}"


class ParametricCurve:
    """
    Smooth closed curve t in [0, 2pi) -> z(t) in the complex plane.
    Subclasses give the curve in its own frame (_z, _dz, _d2z); the similarity
    z -> shift + factor*z is applied here so derivatives stay analytic.
    """

    def __init__(self, factor: complex = 1.0, shift: complex = 0j):
        self.factor = complex(factor)
        self.shift = complex(shift)

    def _z(self, t):
        raise NotImplementedError

    def _dz(self, t):
        raise NotImplementedError

    def _d2z(self, t):
        raise NotImplementedError

    def position(self, t) -> np.ndarray:
        return self.shift + self.factor * self._z(np.asarray(t, dtype=float))

    def derivative(self, t) -> np.ndarray:
        return self.factor * self._dz(np.asarray(t, dtype=float))

    def second_derivative(self, t) -> np.ndarray:
        return self.factor * self._d2z(np.asarray(t, dtype=float))

    def transformed(self, factor: complex, shift: complex) -> "ParametricCurve":
        """Compose with the similarity z -> shift + factor*z"""
        clone = object.__new__(type(self))
        clone.__dict__.update(self.__dict__)
        clone.factor = factor * self.factor
        clone.shift = shift + factor * self.shift
        return clone


class Circle(ParametricCurve):
    def __init__(self, radius: float, **kwargs):
        super().__init__(**kwargs)
        self.radius = float(radius)

    def _z(self, t):
        return self.radius * np.exp(1j * t)

    def _dz(self, t):
        return 1j * self.radius * np.exp(1j * t)

    def _d2z(self, t):
        return -self.radius * np.exp(1j * t)


class Ellipse(ParametricCurve):
    def __init__(self, a: float, b: float, **kwargs):
        super().__init__(**kwargs)
        self.a = float(a)
        self.b = float(b)

    def _z(self, t):
        return self.a * np.cos(t) + 1j * self.b * np.sin(t)

    def _dz(self, t):
        return -self.a * np.sin(t) + 1j * self.b * np.cos(t)

    def _d2z(self, t):
        return -self.a * np.cos(t) - 1j * self.b * np.sin(t)


class Star(ParametricCurve):
    """Polar curve r(t) = r0 + eps*cos(p t)"""

    def __init__(self, r0: float, eps: float, p: int, **kwargs):
        super().__init__(**kwargs)
        self.r0 = float(r0)
        self.eps = float(eps)
        self.p = int(p)

    def _radius(self, t):
        p = self.p
        r = self.r0 + self.eps * np.cos(p * t)
        dr = -self.eps * p * np.sin(p * t)
        d2r = -self.eps * p * p * np.cos(p * t)
        return r, dr, d2r

    def _z(self, t):
        r, _, _ = self._radius(t)
        return r * np.exp(1j * t)

    def _dz(self, t):
        r, dr, _ = self._radius(t)
        return (dr + 1j * r) * np.exp(1j * t)

    def _d2z(self, t):
        r, dr, d2r = self._radius(t)
        return (d2r + 2j * dr - r) * np.exp(1j * t)


class Kite(ParametricCurve):
    """(cos t + a2 cos 2t + a1, b sin t)"""

    def __init__(self, a1: float, a2: float, b: float, **kwargs):
        super().__init__(**kwargs)
        self.a1 = float(a1)
        self.a2 = float(a2)
        self.b = float(b)

    def _z(self, t):
        return np.cos(t) + self.a2 * np.cos(2 * t) + self.a1 + 1j * self.b * np.sin(t)

    def _dz(self, t):
        return -np.sin(t) - 2 * self.a2 * np.sin(2 * t) + 1j * self.b * np.cos(t)

    def _d2z(self, t):
        return -np.cos(t) - 4 * self.a2 * np.cos(2 * t) - 1j * self.b * np.sin(t)


class PerturbedEllipse(ParametricCurve):
    """Ellipse scaled radially by 1 + sum_k (a_k cos kt + b_k sin kt)"""

    def __init__(self, a: float, b: float, modes: Dict[int, Tuple[float, float]], **kwargs):
        super().__init__(**kwargs)
        self.base = Ellipse(a, b)
        self.modes = {int(k): (float(ab[0]), float(ab[1])) for k, ab in modes.items()}

    def _rho(self, t):
        rho = np.ones_like(t)
        drho = np.zeros_like(t)
        d2rho = np.zeros_like(t)
        for k, (ak, bk) in self.modes.items():
            c, s = np.cos(k * t), np.sin(k * t)
            rho = rho + ak * c + bk * s
            drho = drho + k * (-ak * s + bk * c)
            d2rho = d2rho - k * k * (ak * c + bk * s)
        return rho, drho, d2rho

    def _z(self, t):
        rho, _, _ = self._rho(t)
        return self.base._z(t) * rho

    def _dz(self, t):
        rho, drho, _ = self._rho(t)
        return self.base._dz(t) * rho + self.base._z(t) * drho

    def _d2z(self, t):
        rho, drho, d2rho = self._rho(t)
        e, de, d2e = self.base._z(t), self.base._dz(t), self.base._d2z(t)
        return d2e * rho + 2 * de * drho + e * d2rho


@dataclass(frozen=True)
class BoundaryCurve:
    """One or more disjoint, counterclockwise, smooth closed curves"""

    components: Tuple[ParametricCurve, ...]
    spec: ShapeSpec

    @property
    def num_components(self) -> int:
        return len(self.components)

    @property
    def is_simply_connected(self) -> bool:
        return len(self.components) == 1

    def points(self, count: int) -> np.ndarray:
        """Dense uniform-parameter samples of every component, concatenated"""
        t = np.linspace(0.0, TWO_PI, count, endpoint=False)
        return np.concatenate([comp.position(t) for comp in self.components])

    def diameter(self, count: int = 1024) -> float:
        z = self.points(count)
        return float(pdist(np.column_stack([z.real, z.imag])).max())


@dataclass(frozen=True)
class SampledBoundary:
    """
    Nyström grid on a BoundaryCurve.
    All arrays are read-only; node i belongs to component component_of[i].
    """

    curve: BoundaryCurve
    nodes_per_component: int
    t: np.ndarray
    nodes: np.ndarray
    velocity: np.ndarray
    normals: np.ndarray
    curvature: np.ndarray
    weights: np.ndarray
    component_of: np.ndarray

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def num_components(self) -> int:
        return self.curve.num_components

    @property
    def speed(self) -> np.ndarray:
        return np.abs(self.velocity)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.nodes.real, self.nodes.imag])

    @property
    def length(self) -> float:
        return float(self.weights.sum())

    def component_slice(self, index: int) -> slice:
        m = self.nodes_per_component
        return slice(index * m, (index + 1) * m)

    def perimeters(self) -> np.ndarray:
        return np.array([self.weights[self.component_slice(i)].sum()
                         for i in range(self.num_components)])

    def areas(self) -> np.ndarray:
        """Enclosed area per component, 1/2 * closed integral of (x dy - y dx)"""
        dt = TWO_PI / self.nodes_per_component
        out = []
        for i in range(self.num_components):
            sl = self.component_slice(i)
            z, dz = self.nodes[sl], self.velocity[sl]
            out.append(0.5 * dt * np.sum(np.imag(np.conj(z) * dz)))
        return np.array(out)

    def centroid(self) -> complex:
        """Area centroid of the union of the enclosed regions"""
        dt = TWO_PI / self.nodes_per_component
        x, y = self.nodes.real, self.nodes.imag
        dx, dy = self.velocity.real, self.velocity.imag
        area = self.areas().sum()
        cx = 0.5 * dt * np.sum(x * x * dy) / area
        cy = -0.5 * dt * np.sum(y * y * dx) / area
        return complex(cx, cy)

    def resample(self, nodes_per_component: int) -> "SampledBoundary":
        return sample(self.curve, nodes_per_component)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "shape": self.curve.spec.to_dict(),
            "nodes_per_component": self.nodes_per_component,
            "components": [
                self.points[self.component_slice(i)].tolist()
                for i in range(self.num_components)
            ],
        }


def parse_shape(text: str) -> ShapeSpec:
    """
    Parse a CLI/config shape descriptor.

    Accepted forms:
        disk:R[,cx,cy]            ellipse:a,b[,cx,cy[,rot_deg]]
        star:r0,eps,p             kite[:a1,a2,b]
        perturbed-ellipse[:a,b[,k:ak[:bk],...]]
        union-disks:d[,R]         (two disks of radius R at (+-d, 0))
        union:R,cx,cy;R,cx,cy;...
    """
    text = text.strip()
    name, _, body = text.partition(":")
    name = name.strip().lower()
    try:
        if name == "disk":
            values = _floats(body, 1, 3)
            center = complex(values[1], values[2]) if len(values) == 3 else 0j
            return ShapeSpec("disk", {"radius": values[0]}, center=center)
        if name == "ellipse":
            values = _floats(body, 2, 5)
            center = complex(values[2], values[3]) if len(values) >= 4 else 0j
            rotation = math.radians(values[4]) if len(values) == 5 else 0.0
            return ShapeSpec("ellipse", {"a": values[0], "b": values[1]}, center=center, rotation=rotation)
        if name == "star":
            r0, eps, p = _floats(body, 3, 3)
            return ShapeSpec("star", {"r0": r0, "eps": eps, "p": p})
        if name == "kite":
            if not body:
                return ShapeSpec("kite", dict(KITE_DEFAULTS))
            a1, a2, b = _floats(body, 3, 3)
            return ShapeSpec("kite", {"a1": a1, "a2": a2, "b": b})
        if name == "perturbed-ellipse":
            if not body:
                return ShapeSpec("perturbed-ellipse", _copy_perturbed(PERTURBED_ELLIPSE_DEFAULTS))
            parts = [p.strip() for p in body.split(",") if p.strip()]
            a, b = float(parts[0]), float(parts[1])
            modes = {}
            for token in parts[2:]:
                pieces = token.split(":")
                k = int(pieces[0])
                ak = float(pieces[1]) if len(pieces) > 1 else 0.0
                bk = float(pieces[2]) if len(pieces) > 2 else 0.0
                modes[k] = (ak, bk)
            return ShapeSpec("perturbed-ellipse", {"a": a, "b": b, "modes": modes})
        if name == "union-disks":
            values = _floats(body, 1, 2)
            d = values[0]
            radius = values[1] if len(values) == 2 else 1.0
            return ShapeSpec("union", {"disks": [(radius, -d, 0.0), (radius, d, 0.0)]})
        if name == "union":
            disks = [tuple(_floats(chunk, 3, 3)) for chunk in body.split(";") if chunk.strip()]
            return ShapeSpec("union", {"disks": disks})
    except (ValueError, IndexError) as e:
        raise InvalidShapeError(f"Cannot parse shape '{text}': {e}") from e
    raise InvalidShapeError(f"Unknown shape '{name}' in '{text}'")


def _floats(body: str, lo: int, hi: int) -> List[float]:
    values = [float(v) for v in body.split(",") if v.strip()]
    if not lo <= len(values) <= hi:
        raise ValueError(f"expected {lo}..{hi} numbers, got {len(values)}")
    return values


def _copy_perturbed(params: Dict[str, Any]) -> Dict[str, Any]:
    return {"a": params["a"], "b": params["b"], "modes": dict(params["modes"])}


def make_shape(spec: ShapeSpec) -> BoundaryCurve:
    """
    Build the BoundaryCurve for a shape descriptor and check its invariants.

    Raises:
        InvalidShapeError: non-positive radii/axes, eps >= r0 for a star,
            overlapping union components, degenerate or clockwise curves
    """
    if spec.scale <= 0:
        raise InvalidShapeError(f"Scale must be positive, got {spec.scale}")
    p = spec.params
    name = spec.name
    if name == "disk":
        _require_positive(name, radius=p["radius"])
        components = [Circle(p["radius"])]
    elif name == "ellipse":
        _require_positive(name, a=p["a"], b=p["b"])
        components = [Ellipse(p["a"], p["b"])]
    elif name == "star":
        _require_positive(name, r0=p["r0"])
        if float(p["p"]) != int(p["p"]) or int(p["p"]) < 1:
            raise InvalidShapeError(f"Star frequency p must be a positive integer, got {p['p']}")
        if abs(p["eps"]) >= p["r0"]:
            raise InvalidShapeError(f"Self-intersecting star: |eps|={abs(p['eps'])} >= r0={p['r0']}")
        components = [Star(p["r0"], p["eps"], int(p["p"]))]
    elif name == "kite":
        _require_positive(name, b=p["b"])
        components = [Kite(p["a1"], p["a2"], p["b"])]
    elif name == "perturbed-ellipse":
        _require_positive(name, a=p["a"], b=p["b"])
        total = sum(abs(ak) + abs(bk) for ak, bk in p["modes"].values())
        if total >= 1.0:
            raise InvalidShapeError(f"Radial perturbation too large: sum of |coefficients| = {total} >= 1")
        if any(int(k) < 1 for k in p["modes"]):
            raise InvalidShapeError("Perturbation modes must be positive integers")
        components = [PerturbedEllipse(p["a"], p["b"], p["modes"])]
    elif name == "union":
        disks = p["disks"]
        if not disks:
            raise InvalidShapeError("Union needs at least one disk")
        for radius, _, _ in disks:
            _require_positive(name, radius=radius)
        for i in range(len(disks)):
            for j in range(i + 1, len(disks)):
                ri, xi, yi = disks[i]
                rj, xj, yj = disks[j]
                if abs(complex(xi, yi) - complex(xj, yj)) <= ri + rj:
                    raise InvalidShapeError(f"Union disks {i} and {j} overlap or touch")
        components = [Circle(r, shift=complex(x, y)) for r, x, y in disks]
    else:
        raise InvalidShapeError(f"Unknown shape '{name}'")

    components = tuple(c.transformed(spec.factor, spec.center) for c in components)
    curve = BoundaryCurve(components=components, spec=spec)
    _check_curve(curve)
    logger.debug(f"Built shape {spec.describe()} with {curve.num_components} component(s)")
    return curve


def _require_positive(name: str, **values):
    for key, value in values.items():
        if not value > 0:
            raise InvalidShapeError(f"{name}: {key} must be positive, got {value}")


def _check_curve(curve: BoundaryCurve, count: int = 2048):
    """Closure, non-degenerate speed and counterclockwise orientation"""
    t = np.linspace(0.0, TWO_PI, count, endpoint=False)
    ends = np.array([0.0, TWO_PI])
    for index, comp in enumerate(curve.components):
        scale = max(1.0, float(np.abs(comp.position(t)).max()))
        for fn in (comp.position, comp.derivative, comp.second_derivative):
            a, b = fn(ends)
            if abs(a - b) > 1e-12 * scale * 10:
                raise InvalidShapeError(f"Component {index} is not closed")
        dz = comp.derivative(t)
        if np.abs(dz).min() <= 1e-12 * scale:
            raise InvalidShapeError(f"Component {index} has a degenerate parametrization (zero speed)")
        area = 0.5 * np.sum(np.imag(np.conj(comp.position(t)) * dz)) * TWO_PI / count
        if area <= 0:
            raise InvalidShapeError(f"Component {index} is not counterclockwise")


def sample(curve: BoundaryCurve, nodes_per_component: int) -> SampledBoundary:
    """
    Uniform-parameter trapezoidal sampling.

    Args:
        curve: boundary to discretize
        nodes_per_component: M, even and at least 16

    Returns:
        SampledBoundary with outward normals (tangent rotated by -90 degrees),
        signed curvature and arc-length weights (2pi/M)*speed
    """
    m = nodes_per_component
    if int(m) != m or m < MIN_NODES or m % 2:
        raise InvalidResolutionError(f"Nodes per component must be an even integer >= {MIN_NODES}, got {m}")
    m = int(m)
    t = np.linspace(0.0, TWO_PI, m, endpoint=False)
    z, dz, d2z, comp = [], [], [], []
    for index, c in enumerate(curve.components):
        z.append(c.position(t))
        dz.append(c.derivative(t))
        d2z.append(c.second_derivative(t))
        comp.append(np.full(m, index, dtype=int))
    z = np.concatenate(z)
    dz = np.concatenate(dz)
    d2z = np.concatenate(d2z)
    speed = np.abs(dz)
    tangent = dz / speed
    normals = -1j * tangent
    curvature = np.imag(np.conj(dz) * d2z) / speed ** 3
    weights = (TWO_PI / m) * speed

    arrays = {
        "t": np.tile(t, curve.num_components),
        "nodes": z,
        "velocity": dz,
        "normals": normals,
        "curvature": curvature,
        "weights": weights,
        "component_of": np.concatenate(comp),
    }
    for arr in arrays.values():
        arr.setflags(write=False)
    return SampledBoundary(curve=curve, nodes_per_component=m, **arrays)


def min_component_distance(sb: SampledBoundary) -> Optional[float]:
    """Smallest node distance between different components (None for one component)"""
    if sb.num_components < 2:
        return None
    best = np.inf
    for i in range(sb.num_components):
        zi = sb.nodes[sb.component_slice(i)]
        for j in range(i + 1, sb.num_components):
            zj = sb.nodes[sb.component_slice(j)]
            best = min(best, float(np.abs(zi[:, None] - zj[None, :]).min()))
    return best
