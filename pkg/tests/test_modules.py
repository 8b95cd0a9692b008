"""
PolarMap v1.0 - Test Module
Unit tests for boundary geometry, layer potentials and GPTs
"""

import os
import sys
from functools import lru_cache

import numpy as np
import pytest

# Add repository root to path for testing
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from modules.errors import (
    EvaluationRegionError,
    InvalidConductivityError,
    InvalidResolutionError,
    InvalidRhsError,
    InvalidShapeError,
    ResolutionInsufficientError,
    ResonanceError,
    UnsupportedGeometryError,
)
from modules.geometry import (
    KITE_DEFAULTS,
    ShapeSpec,
    make_shape,
    min_component_distance,
    parse_shape,
    sample,
)
from modules.gpt import (
    HarmonicSource,
    compute_gpt,
    exterior_field,
    gamma_tables,
    gpt_scaling_check,
    harmonic_poly,
    material_lambda,
    normal_gradient,
)
from modules.potential import (
    DensitySolver,
    assemble_np,
    assemble_single_layer,
    calderon_residual,
    kress_log_weights,
    solve_density,
)

ELLIPSE_PERIMETER = 9.688448220547675


@lru_cache(maxsize=None)
def sampled(shape, nodes):
    return sample(make_shape(parse_shape(shape)), nodes)


@lru_cache(maxsize=None)
def gpt_of(shape, nodes, order, k=0.0):
    return compute_gpt(sampled(shape, nodes), k, order)


class TestShapes:
    """Test cases for shape descriptors and curve construction"""

    def test_parse_round_trip_text(self):
        """Descriptors print back in their compact form"""
        assert parse_shape("star:2,0.4,3").describe() == "star:2,0.4,3"
        assert parse_shape("disk:1").describe() == "disk:1"

    def test_kite_defaults(self):
        spec = parse_shape("kite")
        assert spec.params == KITE_DEFAULTS
        assert make_shape(spec).is_simply_connected

    def test_disk_is_unit_circle(self):
        """disk(1) at the origin traces x=cos t, y=sin t"""
        curve = make_shape(parse_shape("disk:1"))
        t = np.linspace(0, 2 * np.pi, 7, endpoint=False)
        z = curve.components[0].position(t)
        assert np.allclose(z, np.exp(1j * t), atol=1e-15)

    def test_star_radius(self):
        sb = sampled("star:2,0.4,3", 64)
        assert np.allclose(np.abs(sb.nodes), 2 + 0.4 * np.cos(3 * sb.t), atol=1e-14)

    def test_two_disk_union(self):
        sb = sampled("union-disks:2", 64)
        assert sb.num_components == 2
        assert sb.size == 128
        assert min_component_distance(sb) == pytest.approx(2.0, abs=1e-12)
        assert min_component_distance(sampled("disk:1", 64)) is None

    def test_similarity_transform(self):
        """ellipse:2,1 rotated 90 degrees puts its first node at (0, 2)"""
        sb = sampled("ellipse:2,1,0,0,90", 32)
        assert sb.nodes[0] == pytest.approx(2j, abs=1e-14)
        moved = make_shape(parse_shape("disk:1").with_transform(center=3 + 4j, scale=2.0))
        assert sample(moved, 64).centroid() == pytest.approx(3 + 4j, abs=1e-12)

    def test_perturbed_ellipse_default(self):
        sb = sampled("perturbed-ellipse", 128)
        assert sb.areas()[0] > 0

    def test_invalid_shapes(self):
        """Non-positive sizes, self-intersecting stars and overlapping unions are rejected"""
        for text in ("disk:-1", "ellipse:2,0", "star:2,2,3", "star:2,0.4,2.5",
                     "union:1,0,0;1,1.5,0", "blob:1", "ellipse:2"):
            with pytest.raises(InvalidShapeError):
                make_shape(parse_shape(text))
        with pytest.raises(InvalidShapeError):
            make_shape(ShapeSpec("disk", {"radius": 1.0}, scale=-1.0))


class TestSampling:
    """Test cases for the trapezoidal boundary sampling"""

    def test_unit_disk_weights_normals_curvature(self):
        sb = sampled("disk:1", 64)
        assert sb.length == pytest.approx(2 * np.pi, rel=1e-12)
        assert np.allclose(np.abs(sb.normals), 1.0, atol=1e-14)
        assert np.allclose(sb.curvature, 1.0, atol=1e-12)
        assert sb.areas()[0] == pytest.approx(np.pi, rel=1e-12)

    def test_quarter_nodes_of_disk(self):
        """Every 4th node of M=16 is the M=4 grid; each quarter carries weight pi/2"""
        sb = sampled("disk:1", 16)
        assert np.allclose(sb.nodes[::4], [1, 1j, -1, -1j], atol=1e-15)
        assert np.allclose(sb.normals[::4], sb.nodes[::4], atol=1e-15)
        assert np.allclose(sb.weights.reshape(4, 4).sum(axis=1), np.pi / 2, atol=1e-14)

    def test_ellipse_perimeter_and_curvature(self):
        sb = sampled("ellipse:2,1", 512)
        assert sb.length == pytest.approx(ELLIPSE_PERIMETER, rel=1e-10)
        assert sb.nodes[0] == pytest.approx(2.0)
        assert sb.curvature[0] == pytest.approx(2.0, rel=1e-12)

    def test_outward_orientation(self):
        """Normals point away from the centroid on a convex shape"""
        sb = sampled("ellipse:2,1", 64)
        assert np.all(np.real(np.conj(sb.normals) * (sb.nodes - sb.centroid())) > 0)

    def test_arrays_read_only(self):
        sb = sampled("disk:1", 16)
        with pytest.raises(ValueError):
            sb.nodes[0] = 0

    def test_invalid_resolution(self):
        curve = make_shape(parse_shape("disk:1"))
        for m in (4, 15, 17, 14.5):
            with pytest.raises(InvalidResolutionError):
                sample(curve, m)

    def test_resample(self):
        assert sampled("disk:1", 16).resample(32).size == 32

    @pytest.mark.parametrize("shape", ["ellipse:2,1", "star:2,0.4,3", "kite", "perturbed-ellipse"])
    def test_doubling_resolution_invariants(self, shape):
        """Perimeter, centroid and area agree between M=256 and M=512"""
        coarse, fine = sampled(shape, 256), sampled(shape, 512)
        assert coarse.length == pytest.approx(fine.length, rel=1e-10)
        assert abs(coarse.centroid() - fine.centroid()) < 1e-10
        assert coarse.areas()[0] == pytest.approx(fine.areas()[0], rel=1e-10)

    @pytest.mark.parametrize("radius", [0.5, 1.0, 2.0])
    def test_disk_area(self, radius):
        assert sampled(f"disk:{radius}", 256).areas()[0] == pytest.approx(np.pi * radius ** 2, abs=1e-10)

    def test_full_turn_rotation(self):
        """ellipse rotated by 30 and by 390 degrees has the same nodes"""
        a, b = sampled("ellipse:2,1,0,0,30", 64), sampled("ellipse:2,1,0,0,390", 64)
        assert np.allclose(a.nodes, b.nodes, atol=1e-13)
        assert np.allclose(a.normals, b.normals, atol=1e-13)

    def test_component_perimeters(self):
        sb = sampled("union:1,-3,0;0.5,2,0", 64)
        assert np.allclose(sb.perimeters(), [2 * np.pi, np.pi], rtol=1e-12)
        assert sb.perimeters().sum() == pytest.approx(sb.length, rel=1e-14)
        assert np.array_equal(np.bincount(sb.component_of), [64, 64])


class TestLayerPotentials:
    """Test cases for the Nyström K* and S matrices"""

    def test_unit_disk_np_entries(self):
        """On the unit circle every entry equals w_j/(4 pi)"""
        sb = sampled("disk:1", 32)
        k = assemble_np(sb)
        assert np.allclose(k.entries, sb.weights[None, :] / (4 * np.pi), atol=1e-15)
        assert np.allclose(k.apply(np.ones(32)), 0.5, atol=1e-14)

    def test_np_constant_on_scaled_disk(self):
        k = assemble_np(sampled("disk:2", 32))
        assert np.allclose(k.apply(np.ones(32)), 0.5, atol=1e-14)

    def test_weighted_column_sums(self):
        """w^T K* = 1/2 w^T (K of a constant is 1/2)"""
        sb = sampled("ellipse:2,1", 512)
        k = assemble_np(sb)
        assert np.allclose((sb.weights @ k.entries) / sb.weights, 0.5, atol=1e-8)

    def test_disk_mean_zero_spectrum(self):
        assert np.abs(assemble_np(sampled("disk:1", 64)).restricted_eigenvalues()).max() < 1e-12

    @pytest.mark.parametrize("shape", ["ellipse:2,1", "star:2,0.4,3", "kite"])
    def test_mean_zero_spectrum_inside_half(self, shape):
        eigenvalues = assemble_np(sampled(shape, 256)).restricted_eigenvalues()
        assert eigenvalues.size == 255
        assert np.abs(eigenvalues).max() < 0.5

    def test_kress_weights_sum_to_zero(self):
        """The log kernel has zero mean over a period"""
        assert kress_log_weights(64).sum() == pytest.approx(0.0, abs=1e-12)

    def test_single_layer_disk(self):
        sb = sampled("disk:1", 64)
        s = assemble_single_layer(sb)
        assert np.allclose(s.apply(np.ones(64)), 0.0, atol=1e-12)
        assert np.allclose(s.apply(np.cos(sb.t)), -0.5 * np.cos(sb.t), atol=1e-12)
        s2 = assemble_single_layer(sampled("disk:2", 64))
        # R ln R on a circle of radius R
        assert np.allclose(s2.apply(np.ones(64)), 2 * np.log(2.0), atol=1e-12)

    def test_single_layer_symmetric_form(self):
        sb = sampled("kite", 128)
        s = assemble_single_layer(sb)
        form = sb.weights[:, None] * s.entries
        assert np.allclose(form, form.T, atol=1e-12)
        phi = np.cos(2 * sb.t)
        phi = phi - (sb.weights @ phi) / sb.length
        assert s.bilinear(phi, phi) < 0

    def test_single_layer_needs_one_component(self):
        with pytest.raises(UnsupportedGeometryError):
            assemble_single_layer(sampled("union-disks:2", 32))

    def test_calderon_identity(self):
        sb = sampled("ellipse:2,1", 256)
        assert calderon_residual(assemble_single_layer(sb), assemble_np(sb)) < 1e-6


class TestDensitySolve:
    """Test cases for (lambda I - K*) phi = f"""

    def setup_method(self):
        self.sb = sampled("disk:1", 64)
        self.k = assemble_np(self.sb)

    def test_disk_solutions(self):
        """K* annihilates mean-zero densities on a circle, so phi = f / lambda"""
        t = self.sb.t
        assert np.allclose(solve_density(self.k, -0.5, np.cos(t)), -2 * np.cos(t), atol=1e-12)
        assert np.allclose(solve_density(self.k, -0.5, np.sin(3 * t)), -2 * np.sin(3 * t), atol=1e-12)
        assert np.allclose(solve_density(self.k, -0.5, np.zeros(64)), 0.0)

    def test_threaded_columns_match(self):
        sb = sampled("star:2,0.4,3", 128)
        solver = DensitySolver(assemble_np(sb), -0.5)
        rhs = np.column_stack([normal_gradient(n, "c", sb) for n in range(1, 5)])
        assert np.allclose(solver.solve(rhs, workers=3), solver.solve(rhs), atol=1e-13)

    def test_rhs_with_mean_rejected(self):
        with pytest.raises(InvalidRhsError):
            solve_density(self.k, -0.5, np.ones(64))
        with pytest.raises(InvalidRhsError):
            solve_density(self.k, -0.5, np.zeros(10))

    def test_resonant_lambda_rejected(self):
        with pytest.raises(ResonanceError):
            DensitySolver(self.k, 0.25)

    def test_spectral_convergence(self):
        """Doubling M from 64 to 128 cuts the density error by well over 10x on a slender ellipse"""
        def density(m):
            sb = sampled("ellipse:5,0.5", m)
            return solve_density(assemble_np(sb), -0.5, normal_gradient(1, "c", sb))

        reference = density(512)
        errors = [np.abs(density(m) - reference[:: 512 // m]).max() for m in (64, 128)]
        assert errors[0] > 0
        assert errors[1] < errors[0] / 10


class TestHarmonics:
    """Test cases for harmonic polynomials and sources"""

    def test_polynomials(self):
        point = np.array([0.3, 0.7])
        assert harmonic_poly(1, "c", point) == pytest.approx(0.3)
        assert harmonic_poly(2, "s", point) == pytest.approx(2 * 0.3 * 0.7)
        with pytest.raises(ValueError):
            harmonic_poly(1, "x", point)

    def test_normal_gradient_on_circle(self):
        sb = sampled("disk:2", 64)
        for n in (1, 2, 3):
            expected = n * 2.0 ** (n - 1) * np.cos(n * sb.t)
            assert np.allclose(normal_gradient(n, "c", sb), expected, atol=1e-12)

    def test_normal_gradient_has_zero_mean(self):
        sb = sampled("star:2,0.4,3", 256)
        for n in range(1, 6):
            for kind in "cs":
                f = normal_gradient(n, kind, sb)
                assert abs(sb.weights @ f) / sb.length < 1e-10

    def test_source_alpha(self):
        source = HarmonicSource(cos=[1.0, 2.0], sin=[0.0, 3.0])
        assert np.allclose(source.alpha(), [1.0, 2.0 - 3.0j])
        assert np.allclose(source.alpha(3), [1.0, 2.0 - 3.0j, 0.0])
        assert source.evaluate(0.5 + 0.5j)[0] == pytest.approx(2.0)

    def test_material_lambda(self):
        assert material_lambda(0) == -0.5
        assert material_lambda(3) == pytest.approx(1.0)
        for k in (1.0, -0.5):
            with pytest.raises(InvalidConductivityError):
                material_lambda(k)


class TestGpt:
    """Test cases for contracted GPTs and the gamma tensors"""

    @pytest.mark.parametrize("radius", [0.5, 1.0, 2.0])
    def test_disk_insulating(self, radius):
        """M^cc_nn = M^ss_nn = -2 pi n R^2n, every other entry 0"""
        gpt = gpt_of(f"disk:{radius}", 128, 4)
        n = np.arange(1, 5)
        expected = np.diag(-2 * np.pi * n * radius ** (2 * n))
        scale = np.abs(expected).max()
        assert np.abs(gpt.cc - expected).max() < 1e-6 * scale
        assert np.abs(gpt.ss - expected).max() < 1e-6 * scale
        assert np.abs(gpt.cs).max() < 1e-10 * scale
        assert np.abs(gpt.sc).max() < 1e-10 * scale

    def test_disk_conducting(self):
        """k=3 gives lambda=1 and M_nn = pi n R^2n / lambda"""
        gpt = gpt_of("disk:1", 64, 3, k=3.0)
        assert np.allclose(np.diag(gpt.cc), np.pi * np.arange(1, 4), rtol=1e-10)
        assert np.abs(gpt.cs).max() < 1e-10

    def test_block_symmetry(self):
        for shape in ("ellipse:2,1", "star:2,0.4,3", "kite"):
            assert gpt_of(shape, 512, 6).symmetry_error() < 1e-6

    def test_disk_gamma(self):
        gamma = gamma_tables(gpt_of("disk:2", 128, 4))
        assert gamma.g2(1, 1) == pytest.approx(-4.0, rel=1e-10)
        assert np.abs(gamma.gamma1).max() < 1e-10

    def test_ellipse_gamma(self):
        gamma = gamma_tables(gpt_of("ellipse:2,1", 1024, 6))
        assert gamma.g2(1, 1).real == pytest.approx(-2.25, abs=1e-6)
        assert abs(gamma.g2(1, 1).imag) < 1e-8
        assert gamma.g1(1, 1).real == pytest.approx(0.75, abs=1e-6)

    def test_rotation_keeps_gamma2_11(self):
        base = gamma_tables(gpt_of("kite", 512, 4))
        turned_spec = parse_shape("kite").with_transform(rotation=np.pi / 6)
        turned = gamma_tables(compute_gpt(sample(make_shape(turned_spec), 512), 0.0, 4))
        assert abs(turned.g2(1, 1)) == pytest.approx(abs(base.g2(1, 1)), rel=1e-8)

    def test_multi_component(self):
        gpt = gpt_of("union-disks:2", 64, 3)
        assert gpt.num_components == 2
        assert gpt.symmetry_error() < 1e-6

    def test_table_views(self):
        gpt = gpt_of("ellipse:2,1", 512, 6)
        assert gpt.full().shape == (12, 12)
        assert gpt.entry("c", "c", 1, 1) == gpt.cc[0, 0]
        small = gpt.truncated(2)
        assert np.array_equal(small.ss, gpt.ss[:2, :2])
        assert set(gpt.to_dict()["blocks"]) == {"cc", "cs", "sc", "ss"}
        with pytest.raises(ResolutionInsufficientError):
            gpt.truncated(7)

    def test_order_limits(self):
        sb = sampled("disk:1", 16)
        for order in (0, 3, 25):
            with pytest.raises(ResolutionInsufficientError):
                compute_gpt(sb, 0.0, order)

    def test_scaling(self):
        """disk(1) vs disk(2): entry (1,1) -2pi vs -8pi, entry (2,2) ratio 16"""
        base, scaled = gpt_of("disk:1", 64, 3), gpt_of("disk:2", 64, 3)
        assert base.cc[0, 0] == pytest.approx(-2 * np.pi, rel=1e-10)
        assert scaled.cc[0, 0] == pytest.approx(-8 * np.pi, rel=1e-10)
        assert scaled.cc[1, 1] / base.cc[1, 1] == pytest.approx(16.0, rel=1e-10)
        assert gpt_scaling_check(base, scaled, 2.0).passed
        assert gpt_scaling_check(base, base, 1.0).max_relative_error == 0.0
        assert not gpt_scaling_check(base, base, 2.0).passed

    def test_star_scaling_homogeneity(self):
        base = gpt_of("star:2,0.4,3", 256, 4)
        scaled = compute_gpt(sample(make_shape(parse_shape("star:2,0.4,3").with_transform(scale=1.5)), 256), 0.0, 4)
        assert gpt_scaling_check(base, scaled, 1.5).max_relative_error < 1e-10


class TestExteriorField:
    """Test cases for the perturbed field outside the inclusion"""

    def test_insulated_disk_image_charge(self):
        """h = x around the insulated unit disk gives u = x + x/r^2"""
        sb = sampled("disk:1", 128)
        z = 3.0 * np.exp(1j * np.linspace(0, 2 * np.pi, 9, endpoint=False))
        field = exterior_field(sb, 0.0, HarmonicSource(cos=[1.0]), z)
        expected = z.real + z.real / np.abs(z) ** 2
        assert np.allclose(field.multipole, expected, atol=1e-10)
        assert np.allclose(field.direct, expected, atol=1e-10)
        assert field.beta[0] == pytest.approx(-1.0, abs=1e-10)
        assert np.abs(field.beta[1:]).max() < 1e-10

    def test_constant_background(self):
        sb = sampled("ellipse:2,1", 128)
        field = exterior_field(sb, 0.0, HarmonicSource(a0=2.0), [5.0, 4j])
        assert np.allclose(field.multipole, 2.0)
        assert np.allclose(field.direct, 2.0, atol=1e-12)
        assert np.abs(field.beta).max() == 0.0

    def test_ellipse_multipole_matches_direct(self):
        sb = sampled("ellipse:2,1", 512)
        z = 6.0 * np.exp(1j * np.linspace(0, 2 * np.pi, 16, endpoint=False))
        field = exterior_field(sb, 0.0, HarmonicSource(cos=[1.0]), z, terms=10)
        assert field.beta[0].real == pytest.approx(-1.5, abs=1e-6)
        assert field.discrepancy() < 1e-6

    def test_rotated_kite_mixed_source(self):
        """Without symmetry cs and sc differ, so the multipole field pins their orientation"""
        spec = parse_shape("kite").with_transform(rotation=np.pi / 6)
        sb = sample(make_shape(spec), 512)
        gpt = compute_gpt(sb, 0.0, 12)
        assert np.abs(gpt.cs - gpt.sc).max() > 1e-2
        z = 10.0 * np.exp(1j * np.linspace(0, 2 * np.pi, 16, endpoint=False))
        field = exterior_field(sb, 0.0, HarmonicSource(cos=[1.0], sin=[0.0, 0.5]), z, terms=12, gpt=gpt)
        assert field.discrepancy() < 1e-7

    def test_point_too_close(self):
        with pytest.raises(EvaluationRegionError):
            exterior_field(sampled("disk:1", 64), 0.0, HarmonicSource(cos=[1.0]), [1.2])
