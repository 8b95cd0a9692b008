"""
PolarMap v1.0 - Main Runner
Central orchestrator: shape -> GPTs -> conformal coefficients -> images and checks

Run this file with a subcommand: gpt, map, validate or eigs
"""

import argparse
import logging
import sys
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from modules import __version__
from modules.artifacts import ArtifactStore, complex_pair
from modules.config import RunConfig, build_config
from modules.conformal import (
    boundary_image,
    equivalent_ellipse,
    recover_coefficients,
    vanishing_residuals,
)
from modules.errors import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_VALIDATION,
    ConfigError,
    PolarMapError,
    UnsupportedGeometryError,
)
from modules.geometry import sample
from modules.gpt import BLOCKS, compute_gpt, gamma_tables
from modules.potential import assemble_np, assemble_single_layer
from modules.spectral import np_eigendecomposition
from modules.validate import (
    consistency_identity,
    descriptor_invariants,
    hausdorff_distance,
    run_validation_suite,
)

COMMANDS = ("gpt", "map", "validate", "eigs")


class PolarMap:
    """
    Main PolarMap controller
    Runs one command for one validated RunConfig and writes its artifacts
    """

    def __init__(self, config: RunConfig):
        self.logger = logging.getLogger(__name__)
        self.config = config
        self.curve = config.curve()
        self.store = None

    def _store(self, command: str) -> ArtifactStore:
        provenance = {
            "tool": "polarmap",
            "version": __version__,
            "command": command,
            "config": self.config.to_dict(),
            "config_hash": self.config.config_hash(),
        }
        self.store = ArtifactStore(self.config.out, provenance=provenance)
        return self.store

    def _wants(self, fmt: str) -> bool:
        return fmt in self.config.formats

    def _sample(self):
        sb = sample(self.curve, self.config.nodes)
        print(f"📐 {self.config.spec.describe()}: {sb.num_components} component(s), {sb.size} nodes")
        return sb

    def run(self, command: str) -> int:
        handler = getattr(self, f"cmd_{command}")
        return handler()

    def cmd_gpt(self) -> int:
        """Write gpt.json, gamma.json and boundary.json (and gpt.csv)"""
        store = self._store("gpt")
        cfg = self.config
        sb = self._sample()
        np_matrix = assemble_np(sb)
        if cfg.dump_matrices:
            store.write_matrix("np_matrix.npy", np_matrix.entries)
        gpt = compute_gpt(sb, cfg.k, cfg.gpt_order, workers=cfg.workers, np_matrix=np_matrix)
        gamma = gamma_tables(gpt)
        print(f"🧮 GPT order {gpt.order}: symmetry error {gpt.symmetry_error():.2e}, "
              f"gamma2_11 = {gamma.g2(1, 1).real:.10g}")

        if self._wants("json"):
            store.write_json("gpt.json", gpt.to_dict())
            store.write_json("gamma.json", gamma.to_dict())
            store.write_json("boundary.json", sb.to_dict())
        if self._wants("csv"):
            rows = [
                {"block": name, "m": m + 1, "n": n + 1, "value": gpt.block(name)[m, n]}
                for name in BLOCKS
                for m in range(gpt.order)
                for n in range(gpt.order)
            ]
            store.write_csv("gpt.csv", pd.DataFrame(rows, columns=["block", "m", "n", "value"]))
        return EXIT_OK

    def cmd_map(self) -> int:
        """Write mu.json, phi{N}.csv and phi{N}.svg for each truncation order"""
        cfg = self.config
        if not self.curve.is_simply_connected:
            raise UnsupportedGeometryError(
                f"map needs a simply connected shape; {cfg.spec.describe()} has "
                f"{self.curve.num_components} components"
            )
        if cfg.k != 0:
            self.logger.warning(f"Conformal recovery assumes an insulating inclusion (k=0); running with k={cfg.k}")
        store = self._store("map")
        sb = self._sample()
        gpt = compute_gpt(sb, cfg.k, cfg.gpt_order, workers=cfg.workers)
        gamma = gamma_tables(gpt)
        top = max(cfg.truncation)
        coeffs = recover_coefficients(gamma, top)
        print(f"🗺️  c = {coeffs.c:.10g}, mu_0 = {coeffs.mu[0]:.6g}")

        boundary = self.curve.points(cfg.samples)
        components = [boundary]
        diameter = self.curve.diameter()
        hausdorff: Dict[str, float] = {}
        for n in cfg.truncation:
            theta, image = boundary_image(coeffs.truncated(n), cfg.samples)
            d = hausdorff_distance(image, boundary)
            hausdorff[str(n)] = d
            print(f"  N={n}: Hausdorff {d:.3e} ({100 * d / diameter:.4f}% of diameter)")
            if self._wants("csv"):
                frame = pd.DataFrame({"theta": theta, "re": image.real, "im": image.imag})
                store.write_csv(f"phi{n}.csv", frame)
            if self._wants("svg"):
                store.write_svg(f"phi{n}.svg", components, image)

        if self._wants("json"):
            moduli, phases = descriptor_invariants(coeffs)
            lhs, rhs = consistency_identity(gamma) if gamma.order >= 3 else (None, None)
            payload = coeffs.to_dict()
            payload.update({
                "mu_minus_1": float(coeffs.c),
                "equivalent_ellipse": equivalent_ellipse(coeffs).to_dict(),
                "descriptors": {
                    "ratios": [complex_pair(v) for v in coeffs.mu[1:] / coeffs.c],
                    "moduli": moduli.tolist(),
                    "relative_phases": phases.tolist(),
                },
                "hausdorff": hausdorff,
                "diameter": diameter,
                "vanishing_residuals": vanishing_residuals(coeffs, gamma).tolist(),
                "consistency_identity": None if lhs is None else {"lhs": complex_pair(lhs), "rhs": complex_pair(rhs)},
            })
            store.write_json("mu.json", payload)
        return EXIT_OK

    def cmd_validate(self) -> int:
        """Write validation.json; exit 3 when a mandatory check fails"""
        cfg = self.config
        store = self._store("validate")
        print(f"🔍 Validating {cfg.spec.describe()} at {cfg.nodes} nodes")
        report = run_validation_suite(cfg.spec, nodes=cfg.nodes, k=cfg.k, order=cfg.gpt_order,
                                      truncation=cfg.truncation, samples=cfg.samples, workers=cfg.workers)
        store.write_json("validation.json", report.to_dict())
        if self._wants("csv"):
            store.write_csv("validation.csv", report.to_frame())
        print(report.to_table())
        if report.passed:
            print("✅ All mandatory checks passed")
            return EXIT_OK
        names = ", ".join(c.name for c in report.failures)
        print(f"❌ Failed: {names}")
        self.logger.error(f"Validation failed: {names}")
        return EXIT_VALIDATION

    def cmd_eigs(self) -> int:
        """Write eigenvalues.csv (j, lambda_j, 1/lambda_j)"""
        cfg = self.config
        store = self._store("eigs")
        sb = self._sample()
        np_matrix = assemble_np(sb)
        sl = assemble_single_layer(sb)
        if cfg.dump_matrices:
            store.write_matrix("np_matrix.npy", np_matrix.entries)
            store.write_matrix("single_layer.npy", sl.entries)
        spec = np_eigendecomposition(np_matrix, sl, count=cfg.mode_count)
        frame = pd.DataFrame({
            "j": np.arange(1, spec.count + 1),
            "lambda": spec.eigenvalues,
            "fredholm": spec.fredholm(),
        })
        store.write_csv("eigenvalues.csv", frame)
        if self._wants("json"):
            store.write_json("eigenvalues.json", spec.to_dict())
        if spec.count:
            print(f"🎼 {spec.count} eigenvalues, largest |lambda| = {abs(spec.eigenvalues[0]):.10g}")
        return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="key=value config file (flag names as keys)")
    shared.add_argument("--shape", help="e.g. disk:1, ellipse:2,1, star:2,0.4,3, kite, union-disks:2")
    shared.add_argument("--nodes", help="nodes per boundary component (default 3072)")
    shared.add_argument("--k", help="inclusion conductivity, k=0 insulating (default 0)")
    shared.add_argument("--order", help="GPT order (default max(6, truncation))")
    shared.add_argument("--truncation", help="comma-separated map truncation orders (default 1..min(6, order))")
    shared.add_argument("--modes", help="NP modes kept by eigs, or 'all' (default min(64, nodes/4))")
    shared.add_argument("--out", help="output directory (default output)")
    shared.add_argument("--format", dest="formats", help="comma-separated subset of json,csv,svg")
    shared.add_argument("--center", help="translate the shape to x,y")
    shared.add_argument("--rotation", help="rotate the shape (degrees)")
    shared.add_argument("--scale", help="scale the shape")
    shared.add_argument("--samples", help="dense samples for images and Hausdorff distances (default 2048)")
    shared.add_argument("--workers", help="threads for the GPT right-hand-side solves (default 1)")
    shared.add_argument("--dump-matrices", action="store_true", default=None, help="save K* (and S) as .npy")
    shared.add_argument("--verbose", "-v", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="polarmap",
        description=f"PolarMap v{__version__} - GPTs and exterior conformal maps",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="{gpt,map,validate,eigs}")
    sub.add_parser("gpt", parents=[shared], help="compute GPT and gamma tables")
    sub.add_parser("map", parents=[shared], help="recover the exterior conformal map")
    sub.add_parser("validate", parents=[shared], help="run the invariant suite")
    sub.add_parser("eigs", parents=[shared], help="Neumann-Poincare eigenvalues")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for PolarMap"""
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logger = logging.getLogger("polarmap")

    overrides = {
        key: getattr(args, key)
        for key in ("shape", "nodes", "k", "order", "truncation", "modes", "out", "formats",
                    "center", "rotation", "scale", "samples", "workers", "dump_matrices")
    }
    try:
        config = build_config(overrides, args.config)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        print(f"❌ {e}")
        return EXIT_CONFIG

    try:
        return PolarMap(config).run(args.command)
    except PolarMapError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"❌ {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
