"""PolarMap entrypoint wrapper."""

import sys


def _print_help():
    print(
        """usage: run.py [-h] {gpt,map,validate,eigs} [options]

PolarMap v1.0 - GPTs and exterior conformal maps

commands:
  gpt        compute GPT and gamma tables (gpt.json, gamma.json, boundary.json)
  map        recover the exterior conformal map (mu.json, phiN.csv, phiN.svg)
  validate   run the invariant suite (validation.json; exit 3 on failure)
  eigs       Neumann-Poincare eigenvalues (eigenvalues.csv)

Run `run.py <command> -h` for the shared flags (--shape, --nodes, --k, ...).
"""
    )


def main():
    if len(sys.argv) == 1 or sys.argv[1] in ("-h", "--help"):
        _print_help()
        return 0

    from run_polarmap import main as run_main

    return run_main()


if __name__ == "__main__":
    sys.exit(main())
