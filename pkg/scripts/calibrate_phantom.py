"""Recompute ``load.amplitude_per_radius`` for ``app/resources/phantom/coupling.json``.

Prints the amplitude at which the mid-range reference phantom reaches the
target lamina strain at fragility 1 on the configured grid.

    python scripts/calibrate_phantom.py --target 0.06
"""
import argparse
import logging
import os
import sys

sys.path.append(os.getcwd())

from app.config.settings import settings  # noqa: E402
from app.pipelines.phantom import VolumeGrid, calibrate_amplitude, load_coupling  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--target",
        type=float,
        default=1.5 * settings.strain.threshold,
        help="Lamina strain of the reference phantom at fragility 1",
    )
    parser.add_argument("--formula", default=settings.strain.formula)
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format="%(asctime)s | %(levelname)s | %(message)s")
    coupling = load_coupling(settings.phantom.coupling_file)
    amplitude = calibrate_amplitude(
        args.target,
        VolumeGrid.from_config(settings.phantom),
        coupling,
        formula=args.formula,
    )
    print(f"current amplitude_per_radius: {coupling.load.amplitude_per_radius:.6f}")
    print(f"calibrated amplitude_per_radius: {amplitude:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
