"""Number of localized regions in the phase map under threshold and ladder variations."""

import argparse
import itertools
from dataclasses import dataclass, field

import numpy as np

from quasiwqed.analysis import default_map_sizes, offset_grid, phase_map
from quasiwqed.model import LatticeSpec


@dataclass
class Sensitivity:
    delta_grid: np.ndarray = field(default_factory=lambda: np.linspace(0.0, 0.5, 21))
    omega_rel_grid: np.ndarray = field(default_factory=lambda: offset_grid(-8.2, 8.0, 0.2))
    s_min: tuple = (5e-4, 1e-3, 2e-3)
    r_min: tuple = (0.8, 0.9, 0.95)
    ladders: tuple = ((21, 987), (34, 987), (21, 1597), (55, 2584))


def main():
    argparse.ArgumentParser(description=__doc__).parse_args()
    cfg = Sensitivity()
    for lo, hi in cfg.ladders:
        sizes = default_map_sizes(hi)
        sizes = [n for n in sizes if n >= lo]
        pm = phase_map(LatticeSpec(hi), cfg.delta_grid, cfg.omega_rel_grid, sizes)
        counts = [len(pm.regions(s, r)) for s, r in itertools.product(cfg.s_min, cfg.r_min)]
        print(f"sizes {sizes[0]}..{sizes[-1]}: regions per (s_min, r_min) variant {counts}")
        for reg in pm.regions():
            print(f"    {reg}")


if __name__ == "__main__":
    main()
