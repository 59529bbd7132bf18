"""Basins of the attracting Henon map (c = -0.1, a = 0.3), drawn as a PGM.

Run:  python3 demos/attracting_basins.py [out.pgm]
"""
import sys
from pathlib import Path

import numpy as np

from polyauto.config import load_config
from polyauto.filtration import default_regions
from polyauto.io import write_pgm
from polyauto.orbits import basin_map, find_attracting_cycles

cfg = load_config(Path(__file__).resolve().parents[1] / "configs" / "attracting.json")
m = cfg.map
fs = default_regions(m, cfg.radius)

seeds = np.random.default_rng(cfg.seed).uniform(-2, 2, (400, 2))
cycles = find_attracting_cycles(m, 8, seeds)
for cyc in cycles:
    print(f"attracting cycle of period {cyc.period} through {np.round(cyc.rep, 6)}")

grid = basin_map(m, fs, (-2, 2, -2, 2), 256, 200, cycles=cycles)
for name, n in grid.counts().items():
    if n:
        print(f"  {name:22s} {n:6d} cells")

out = Path(sys.argv[1] if len(sys.argv) > 1 else "basins.pgm")
write_pgm(out, grid.image())
print(f"wrote {out} (black: basin, white: escapes)")
