"""Walk through the real horseshoe p(y) = y^2 - 6, a = 1.

Run:  python3 demos/horseshoe_tour.py
"""
import math
from pathlib import Path

import numpy as np

from polyauto.config import load_config
from polyauto.filtration import default_regions, verify_filtration
from polyauto.green import green_batch
from polyauto.maps import eval_forward
from polyauto.orbits import census_through
from polyauto.thermo import entropy_estimate

cfg = load_config(Path(__file__).resolve().parents[1] / "configs" / "horseshoe.json")
m = cfg.map
print(f"degree {m.degree}, determinant {m.det}, filtration radius {cfg.radius}")

# The filtration: forward orbits that reach V- never come back.
rep = verify_filtration(m, default_regions(m, cfg.radius), 20_000, seed=cfg.seed)
print(f"filtration check: {rep.violations} violations in {rep.samples} samples")

# Every periodic point of this map is a saddle; there are 2^k of period dividing k.
cs = census_through(m, 6, cfg.radius, grid=200, seed=cfg.seed)
for k, c in cs.items():
    print(f"  k={k}: #Fix(f^k) = {c.fix_count:3d}  saddles = {c.saddle_fix_count}")

ent = entropy_estimate(m, cs, 6)
print(f"entropy estimate h_6 = {ent.h[-1]:.15f}   (log 2 = {math.log(2):.15f})")

# G+ vanishes on bounded orbits and doubles under f elsewhere.
p = np.array([[0.5 + 2j, -1.0]])
g0, g1 = green_batch(m, p).value[0], green_batch(m, eval_forward(m, p)).value[0]
print(f"G+(p) = {g0:.6f}, G+(f p) = {g1:.6f}, ratio {g1 / g0:.6f}")
print(f"G+ on the period-6 saddles: max {green_batch(m, cs[6].points()).value.max()}")
