"""Compare box-counting estimates with the growth-rate bounds on a
dissipative Henon map.  Takes about a minute.

Run:  python3 demos/dimension_bounds.py
"""
from pathlib import Path

from polyauto import dimension as dl
from polyauto.config import load_config
from polyauto.filtration import default_regions
from polyauto.orbits import census_through
from polyauto.thermo import bowen_ruelle_root, hyperbolicity_heuristic, upper_bound_jpm

cfg = load_config(Path(__file__).resolve().parents[1] / "configs" / "attracting.json")
m = cfg.map
fs = default_regions(m, cfg.radius)
cs = census_through(m, 7, cfg.radius, grid=cfg.census.get("grid", 200),
                    complex_seeds=cfg.census.get("complex_seeds", 0), seed=cfg.seed)

saddles = dl.sample_julia(m, fs, "saddles", censuses=cs).points
sp = dl.growth_rate(m, saddles, 12, "plus").s
sm = dl.growth_rate(m, saddles, 12, "minus").s
print(f"{len(saddles)} saddle points; s+ = {sp:.3f}, s- = {sm:.3f}")

boundary = dl.sample_julia(m, fs, "boundary").points
dims = {
    "J": dl.box_dimension(boundary).slope,
    "Kminus": dl.box_dimension(indicator=dl.filled_indicator(m, fs, "minus"),
                               window=dl.v_window(m, fs), scales=range(2, 8)).slope,
}
hyp = hyperbolicity_heuristic(m, saddles)
jpm = upper_bound_jpm(m, cs[7], sp, sm)
report = dl.bound_report(m, dims, sp, sm, jpm, hyp.ok)
for row in report.rows():
    print(f"  {row['key']:32s} {row['value']!s:>22s}  {row['flag'] or ''}")

tu = bowen_ruelle_root(cs, "unstable", 7)
ts = bowen_ruelle_root(cs, "stable", 7)
print(f"t^u = {tu.t:.4f}, t^s = {ts.t:.4f}")
