"""Command-line front end.

Every subcommand reads a JSON map config, writes CSV artifacts (plus a
graymap where it makes sense) into ``--out`` and finishes with
``manifest.json``.  Exit codes: 0 success, 2 usage error, 3 malformed
config, 4 a numerical hypothesis failed (for example no pressure bracket or
filtration violations).
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import dimension as dl
from . import thermo
from .config import ConfigError, ExperimentConfig, load_config
from .filtration import FiltrationError, FiltrationSpec, choose_radius, default_regions, verify_filtration
from .green import GreenError, green_batch
from .io import write_csv, write_manifest, write_pgm
from .maps import HenonComposition, MapError, henon
from .orbits import basin_map, census_through, find_attracting_cycles

EXIT_USAGE, EXIT_CONFIG, EXIT_NUMERIC = 2, 3, 4
NUMERIC_ERRORS = (thermo.ThermoError, FiltrationError, dl.DimensionError, GreenError, MapError)


class HypothesisFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# shared helpers


def _range(text: str) -> range:
    """``a:b`` -> levels a..b inclusive."""
    a, b = (int(x) for x in text.split(":"))
    return range(a, b + 1)


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _t_grid(text: str) -> np.ndarray:
    a, b, n = text.split(":")
    return np.linspace(float(a), float(b), int(n))


def _window(text: str) -> tuple[float, float, float, float]:
    vals = tuple(float(x) for x in text.split(","))
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("window needs x0,x1,y0,y1")
    return vals


class Run:
    def __init__(self, args, cfg: ExperimentConfig):
        self.args = args
        self.cfg = cfg
        self.m = cfg.map
        self.seed = args.seed if args.seed is not None else cfg.seed
        self.workers = args.workers
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []
        self._fs = None

    def csv(self, name, rows, fields=None):
        self.files.append(write_csv(self.out / name, rows, fields))

    def pgm(self, name, img):
        self.files.append(write_pgm(self.out / name, img))

    @property
    def fs(self) -> FiltrationSpec:
        if self._fs is None:
            if self.cfg.radius is not None:
                self._fs = default_regions(self.m, self.cfg.radius)
            else:
                self._fs = choose_radius(self.m, seed=self.seed, workers=self.workers)
        return self._fs

    def censuses(self, k_max):
        c = self.cfg.census
        return census_through(self.m, k_max, self.fs.radius, grid=c.get("grid", 200),
                              complex_seeds=c.get("complex_seeds", 0), seed=self.seed,
                              workers=self.workers)


def _re_im(prefix, z):
    out = {}
    for i, v in enumerate(z):
        out[f"{prefix}{i}_re"] = float(v.real)
        out[f"{prefix}{i}_im"] = float(v.imag)
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_info(run: Run):
    summary = run.m.summary()
    for k, v in summary.items():
        print(f"{k}={v}")
    run.csv("info.csv", [{"key": k, "value": v} for k, v in summary.items()], ["key", "value"])


def cmd_filtration_verify(run: Run):
    a = run.args
    anchors = None
    if a.anchor_period:
        anchors = run.censuses(a.anchor_period)[a.anchor_period].points()
    rep = verify_filtration(run.m, run.fs, samples=a.samples, iters=a.iters, seed=run.seed,
                            anchors=anchors, workers=run.workers)
    run.csv("filtration.csv", rep.rows(), ["property", "samples", "violations", "witness"])
    run.csv("filtration_summary.csv", [{"radius": rep.radius, "samples": rep.samples,
                                        "violations": rep.violations,
                                        "max_escape_steps": rep.max_escape_steps}])
    print(f"radius={rep.radius} samples={rep.samples} violations={rep.violations}")
    if not rep.ok:
        raise HypothesisFailure(f"filtration violated at radius {rep.radius}: "
                                f"{rep.violations} violations")


def _grid_rows(bg):
    return list(bg.rows())


def cmd_classify_grid(run: Run):
    a = run.args
    bg = basin_map(run.m, run.fs, a.window, a.grid, a.budget, workers=run.workers)
    run.csv("classify.csv", _grid_rows(bg), ["x", "y", "class", "cycle", "k"])
    run.csv("classify_counts.csv", [{"class": k, "count": v} for k, v in bg.counts().items()])
    run.pgm("classify.pgm", bg.image())
    print(" ".join(f"{k}={v}" for k, v in bg.counts().items()))


def cmd_basins(run: Run):
    a = run.args
    x0, x1, y0, y1 = a.window
    g = np.linspace(x0, x1, 48)
    h = np.linspace(y0, y1, 48)
    X, Y = np.meshgrid(g, h)
    seeds = np.zeros((X.size, run.m.n), dtype=complex)
    seeds[:, 0], seeds[:, 1] = X.ravel(), Y.ravel()
    cycles = find_attracting_cycles(run.m, a.period, seeds)
    bg = basin_map(run.m, run.fs, a.window, a.grid, a.budget, cycles=cycles, workers=run.workers)
    run.csv("cycles.csv", [{"cycle": i, "period": c.period, **_re_im("z", c.rep),
                            "max_multiplier": float(np.abs(c.multipliers).max())}
                           for i, c in enumerate(cycles)])
    run.csv("basins.csv", _grid_rows(bg), ["x", "y", "class", "cycle", "k"])
    run.csv("basins_counts.csv", [{"class": k, "count": v} for k, v in bg.counts().items()])
    run.pgm("basins.pgm", bg.image())
    print(f"attracting cycles={len(cycles)} " + " ".join(f"{k}={v}" for k, v in bg.counts().items()))


def cmd_periodic(run: Run):
    cs = run.censuses(run.args.period)
    rows, summary = [], []
    for k, c in cs.items():
        summary.append({"k": k, "fixed_points": c.fix_count, "target": c.target,
                        "saddle_fixed_points": c.saddle_fix_count, "cycles": len(c.orbits),
                        "indeterminate": c.indeterminate,
                        "splits": " ".join(map(str, c.splits))})
        for i, o in enumerate(c.orbits):
            rows.append({"k": k, "cycle": i, "period": o.period, "stability": o.stability.value,
                         "unstable_index": o.unstable_index, **_re_im("z", o.rep),
                         "multiplier_moduli": " ".join(repr(float(x)) for x in np.abs(o.multipliers)),
                         "residual": o.residual})
        print(f"k={k} fixed_points={c.fix_count} target={c.target} saddles={c.saddle_fix_count}")
    run.csv("census.csv", summary)
    run.csv("periodic.csv", rows)


def cmd_green(run: Run):
    a = run.args
    x0, x1, y0, y1 = a.window
    n = a.grid
    xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
    ys = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
    X, Y = np.meshgrid(xs, ys)
    P = np.zeros((X.size, run.m.n), dtype=complex)
    P[:, 0], P[:, 1] = X.ravel(), Y.ravel()
    gp = green_batch(run.m, P, a.budget, forward=True, workers=run.workers)
    gm = green_batch(run.m, P, a.budget, forward=False, workers=run.workers)
    rows = []
    for i in range(len(P)):
        rows.append({"x": float(P[i, 0].real), "y": float(P[i, 1].real),
                     "G_plus": gp.value[i], "G_minus": gm.value[i],
                     "err_plus": gp.error[i], "err_minus": gm.error[i],
                     "escaped_plus": bool(gp.escaped[i]), "escaped_minus": bool(gm.escaped[i])})
    run.csv("green.csv", rows)
    img = gp.value.reshape(n, n)
    top = img.max()
    levels = np.zeros_like(img) if top == 0 else np.round(255 * img / top)
    run.pgm("green.pgm", levels.astype(np.uint8)[::-1])


def _julia(run: Run, strategy: str, k_max: int, cs=None):
    if strategy == "saddles":
        cs = cs or run.censuses(k_max)
        return dl.sample_julia(run.m, run.fs, "saddles", censuses=cs, k_max=k_max).points
    return dl.sample_julia(run.m, run.fs, "boundary").points


def cmd_boxdim(run: Run):
    a = run.args
    scales = a.scales or (range(2, 8) if a.strategy in ("kminus", "kplus", "k") else range(3, 10))
    fit = (a.fit_window.start, a.fit_window.stop - 1) if a.fit_window else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if a.strategy in ("saddles", "boundary"):
            pts = _julia(run, a.strategy, a.kmax)
            res = dl.box_dimension(pts, scales=scales, fit=fit, target="J")
        else:
            which = {"kminus": "minus", "kplus": "plus", "k": "both"}[a.strategy]
            res = dl.box_dimension(indicator=dl.filled_indicator(run.m, run.fs, which),
                                   window=dl.v_window(run.m, run.fs), scales=scales, fit=fit,
                                   target={"minus": "Kminus", "plus": "Kplus", "both": "K"}[which])
    run.csv("boxdim.csv", res.rows(), ["scale", "count"])
    lo, hi = res.fit_window
    run.csv("boxdim_fit.csv", [{"target": res.target, "strategy": a.strategy, "slope": res.slope,
                                "residual": res.residual, "fit_from": float(res.eps[lo]),
                                "fit_to": float(res.eps[hi]), "source": res.source}])
    print(f"boxdim({res.target})={res.slope:.6f} residual={res.residual:.3g}")


def cmd_growth(run: Run):
    a = run.args
    pts = _julia(run, a.strategy, a.period)
    rows, summary = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for direction in ("plus", "minus"):
            fs = run.fs if a.strategy == "boundary" else None
            g = dl.growth_rate(run.m, pts, a.kmax, direction, fs, samples=a.strategy)
            rows += [{"direction": direction, **r} for r in g.rows()]
            summary.append({"direction": direction, "s": g.s, "dropped": g.dropped,
                            "samples": len(pts)})
            print(f"s_{direction}={g.s:.6f}")
    run.csv("growth.csv", rows, ["direction", "k", "s_k"])
    run.csv("growth_summary.csv", summary)


def cmd_pressure(run: Run):
    a = run.args
    cs = run.censuses(a.kmax)
    curve = thermo.pressure_curve(cs[a.kmax], a.t_grid, a.weight)
    run.csv("pressure.csv", curve.rows(), ["t", "P"])
    ent = thermo.entropy_estimate(run.m, cs, a.kmax)
    run.csv("entropy.csv", ent.rows(), ["k", "count", "h"])
    root = thermo.bowen_ruelle_root(cs, a.weight, a.kmax)
    run.csv("roots.csv", root.rows(), ["k", "t"])
    run.csv("root_summary.csv", [{"weight": a.weight, "k": root.k, "t": root.t,
                                  "residual": root.residual, "last_delta": root.last_delta}])
    print(f"t_{a.weight}={root.t:.10f} k={root.k} last_delta={root.last_delta}")


def cmd_dims(run: Run):
    a = run.args
    m, fs = run.m, run.fs
    cs = run.censuses(a.kmax)
    J = dl.sample_julia(m, fs, "saddles", censuses=cs).points
    try:
        cloud = dl.sample_julia(m, fs, "boundary").points
        source = "boundary"
    except dl.DimensionError:
        cloud, source = J, "saddles"
    rows = [{"key": "sample.J", "value": len(cloud), "flag": source}]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        measured = {"J": dl.box_dimension(cloud, scales=a.scales or range(3, 10)).slope}
        gp = dl.growth_rate(m, J, a.growth_k, "plus")
        gm = dl.growth_rate(m, J, a.growth_k, "minus")
        if m.volume_decreasing:
            measured["Kminus"] = dl.box_dimension(
                indicator=dl.filled_indicator(m, fs, "minus"), window=dl.v_window(m, fs),
                scales=range(2, 8)).slope
    hyp = thermo.hyperbolicity_heuristic(m, J)
    rows.append({"key": "heuristic.hyperbolic", "value": hyp.ok, "flag": "heuristic"})
    rows.append({"key": "heuristic.worst_gap", "value": hyp.worst_gap, "flag": "heuristic"})
    rows.append({"key": "heuristic.index", "value": hyp.index, "flag": "heuristic"})
    for weight, key in (("unstable", "t_u"), ("stable", "t_s")):
        try:
            r = thermo.bowen_ruelle_root(cs, weight, a.kmax)
            rows.append({"key": key, "value": r.t, "flag": f"k={r.k}"})
        except thermo.ThermoError as e:
            rows.append({"key": key, "value": "", "flag": str(e)})
    jpm = None
    if hyp.ok:
        try:
            jpm = thermo.upper_bound_jpm(m, cs[a.kmax], gp.s, gm.s)
        except thermo.ThermoError as e:
            rows.append({"key": "upper_Jpm.error", "value": "", "flag": str(e)})
    rep = dl.bound_report(m, measured, gp.s, gm.s, jpm, hyp.ok)
    rows = rep.rows() + rows
    run.csv("dims.csv", rows, ["key", "value", "flag"])
    for r in rows:
        print(f"{r['key']}={r['value']} [{r['flag']}]")


def cmd_sweep(run: Run):
    a = run.args
    fam = run.m.family
    if not (isinstance(fam, HenonComposition) and len(fam.stages) == 1
            and fam.stages[0].p.degree == 2):
        raise HypothesisFailure("sweep needs a single quadratic Henon stage in the config")
    st = fam.stages[0]
    c0, a0 = st.p.coeffs[0], st.a
    lead = st.p.coeffs[2]
    if lead != 1 or st.p.coeffs[1] != 0:
        raise HypothesisFailure("sweep expects p(y) = y^2 + c")
    params = np.linspace(a.start, a.stop, a.steps)

    def build(v):
        return henon(v, a0) if a.param == "c" else henon(c0, v)

    radius = run.cfg.radius

    def fs_for(m):
        return default_regions(m, radius) if radius else choose_radius(m, samples=4000, seed=run.seed)

    cen = run.cfg.census

    def census(m, fs):
        return census_through(m, a.kmax, fs.radius, grid=cen.get("grid", 200),
                              complex_seeds=cen.get("complex_seeds", 0), seed=run.seed,
                              workers=run.workers)

    res = dl.dimension_sweep(build, params, a.kmax, radius=fs_for, census=census)
    run.csv("sweep.csv", res.rows())
    flagged = sum(s.flagged for s in res.steps)
    print(f"steps={len(res.steps)} flagged={flagged}")


COMMANDS = {
    "info": cmd_info,
    "filtration-verify": cmd_filtration_verify,
    "classify-grid": cmd_classify_grid,
    "basins": cmd_basins,
    "periodic": cmd_periodic,
    "green": cmd_green,
    "boxdim": cmd_boxdim,
    "growth": cmd_growth,
    "pressure": cmd_pressure,
    "dims": cmd_dims,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON map/experiment config")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (overrides config)")
    common.add_argument("--workers", type=_positive, default=1)
    common.add_argument("--out", default="out", help="output directory")

    p = argparse.ArgumentParser(prog="polyauto", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    add("info", "degrees, regularity index, determinant, indeterminacy sets")
    s = add("filtration-verify", "Monte Carlo check of the filtration")
    s.add_argument("--samples", type=_positive, default=100_000)
    s.add_argument("--iters", type=_positive, default=40)
    s.add_argument("--anchor-period", type=int, default=0,
                   help="seed K+- samples near periodic points of this period (0: none)")
    for name, hlp in (("classify-grid", "escape/bounded verdicts on a real grid"),
                      ("basins", "basins of attracting cycles on a real grid")):
        s = add(name, hlp)
        s.add_argument("--grid", type=_positive, default=256)
        s.add_argument("--budget", type=_positive, default=200)
        s.add_argument("--window", type=_window, default=(-2.0, 2.0, -2.0, 2.0))
        if name == "basins":
            s.add_argument("--period", type=_positive, default=8, help="largest cycle period searched")
    s = add("periodic", "census of periodic points through a period")
    s.add_argument("--period", type=_positive, default=6)
    s = add("green", "G+ and G- on a real grid")
    s.add_argument("--grid", type=_positive, default=128)
    s.add_argument("--budget", type=_positive, default=200)
    s.add_argument("--window", type=_window, default=(-4.0, 4.0, -4.0, 4.0))
    s = add("boxdim", "box-counting dimension")
    s.add_argument("--strategy", choices=["saddles", "boundary", "kminus", "kplus", "k"],
                   default="saddles")
    s.add_argument("--kmax", type=_positive, default=8, help="largest period for saddle samples")
    s.add_argument("--scales", type=_range, default=None, help="dyadic levels a:b")
    s.add_argument("--fit-window", type=_range, default=None, help="fit levels a:b")
    s = add("growth", "growth rates s+ and s-")
    s.add_argument("--kmax", type=_positive, default=12)
    s.add_argument("--period", type=_positive, default=6, help="census depth for saddle samples")
    s.add_argument("--strategy", choices=["saddles", "boundary"], default="saddles")
    s = add("pressure", "pressure curve, Bowen-Ruelle root and entropy")
    s.add_argument("--kmax", type=_positive, default=6)
    s.add_argument("--weight", choices=list(thermo.WEIGHTS), default="unstable")
    s.add_argument("--t-grid", type=_t_grid, default=np.linspace(0.0, 2.0, 51))
    s = add("dims", "full dimension report")
    s.add_argument("--kmax", type=_positive, default=7)
    s.add_argument("--growth-k", type=_positive, default=12)
    s.add_argument("--scales", type=_range, default=None)
    s = add("sweep", "t^u, t^s and boxdim(J) along a parameter path")
    s.add_argument("--param", choices=["c", "a"], default="c")
    s.add_argument("--from", dest="start", type=float, required=True)
    s.add_argument("--to", dest="stop", type=float, required=True)
    s.add_argument("--steps", type=_positive, default=20)
    s.add_argument("--kmax", type=_positive, default=6)
    return p


def _params(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("config", "out", "workers", "command"):
            continue
        if isinstance(v, range):
            v = f"{v.start}:{v.stop - 1}"
        elif isinstance(v, np.ndarray):
            v = [float(x) for x in v]
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    run = Run(args, cfg)
    try:
        COMMANDS[args.command](run)
    except HypothesisFailure as e:
        status = EXIT_NUMERIC
        print(f"error: {e}", file=sys.stderr)
    except NUMERIC_ERRORS as e:
        status = EXIT_NUMERIC
        print(f"error: {e}", file=sys.stderr)
    else:
        status = 0
    params = _params(args)
    params["seed"] = run.seed
    if run._fs is not None:
        params["radius"] = run._fs.radius
    write_manifest(run.out, args.command, cfg.sha256, run.seed, run.files, params)
    return status


if __name__ == "__main__":
    sys.exit(main())
