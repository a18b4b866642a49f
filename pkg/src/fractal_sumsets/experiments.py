"""End-to-end experiment runners behind the command line.

Each runner takes a resolved configuration dict, writes its files into
``config["output_dir"]`` and returns a result dict.  File writes go through
a temporary file and a rename, so a crash never leaves a half-written
report.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
import warnings
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from . import angles, curves, ifs, projections, raster, scaling, slices
from .errors import DomainError

OUTPUT_ENV = "FRACTAL_SUMSETS_OUT"

DEFAULTS = {
    "set": {"kind": "cantor", "gamma": "1/4"},
    "curve": {"kind": "circle", "radius": 1.0},
    "eps_start": 2.0 ** -4,
    "eps_stop": 2.0 ** -10,
    "eps_factor": 2.0,
    "depth": None,
    "window": None,
    "tau_pos": scaling.TAU_POS,
    "tau_zero": scaling.TAU_ZERO,
    "seed": 0,
    "trials": 100000,
    "output_dir": "out",
    "write_pgm": True,
}


# ------------------------------------------------------------------ plumbing


def config_hash(config: dict) -> str:
    """SHA-256 of the canonical JSON form, ignoring where output goes."""
    body = {k: v for k, v in config.items() if k != "output_dir"}
    text = json.dumps(body, sort_keys=True, default=str, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def atomic_write(path, data) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": "\n"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def output_dir(config: dict) -> Path:
    return Path(os.environ.get(OUTPUT_ENV) or config.get("output_dir") or "out")


def write_summary(config: dict, lines: list) -> str:
    head = [f"config_hash: {config_hash(config)}", f"seed: {config.get('seed', 0)}"]
    text = "\n".join(head + lines) + "\n"
    atomic_write(output_dir(config) / "summary.txt", text)
    atomic_write(output_dir(config) / "config.json", json.dumps(config, sort_keys=True, indent=2, default=str) + "\n")
    return text


def eps_ladder(start: float, stop: float, factor: float) -> list:
    if not (start > 0 and stop > 0 and factor > 1):
        raise DomainError("eps ladder needs positive start/stop and factor > 1")
    rungs = int(round(math.log(start / stop) / math.log(factor))) + 1
    ladder = [start / factor ** k for k in range(rungs)]
    if len(ladder) < 4:
        raise DomainError(f"eps ladder needs at least 4 rungs, got {len(ladder)}")
    return ladder


# ------------------------------------------------------------------ set and curve specs


def build_system(set_cfg: dict) -> ifs.IfsSystem:
    kind = set_cfg.get("kind", "cantor")
    if kind in ("cantor", "four-corner"):
        return ifs.four_corner_system(set_cfg.get("gamma", "1/4"))
    if kind == "ifs":
        path = Path(set_cfg["ifs_file"])
        if not path.exists():
            raise DomainError(f"IFS file {path} does not exist")
        return ifs.read_ifs(path)
    raise DomainError(f"unknown set kind {kind!r}")


def depth_for(system: ifs.IfsSystem, eps: float) -> int:
    """Smallest depth whose box side is at most ``eps``."""
    ratio = float(system.common_ratio)
    side = float(system.bounding_box()[1])
    n = 0
    while side * ratio ** n > eps * (1 + 1e-12):
        n += 1
    return n


def parse_tangent(text) -> object:
    """``"p/q"`` gives a :class:`Slope`; ``"sqrt2"`` or a decimal gives a float tangent."""
    if isinstance(text, (int, float)):
        return float(text)
    t = str(text).strip().lower()
    if t.startswith("sqrt"):
        return math.sqrt(float(t[4:].strip("()")))
    if "/" in t or t.lstrip("-").isdigit():
        return angles.parse_slope(t)
    return float(t)


def tangent_direction(tan_spec) -> object:
    """Direction for projections: a Slope stays exact, a float becomes an angle."""
    if isinstance(tan_spec, angles.Slope):
        return tan_spec
    return math.atan(tan_spec) % math.pi


def build_curve(curve_cfg: dict) -> curves.CurveSpec:
    kind = curve_cfg.get("kind", "circle")
    if kind == "circle":
        return curves.circle(tuple(curve_cfg.get("center", (0.0, 0.0))), float(curve_cfg.get("radius", 1.0)))
    if kind == "polygon":
        if "tan" in curve_cfg:
            return curves.polygon_ntheta(tangent_direction(parse_tangent(curve_cfg["tan"])))
        return curves.polygon_ntheta(float(curve_cfg.get("theta", 0.0)))
    if kind == "polyline":
        return curves.polyline(curve_cfg["vertices"])
    if kind == "segment":
        return curves.graph(lambda x: x, (0.0, 1.0), lambda x: np.ones_like(x))
    if kind == "parabola":
        return curves.graph(lambda x: x * x, (0.0, 1.0), lambda x: 2 * x)
    raise DomainError(f"unknown curve kind {kind!r}")


def sumset_prediction(set_cfg: dict, curve_cfg: dict) -> str:
    if set_cfg.get("kind", "cantor") not in ("cantor", "four-corner"):
        return "none"
    gamma = ifs.as_rational(set_cfg.get("gamma", "1/4"))
    g = float(gamma) if gamma is not None else float(set_cfg.get("gamma"))
    kind = curve_cfg.get("kind", "circle")
    if kind == "circle":
        quarter = gamma == Fraction(1, 4) if gamma is not None else math.isclose(g, 0.25)
        if quarter:
            return "dim=2, measure zero"
        if g < 0.25:
            return f"dim={1 - 2 * math.log(2) / math.log(g):.5f}, measure zero"
        text = "measure positive"
        return text + ", interior nonempty" if g >= 1 / 3 else text
    if kind == "polygon" and "tan" in curve_cfg and gamma == Fraction(1, 4):
        return angles.predict_sumset(_prediction_key(parse_tangent(curve_cfg["tan"]))).summary
    return "none"


def _prediction_key(tan_spec):
    return tuple(tan_spec) if isinstance(tan_spec, angles.Slope) else tan_spec


# ------------------------------------------------------------------ sumset


def run_sumset_experiment(config: dict) -> dict:
    system = build_system(config["set"])
    spec = build_curve(config["curve"])
    ladder_eps = eps_ladder(config["eps_start"], config["eps_stop"], config["eps_factor"])
    out = output_dir(config)
    rows = []
    for k, eps in enumerate(ladder_eps):
        depth = config["depth"] if config.get("depth") is not None else depth_for(system, eps)
        cover = ifs.ifs_cover(system, depth)
        sample = curves.sample_curve(spec, eps)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            grid = raster.minkowski_raster(cover, sample, eps, config.get("window"))
        rows.append(scaling.LadderRow(eps, raster.box_count(grid), raster.area_estimate(grid)))
        if config.get("write_pgm", True):
            tmp = out / f".rung_{k:02d}.pgm.tmp"
            out.mkdir(parents=True, exist_ok=True)
            raster.write_pgm(grid, tmp)
            os.replace(tmp, out / f"rung_{k:02d}.pgm")
    ladder = scaling.ScalingLadder(tuple(rows))
    fit = scaling.fit_box_dimension(ladder)
    trend = scaling.classify_area_trend(ladder, config["tau_pos"], config["tau_zero"])
    prediction = sumset_prediction(config["set"], config["curve"])
    atomic_write(out / "ladder.csv", ladder.to_csv())
    atomic_write(out / "fit.csv", fit.to_csv())
    lines = [
        f"set: {json.dumps(config['set'], sort_keys=True)}",
        f"curve: {json.dumps(config['curve'], sort_keys=True)}",
        f"rungs: {len(rows)}",
        f"slope: {fit.slope:.6f}",
        f"r2: {fit.r_squared:.6f}",
        f"window: {fit.window[0]}-{fit.window[1]}",
        f"measured: {trend.describe()}",
        f"predicted: {prediction}",
    ]
    write_summary(config, lines)
    return {"ladder": ladder, "fit": fit, "trend": trend, "prediction": prediction}


# ------------------------------------------------------------------ projections


def run_projection_experiment(config: dict) -> dict:
    gamma = config["set"].get("gamma", "1/4")
    tan_spec = parse_tangent(config["tan"])
    direction = tangent_direction(tan_spec)
    if isinstance(tan_spec, float):
        warnings.warn("tangent treated as irrational; endpoints are floating point", stacklevel=2)
    min_depth = int(config.get("min_depth", 1))
    max_depth = int(config.get("max_depth", 8))
    rows = projections.projection_ladder(gamma, direction, max_depth, min_depth)
    out = output_dir(config)
    atomic_write(out / "projection_ladder.csv", projections.ladder_to_csv(rows))
    growth = projections.count_growth_exponent(rows)
    drop = 1 - rows[-1].total_length / rows[0].total_length
    lines = [
        f"gamma: {gamma}",
        f"tan: {config['tan']}",
        f"mode: {'exact' if isinstance(direction, angles.Slope) else 'float'}",
        f"depths: {min_depth}-{max_depth}",
        f"length: {rows[0].total_length:.6f} -> {rows[-1].total_length:.6f} (drop {drop:.4f})",
        f"count_growth_over_log4: {growth / math.log(4):.6f}",
    ]
    result = {"rows": rows, "growth": growth, "drop": drop, "probe": None}
    if isinstance(tan_spec, angles.Slope):
        cls = angles.predict_sumset(_prediction_key(tan_spec))
    else:
        cls = angles.predict_sumset(float(tan_spec))
    lines.append(f"predicted: {cls.summary}")
    eps = float(config.get("probe_eps", 2.0 ** -9))
    rho = float(config.get("probe_rho", 2.0 ** -5))
    if config.get("probe", True):
        system = ifs.four_corner_system(gamma)
        cover = ifs.ifs_cover(system, depth_for(system, eps))
        polygon = curves.polygon_ntheta(direction)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            grid = raster.minkowski_raster(cover, curves.sample_curve(polygon, eps), eps)
        hit = raster.interior_probe(grid, rho)
        result["probe"] = hit
        lines.append(f"interior_probe(eps={eps:g}, rho={rho:g}): "
                     + ("none" if hit is None else f"({hit[0]:.6f}, {hit[1]:.6f})"))
        if config.get("write_pgm", True):
            tmp = out / ".sumset.pgm.tmp"
            raster.write_pgm(grid, tmp)
            os.replace(tmp, out / "sumset.pgm")
        covers = [ifs.ifs_cover(system, n) for n in range(max(1, max_depth - 2), max_depth + 1)]
        report = projections.polygon_sumset_report(covers, polygon, config["tau_pos"])
        atomic_write(out / "polygon_report.csv", report.to_csv())
        result["report"] = report
        lines.append(f"polygon_report: measure_positive={report.measure_positive} "
                     f"interior={report.interior} dimension={report.dimension:.4f}")
    write_summary(config, lines)
    return result


# ------------------------------------------------------------------ classify / mc / ifs-build


def classify_line(text: str) -> str:
    slope = angles.parse_slope(text)
    if slope.p == 0 or slope.q == 0:
        pred = angles.predict_sumset(tuple(slope))
        return f"-,-,{pred.angle.kind},{pred.summary}"
    cls = angles.classify_angle(slope.p, slope.q)
    pred = angles.predict_sumset((cls.p, cls.q))
    return f"{cls.p_star},{cls.q_star},{cls.kind},{pred.summary}"


def run_mc_experiment(config: dict) -> dict:
    target = config.get("target", "disk")
    radius = float(config.get("radius", 1.0))
    if target == "disk":
        cover = raster.disk_cover(1.0, float(config.get("side", 1 / 256)))
        window = config.get("window") or (-2.0, -2.0, 2.0, 2.0)
    else:
        depth = int(config.get("depth") or 4)
        cover = ifs.four_corner_cover(config["set"].get("gamma", "1/4"), depth)
        lo, hi = cover.bounds()
        pad = radius + 0.5
        window = config.get("window") or (lo[0] - pad, lo[1] - pad, hi[0] + pad, hi[1] + pad)
    est = raster.random_circle_mc(cover, tuple(window), radius, int(config["trials"]), int(config["seed"]))
    out = output_dir(config)
    atomic_write(out / "mc.csv", raster.MC_CSV_HEADER + "\n" + est.csv_row() + "\n")
    write_summary(config, [f"target: {target}", f"window: {tuple(float(v) for v in window)}",
                           f"p_hat: {est.p_hat:.6f} +- {est.ci95_halfwidth:.6f}"])
    return {"estimate": est}


def run_ifs_build(config: dict) -> dict:
    angle_list = [float(a) for a in config["angles"]]
    mode = config.get("mode", "a-prime")
    n_maps = config.get("n_maps")
    n = len(angle_list)
    lam = config.get("lambda", "auto")
    if lam in (None, "auto"):
        big_n = n_maps or (max(2 * n, 4) if mode == "a-prime" else 2 * n)
        lam = Fraction(3, 5) / (big_n - 1) + Fraction(2, 5) / big_n if mode == "a-prime" else Fraction(4, 5) / big_n
    built = ifs.counterexample_ifs(angle_list, lam, mode, n_maps=n_maps, seed=int(config.get("seed", 0)))
    system = built.system
    out = output_dir(config)
    atomic_write(out / "ifs.txt", ifs.format_ifs(system))
    dim = ifs.similarity_dimension(system)
    ssc = ifs.verify_ssc(system, 1)
    depths = int(config.get("max_depth", 6))
    lines = [f"mode: {mode}", f"maps: {system.n_maps}", f"lambda: {system.common_ratio}",
             f"attempts: {built.attempts}", f"similarity_dimension: {dim:.6f}", f"ssc: {ssc}"]
    ladders = {}
    for alpha in angle_list:
        direction = _exact_direction(alpha)
        rows = projections.projection_ladder_system(system, direction, depths)
        ladders[alpha] = rows
        atomic_write(out / f"projection_{alpha:.6f}.csv", projections.ladder_to_csv(rows))
        lines.append(f"projection at {alpha:.6f}: " + " ".join(f"{r.total_length:.5f}" for r in rows))
    # one segment per aligned angle, perpendicular to it, so each side projects onto that angle
    verts = [(0.0, 0.0)]
    for alpha in angle_list:
        x, y = verts[-1]
        verts.append((x - math.sin(alpha), y + math.cos(alpha)))
    polygon = curves.polyline(verts)
    covers = [ifs.ifs_cover(system, k) for k in range(max(1, depths - 2), depths + 1)]
    report = projections.polygon_sumset_report(covers, polygon)
    lines.append(f"sumset_dimension_estimate: {report.dimension:.6f}")
    lines.append(f"bound_1_plus_sim_dim: {1 + dim:.6f}")
    write_summary(config, lines)
    return {"built": built, "dimension": dim, "ssc": ssc, "ladders": ladders, "report": report}


def _exact_direction(alpha: float):
    """Use an exact Slope for axis and diagonal angles so projections stay exact."""
    for p, q in ((0, 1), (1, 0), (1, 1), (-1, 1)):
        s = angles.Slope.of(p, q)
        if math.isclose(s.theta, alpha % math.pi, abs_tol=1e-15):
            return s
    return alpha


# ------------------------------------------------------------------ audit


@dataclass
class AuditLine:
    quantity: str
    value: object
    samples: int
    passed: Optional[bool]


def run_audit(config: dict) -> dict:
    seed = int(config.get("seed", 0))
    samples = int(config.get("samples", 100000))
    lines: list = []
    for branch in slices.BRANCHES:
        res = slices.lipschitz_audit(branch, samples, seed)
        lines.append(AuditLine(f"lipschitz_{branch}_violations", res["violations"], res["samples"], res["violations"] == 0))
        lines.append(AuditLine(f"lipschitz_{branch}_worst_fraction", res["worst_fraction"], res["samples"], None))
    rng = np.random.Generator(np.random.Philox(key=[seed, 99]))
    # tau roundtrip and the H / Phi second-coordinate identity
    worst_rt, worst_h = 0.0, 0.0
    n_rt = 1000
    for _ in range(n_rt):
        x = rng.random(2)
        alpha = x[0] + rng.uniform(0.1, 0.9)
        pair = slices.AdmissiblePair(tuple(x), alpha, 0.05)
        back = slices.tau_inverse(*slices.tau_map(pair))
        worst_rt = max(worst_rt, abs(back.alpha - pair.alpha))
        worst_h = max(worst_h, abs(slices.h_map(pair)[1] - (slices.phi_alpha(pair)[1] - 1)))
    lines.append(AuditLine("tau_roundtrip_max_error", worst_rt, n_rt, worst_rt <= 1e-12))
    lines.append(AuditLine("h_phi_offset_max_error", worst_h, n_rt, worst_h <= 1e-15))
    pair = slices.AdmissiblePair((0.3, 0.4), 0.8, 0.1)
    ks = [slices.circular_wedge_spread(pair, r, r, seed=seed) for r in (0.05, 0.025, 0.0125)]
    lines.append(AuditLine("wedge_spread_constant", max(ks), 3, max(ks) < 2 * min(ks)))
    curve_cfg = config.get("curve", {"kind": "circle", "radius": 1.0})
    pairs = int(config.get("pairs", 1000))
    grid = int(config.get("grid", 401))
    try:
        spec = build_curve(curve_cfg)
        coarse = slices.transversality_audit(spec, pairs, grid, seed)
        fine = slices.transversality_audit(spec, pairs, 4 * grid - 3, seed)
        change = max(fine.h2 / coarse.h2, coarse.h2 / fine.h2)
        finite = all(math.isfinite(v) for v in (coarse.h1, coarse.h2, fine.h1, fine.h2))
        lines.append(AuditLine("transversality_h1", coarse.h1, coarse.pairs, finite))
        lines.append(AuditLine("transversality_h2", coarse.h2, coarse.pairs, finite))
        lines.append(AuditLine("transversality_h2_refined", fine.h2, fine.pairs, change < 2))
    except DomainError as exc:
        lines.append(AuditLine(f"transversality_domain_error: {exc}", "nan", 0, None))
    out = output_dir(config)
    rows = [(l.quantity, l.value, l.samples, seed) for l in lines]
    atomic_write(out / "audit.csv", slices.audit_csv(rows))
    summary = [f"{l.quantity}: {l.value} [{'pass' if l.passed else 'fail' if l.passed is False else 'info'}]" for l in lines]
    write_summary(config, summary)
    failed = [l.quantity for l in lines if l.passed is False]
    return {"lines": lines, "failed": failed}
