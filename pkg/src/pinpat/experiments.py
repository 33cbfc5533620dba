"""Experiment pipelines behind the CLI subcommands.

Each ``cmd_*`` takes an :class:`ExperimentConfig`, writes its CSV/JSON/SVG
files into ``config.out`` and returns a :class:`RunReport`. Everything in the
CSV and JSON outputs is a function of the config and the seed; wall-clock
timings and the thread count go to a separate ``*.timings.json`` file.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from pinpat import catalog as cat
from pinpat import torus
from pinpat._backend import BACKEND
from pinpat.cone import (
    ConeParameters,
    angle_lemma_monte_carlo,
    angle_lemma_threshold,
    cone_density,
    cone_grid,
    cone_volume_fraction,
)
from pinpat.config import ExperimentConfig
from pinpat.detector import pinned_distance_set, pinned_scaling_set, witness_angle
from pinpat.errors import ConfigError, DomainError, InvalidConeParameters, TooLarge
from pinpat.geometry import (
    DiscretizedSet,
    named_pattern,
    smallest_angle,
    unit_ball_volume,
    upper_density_1d,
    upper_density_nd,
)
from pinpat.report import SvgPlot, ensure_dir, read_points, write_csv, write_json
from pinpat.sphere import coarea_split, sphere_measure_checks

PASS, FAIL, WARN = "PASS", "FAIL", "WARN"


@dataclass
class Verdict:
    check: str
    status: str
    detail: str = ""
    reproducer: object = None

    def as_dict(self) -> dict:
        out = {"check": self.check, "status": self.status, "detail": self.detail}
        if self.reproducer is not None:
            out["reproducer"] = self.reproducer
        return out


@dataclass
class RunReport:
    experiment: str
    config: dict
    results: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    files: list = field(default_factory=list)

    def check(self, name: str, ok: bool, detail: str = "", reproducer=None, soft: bool = False) -> bool:
        status = PASS if ok else (WARN if soft else FAIL)
        self.verdicts.append(Verdict(name, status, detail, None if ok else reproducer))
        return ok

    @property
    def status(self) -> str:
        states = {v.status for v in self.verdicts}
        if FAIL in states:
            return FAIL
        if WARN in states:
            return WARN
        return PASS

    @property
    def exit_code(self) -> int:
        return 1 if self.status == FAIL else 0

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "config": self.config,
            "results": self.results,
            "verdicts": [v.as_dict() for v in self.verdicts],
            "status": self.status,
        }


class _Clock:
    def __init__(self):
        self.t0 = time.perf_counter()
        self.marks: dict[str, float] = {}

    def mark(self, name: str) -> None:
        now = time.perf_counter()
        self.marks[name] = now - self.t0
        self.t0 = now


def _finish(rep: RunReport, cfg: ExperimentConfig, clock: _Clock, stem: str) -> RunReport:
    out = ensure_dir(cfg.out)
    path = os.path.join(out, f"{stem}.json")
    write_json(path, rep.as_dict())
    rep.files.append(path)
    rep.timings = dict(clock.marks)
    write_json(
        os.path.join(out, f"{stem}.timings.json"),
        {"seconds": rep.timings, "threads": cfg.threads, "backend": BACKEND},
    )
    return rep


def _pmap(fn, items, threads: int):
    items = list(items)
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


# ----------------------------------------------------------------- sources


def lattice_in_ball(d: int, h: float, R: float, center=None) -> np.ndarray:
    n = int(math.floor(R / h))
    ax = np.arange(-n, n + 1) * h
    mesh = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    pts = mesh + c
    return pts[np.linalg.norm(mesh, axis=1) <= R]


def _union_of_balls(d, h, centers, b) -> np.ndarray:
    """Lattice points (pitch h, global lattice) inside a union of balls of radius b."""
    if len(centers) == 0:
        return np.zeros((0, d))
    parts = []
    for c in centers:
        lo = np.ceil((c - b) / h).astype(int)
        hi = np.floor((c + b) / h).astype(int)
        axes = [np.arange(lo[i], hi[i] + 1) * h for i in range(d)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        parts.append(mesh[np.linalg.norm(mesh - c, axis=1) <= b])
    pts = np.vstack(parts)
    keys = np.round(pts / h).astype(np.int64)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return pts[np.sort(idx)]


def cone_parameters(cfg: ExperimentConfig) -> ConeParameters:
    V = named_pattern(cfg.pattern, 2)
    try:
        return ConeParameters(smallest_angle(V), cfg.d, cfg.shrink_exponent, cfg.slack_exponent)
    except InvalidConeParameters as exc:
        raise ConfigError(str(exc)) from None


def build_source(cfg: ExperimentConfig, rng: np.random.Generator, R_max: float | None = None) -> DiscretizedSet:
    d, h = cfg.d, cfg.h
    R = cfg.radius if R_max is None else R_max
    if cfg.source == "grid-disk":
        pts = lattice_in_ball(d, h, R)
    elif cfg.source == "cone":
        return cone_grid(cone_parameters(cfg).cone(), h, R)
    elif cfg.source == "lattice-of-balls":
        n = int(math.floor(R / cfg.lattice_spacing))
        centers = lattice_in_ball(d, cfg.lattice_spacing, n * cfg.lattice_spacing + 1e-9)
        pts = _union_of_balls(d, h, centers, cfg.ball_radius)
    elif cfg.source == "random-union":
        dirs = rng.standard_normal((cfg.balls, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = R * rng.random(cfg.balls) ** (1.0 / d)
        centers = dirs * radii[:, None]
        pts = _union_of_balls(d, h, centers, cfg.ball_radius)
    elif cfg.source == "file":
        pts = read_points(cfg.point_file)
        if pts.shape[0] and pts.shape[1] != d:
            raise ConfigError(f"point file has dimension {pts.shape[1]}, config d = {d}")
    elif cfg.source == "empty":
        pts = np.zeros((0, d))
    else:
        raise ConfigError(f"unknown source {cfg.source!r}")
    return DiscretizedSet(pts, h)


def pick_pins(E: DiscretizedSet, cfg: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    """Seeded sample of stored points with norm inside ``cfg.pin_norm``."""
    if len(E) == 0:
        return np.zeros((0, E.dim))
    lo, hi = cfg.pin_norm
    cand = np.nonzero((E.norms >= lo) & (E.norms <= hi))[0]
    if cand.size == 0:
        cand = np.arange(len(E))
    take = min(cfg.pins, cand.size)
    chosen = np.sort(rng.choice(cand, size=take, replace=False))
    return E.points[chosen]


def r_grid(cfg: ExperimentConfig, factor: float = 1.0) -> np.ndarray:
    g = cfg.r_grid
    if g["count"] == 1:
        return np.array([g["start"] * factor])
    return np.linspace(g["start"], g["stop"], g["count"]) * factor


def _rng(cfg: ExperimentConfig, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(stream,)))


# ---------------------------------------------------------------- rm-table


def cmd_rm_table(cfg: ExperimentConfig) -> RunReport:
    clock = _Clock()
    rep = RunReport("rm-table", cfg.echo())
    rows = []
    ok_card = ok_bound = ok_r2 = True
    for N in range(cfg.N_min, cfg.N_max + 1):
        for m in cfg.m_values:
            if N < m:
                continue
            flag = ""
            try:
                r, W = torus.r_m_exact(N, m, cfg.exact_limit)
                witness = " ".join(str(t) for t in W.members())
                if torus.has_ap(W, m) is not None:
                    rep.check(f"witness_ap_free[N={N},m={m}]", False, "witness contains an AP", witness)
            except TooLarge:
                r, witness, flag = None, "", "too_large"
            try:
                gb = torus.gowers_bound(N, m)
            except DomainError:
                gb = None
                flag = flag or "bound_not_applicable"
            if r is not None:
                if r > N:
                    ok_card = False
                if gb is not None and r > gb:
                    ok_bound = False
                    rep.check(f"gowers[N={N},m={m}]", False, f"r={r} > bound={gb}", {"N": N, "m": m})
                if m == 2 and r != 1:
                    ok_r2 = False
            rows.append((N, m, r, gb, witness, flag))
    clock.mark("solve")
    rep.check("r_m <= N", ok_card)
    rep.check("r_m <= gowers_bound where defined", ok_bound)
    rep.check("r_2 == 1", ok_r2)
    rep.results = {
        "rows": [dict(zip(("N", "m", "r", "gowers_bound", "witness", "flag"), row)) for row in rows],
        "exact_limit": cfg.exact_limit,
    }
    out = ensure_dir(cfg.out)
    path = os.path.join(out, "rm-table.csv")
    write_csv(path, ("N", "m", "r_m_exact", "gowers_bound", "witness_set", "flag"), rows)
    rep.files.append(path)
    return _finish(rep, cfg, clock, "rm-table")


# ------------------------------------------------------------ torus-verify


def _bridge_ok(E, n, k) -> tuple[bool, object]:
    """Every window slice of an avoider is (k-1)-AP free; returns (ok, bad slice)."""
    for x in torus.window_representatives(E, n):
        B = torus.slice_at(E, x, n)
        if len(B) >= k - 1 and torus.has_ap(B, k - 1) is not None:
            return False, {"x": x, "slice": B.members()}
    return True, None


def _bridge_detects(E, n, k, witness) -> bool:
    width = 2 * math.pi / (n + 1)
    xs = torus.window_representatives(E, n) + [math.fmod(witness.base, width)]
    for x in xs:
        B = torus.slice_at(E, x, n)
        if len(B) >= k - 1 and torus.has_ap(B, k - 1) is not None:
            return True
    return False


def cmd_torus_verify(cfg: ExperimentConfig) -> RunReport:
    clock = _Clock()
    rep = RunReport("torus-verify", cfg.echo())
    k = cfg.k
    if k < 3:
        raise ConfigError("torus-verify needs k >= 3")
    per_prime = []
    for pi, q in enumerate(cfg.torus_primes):
        if not torus.is_prime(q):
            raise ConfigError(f"torus prime {q} is not prime")
        n = q - 1
        if n < k:
            raise ConfigError(f"need n >= k (n + 1 = {q}, k = {k})")
        rng = _rng(cfg, 100 + pi)
        width = 2 * math.pi / q
        entry: dict = {"n_plus_1": q, "k": k}

        # slicing identity on random arc unions
        worst = 0.0
        for _ in range(cfg.random_sets):
            E = torus.random_arc_union(rng)
            lhs, rhs = torus.slicing_identity_check(E, n)
            worst = max(worst, abs(lhs - rhs))
        entry["slicing_identity_max_error"] = worst
        rep.check(f"slicing_identity[n+1={q}]", worst <= 1e-9, f"max |lhs - rhs| = {worst!r}")

        # explicit near-tight arc
        explicit = torus.TorusSet([(0.0, 0.9 * width)])
        w = torus.avoids_rotated_aps(explicit, n, k)
        entry["explicit_arc"] = {"measure": explicit.measure(), "avoider": w is None}
        rep.check(f"explicit_arc_avoider[n+1={q}]", w is None, "arc of 0.9 window")

        # seeded randomized search
        found = torus.search_avoider(n, k, rng, iterations=cfg.search_iterations)
        avoiders = [explicit, found.best]
        checks = []
        for name, E in zip(("explicit", "search"), avoiders):
            mc = torus.measure_bound_check(E, n, k)
            bok, bad = _bridge_ok(E, n, k)
            lhs, rhs = torus.slicing_identity_check(E, n)
            checks.append({"set": name, "measure": mc.measure, "bound": mc.bound, "ok": mc.ok,
                           "bridge": bok, "slicing_error": abs(lhs - rhs)})
            rep.check(f"measure_bound[{name},n+1={q}]", mc.ok,
                      f"measure {mc.measure!r} vs bound {mc.bound!r}", {"arcs": E.arcs})
            rep.check(f"bridge[{name},n+1={q}]", bok, "slices of an avoider are AP free", bad)
            rep.check(f"slicing_identity[{name},n+1={q}]", abs(lhs - rhs) <= 1e-9)
        entry["avoiders"] = checks
        entry["best_measure"] = found.best.measure()
        entry["best_fraction_of_window"] = found.best.measure() / width
        entry["best_arcs"] = found.best.arcs
        entry["search"] = {"iterations": found.iterations, "accepted": found.accepted}

        # perturbations that plant a rotated progression
        misses = []
        for t in range(cfg.perturbations):
            P = torus.perturb_with_witness(found.best, n, k, rng)
            wit = torus.avoids_rotated_aps(P, n, k)
            if wit is None or not _bridge_detects(P, n, k, wit):
                misses.append({"trial": t, "arcs": P.arcs, "witness": None if wit is None else wit.__dict__})
        entry["perturbations"] = {"count": cfg.perturbations, "misses": len(misses)}
        rep.check(f"bridge_perturbed[n+1={q}]", not misses,
                  f"{len(misses)} of {cfg.perturbations} perturbations undetected", misses[:1])
        per_prime.append(entry)
    clock.mark("primes")

    # the explicit rejection example
    wit = torus.avoids_rotated_aps(torus.TorusSet([(0.0, math.pi)]), 4, 3)
    rep.check("half_circle_rejected[n+1=5]", wit is not None, "E = [0, pi] contains a rotated 2-AP")
    rep.results = {
        "primes": per_prime,
        "half_circle_witness": None if wit is None else {"x": wit.base, "i": wit.difference,
                                                         "points": wit.elements()},
    }
    return _finish(rep, cfg, clock, "torus-verify")


# --------------------------------------------------------------- cone-demo


def abundance_prime(params: ConeParameters) -> int:
    """Smallest prime strictly above ``2 pi / alpha' + 1``."""
    v = 2 * math.pi / params.alpha_prime + 1
    return torus.next_prime(int(math.floor(v + 1e-6)))


def cmd_cone_demo(cfg: ExperimentConfig) -> RunReport:
    clock = _Clock()
    rep = RunReport("cone-demo", cfg.echo())
    params = cone_parameters(cfg)
    V = named_pattern(cfg.pattern, cfg.d)
    C = params.cone()
    tol = cfg.tolerance
    g = cfg.r_grid
    if g.get("scale", "cone_R") != "cone_R":
        raise ConfigError("cone-demo expects r_grid.scale = 'cone_R'")
    x_far = np.zeros(cfg.d)
    x_far[0] = cfg.pin_norm[1]
    R_far = 2 * angle_lemma_threshold(params, x_far)
    R_max = g["stop"] * R_far + 4 * tol
    E = cone_grid(C, cfg.h, R_max)
    clock.mark("grid")
    rng = _rng(cfg, 1)
    pins = pick_pins(E, cfg, rng)
    if len(pins) == 0 or not np.any(pins):
        raise ConfigError("no pin candidates away from the apex; widen pin_norm")
    pins = pins[np.any(pins != 0, axis=1)]

    # density
    R_list = np.linspace(R_max / 8, R_max, 8)
    exact = cone_density(C, R_list)
    counted = upper_density_nd(E, R_list)
    target = params.alpha_prime / 2 if cfg.d == 2 else cone_volume_fraction(C)
    rel = abs(counted.ratios[-1] - target) / target
    rep.check("cone_density_exact", abs(exact.sup_ratio - target) <= 1e-15 * max(1.0, target) or cfg.d > 2)
    rep.check("cone_density_grid_within_2pct", rel <= 0.02, f"grid ratio {counted.ratios[-1]!r} vs {target!r}")
    clock.mark("density")

    # angle lemma Monte Carlo and the empty scan beyond R(x)
    pin_rows = []
    mc_ok = True
    scan_ok = True
    for j, x in enumerate(pins):
        M = angle_lemma_threshold(params, x)
        R = 2 * M
        mc = angle_lemma_monte_carlo(params, x, M, cfg.mc_samples, seed=cfg.seed * 1000 + j, threads=cfg.threads)
        if mc.violations:
            mc_ok = False
            rep.check(f"angle_lemma[pin={j}]", False, f"{mc.violations} violations", mc.worst)
        grid = r_grid(cfg, R)
        S = pinned_scaling_set(E, x, V, grid, tol, cfg.path, threads=cfg.threads)
        if len(S):
            scan_ok = False
            r0, O0 = S.scales[0]
            rep.check(f"no_copy_beyond_R[pin={j}]", False, f"{len(S)} copies",
                      {"pin": x.tolist(), "r": r0, "O": O0.to_list()})
        pin_rows.append({
            "pin": x.tolist(), "M": M, "R": R, "mc_samples": mc.samples, "mc_violations": mc.violations,
            "mc_max_angle": mc.max_angle, "copies_found": len(S), "r_min": float(grid[0]), "r_max": float(grid[-1]),
        })
    rep.check("angle_lemma_monte_carlo_100pct", mc_ok, f"slack bound 2^t alpha' = {params.slack_bound!r}")
    rep.check("no_pinned_copy_beyond_R", scan_ok, f"{len(pins)} pins x {len(r_grid(cfg))} scales")
    clock.mark("scan")

    results = {
        "alpha": params.alpha,
        "alpha_prime": params.alpha_prime,
        "slack_bound": params.slack_bound,
        "grid_points": len(E),
        "grid_R_max": R_max,
        "tol": tol,
        "density": {"R": list(R_list), "exact": list(exact.ratios), "grid": list(counted.ratios), "target": target},
        "pins": pin_rows,
    }

    if cfg.abundance:
        q = abundance_prime(params)
        theory = cat.select_prime(3, cfg.d, cfg.epsilon0, cfg.C_d, floor=cfg.prime_floor)
        V1 = cat.catalog_pattern(1, 3, q - 1, cfg.d)
        ab_rows = []
        ab_ok = True
        for j, x in enumerate(pins):
            R = 2 * angle_lemma_threshold(params, x)
            S = pinned_scaling_set(E, x, V1, r_grid(cfg, R), tol, cfg.path, threads=cfg.threads)
            ratio = S.density.sup_ratio
            ab_rows.append({"pin": x.tolist(), "found": len(S), "density_sup_ratio": ratio,
                            "window_fraction": S.window_fraction})
            if len(S) == 0 or ratio <= 0:
                ab_ok = False
        overridden = not (theory.window[0] < q < theory.window[1])
        results["abundance"] = {
            "n_plus_1": q,
            "gap": 2 * math.pi / q,
            "theory_window": list(theory.window),
            "theory_prime": theory.n_plus_1,
            "theory_window_overridden": overridden,
            "pins": ab_rows,
        }
        rep.check("abundance_nonempty_all_pins", ab_ok, f"V_1^3 with n+1 = {q}")
        rep.check("theory_window_override_flagged", overridden,
                  f"n+1 = {q} outside the theory window {theory.window}")
        clock.mark("abundance")

    rep.results = results
    out = ensure_dir(cfg.out)
    _cone_svg(os.path.join(out, "cone-demo.svg"), params, pins, pin_rows, R_max)
    rep.files.append(os.path.join(out, "cone-demo.svg"))
    return _finish(rep, cfg, clock, "cone-demo")


def _cone_svg(path, params, pins, pin_rows, R_max) -> None:
    half = params.alpha_prime / 2
    top = R_max * math.tan(half)
    span = max(top * 4, R_max * 0.02)
    plot = SvgPlot(-0.02 * R_max, R_max, -span, span, title="thin cone C(alpha') with pins and scanned annuli")
    plot.polygon([0, R_max, R_max], [0, top, -top])
    for x, row in zip(pins, pin_rows):
        plot.circle(float(x[0]), float(x[1]))
        plot.polyline([row["r_min"], row["r_min"]], [-span, span], color="#888888")
    if pin_rows:
        plot.polyline([pin_rows[0]["r_max"]] * 2, [-span, span], color="#444444")
    plot.text(40, 470, f"alpha' = {params.alpha_prime:.6g}, vertical axis stretched", size=11)
    plot.save(path)


# ------------------------------------------------------------------ catalog


def _prime_choice(cfg: ExperimentConfig) -> tuple[int, dict]:
    theory = cat.select_prime(cfg.k, cfg.d, cfg.epsilon0, cfg.C_d, floor=cfg.prime_floor)
    info = {
        "theory_prime": theory.n_plus_1,
        "theory_window": list(theory.window),
        "in_theory_window": theory.in_theory_window,
        "demo_scale": theory.demo_scale,
        "reason": theory.reason,
        "C_d": cfg.C_d,
    }
    if cfg.prime is not None:
        if not torus.is_prime(cfg.prime):
            raise ConfigError(f"prime override {cfg.prime} is not prime")
        info["override"] = cfg.prime
        return cfg.prime, info
    return theory.n_plus_1, info


def cmd_catalog(cfg: ExperimentConfig) -> RunReport:
    clock = _Clock()
    rep = RunReport("catalog", cfg.echo())
    if cfg.k < 3:
        raise ConfigError("catalog needs k >= 3")
    q, info = _prime_choice(cfg)
    spec = cat.CatalogSpec(cfg.k, cfg.d, q - 1, cfg.C_d, cfg.epsilon0)
    pats = cat.build_catalog(spec)
    consts = cat.theorem_constants(cfg.k, cfg.d, cfg.epsilon0, cfg.C_d)
    rows = []
    unit_ok = gap_ok = True
    for V in pats:
        i = V.catalog[0]
        P = V.points
        if np.any(np.abs(np.linalg.norm(P[1:], axis=1) - 1.0) > 1e-12):
            unit_ok = False
        ang = np.arctan2(P[1:, 1], P[1:, 0])
        gaps = np.mod(np.diff(ang), 2 * math.pi)
        want = 2 * math.pi * ((i % q) / q)
        if np.any(np.abs(gaps - want) > 1e-9):
            gap_ok = False
        for j, p in enumerate(P):
            rows.append((i, j) + tuple(float(c) for c in p))
    rep.check("catalog_unit_norm", unit_ok)
    rep.check("catalog_equal_gaps", gap_ok)
    rep.check("prime_in_theory_window", info["in_theory_window"] and "override" not in info,
              "demo-scale or overridden prime" if not info["in_theory_window"] or "override" in info else "",
              soft=True)
    rep.results = {"n_plus_1": q, "n": q - 1, "prime": info, "constants": consts.as_dict(), "patterns": len(pats)}
    out = ensure_dir(cfg.out)
    path = os.path.join(out, "catalog.csv")
    write_csv(path, ("pattern_index", "point_index") + tuple(f"x{c}" for c in range(cfg.d)), rows)
    rep.files.append(path)
    clock.mark("build")
    return _finish(rep, cfg, clock, "catalog")


# ------------------------------------------------------------- pinned-scan


def cmd_pinned_scan(cfg: ExperimentConfig) -> RunReport:
    clock = _Clock()
    rep = RunReport("pinned-scan", cfg.echo())
    rng = _rng(cfg, 2)
    E = build_source(cfg, rng)
    pins = pick_pins(E, cfg, rng)
    q, info = _prime_choice(cfg)
    n = q - 1
    if cfg.k < 3:
        raise ConfigError("pinned-scan needs k >= 3")
    idx = cfg.patterns or list(range(1, n + 1))
    if any(i > n for i in idx):
        raise ConfigError(f"pattern index beyond n = {n}")
    tol = cfg.tolerance
    scale = cfg.r_grid.get("scale", "absolute")
    params = cone_parameters(cfg) if scale == "cone_R" else None
    if scale == "cone_R" and cfg.source != "cone":
        raise ConfigError("r_grid.scale 'cone_R' needs source 'cone'")
    clock.mark("setup")

    def task(job):
        i, j = job
        x = pins[j]
        V = cat.catalog_pattern(i, cfg.k, n, cfg.d)
        factor = 2 * angle_lemma_threshold(params, x) if params is not None and np.any(x) else 1.0
        S = pinned_scaling_set(E, x, V, r_grid(cfg, factor), tol, cfg.path)
        return i, j, S

    jobs = [(i, j) for i in idx for j in range(len(pins))]
    results = _pmap(task, jobs, cfg.threads)
    clock.mark("scan")

    rows = []
    per_pattern: dict[int, list[float]] = {i: [] for i in idx}
    for i, j, S in results:
        found = {r: O for r, O in S.scales}
        for r, ratio in zip(S.r_grid, S.density.ratios):
            O = found.get(r)
            rows.append((i, j, r, None if O is None else witness_angle(O), ratio))
        per_pattern[i].append(S.density.sup_ratio)
    summary = {str(i): (min(v) if v else 0.0) for i, v in per_pattern.items()}
    best_i = max(idx, key=lambda i: (float(summary[str(i)]), -i)) if idx else None
    best = float(summary[str(best_i)]) if best_i is not None else 0.0
    rep.check("positive_density_pattern_exists", best > 0,
              f"best pattern V_{best_i} min-over-pins ratio {best!r}", soft=True)
    rep.results = {
        "n_plus_1": q,
        "prime": info,
        "pins": pins.tolist(),
        "tol": tol,
        "grid_pitch": cfg.h,
        "annulus_width": 2 * tol,
        "source_points": len(E),
        "min_over_pins": summary,
        "best_pattern": best_i,
        "best_ratio": best,
    }
    out = ensure_dir(cfg.out)
    path = os.path.join(out, "pinned-scan.csv")
    write_csv(path, ("pattern_index", "pin_index", "r", "witness_angle", "density_ratio"), rows)
    rep.files.append(path)
    plot = SvgPlot(0, max(idx) + 1 if idx else 1, 0, 1.05, title="min over pins of the scaling-set density")
    if idx:
        plot.polyline(idx, [float(summary[str(i)]) for i in idx], color="#1f5f99", width=1.5)
    plot.save(os.path.join(out, "pinned-scan.svg"))
    rep.files.append(os.path.join(out, "pinned-scan.svg"))
    return _finish(rep, cfg, clock, "pinned-scan")


# ------------------------------------------------------------ sphere-check


def cmd_sphere_check(cfg: ExperimentConfig) -> RunReport:
    clock = _Clock()
    rep = RunReport("sphere-check", cfg.echo())
    rows = []
    for d in cfg.dims:
        if d not in (2, 3, 4, 5):
            raise ConfigError("sphere-check supports d in {2, 3, 4, 5}")
        r = sphere_measure_checks(d, cfg.nodes)
        rows.append(r.as_dict())
        rep.check(f"sphere_area[d={d}]", r.area_rel_error <= cfg.area_tolerance, f"rel err {r.area_rel_error!r}")
        rep.check(f"ball_volume[d={d}]", r.volume_rel_error <= cfg.volume_tolerance, f"rel err {r.volume_rel_error!r}")
    clock.mark("quadrature")

    # coarea split of a concrete set along the pinned scaling set at its point nearest the origin
    rng = _rng(cfg, 3)
    E = build_source(cfg, rng)
    split = None
    if len(E):
        x = E.points[int(np.argmin(E.norms))]
        if cfg.source == "cone":
            q = abundance_prime(cone_parameters(cfg))
        else:
            q, _ = _prime_choice(cfg)
        V = cat.catalog_pattern(1, max(cfg.k, 3), q - 1, cfg.d)
        grid = r_grid(cfg) if cfg.r_grid.get("scale", "absolute") == "absolute" else None
        if grid is None:
            raise ConfigError("sphere-check needs an absolute r_grid")
        S = pinned_scaling_set(E, x, V, grid, cfg.tolerance, cfg.path, threads=cfg.threads)
        R = float(min(grid[-1], E.bounding_radius)) or float(grid[-1])
        split = coarea_split(E, R, S.intervals())
        split.update({"pattern": V.name, "n_plus_1": q, "pin": x.tolist(), "scales_found": len(S)})
    clock.mark("split")
    rep.results = {"dims": rows, "split": split}
    return _finish(rep, cfg, clock, "sphere-check")


# -------------------------------------------------------- distance-density


def cmd_distance_density(cfg: ExperimentConfig) -> RunReport:
    clock = _Clock()
    rep = RunReport("distance-density", cfg.echo())
    rng = _rng(cfg, 4)
    E = build_source(cfg, rng)
    pins = pick_pins(E, cfg, rng)
    rows = []
    if len(E) <= 1 or E.bounding_radius == 0:
        rep.results = {"points": len(E), "pins": [], "delta_A": 0.0, "ratio": None,
                       "note": "density undefined for sets with at most one point"}
        rep.check("distance_density_defined", False, "ratio undefined", soft=True)
        clock.mark("densities")
        return _finish(rep, cfg, clock, "distance-density")
    R_list = np.linspace(E.bounding_radius / 10, E.bounding_radius, 10)
    dA = upper_density_nd(E, R_list)
    omega = unit_ball_volume(E.dim)
    for j, x in enumerate(pins):
        D = pinned_distance_set(E, x)
        dD = upper_density_1d(D, R_list, thickness=E.pitch / 2)
        rows.append({
            "pin": x.tolist(),
            "delta_D": dD.sup_ratio,
            "ratio": dD.sup_ratio / dA.sup_ratio if dA.sup_ratio > 0 else None,
            "ratio_ball_normalized": dD.sup_ratio / (dA.sup_ratio / omega) if dA.sup_ratio > 0 else None,
        })
    clock.mark("densities")
    ok = all(r["ratio"] is not None and r["ratio"] > 0 for r in rows)
    rep.check("distance_density_positive", ok, soft=True)
    rep.results = {
        "points": len(E),
        "R": list(R_list),
        "delta_A": dA.sup_ratio,
        "delta_A_ball_normalized": dA.sup_ratio / omega,
        "pins": rows,
    }
    return _finish(rep, cfg, clock, "distance-density")


COMMANDS = {
    "rm-table": cmd_rm_table,
    "torus-verify": cmd_torus_verify,
    "cone-demo": cmd_cone_demo,
    "catalog": cmd_catalog,
    "pinned-scan": cmd_pinned_scan,
    "sphere-check": cmd_sphere_check,
    "distance-density": cmd_distance_density,
}
