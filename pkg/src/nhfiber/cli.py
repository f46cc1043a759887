"""Command line: ``nhfiber <subcommand> [--config FILE] [--set section.key=value ...]``.

Every CSV starts with a ``#`` comment block holding the config digest, the
resolved config and mesh statistics, so tables can be traced back to the run
that produced them.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import sympy

from .capacity import CapacitySolver, capacity_plane_limit, default_outer_radius, scaled_capacity_p2
from .cell import CellLoad, CellSolver, SoftCellSolver
from .config import SUBCOMMANDS, ConfigError, RunConfig, load_config
from .energy import from_config
from .fem import ConvergenceError
from .geometry import make_cross_section, mesh_annulus
from .regimes import EPS, ScalingFamily, admissible_R, classify

log = logging.getLogger("nhfiber")


# ---------------------------------------------------------------------------
# helpers


def _density(cfg: RunConfig):
    e = cfg.values["energy"]
    return from_config(e["kind"], lam=e["lam"], mu=e["mu"], p=e["p"], c=e["c"], d=e["d"], table=e["table"])


def _section(cfg: RunConfig):
    s = cfg.values["section"]
    shape = s["shape"]
    if any(ch.isdigit() for ch in shape) and ("," in shape or ";" in shape):
        pts = [[float(x) for x in part.split(",")] for part in shape.split(";") if part.strip()]
        S = make_cross_section(np.array(pts))
        return S if s["scale"] == 1.0 else S.scaled(s["scale"])
    return make_cross_section(shape, None if s["scale"] == 1.0 else s["scale"])


def _header(cfg: RunConfig, extra: dict | None = None) -> str:
    lines = [f"# nhfiber {cfg.subcommand}", f"# config_digest: {cfg.digest()}",
             f"# config: {json.dumps(cfg.resolved(), sort_keys=True)}"]
    for k, v in (extra or {}).items():
        lines.append(f"# {k}: {v}")
    return "\n".join(lines) + "\n"


def _csv(header: str, columns, rows, trailer: str = "") -> str:
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    buf.write(trailer)
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        if math.isinf(x):
            return "inf"
        return repr(float(x))
    return x


def _mesh_stats(mesh) -> str:
    e = mesh.edge_lengths()
    return f"vertices={mesh.n_vertices} triangles={mesh.n_triangles} h_min={e.min():.4g} h_max={e.max():.4g}"


# ---------------------------------------------------------------------------
# subcommands: each returns (text, exit status)


def run_cap(cfg: RunConfig):
    f, S = _density(cfg), _section(cfg)
    c, m = cfg.values["cap"], cfg.values["mesh"]
    a = np.array(c["a"], float)
    if a.shape != (3,):
        raise ConfigError("cap.a needs three components")
    z, h = c["zeta"], m["h"]
    cols = ["r", "R", "h", "value", "scaled_value", "error_estimate"]
    rows, stats = [], {}
    mode = c["mode"]
    if mode == "annulus":
        for R in c["radii"]:
            mesh = mesh_annulus(S, R, h, m["grading"])
            stats[f"mesh_R{R:g}"] = _mesh_stats(mesh)
            v = CapacitySolver(f, mesh, S.diameter).value(a, z)
            rows.append([1.0, R, h, v, v, ""])
    elif mode == "log_ladder":
        if z != 0:
            raise ConfigError("cap.zeta must be 0 in log_ladder mode (the limit is infinite otherwise)")
        prev = None
        for k in c["ks"]:
            r = 2.0 ** (-k)
            R = default_outer_radius(r)
            sc = scaled_capacity_p2(f, S, r, R, a=a, h=h)
            val = float(sc.value[0])
            err = "" if prev is None else abs(val - prev) / abs(val)
            rows.append([r, R, h, float(sc.raw[0]), val, err])
            prev = val
    elif mode == "plane":
        lim = capacity_plane_limit(f, S, a, z, tuple(c["radii"]), h)
        for R, v in zip(lim.radii, lim.values):
            rows.append([1.0, R, h, v, v, ""])
        rows.append([1.0, math.inf, h, lim.extrapolated, lim.extrapolated, lim.error_estimate])
    else:
        raise ConfigError(f"cap.mode must be annulus, log_ladder or plane, not {mode!r}")
    return _csv(_header(cfg, stats), cols, rows), 0


def run_cell(cfg: RunConfig):
    S = _section(cfg)
    c, h = cfg.values["cell"], cfg.values["mesh"]["h"]
    g = _density(cfg)
    solver = CellSolver(g, S, c["scalar"], c["regime"], h)
    names = ["a", "beta"] if c["regime"] == "finite_k" else ["zeta1", "zeta2", "a", "beta"]
    rows = []
    for load in c["loads"]:
        if len(load) != len(names):
            raise ConfigError(f"cell.loads entries need {len(names)} components in regime {c['regime']}")
        rows.append(list(load) + [solver.value(CellLoad.from_vector(c["regime"], load))])
    trailer = ""
    if c["form"] and solver.g.is_quadratic:
        K = solver.quadratic_form()
        trailer = "# quadratic_form: " + json.dumps((np.round(K, 14) + 0.0).tolist()) + "\n"
    return _csv(_header(cfg, {"mesh": _mesh_stats(solver.mesh)}), names + ["ghom"], rows, trailer), 0


def run_soft(cfg: RunConfig):
    s, h = cfg.values["soft"], cfg.values["mesh"]["h"]
    S = make_cross_section("disc", s["radius"]) if cfg.values["section"]["shape"] == "disc" else \
        _section(cfg).scaled(s["radius"] / (0.5 * _section(cfg).diameter))
    solver = SoftCellSolver(_density(cfg), S, h, s["recession"])
    rows = []
    for mot in s["motions"]:
        if len(mot) != 4:
            raise ConfigError("soft.motions entries are a1,a2,a3,zeta")
        rows.append(list(mot) + [solver.value(mot[:3], mot[3])])
    return _csv(_header(cfg, {"mesh": _mesh_stats(solver.mesh)}), ["a1", "a2", "a3", "zeta", "c_soft"], rows), 0


def _family(cfg: RunConfig) -> ScalingFamily:
    rg = cfg.values["regime"]
    loc = {"eps": EPS}
    try:
        r = sympy.sympify(rg["r"], locals=loc)
        l = sympy.sympify(rg["l"], locals=loc)
    except (sympy.SympifyError, TypeError) as exc:
        raise ConfigError(f"regime.r / regime.l are not expressions in eps: {exc}") from None
    return ScalingFamily(r, l, rg["p"], rg["area"])


def run_regime(cfg: RunConfig):
    fam = _family(cfg)
    rep = classify(fam)
    out = {"config_digest": cfg.digest(), **rep.as_dict()}
    at = cfg.values["regime"]["radius_at"]
    if at > 0:
        band = admissible_R(fam, at)
        out["radius_band"] = {"eps": at, "lower": band.lower, "upper": band.upper, "default": band.default,
                              "binding": band.binding}
    return json.dumps(out, indent=2, sort_keys=True) + "\n", 0


def _expr_vector(text: str, n: int, key: str):
    x = sympy.Symbol("x")
    parts = [p for p in text.split(",")]
    if len(parts) != n:
        raise ConfigError(f"{key} needs {n} comma-separated expressions in x")
    try:
        return [sympy.lambdify(x, sympy.sympify(p, locals={"x": x}), "numpy") for p in parts]
    except (sympy.SympifyError, TypeError) as exc:
        raise ConfigError(f"{key}: {exc}") from None


def run_limit1d(cfg: RunConfig):
    from .limit1d import FiberForces, QuadraticForm, aniso_cell_matrix, isotropic_fiber_problem, solve_fiber

    lo = cfg.values["limit1d"]
    S = _section(cfg)
    n, L = lo["nodes"], lo["length"]
    grid = np.linspace(0.0, L, n)
    ev = lambda fs: np.column_stack([np.broadcast_to(np.asarray(f(grid), float), (n,)) for f in fs])  # noqa: E731
    u = ev(_expr_vector(lo["u"], 3, "limit1d.u"))
    F = FiberForces.zero(n)
    F.g0_mean[:] = ev(_expr_vector(lo["g0"], 3, "limit1d.g0"))
    F.a0_mean[:] = ev(_expr_vector(lo["a0"], 1, "limit1d.a0"))[:, 0]
    F.beta0_mean[:] = ev(_expr_vector(lo["beta0"], 1, "limit1d.beta0"))[:, 0]
    e = cfg.values["energy"]
    fp = isotropic_fiber_problem(lo["domain"], e["lam"], e["mu"], lo["scalar"], S, L, n, u, F,
                                 gamma=lo["gamma"], h=lo["cell_h"])
    if lo["cell"] == "aniso_example":
        if lo["domain"] != "finite_kappa":
            raise ConfigError("the anisotropic cell form is defined in the finite_kappa domain")
        C = aniso_cell_matrix(S, lo["scalar"], lo["cell_h"]).C
        T = np.diag([1.0, 1.0, 1.0, 1.0 / S.diameter])
        K = T @ C @ T
        fp.ghom = QuadraticForm(0.5 * (K + K.T))
    elif lo["cell"] != "isotropic":
        raise ConfigError("limit1d.cell is isotropic or aniso_example")
    t = solve_fiber(fp)
    cols = ["x3", "v1", "v2", "v3", "theta", "w", "delta"]
    return _csv(_header(cfg), cols, t.table().tolist()), 0


def run_verify(cfg: RunConfig, jobs: int = 1):
    from .verify import SUITES, format_table, run_suite

    suite = cfg.values["verify"]["suite"]
    if suite not in SUITES:
        raise ConfigError(f"verify.suite must be one of {sorted(SUITES)}")
    results = run_suite(suite, jobs)
    table = format_table(results)
    status = 0 if all(r.passed for r in results) else 1
    return _header(cfg) + table + "\n", status


RUNNERS = {"cap": run_cap, "cell": run_cell, "soft-cell": run_soft, "regime": run_regime, "limit1d": run_limit1d}


def _sweep_point(args):
    command, raw, key, value = args
    cfg = load_config(command, None, [f"{s}.{k}={v}" for s, kv in raw.items() for k, v in kv.items()] +
                      [f"{key}={value}"])
    text, status = RUNNERS[command](cfg)
    return value, text, status


def run_sweep(cfg: RunConfig, jobs: int = 1, outdir: Path | None = None):
    sw = cfg.values["sweep"]
    command = sw["command"]
    if command not in RUNNERS:
        raise ConfigError(f"sweep.command must be one of {sorted(RUNNERS)}")
    values = [v.strip() for v in sw["values"].split(",") if v.strip()]
    base = {s: kv for s, kv in cfg.raw.items() if s != "sweep"}
    tasks = [(command, base, sw["parameter"], v) for v in values]
    load_config(command, None, [f"{sw['parameter']}={values[0]}"])  # validates the key early
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]
    results.sort(key=lambda r: values.index(r[0]))
    outdir = Path(outdir or cfg.values["run"]["output"] or "sweep_out")
    outdir.mkdir(parents=True, exist_ok=True)
    summary, status = [], 0
    for value, text, st in results:
        name = f"{command}_{sw['parameter'].replace('.', '-')}_{value}".replace("/", "_")
        ext = "json" if command == "regime" else "csv"
        (outdir / f"{name}.{ext}").write_text(text)
        summary.append(f"{sw['parameter']}={value} -> {outdir / (name + '.' + ext)}")
        status |= st
    return "\n".join(summary) + "\n", status


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nhfiber", description="Fiber capacities, cell energies and effective models.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="INI file with sections as in the documented schema")
    ap.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                    help="override a config key (repeatable)")
    ap.add_argument("--out", help="output file (sweep: output directory); default stdout")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for sweep and verify")
    ap.add_argument("--seed", type=int, help="random seed (overrides run.seed)")
    ap.add_argument("--suite", help="verify: suite name (overrides verify.suite)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    if args.suite:
        overrides.append(f"verify.suite={args.suite}")
    try:
        cfg = load_config(args.subcommand, args.config, overrides)
        np.random.seed(cfg.values["run"]["seed"])
        if args.subcommand == "verify":
            text, status = run_verify(cfg, args.jobs)
        elif args.subcommand == "sweep":
            text, status = run_sweep(cfg, args.jobs, args.out)
            args.out = None
        else:
            text, status = RUNNERS[args.subcommand](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        diag = Path(args.out or "nhfiber").with_suffix(".diagnostics.json")
        diag.write_text(json.dumps({"error": str(exc), "history": [list(map(float, h)) for h in (exc.history or [])]}))
        print(f"solver failure: {exc} (diagnostics in {diag})", file=sys.stderr)
        return 3
    out = args.out or cfg.values["run"]["output"]
    if out and args.subcommand != "sweep":
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
