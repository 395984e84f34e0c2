"""Config-driven experiment runner: ``gl <command> --config FILE``.

Config files are flat ``key = value`` text with ``#`` comments; lists are
comma-separated.  Every run writes its CSVs plus ``manifest.txt`` listing the
run metadata and the files produced.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cdelta import (SearchError, annulus_minimize, build_cost_table, cdelta_slope,
                     k_partition)
from .energy import UnderResolvedWarning
from .fields import AnisotropyParams, ComplexField, ConfigurationError, GridSpec, make_grid
from .minimize import DivergenceError, PlacementError, SolveOptions, continuation
from .pohozaev import GeometryError, disc_inequality_check, pohozaev_disc
from .vortices import assign_degrees, detect_vortices, eta_ellipticity_scan, separation_stats

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3

COMMANDS = {
    "solve": "solve",
    "sweep-eps": "sweep_eps",
    "cdelta": "cdelta_table",
    "annulus": "annulus_slope",
    "pohozaev": "pohozaev_check",
    "kpartition": "k_partition",
}


class ConfigError(ConfigurationError):
    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _triple(s):
    parts = s.split()
    if len(parts) != 3:
        raise ValueError("disc needs 'cx cy r'")
    return tuple(float(p) for p in parts)


# key -> (parser, is_list)
_SCHEMA = {
    "kind": (str, False),
    "out": (str, False),
    "seed": (int, False),
    "delta": (float, True),
    "L": (float, False),
    "n": (int, True),
    "D": (int, True),
    "eps": (float, False),
    "schedule": (float, True),
    "max_iters": (int, False),
    "grad_tol": (float, False),
    "step_rule": (str, False),
    "threshold": (float, False),
    "snapshot": (_bool, False),
    "svg": (_bool, False),
    "alpha": (float, False),
    "eta": (float, False),
    "degrees": (int, True),
    "methods": (str, True),
    "n_theta": (int, False),
    "n_per_log": (int, False),
    "t_list": (float, True),
    "d_max": (int, False),
    "m_max": (int, False),
    "fixture": (str, False),
    "discs": (_triple, True),
    "constraint_c": (float, False),
}

_COMMON = {"kind", "out", "seed", "delta", "max_iters", "grad_tol", "step_rule"}
_ALLOWED = {
    "solve": _COMMON | {"L", "n", "D", "eps", "threshold", "snapshot", "svg", "alpha", "eta"},
    "sweep_eps": _COMMON | {"L", "n", "D", "schedule", "threshold", "snapshot", "svg"},
    "cdelta_table": _COMMON | {"degrees", "methods", "n_theta", "n_per_log", "t_list"},
    "annulus_slope": _COMMON | {"degrees", "n_theta", "n_per_log", "t_list", "constraint_c"},
    "pohozaev_check": _COMMON | {"L", "n", "D", "eps", "fixture", "discs"},
    "k_partition": _COMMON | {"D", "d_max", "m_max", "n_theta", "methods", "n_per_log", "t_list"},
}

_DEFAULTS = {
    "out": "out",
    "seed": 0,
    "delta": [0.0],
    "L": 1.0,
    "n": [129],
    "D": [1],
    "eps": 0.1,
    "schedule": [0.2, 0.1, 0.05],
    "max_iters": 200_000,
    "grad_tol": 1e-8,
    "step_rule": "barzilai_borwein",
    "threshold": 0.5,
    "snapshot": True,
    "svg": True,
    "degrees": [-1],
    "methods": ["reduced_1d"],
    "n_theta": 256,
    "n_per_log": 16,
    "t_list": [4.0, 8.0, 16.0],
    "d_max": 4,
    "fixture": "solve",
    "discs": [(0.0, 0.0, 0.4)],
}


@dataclass
class ExperimentConfig:
    kind: str
    values: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)

    def get(self, key):
        if key in self.values:
            return self.values[key]
        return _DEFAULTS.get(key)

    def scalar(self, key):
        v = self.get(key)
        if isinstance(v, list):
            if len(v) != 1:
                raise ConfigError(f"expected a single value for kind {self.kind}", self.lines.get(key), key)
            return v[0]
        return v

    def with_overrides(self, out=None, seed=None):
        vals = dict(self.values)
        if out is not None:
            vals["out"] = out
        if seed is not None:
            vals["seed"] = seed
        return ExperimentConfig(self.kind, vals, dict(self.lines))


def parse_config(text: str, kind: str | None = None) -> ExperimentConfig:
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError("unknown key", lineno, key)
        if key in values:
            raise ConfigError("duplicate key", lineno, key)
        parser, is_list = _SCHEMA[key]
        try:
            if is_list:
                items = [s.strip() for s in val.split(",")]
                if any(not s for s in items):
                    raise ValueError("empty list entry")
                values[key] = [parser(s) for s in items]
            else:
                values[key] = parser(val)
        except ValueError as exc:
            raise ConfigError(str(exc), lineno, key) from None
        lines[key] = lineno
    file_kind = values.get("kind")
    if kind is None:
        kind = file_kind
    elif file_kind is not None and file_kind != kind:
        raise ConfigError(f"kind {file_kind!r} does not match command ({kind})", lines["kind"], "kind")
    if kind not in _ALLOWED:
        raise ConfigError(f"unknown experiment kind {kind!r}", lines.get("kind"), "kind")
    for key in values:
        if key not in _ALLOWED[kind]:
            raise ConfigError(f"not used by kind {kind}", lines[key], key)
    cfg = ExperimentConfig(kind, values, lines)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig):
    def bad(msg, key):
        raise ConfigError(msg, cfg.lines.get(key), key)

    for d in cfg.get("delta"):
        if not 0 <= d < 1:
            bad("delta must lie in [0, 1)", "delta")
    for D in cfg.get("D"):
        if D < 1:
            bad("D >= 1 required", "D")
    if cfg.get("step_rule") not in ("barzilai_borwein", "nonlinear_cg"):
        bad("step_rule must be barzilai_borwein or nonlinear_cg", "step_rule")
    for n in cfg.get("n"):
        if n < 3:
            bad("n >= 3 required", "n")
    sched = cfg.get("schedule")
    if any(e <= 0 for e in sched) or any(b >= a for a, b in zip(sched, sched[1:])):
        bad("schedule must be positive and strictly decreasing", "schedule")
    if not cfg.get("eps") > 0:
        bad("eps > 0 required", "eps")
    ts = cfg.get("t_list")
    if len(ts) < 2 or ts[0] <= 1 or any(b <= a for a, b in zip(ts, ts[1:])):
        bad("t_list must hold at least two increasing ratios > 1", "t_list")
    for m in cfg.get("methods"):
        if m not in ("reduced_1d", "annulus_2d"):
            bad(f"unknown method {m!r}", "methods")
    if 0 in cfg.get("degrees"):
        bad("degree 0 not allowed", "degrees")
    if cfg.get("fixture") not in ("solve", "unit"):
        bad("fixture must be 'solve' or 'unit'", "fixture")
    if cfg.get("n_theta") < 16:
        bad("n_theta >= 16 required", "n_theta")
    if cfg.get("d_max") < 1:
        bad("d_max >= 1 required", "d_max")
    if "alpha" in cfg.values and not 0 < cfg.values["alpha"] < 1:
        bad("0 < alpha < 1 required", "alpha")
    if ("alpha" in cfg.values) != ("eta" in cfg.values):
        bad("alpha and eta must be given together", "alpha" if "alpha" in cfg.values else "eta")


def load_config(path, kind=None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, kind)


# -- output helpers ------------------------------------------------------------

def fmt(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


class RunWriter:
    def __init__(self, out_dir: Path):
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def csv(self, name, header, rows):
        lines = [",".join(header)] + [",".join(fmt(v) for v in row) for row in rows]
        self._write(name, "\n".join(lines) + "\n")

    def text(self, name, content):
        self._write(name, content)

    def _write(self, name, content):
        (self.out / name).write_text(content)
        if name not in self.files:
            self.files.append(name)

    def manifest(self, cfg: ExperimentConfig, extra: dict):
        lines = [f"kind={cfg.kind}", f"version={__version__}", f"seed={cfg.get('seed')}"]
        for key in sorted(cfg.values):
            if key in ("kind", "seed", "out"):
                continue
            v = cfg.values[key]
            if isinstance(v, list):
                v = ",".join(" ".join(fmt(t) for t in e) if isinstance(e, tuple) else fmt(e) for e in v)
            else:
                v = fmt(v)
            lines.append(f"config.{key}={v}")
        for key, v in extra.items():
            lines.append(f"{key}={fmt(v)}")
        lines.append("files=" + ",".join(self.files + ["manifest.txt"]))
        (self.out / "manifest.txt").write_text("\n".join(lines) + "\n")


def snapshot_text(u: ComplexField) -> str:
    z = u.grid.z.ravel()
    v = u.values.ravel()
    return "".join(f"{fmt(a.real)} {fmt(a.imag)} {fmt(b.real)} {fmt(b.imag)}\n" for a, b in zip(z, v))


_STOPS = [(0.0, (13, 8, 135)), (0.25, (126, 3, 168)), (0.5, (204, 71, 120)),
          (0.75, (248, 149, 64)), (1.0, (240, 249, 33))]


def _color(t):
    t = min(max(t, 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(_STOPS, _STOPS[1:]):
        if t <= t1:
            w = (t - t0) / (t1 - t0)
            return "#%02x%02x%02x" % tuple(int(round(a + w * (b - a))) for a, b in zip(c0, c1))
    return "#%02x%02x%02x" % _STOPS[-1][1]


def heatmap_svg(u: ComplexField, vortices=(), px: int = 4) -> str:
    """|u| raster on cells (cell mean, clipped to [0, 1]) plus vortex circles."""
    g = u.grid
    m = u.modulus
    cell = 0.25 * (m[1:, 1:] + m[:-1, 1:] + m[1:, :-1] + m[:-1, :-1])
    nc = cell.shape[0]
    size = nc * px
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">']
    for i in range(nc):
        for j in range(nc):
            # row j counts from the top so that y points up
            out.append(f'<rect x="{i * px}" y="{(nc - 1 - j) * px}" width="{px}" height="{px}" '
                       f'fill="{_color(cell[i, j])}"/>')
    L, h = g.spec.L, g.h
    for v in vortices:
        cx = (v.center.real + L) / h * px
        cy = size - (v.center.imag + L) / h * px
        r = max(v.core_radius / h * px, 2 * px)
        out.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{r:.3f}" fill="none" '
                   f'stroke="white" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# -- experiments ----------------------------------------------------------------

def _opts(cfg):
    return SolveOptions(max_iters=cfg.get("max_iters"), grad_tol=cfg.get("grad_tol"),
                        step_rule=cfg.get("step_rule"), seed=cfg.get("seed"))


def _vortex_summary(u, eps, threshold):
    vs = assign_degrees(u, detect_vortices(u, eps, threshold), threshold)
    degs = [v.degree for v in vs]
    total = None if any(d is None for d in degs) else int(sum(degs))
    return vs, total, separation_stats(vs, u.grid)


def _square_solves(cfg, schedule):
    params = AnisotropyParams(cfg.scalar("delta"))
    grid = make_grid(GridSpec.square(cfg.get("L"), cfg.scalar("n")))
    return continuation(grid, params, -cfg.scalar("D"), schedule, _opts(cfg))


def _write_field_outputs(w, cfg, u, vortices, tag):
    if cfg.get("snapshot"):
        w.text(f"field_{tag}.txt", snapshot_text(u))
    if cfg.get("svg"):
        w.text(f"modulus_{tag}.svg", heatmap_svg(u, vortices))


def run_solve(cfg, w):
    eps = cfg.get("eps")
    res = _square_solves(cfg, [eps])[-1]
    vs, total, sep = _vortex_summary(res.field, eps, cfg.get("threshold"))
    rep = res.report
    w.csv("solve.csv", ["eps", "E_eps", "E0", "potential", "G_eps", "grad_norm", "iters", "converged",
                        "n_vortices", "sum_degrees", "m_half_min_pair", "min_boundary_dist"],
          [[eps, rep.E_eps, rep.E0, rep.potential, rep.G_eps, res.grad_norm, res.iters, res.converged,
            len(vs), total, sep.m_half_min_pair, sep.min_boundary_dist]])
    w.csv("vortices.csv", ["cx", "cy", "core_radius", "degree", "touches_boundary"],
          [[v.center.real, v.center.imag, v.core_radius, v.degree, v.touches_boundary] for v in vs])
    if "alpha" in cfg.values:
        recs = eta_ellipticity_scan(res.field, AnisotropyParams(cfg.scalar("delta")), eps,
                                    cfg.values["alpha"], cfg.values["eta"])
        w.csv("eta_scan.csv", ["cx", "cy", "local_energy", "flagged", "modulus_close"],
              [[r.center.real, r.center.imag, r.local_energy, r.flagged, r.modulus_close] for r in recs])
    _write_field_outputs(w, cfg, res.field, vs, "final")
    return {"converged": res.converged}


def run_sweep(cfg, w):
    sched = cfg.get("schedule")
    results = _square_solves(cfg, sched)
    rows = []
    vs = []
    for r in results:
        vs, total, sep = _vortex_summary(r.field, r.eps, cfg.get("threshold"))
        rep = r.report
        rows.append([r.eps, np.log(1 / r.eps), rep.E_eps, rep.E0, rep.potential, rep.G_eps,
                     len(vs), total, sep.m_half_min_pair, sep.min_boundary_dist])
    w.csv("sweep_eps.csv", ["eps", "ln_inv_eps", "E_eps", "E0", "potential", "G_eps", "n_vortices",
                            "sum_degrees", "m_half_min_pair", "min_boundary_dist"], rows)
    _write_field_outputs(w, cfg, results[-1].field, vs, "final")
    return {"converged": all(r.converged for r in results)}


def run_cdelta(cfg, w):
    rows = []
    for delta in cfg.get("delta"):
        params = AnisotropyParams(delta)
        for method in cfg.get("methods"):
            table = build_cost_table(params, cfg.get("degrees"), method, n=cfg.get("n_theta"),
                                     t_list=cfg.get("t_list"), n_per_log=cfg.get("n_per_log"))
            for d in cfg.get("degrees"):
                e = table.entries[d]
                rows.append([delta, d, method, e.value, e.err])
    w.csv("cdelta_table.csv", ["delta", "d", "method", "value", "err"], rows)
    return {}


def run_annulus(cfg, w):
    rows, audit = [], []
    c = cfg.get("constraint_c")
    for delta in cfg.get("delta"):
        params = AnisotropyParams(delta)
        for d in cfg.get("degrees"):
            prev = None
            for t in cfg.get("t_list"):
                r = annulus_minimize(1.0, t, d, params, constraint_c=c, opts=_opts(cfg),
                                     n_per_log=cfg.get("n_per_log"), n_theta=cfg.get("n_theta"))
                pw = None if prev is None else (r.value - prev[1]) / np.log(t / prev[0])
                rows.append([delta, d, t, r.value, pw])
                audit.append([delta, d, t, r.max_v_theta[0], r.max_v_theta[1], r.circle_norms[0],
                              r.circle_norms[1], r.in_lipschitz_class, r.in_l2_class])
                prev = (t, r.value)
    w.csv("annulus_slope.csv", ["delta", "d", "t", "value", "pairwise_slope"], rows)
    w.csv("annulus_audit.csv", ["delta", "d", "t", "max_vtheta_inner", "max_vtheta_outer",
                                "circle_norm_inner", "circle_norm_outer", "in_lipschitz_class",
                                "in_l2_class"], audit)
    return {}


def run_pohozaev(cfg, w):
    delta = cfg.scalar("delta")
    params = AnisotropyParams(delta)
    eps = cfg.get("eps")
    grid = make_grid(GridSpec.square(cfg.get("L"), cfg.scalar("n")))
    if cfg.get("fixture") == "unit":
        u = ComplexField(grid, np.ones(grid.shape, dtype=complex))
    else:
        u = continuation(grid, params, -cfg.scalar("D"), [eps], _opts(cfg))[-1].field
    rows = []
    for cx, cy, r in cfg.get("discs"):
        rep = pohozaev_disc(u, params, eps, complex(cx, cy), r)
        _, slack = disc_inequality_check(u, params, eps, complex(cx, cy), r)
        rows.append([cx, cy, r, rep.residual_rel, slack])
    w.csv("pohozaev.csv", ["disc_cx", "disc_cy", "r", "residual_rel", "slack_an6"], rows)
    return {}


def run_kpartition(cfg, w):
    d_max = cfg.get("d_max")
    method = cfg.get("methods")[0]
    degs = [d for d in range(-d_max, d_max + 1) if d != 0]
    rows = []
    for delta in cfg.get("delta"):
        table = build_cost_table(AnisotropyParams(delta), degs, method, n=cfg.get("n_theta"),
                                 t_list=cfg.get("t_list"), n_per_log=cfg.get("n_per_log"))
        for D in cfg.get("D"):
            K, multiset = k_partition(delta, D, table, d_max, cfg.get("m_max"))
            rows.append([delta, D, K, " ".join(str(d) for d in multiset), table.cost(-1)])
    w.csv("kpartition.csv", ["delta", "D", "K", "multiset", "c_minus1"], rows)
    return {}


_RUNNERS = {
    "solve": run_solve,
    "sweep_eps": run_sweep,
    "cdelta_table": run_cdelta,
    "annulus_slope": run_annulus,
    "pohozaev_check": run_pohozaev,
    "k_partition": run_kpartition,
}


def run_experiment(cfg: ExperimentConfig) -> int:
    w = RunWriter(Path(cfg.get("out")))
    with warnings.catch_warnings():
        warnings.simplefilter("always", UnderResolvedWarning)
        extra = _RUNNERS[cfg.kind](cfg, w)
    w.manifest(cfg, extra)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gl", description="Anisotropic Ginzburg-Landau experiments")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--seed", type=int, help="seed (overrides config)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, COMMANDS[args.command]).with_overrides(args.out, args.seed)
        return run_experiment(cfg)
    except (ConfigurationError, PlacementError, GeometryError, SearchError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        where = f" at eps={exc.eps}" if exc.eps is not None else ""
        print(f"solver failure{where}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
