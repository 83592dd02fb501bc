"""Command-line runner: each subcommand emits one CSV table or one JSON object."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import cantor_metrics as cm
from . import ids_gaplabel as ig
from . import offdiag_jacobi as oj
from . import spectrum_bands as sb
from . import transfer_transport as tt
from .trace_map import ModelParams

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ASSERT = 2

SUBCOMMANDS = ("spectrum", "sigma", "thickness", "boxdim", "gaps", "labels", "opening",
               "ids", "sumset", "transport", "growth", "offdiag", "specplot")


class UsageError(Exception):
    pass


@dataclass
class Report:
    """Header plus rows for CSV; `obj` is the JSON payload."""
    header: list
    rows: list
    obj: dict
    violated: bool = False


@dataclass
class RunConfig:
    subcommand: str
    params: ModelParams = field(default_factory=lambda: ModelParams.diagonal(0.5))
    depth: int = 12
    edge_tol: float = sb.DEFAULT_EDGE_TOL
    grid: int = 201
    n_sites: int = ig.DEFAULT_N_SITES
    V_list: list = field(default_factory=list)
    m: int = 1
    m_max: int = ig.DEFAULT_M_MAX
    p: float = math.inf
    output_format: str = "csv"
    parallelism: int = 1
    k: int | None = None
    eps_hi: float = 1e-1
    eps_lo: float = 1e-4
    min_rel_width: float = 1e-3
    n_energies: int = 20
    n_max: int | None = None
    V_range: tuple = (0.0, 0.75)
    V_steps: int = 16
    window: tuple | None = None

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        if self.output_format not in ("csv", "json"):
            raise UsageError("format must be csv or json")
        if self.depth < 1:
            raise UsageError("depth must be >= 1")
        if not self.edge_tol > 0:
            raise UsageError("edge-tol must be positive")
        if self.parallelism < 1:
            raise UsageError("parallelism must be >= 1")
        if self.grid < 1 or self.n_sites < 1 or self.m_max < 1:
            raise UsageError("grid, n-sites and m-max must be positive")
        if self.V_steps < 1:
            raise UsageError("V-steps must be >= 1")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    if x is None:
        return ""
    return str(x)


def to_csv(rep: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(rep.header)
    for r in rep.rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        # JSON has no inf/nan
        return x if math.isfinite(x) else repr(x)
    return x


def to_json(rep: Report) -> str:
    # float repr is the shortest string that round-trips exactly
    return json.dumps(_plain(rep.obj), indent=1) + "\n"


def bandset_from_json(text: str) -> sb.BandSet:
    d = json.loads(text)
    return sb.BandSet(np.array(d["bands"], dtype=np.float64).reshape(-1, 2), d.get("level"),
                      None, d.get("edge_tol", sb.DEFAULT_EDGE_TOL))


def _pmap(fn, items, workers: int):
    """Ordered map; results come back in input order whatever the thread count."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _model_fields(p: ModelParams) -> dict:
    if p.is_diagonal:
        return {"V": p.V}
    return {"a": p.a, "b": p.b}


def _bands_report(b: sb.BandSet, params: ModelParams, extra: dict | None = None) -> Report:
    mf = _model_fields(params)
    keys = list(mf) + ["level"]
    vals = list(mf.values()) + [b.level]
    obj = {"level": b.level, **mf, "bands": b.bands, "edge_tol": b.edge_tol}
    if extra:
        obj.update(extra)
    return Report(keys + ["lo", "hi"], [vals + [lo, hi] for lo, hi in b.bands], obj)


def _diag(cfg: RunConfig) -> ModelParams:
    if not cfg.params.is_diagonal:
        raise UsageError(f"{cfg.subcommand} needs the diagonal model (--V)")
    return cfg.params


def cmd_spectrum(cfg):
    b = sb.spectrum_approx(cfg.params, cfg.depth, cfg.edge_tol, cfg.window)
    return _bands_report(b, cfg.params)


def cmd_sigma(cfg):
    k = cfg.k if cfg.k is not None else cfg.depth
    b = sb.sigma_k_bands(cfg.params, k, cfg.edge_tol, cfg.window)
    return _bands_report(b, cfg.params)


def cmd_thickness(cfg):
    b = sb.spectrum_approx(cfg.params, cfg.depth, cfg.edge_tol)
    r = cm.thickness(b)
    mf = _model_fields(cfg.params)
    row = list(mf.values()) + [cfg.depth, r.tau, r.theta, r.dim_lo, r.dim_hi, len(b)]
    header = list(mf) + ["depth", "tau", "theta", "dim_lo", "dim_hi", "n_bands"]
    obj = {**mf, "depth": cfg.depth, "tau": r.tau, "theta": r.theta, "dim_lo": r.dim_lo,
           "dim_hi": r.dim_hi, "n_bands": len(b), "witness_gap": r.witness_gap,
           "witness_side": r.witness_side, "presentation": r.presentation}
    return Report(header, [row], obj)


def cmd_boxdim(cfg):
    b = sb.spectrum_approx(cfg.params, cfg.depth, cfg.edge_tol)
    try:
        d, eps, counts = cm.box_dimension(b, cfg.eps_hi, cfg.eps_lo, return_fit=True)
    except cm.InsufficientRange as exc:
        raise UsageError(str(exc)) from exc
    r = cm.thickness(b)
    inside = r.dim_lo <= d <= r.dim_hi
    mf = _model_fields(cfg.params)
    header = list(mf) + ["depth", "eps_hi", "eps_lo", "dim", "dim_lo", "dim_hi", "in_bracket"]
    row = list(mf.values()) + [cfg.depth, cfg.eps_hi, cfg.eps_lo, d, r.dim_lo, r.dim_hi, inside]
    obj = dict(zip(header, row))
    obj.update(eps=eps, counts=counts)
    return Report(header, [row], obj)


def cmd_gaps(cfg):
    b = sb.spectrum_approx(cfg.params, cfg.depth, cfg.edge_tol)
    g = cm.gaps(b)
    rows = [[lo, hi, hi - lo] for lo, hi in g.gaps]
    return Report(["lo", "hi", "width"], rows,
                  {"level": cfg.depth, **_model_fields(cfg.params), "hull": g.hull, "gaps": g.gaps})


def cmd_labels(cfg):
    params = _diag(cfg)
    b = sb.spectrum_approx(params, cfg.depth, cfg.edge_tol)
    g = cm.gaps(b)
    hull_w = g.hull[1] - g.hull[0]
    sel = g.gaps[g.lengths > cfg.min_rel_width * hull_w]
    recs = ig.gap_labels(sel, params, cfg.n_sites, cfg.m_max, strict=False)
    header = ["gap_lo", "gap_hi", "width", "ids", "m", "residual"]
    rows = [[r.gap[0], r.gap[1], r.width, r.ids_value, r.label_m, r.label_residual] for r in recs]
    obj = {"V": params.V, "depth": cfg.depth, "n_sites": cfg.n_sites,
           "gaps": [dict(zip(header, r)) for r in rows]}
    unlabeled = any(r.label_m is None for r in recs)
    return Report(header, rows, obj, violated=unlabeled)


def cmd_opening(cfg):
    if not cfg.V_list:
        raise UsageError("opening needs --V-list")
    try:
        reps = _pmap(lambda V: ig.gap_opening_rate(cfg.m, [V], cfg.depth, cfg.n_sites,
                                                   cfg.m_max, cfg.edge_tol),
                     list(cfg.V_list), cfg.parallelism)
    except ig.MissingGap as exc:
        raise AssertionError(str(exc)) from exc
    rows_ = [r for rep in reps for r in rep.rows]
    header = ["V", "gap_lo", "gap_hi", "width", "width_over_V", "m_times_width_over_V"]
    rows = [[r.V, r.gap[0], r.gap[1], r.width, r.width_over_V, r.m_times_width_over_V]
            for r in rows_]
    ratios = np.array([r.width_over_V for r in rows_])
    obj = {"m": cfg.m, "depth": cfg.depth, "rows": [dict(zip(header, r)) for r in rows],
           "spread": float(ratios.max() / ratios.min())}
    return Report(header, rows, obj)


def cmd_ids(cfg):
    params = _diag(cfg)
    lo, hi = cfg.window if cfg.window else params.hull
    E = np.linspace(lo, hi, cfg.grid)
    N = ig.ids(E, params, cfg.n_sites)
    rows = [[e, n] for e, n in zip(E, N)]
    return Report(["E", "ids"], rows, {"V": params.V, "n_sites": cfg.n_sites, "E": E, "ids": N})


def cmd_sumset(cfg):
    b = sb.spectrum_approx(cfg.params, cfg.depth, cfg.edge_tol)
    c = cm.gap_lemma_certify(b, b)
    s = cm.minkowski_sum(b, b)
    header = ["status", "lo", "hi"]
    rows = [[c.status, lo, hi] for lo, hi in s.bands]
    obj = {**_model_fields(cfg.params), "depth": cfg.depth, "status": c.status,
           "tau": c.tau1, "product": c.product, "bands": s.bands, "edge_tol": s.edge_tol}
    return Report(header, rows, obj)


def cmd_transport(cfg):
    params = _diag(cfg)
    bs = tt.bound_set(params.V, cfg.p)
    header = ["V", "p", "a_V", "zeta", "gamma_lower", "gamma_upper", "alpha_bound",
              "beta_lower", "beta_p_lower"]
    row = [bs.V, bs.p, bs.a_V, bs.zeta, bs.gamma_lower, bs.gamma_upper, bs.alpha_bound,
           bs.beta_lower, bs.beta_p_lower]
    return Report(header, [row], dict(zip(header, row)))


def cmd_growth(cfg):
    params = _diag(cfg)
    n_max = cfg.n_max
    rep = tt.norm_growth_check(params.V, cfg.depth, n_max, n_energies=cfg.n_energies,
                               edge_tol=cfg.edge_tol)
    header = ["V", "E", "slope", "bound", "ok"]
    rows = [[params.V, e, s, rep.bound, bool(s <= rep.bound)]
            for e, s in zip(rep.energies, rep.slopes)]
    obj = {"V": params.V, "depth": cfg.depth, "n_max": rep.n_max, "bound": rep.bound,
           "energies": rep.energies, "slopes": rep.slopes, "violations": rep.violations}
    return Report(header, rows, obj, violated=not rep.passed)


def cmd_offdiag(cfg):
    p = cfg.params
    if p.is_diagonal:
        raise UsageError("offdiag needs --a and --b")
    b = oj.offdiag_spectrum_approx(p.a, p.b, cfg.depth, cfg.edge_tol)
    return _bands_report(b, p, {"invariant": oj.offdiag_invariant(p.a, p.b)})


def emit_specplot_grid(V_lo: float, V_hi: float, V_steps: int, depth: int,
                       edge_tol: float = sb.DEFAULT_EDGE_TOL, window=None,
                       parallelism: int = 1) -> list:
    """Rows (V, level, lo, hi) for every band of Sigma^(depth) over a V grid."""
    if V_steps > 1 and not V_lo < V_hi:
        raise ValueError("need V_lo < V_hi")
    Vs = [float(V_lo)] if V_steps == 1 else [float(v) for v in np.linspace(V_lo, V_hi, V_steps)]

    def one(V):
        b = sb.spectrum_approx(ModelParams.diagonal(V), depth, edge_tol, window)
        return [[V, depth, lo, hi] for lo, hi in b.bands]

    return [r for rows in _pmap(one, Vs, parallelism) for r in rows]


def cmd_specplot(cfg):
    try:
        rows = emit_specplot_grid(cfg.V_range[0], cfg.V_range[1], cfg.V_steps, cfg.depth,
                                  cfg.edge_tol, cfg.window, cfg.parallelism)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    header = ["V", "level", "lo", "hi"]
    return Report(header, rows, {"depth": cfg.depth, "rows": rows})


COMMANDS = {name: globals()[f"cmd_{name}"] for name in SUBCOMMANDS}


def run(cfg: RunConfig) -> tuple[int, str]:
    """Returns (exit status, serialized report)."""
    rep = COMMANDS[cfg.subcommand](cfg)
    text = to_json(rep) if cfg.output_format == "json" else to_csv(rep)
    return (EXIT_ASSERT if rep.violated else EXIT_OK), text


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(s: str) -> list:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad float list {s!r}") from exc


def _threads_default() -> int:
    env = os.environ.get("FIBSPEC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--V", type=float, help="potential strength (diagonal model)")
    common.add_argument("--a", type=float, help="hopping on letter 1")
    common.add_argument("--b", type=float, help="hopping on letter 0")
    common.add_argument("--omega", type=float, default=0.0)
    common.add_argument("--depth", type=int, default=12)
    common.add_argument("--edge-tol", type=float, default=sb.DEFAULT_EDGE_TOL)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", help="write here instead of stdout")
    common.add_argument("--parallelism", type=int, default=None,
                        help="worker threads (default: FIBSPEC_THREADS or 1)")
    common.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))

    p = _Parser(prog="fibspec", description="Fibonacci Hamiltonian spectra and bounds")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    sp = {name: sub.add_parser(name, parents=[common]) for name in SUBCOMMANDS}
    sp["sigma"].add_argument("--k", type=int)
    sp["boxdim"].add_argument("--eps-hi", type=float, default=1e-1)
    sp["boxdim"].add_argument("--eps-lo", type=float, default=1e-4)
    for name in ("labels", "opening", "ids"):
        sp[name].add_argument("--n-sites", type=int, default=ig.DEFAULT_N_SITES)
    for name in ("labels", "opening"):
        sp[name].add_argument("--m-max", type=int, default=ig.DEFAULT_M_MAX)
    sp["labels"].add_argument("--min-rel-width", type=float, default=1e-3)
    sp["opening"].add_argument("--m", type=int, default=1)
    sp["opening"].add_argument("--V-list", type=_floats, required=True)
    sp["ids"].add_argument("--grid", type=int, default=201)
    sp["transport"].add_argument("--p", type=float, default=math.inf)
    sp["growth"].add_argument("--n-max", type=int)
    sp["growth"].add_argument("--n-energies", type=int, default=20)
    sp["specplot"].add_argument("--V-lo", type=float, default=0.0)
    sp["specplot"].add_argument("--V-hi", type=float, default=0.75)
    sp["specplot"].add_argument("--V-steps", type=int, default=16)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    if ns.a is not None or ns.b is not None:
        if ns.a is None or ns.b is None:
            raise UsageError("--a and --b go together")
        if ns.V is not None:
            raise UsageError("give --V or --a/--b, not both")
        params = ModelParams.offdiagonal(ns.a, ns.b, ns.omega)
    else:
        V = 0.5 if ns.V is None else ns.V
        params = ModelParams.diagonal(V, ns.omega)
    g = lambda name, default=None: getattr(ns, name, default)  # noqa: E731
    return RunConfig(
        subcommand=ns.subcommand, params=params, depth=ns.depth, edge_tol=ns.edge_tol,
        grid=g("grid", 201), n_sites=g("n_sites", ig.DEFAULT_N_SITES),
        V_list=g("V_list") or [], m=g("m", 1), m_max=g("m_max", ig.DEFAULT_M_MAX),
        p=g("p", math.inf), output_format=ns.format,
        parallelism=ns.parallelism if ns.parallelism is not None else _threads_default(),
        k=g("k"), eps_hi=g("eps_hi", 1e-1), eps_lo=g("eps_lo", 1e-4),
        min_rel_width=g("min_rel_width", 1e-3), n_energies=g("n_energies", 20),
        n_max=g("n_max"), V_range=(g("V_lo", 0.0), g("V_hi", 0.75)),
        V_steps=g("V_steps", 16), window=tuple(ns.window) if ns.window else None)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
        status, text = run(cfg)
    except (UsageError, ValueError) as exc:
        print(f"fibspec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as exc:
        print(f"fibspec: assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    if ns.out:
        try:
            with open(ns.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"fibspec: cannot write {ns.out}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        sys.stdout.write(text)
    if status == EXIT_ASSERT:
        print("fibspec: assertion failed (see report)", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
