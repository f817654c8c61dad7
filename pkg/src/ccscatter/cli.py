"""Command-line front end.

    python3 -m ccscatter <subcommand> [options]

Subcommands: indicial, regions, solve, la-sweep, scatter, symbol, indexsets,
verify.  Parameters come from an optional INI config (--config) overridden
by flags; outputs go to --out (default $CCSCATTER_OUT or ./ccscatter_out).
Failures print a JSON error record on stderr and exit with status 2.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .config import RunConfig, output_root, parse_ladder, parse_profile
from .errors import CCScatterError
from .geometry import build_indicial_field, crossover_regular_check, scattering_regions

FAMILIES_HELP = "M F H I E G M1 Psi0 u"


def _add_common(p: argparse.ArgumentParser, grid: bool = True):
    p.add_argument("--config", help="INI run configuration")
    p.add_argument("--out", help="output directory")
    p.add_argument("--profile", help="alpha Fourier terms, e.g. '0:1.0, 1:0.3' (m<0: sine)")
    p.add_argument("--circumference", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--zeta", type=lambda s: complex(s.replace(" ", "")))
    p.add_argument("--lam", type=float, help="lambda instead of zeta (with --branch)")
    p.add_argument("--branch", type=int, choices=(1, -1))
    if grid:
        p.add_argument("--xmin", type=float)
        p.add_argument("--xmax", type=float)
        p.add_argument("--nt", type=int)
        p.add_argument("--ny", type=int)
        p.add_argument("--mode", type=float, help="per-mode reduction with wavenumber k")
        p.add_argument("--eps-ladder", help="'start:count' (halving) or a comma list")
        p.add_argument("--bc", choices=("robin", "dirichlet"))


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    ch = {
        "profile": tuple(parse_profile(args.profile)) if getattr(args, "profile", None) else None,
        "circumference": getattr(args, "circumference", None),
        "n": getattr(args, "n", None),
        "zeta": getattr(args, "zeta", None),
        "lam": getattr(args, "lam", None),
        "branch": getattr(args, "branch", None),
        "x_min": getattr(args, "xmin", None),
        "x_max": getattr(args, "xmax", None),
        "n_t": getattr(args, "nt", None),
        "n_y": getattr(args, "ny", None),
        "mode": getattr(args, "mode", None),
        "bc": getattr(args, "bc", None),
    }
    if getattr(args, "eps_ladder", None):
        ch["eps_ladder"] = tuple(parse_ladder(args.eps_ladder))
    return cfg.updated(**ch)


def _outdir(args, cfg: RunConfig) -> str:
    d = args.out or cfg.output or output_root()
    os.makedirs(d, exist_ok=True)
    return d


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, default=str)
        fh.write("\n")


def _header(cfg: RunConfig) -> str:
    return f"# ccscatter {__version__}; {cfg.header()}\n"


# ---------------------------------------------------------------------------


def cmd_indicial(args) -> int:
    cfg = _config(args)
    sp, prof = cfg.spectral_point(), cfg.alpha_profile()
    fld = build_indicial_field(sp, prof, prof.grid(args.samples))
    reg = scattering_regions(sp.lam.real, prof, sp.n) if sp.on_critical_line else None
    in_w = reg.contains(fld.y) if reg is not None else np.zeros(len(fld.y), bool)
    out = os.path.join(_outdir(args, cfg), "indicial.csv")
    with open(out, "w") as fh:
        fh.write(_header(cfg))
        fh.write("y,alpha,re_sigma,im_sigma,in_W\n")
        for y, a, s, w in zip(fld.y, fld.alpha, fld.sigma, in_w):
            fh.write(f"{y:.17g},{a:.17g},{s.real:.17g},{s.imag:.17g},{int(w)}\n")
    print(f"lambda = {sp.lam:.6g}; sigma range Re [{fld.sigma.real.min():.6g}, {fld.sigma.real.max():.6g}]"
          f", max |Im| {np.abs(fld.sigma.imag).max():.6g}; wrote {out}")
    return 0


def cmd_regions(args) -> int:
    cfg = _config(args)
    sp, prof = cfg.spectral_point(), cfg.alpha_profile()
    lam = sp.lam.real
    reg = scattering_regions(lam, prof, sp.n)
    rec = {"lambda": lam, "threshold_alpha2": reg.threshold,
           "scattering_arcs": [list(a) for a in reg.scattering_arcs],
           "crossover_points": list(reg.crossover_points), "empty": reg.empty, "whole": reg.whole,
           "regular_crossover": crossover_regular_check(lam, prof, n=sp.n)}
    out = os.path.join(_outdir(args, cfg), "regions.json")
    _write_json(out, rec)
    print(json.dumps(rec, default=str))
    return 0


def _rhs(grid):
    from .solver import interior_source
    # centered at x = 1 when it fits, else at the geometric middle of the grid
    t = grid.t
    c = 0.0 if t[3] + 1 < 0 < t[-4] - 1 else 0.5 * (t[0] + t[-1])
    return interior_source(grid, center=float(np.exp(c)), width=min(1.0, 0.4 * (t[-1] - t[0])))


def cmd_solve(args) -> int:
    from .solver import build_system, limiting_absorption_sweep, solve
    cfg = _config(args)
    sp, grid, metric = cfg.spectral_point(), cfg.grid(), cfg.metric()
    f = _rhs(grid)
    d = _outdir(args, cfg)
    if cfg.eps_ladder and len(cfg.eps_ladder) >= 2:
        lap = limiting_absorption_sweep(metric, grid, sp, f, cfg.eps_ladder, cfg.bc,
                                        delta=cfg.delta, eps_w=cfg.eps_w)
        fields, diags = lap.fields, lap.diagnostics
    else:
        eps = cfg.eps_ladder[0] if cfg.eps_ladder else 0.0
        u = solve(build_system(metric, grid, sp, eps, f, cfg.bc))
        fields, diags = [u], [{"epsilon": eps, "weighted_diff": None, "radiation": None,
                               "residual": u.residual}]
    for i, u in enumerate(fields):
        u.save_csv(os.path.join(d, f"field_{i:03d}.csv"))
    _write_json(os.path.join(d, "diagnostics.json"), diags)
    print(f"wrote {len(fields)} field(s) and diagnostics.json to {d}")
    return 0


def cmd_la_sweep(args) -> int:
    from .geometry import build_indicial_field as bif
    from .scattering import decay_exponent_map
    from .solver import limiting_absorption_sweep
    cfg = _config(args)
    if not cfg.eps_ladder:
        cfg = cfg.updated(eps_ladder=tuple(parse_ladder("1e-1:8")))
    sp, grid, metric = cfg.spectral_point(), cfg.grid(), cfg.metric()
    d = _outdir(args, cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        lap = limiting_absorption_sweep(metric, grid, sp, _rhs(grid), cfg.eps_ladder, cfg.bc,
                                        delta=cfg.delta, eps_w=cfg.eps_w)
    _write_json(os.path.join(d, "diagnostics.json"),
                {"records": lap.diagnostics, "plateau_index": lap.plateau_index,
                 "warnings": [str(w.message) for w in caught]})
    lap.final.save_csv(os.path.join(d, "field_final.csv"))
    lap.extrapolated.save_csv(os.path.join(d, "field_extrapolated.csv"))
    if grid.mode is None:
        m = decay_exponent_map(lap.final, bif(sp, cfg.alpha_profile(), grid.y))
        m.save_csv(os.path.join(d, "exponent_map.csv"))
    for r in lap.diagnostics:
        print(json.dumps(r, default=str))
    return 0


def cmd_scatter(args) -> int:
    from .scattering import mode_scattering, principal_symbol
    cfg = _config(args)
    sp, prof = cfg.spectral_point(), cfg.alpha_profile()
    d = _outdir(args, cfg)
    if not prof.is_constant:
        return cmd_la_sweep(args)
    lo, hi = (int(v) for v in args.modes.split(":"))
    out = os.path.join(d, "scatter_modes.csv")
    with open(out, "w") as fh:
        fh.write(_header(cfg))
        fh.write("m,re_S,im_S,re_symbol,im_symbol,rel_err\n")
        for m in range(lo, hi + 1):
            S = mode_scattering(m, sp, cfg.circumference, prof, x_min=cfg.x_min)
            sym = principal_symbol(sp, prof.alpha_min, 2 * np.pi * abs(m) / cfg.circumference)
            err = abs(S - sym) / abs(sym)
            fh.write(f"{m},{S.real:.17g},{S.imag:.17g},{sym.real:.17g},{sym.imag:.17g},{err:.3e}\n")
            print(f"m={m}: S={S:.12g} symbol={sym:.12g} rel_err={err:.2e}")
    return 0


def cmd_symbol(args) -> int:
    from .scattering import principal_symbol
    cfg = _config(args)
    sp = cfg.spectral_point()
    alpha = args.alpha if args.alpha is not None else sp.alpha0
    v = principal_symbol(sp, alpha, args.xi)
    print(json.dumps({"zeta": [sp.zeta.real, sp.zeta.imag], "alpha": alpha, "xi": args.xi,
                      "symbol": [v.real, v.imag]}))
    return 0


def cmd_indexsets(args) -> int:
    from .indexset import NAMED_FAMILIES, compose_families, mapping_on_functions
    fam = NAMED_FAMILIES
    if args.compose:
        a, b = (fam[k] for k in args.compose)
        print(compose_families(a, b).table())
    elif args.map:
        print(mapping_on_functions(fam[args.map], fam["u"]).table())
    elif args.table:
        print(fam[args.table].table())
    else:
        for k in sorted(fam):
            print(f"{k}:\n{fam[k].table()}\n")
    return 0


def cmd_verify(args) -> int:
    from . import acceptance
    if args.only:
        which = [int(v) for v in args.only.split(",")]
    elif args.fast:
        which = list(acceptance.FAST)
    else:
        which = None
    results = acceptance.run(which)
    d = args.out or output_root()
    os.makedirs(d, exist_ok=True)
    with open(os.path.join(d, "verify.json"), "w") as fh:
        fh.write(acceptance.summary_json(results) + "\n")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ccscatter", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("indicial", help="sigma(zeta, y) table")
    _add_common(p, grid=False)
    p.add_argument("--samples", type=int, default=256)
    p.set_defaults(func=cmd_indicial)

    p = sub.add_parser("regions", help="scattering arcs and crossover points")
    _add_common(p, grid=False)
    p.set_defaults(func=cmd_regions)

    p = sub.add_parser("solve", help="resolvent solve (one field per eps rung)")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("la-sweep", help="limiting-absorption sweep with diagnostics")
    _add_common(p)
    p.set_defaults(func=cmd_la_sweep)

    p = sub.add_parser("scatter", help="per-mode scattering table (constant alpha) or exponent map")
    _add_common(p)
    p.add_argument("--modes", default="1:8", help="lo:hi inclusive")
    p.set_defaults(func=cmd_scatter)

    p = sub.add_parser("symbol", help="principal symbol of the scattering matrix")
    _add_common(p, grid=False)
    p.add_argument("--xi", type=float, default=1.0)
    p.add_argument("--alpha", type=float)
    p.set_defaults(func=cmd_symbol)

    p = sub.add_parser("indexsets", help=f"index-family tables ({FAMILIES_HELP})")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--compose", nargs=2, metavar=("A", "B"))
    g.add_argument("--map", metavar="A", help="A applied to boundary data")
    g.add_argument("--table", metavar="A")
    p.set_defaults(func=cmd_indexsets)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--fast", action="store_true", help="criteria 1, 2, 6, 7 only")
    p.add_argument("--only", help="comma list of criteria")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CCScatterError, ValueError, KeyError, OSError) as err:
        rec = {"error": type(err).__name__, "message": str(err), "command": args.command}
        print(json.dumps(rec), file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
