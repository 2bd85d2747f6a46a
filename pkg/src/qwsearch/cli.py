"""Command-line entry point: ``qwsearch <command> <family> [options]``."""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import netgen, scaling, search, spectra
from .output import csv_text, json_text, write_text

FAMILIES = ("complete", "lattice", "lattice5d", "ring", "mk")
SERIES_QUANTITIES = sorted(scaling.QUANTITIES)


class CLIError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    """``"3,4,5"`` or ``"2..5"`` (inclusive) into a list of ints."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty integer list {text!r}")
    return out


def _add_family(p: argparse.ArgumentParser) -> None:
    p.add_argument("family", nargs="?", choices=FAMILIES + ("file",), default="file")
    p.add_argument("--network", help="edge-list network file (family 'file')")
    p.add_argument("--n", type=int, help="complete graph size / ring length")
    p.add_argument("--sides", type=_int_list, help="lattice side lengths, e.g. 4,4,4")
    p.add_argument("--L", type=int, help="side length for lattice5d")
    p.add_argument("--open", action="store_true", help="open instead of periodic lattice boundaries")
    p.add_argument("--b", type=int, help="MK branch number")
    p.add_argument("--g", type=int, help="MK generation count")


def _network(args) -> netgen.Network:
    fam = args.family
    if fam == "file":
        if not args.network:
            raise CLIError("give a family or --network FILE")
        return netgen.load_network(args.network)
    if fam == "complete":
        _require(args, "n")
        return netgen.complete_graph(args.n)
    if fam == "ring":
        _require(args, "n")
        return netgen.hypercubic_lattice([args.n], periodic=True)
    if fam == "lattice":
        _require(args, "sides")
        return netgen.hypercubic_lattice(args.sides, periodic=not args.open)
    if fam == "lattice5d":
        _require(args, "L")
        return netgen.hypercubic_lattice([args.L] * 5, periodic=not args.open)
    _require(args, "b", "g")
    return netgen.mk_hierarchical(args.b, args.g)


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        raise CLIError(f"family {args.family!r} needs " + ", ".join("--" + m for m in missing))


def _target(net: netgen.Network, text: str | None) -> int:
    if text is None or text == "representative":
        return net.representative_site()
    w = int(text)
    if not 0 <= w < net.n_sites:
        raise CLIError(f"target {w} out of range 0..{net.n_sites - 1}")
    return w


def _family_info(net: netgen.Network) -> tuple[str, dict]:
    return net.descriptor.family.value, net.descriptor.params()


# ---------------------------------------------------------------------------

def cmd_gen(args, out) -> int:
    net = _network(args)
    if args.output in (None, "-"):
        netgen.write_network(net, out)
    else:
        netgen.save_network(net, args.output)
    return 0


def cmd_spectrum(args, out) -> int:
    net = _network(args)
    spec = spectra.network_spectrum(net, need_vectors=args.dense)
    w = None if args.target is None else _target(net, args.target)
    rows = spectra.spectrum_rows(spec, w)
    write_text(args.output, csv_text(["index", "eigenvalue", "weight_at_w"], rows), out)
    return 0


def cmd_zeta(args, out) -> int:
    net = _network(args)
    reports = []
    spec = None
    lap = None
    for j in args.j:
        if args.route in ("spectral", "both"):
            spec = spec or spectra.network_spectrum(net)
            reports.append(spectra.zeta_spectral(spec, j).as_dict())
        if args.route in ("logdet", "both"):
            lap = lap or netgen.laplacian(net)
            if lap.n > spectra.dense_limit():
                raise spectra.SizeGuardError(f"N={lap.n} exceeds dense limit for the log-det route")
            reports.append(spectra.zeta_logdet(lap, j).as_dict())
    write_text(args.output, json_text(reports), out)
    return 0


def _resolve_gamma(args, net, w, spec) -> tuple[float, str, dict]:
    extra = {}
    if args.gamma not in (None, "auto"):
        return float(args.gamma), "explicit", extra
    if args.protocol == "sweep":
        sw = search.gamma_sweep(net, w, spec=spec)
        extra["sweep_crossing"] = sw.crossing
        if sw.crossing is None:
            raise CLIError(sw.diagnostic)
        return sw.crossing, "sweep", extra
    return spectra.zeta_spectral(spec, 1).value, "predictor", extra


def cmd_search(args, out) -> int:
    net = _network(args)
    w = _target(net, args.target)
    spec = spectra.network_spectrum(net)
    gamma, protocol, extra = _resolve_gamma(args, net, w, spec)
    cfg = search.SearchConfig(gamma, w, spectra.group_by_target(spec, w))
    levels = search.solve_levels(cfg)
    t_opt, p_opt = search.find_t_opt(cfg, levels)
    I1 = spectra.zeta_spectral(spec, 1).value
    I2 = spectra.zeta_spectral(spec, 2).value
    ds = net.descriptor.d_s_nominal
    regime = scaling.classify_regime(ds)
    family, params = _family_info(net)
    report = {
        "N": net.n_sites,
        "family": family,
        "params": params,
        "w": w,
        "gamma": gamma,
        "gamma_protocol": protocol,
        "gamma_predictor": I1,
        **extra,
        "I1": I1,
        "I2": I2,
        "E0": levels.E0,
        "E1": levels.E1,
        "gap": levels.gap,
        "overlaps": {
            "s_ground": float(levels.s_overlap[0]),
            "s_excited": float(levels.s_overlap[1]),
            "w_ground": float(levels.w_overlap[0]),
            "w_excited": float(levels.w_overlap[1]),
        },
        "t_opt": t_opt,
        "p_opt": p_opt,
        "runtime": t_opt / p_opt,
        "d_s": ds if math.isfinite(ds) else None,
        "regime": regime.regime,
        "predicted_runtime": regime.complexity(),
        "sum_rules": levels.sum_rules(),
        "n_weighted_levels": len(levels.energies),
        "n_silent_levels": len(levels.silent_levels),
        "t_opt_convention": "first local maximum above 1e-06",
    }
    write_text(args.report, json_text(report), out)
    if args.dynamics:
        t_max = args.t_max if args.t_max is not None else 2.0 * t_opt
        ts = np.linspace(0.0, t_max, args.t_points)
        probs = search.probability(cfg, levels, ts)
        write_text(args.dynamics, csv_text(["t", "probability"], zip(ts.tolist(), probs.tolist())), out)
    return 0


def cmd_sweep(args, out) -> int:
    net = _network(args)
    w = _target(net, args.target)
    spec = spectra.network_spectrum(net)
    I1 = spectra.zeta_spectral(spec, 1).value
    grid = search.sweep_grid(I1, args.points_per_decade, args.decades)
    res = search.gamma_sweep(net, w, grid, spec=spec)
    header = ["gamma", "s_overlap_ground", "s_overlap_excited", "gap", "crossing_gamma",
              "gamma_predictor", "diagnostic"]
    rows = [(p.gamma, p.s_overlap_ground, p.s_overlap_excited, p.gap, res.crossing, res.gamma_predictor,
             res.diagnostic) for p in res.points]
    write_text(args.output, csv_text(header, rows), out)
    if res.diagnostic:
        print(f"sweep: {res.diagnostic}", file=sys.stderr)
    return 0


def cmd_scaling(args, out) -> int:
    fam = args.family
    if fam == "complete":
        _require(args, "sizes")
        series = scaling.run_series("complete", args.sizes, protocol=args.protocol, threads=args.threads)
    elif fam == "ring":
        _require(args, "sizes")
        series = scaling.run_series("lattice", args.sizes, dim=1, protocol=args.protocol, threads=args.threads)
    elif fam in ("lattice5d", "lattice"):
        _require(args, "L")
        dim = 5 if fam == "lattice5d" else args.dim
        series = scaling.run_series("lattice", args.L, dim=dim, protocol=args.protocol, threads=args.threads)
    elif fam == "mk":
        _require(args, "b", "g")
        series = scaling.run_series("mk", args.g, b=args.b, protocol=args.protocol, threads=args.threads)
    else:
        raise CLIError(f"scaling does not support family {fam!r}")
    rows = [scaling.record_row(r) for r in series.records]
    write_text(args.series, csv_text(scaling.record_fields(), rows), out)
    fits = []
    for q in args.fit:
        fit = scaling.fit_exponent(series, q)
        fits.append(fit.as_dict())
    failed = [r for r in series.records if not r.ok]
    for r in failed:
        print(f"scaling: N={r.N} failed: {r.error}", file=sys.stderr)
    report = {"family": fam, "params": series.params, "protocol": series.protocol, "fits": fits}
    write_text(args.fit_out, json_text(report), out)
    return 0


def cmd_profile(args, out) -> int:
    net = _network(args)
    if net.site_level is None:
        raise CLIError("profile needs a hierarchical (mk) network")
    spec = spectra.network_spectrum(net, need_vectors=True)
    prof = scaling.overlap_profile(net, spec, args.level)
    text = csv_text(["i", "lambda_i", "mean_rescaled_overlap", "level"], prof.rows())
    write_text(args.output, text, out)
    dev = float(np.max(np.abs(prof.completeness - 1.0)))
    flag = "ok" if dev < 1e-9 else "FAIL"
    print(f"profile: level {args.level}, {prof.n_sites} sites, {len(prof.eigenvalues)} rows, "
          f"row-sum completeness max deviation {dev:.3e} [{flag}]", file=sys.stderr)
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "spectrum": cmd_spectrum,
    "zeta": cmd_zeta,
    "search": cmd_search,
    "sweep": cmd_sweep,
    "scaling": cmd_scaling,
    "profile": cmd_profile,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qwsearch", description="Quantum-walk spatial search on lattices and "
                                     "hierarchical networks.")
    parser.add_argument("--threads", type=int, default=1, help="worker count for data-parallel steps")
    parser.add_argument("--config", help="re-run from a saved RunConfig JSON (other arguments ignored)")
    parser.add_argument("--save-config", help="write the RunConfig JSON for this invocation")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("gen", help="write a network edge-list file")
    _add_family(p)
    p.add_argument("-o", "--output")

    p = sub.add_parser("spectrum", help="Laplacian eigenvalues (and weights at a target) as CSV")
    _add_family(p)
    p.add_argument("--target")
    p.add_argument("--dense", action="store_true", help="force dense eigendecomposition")
    p.add_argument("-o", "--output")

    p = sub.add_parser("zeta", help="spectral zeta values I_j as JSON")
    _add_family(p)
    p.add_argument("--j", type=_int_list, default=[1, 2])
    p.add_argument("--route", choices=("spectral", "logdet", "both"), default="both")
    p.add_argument("-o", "--output")

    p = sub.add_parser("search", help="search report JSON and dynamics CSV")
    _add_family(p)
    p.add_argument("--gamma", default="auto", help="hopping rate, or 'auto'")
    p.add_argument("--protocol", choices=scaling.PROTOCOLS, default="predictor")
    p.add_argument("--target", default="representative")
    p.add_argument("--report", help="report JSON path (default stdout)")
    p.add_argument("--dynamics", help="dynamics CSV path")
    p.add_argument("--t-points", type=int, default=201)
    p.add_argument("--t-max", type=float)

    p = sub.add_parser("sweep", help="gamma sweep of the ground/excited overlaps as CSV")
    _add_family(p)
    p.add_argument("--target", default="representative")
    p.add_argument("--points-per-decade", type=int, default=40)
    p.add_argument("--decades", type=float, default=1.0)
    p.add_argument("-o", "--output")

    p = sub.add_parser("scaling", help="size series CSV and power-law fit JSON")
    p.add_argument("family", choices=("complete", "ring", "lattice5d", "lattice", "mk"))
    p.add_argument("--sizes", type=_int_list)
    p.add_argument("--L", type=_int_list)
    p.add_argument("--dim", type=int, default=5)
    p.add_argument("--b", type=int)
    p.add_argument("--g", type=_int_list)
    p.add_argument("--protocol", choices=scaling.PROTOCOLS, default="predictor")
    p.add_argument("--fit", type=lambda s: s.split(","), default=["runtime"],
                   help="comma list from " + ",".join(SERIES_QUANTITIES))
    p.add_argument("--series", help="series CSV path (default stdout)")
    p.add_argument("--fit-out", help="fit JSON path (default stdout)")

    p = sub.add_parser("profile", help="hierarchy-level overlap profile CSV")
    _add_family(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("-o", "--output")
    return parser


def _run_config(args) -> dict:
    cfg = dict(vars(args))
    for key in ("config", "save_config"):
        cfg.pop(key, None)
    return cfg


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        if loaded.get("command") not in COMMANDS:
            parser.error(f"config {args.config} has no valid command")
        args = argparse.Namespace(**{**loaded, "config": None, "save_config": args.save_config})
    elif args.command is None:
        parser.error("a command is required")
    if args.save_config:
        with open(args.save_config, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(_run_config(args), sort_keys=True, indent=2) + "\n")
    if getattr(args, "fit", None):
        bad = [q for q in args.fit if q not in scaling.QUANTITIES]
        if bad:
            parser.error(f"unknown fit quantity {bad[0]!r}")
    try:
        return COMMANDS[args.command](args, out)
    except (CLIError, netgen.NetworkError, spectra.SpectrumError, search.SearchError,
            scaling.InsufficientDataError, ValueError, OSError) as exc:
        print(f"qwsearch {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
