"""Command-line driver for sweeps, curve reports, and validation.

Exit codes: 0 success, 1 validation failure, 2 usage error,
3 run ended degenerate or unconverged where convergence was expected.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections import defaultdict

import numpy as np

from hypisop import candidates as cand
from hypisop import evolve as ev
from hypisop import geometry as geo
from hypisop import mesh as msh
from hypisop import sweep as sw


def _parse_config_file(path: str) -> dict:
    items = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            items[key.strip()] = value.strip()
    return items


def _make_config(args) -> ev.EvolveConfig:
    items = _parse_config_file(args.config) if args.config else {}
    cfg = ev.EvolveConfig.from_mapping(items)
    if getattr(args, "max_iter", None) is not None:
        cfg.max_iter = args.max_iter
    return cfg


def _parse_eps_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("--eps-range must be lo:hi:n")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1 or hi < lo:
        raise ValueError("--eps-range must be lo:hi:n with hi >= lo, n >= 1")
    return np.linspace(lo, hi, n)


def _record_line(rec: sw.SweepRecord) -> str:
    return (f"{rec.case} eps={rec.epsilon:.6f} V={rec.volume:.8f} "
            f"A={rec.area:.8f} F={rec.facets} it={rec.iterations} "
            f"{rec.status} ortho={rec.ortho_deficit:.4f}")


def cmd_constants(args) -> int:
    g = geo.cell_geometry()
    print(f"cube_radius       r = {g.r!r}")
    print(f"cube_center       c = {g.c!r}")
    print(f"max_inradius  c - r = {g.c - g.r!r}")
    print(f"face_corner       = {geo.CORNER!r}")
    print(f"quarter_square_area = {geo.quarter_square_area()!r}")
    print(f"max_sphere_volume/8 = {geo.sphere_volume_exact(geo.EPS_MAX) / 8.0!r}")
    print(f"max_sphere_area/8   = {geo.sphere_area_exact(geo.EPS_MAX) / 8.0!r}")
    return 0


def cmd_cellvol(args) -> int:
    vb, vc = sw.cell_volume()
    print(f"V(eighth) = {vb!r}")
    print(f"V(cell)   = {vc!r}")
    return 0


def cmd_validate(args) -> int:
    failed = False
    for name, ok, res in sw.validate():
        print(f"{name:24s} {'PASS' if ok else 'FAIL'}  residual={res:.3e}")
        failed |= not ok
    return 1 if failed else 0


def cmd_evolve(args) -> int:
    cfg = _make_config(args)
    m = cand.initial_mesh(args.case, args.eps)
    res = ev.evolve(m, cfg)
    rec = sw.SweepRecord(
        case=args.case, epsilon=args.eps, volume_target=m.target_volume,
        volume=res.volume, area=res.area, facets=res.mesh.n_facets,
        iterations=res.iterations, status=res.status,
        ortho_deficit=res.ortho_deficit,
    )
    print(_record_line(rec))
    if args.out:
        sw.write_csv([rec], args.out)
    if args.mesh_out:
        msh.write_off(res.mesh, args.mesh_out)
    return 0 if res.status == ev.CONVERGED else 3


def cmd_sweep(args) -> int:
    cfg = _make_config(args)
    if args.eps_range:
        grid = _parse_eps_range(args.eps_range)
    else:
        grid = sw.eps_grid(args.case, 12)
    records = sw.run_sweep(args.case, grid, cfg)
    for rec in records:
        print(_record_line(rec))
    if args.out:
        sw.write_csv(records, args.out)
    return 0


def _load_grouped(paths) -> dict:
    by_case = defaultdict(list)
    for path in paths:
        for rec in sw.read_csv(path):
            by_case[rec.case].append(rec)
    return by_case


def cmd_isop(args) -> int:
    by_case = _load_grouped(args.csv)
    families = {c: by_case[c] for c in ("aaa", "abb", "bbe") if c in by_case}
    curve = sw.isop_curve(families)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("volume,area,winner\n")
            for v, a, w in zip(curve.volumes, curve.areas, curve.winners):
                fh.write(f"{float(v)!r},{float(a)!r},{w}\n")
    for pair in (("aaa", "abb"), ("abb", "bbe")):
        if pair[0] in families and pair[1] in families:
            for v, dv in sw.turning_points(families[pair[0]], families[pair[1]]):
                print(f"turning point {pair[0]}/{pair[1]}: V = {v:.4f} +- {dv:.4f}")
    return 0


def cmd_gaps(args) -> int:
    by_case = _load_grouped(args.csv)
    families = {c: by_case[c] for c in ("aaa", "abb", "bbe") if c in by_case}
    curve = sw.isop_curve(families)
    if "bbd" in by_case:
        gap = sw.gap_report(by_case["bbd"], curve)
        print(f"min A_bbd / A_isop = {gap:.4f}")
    if "acc" in by_case and "bbd" in by_case:
        lo, hi = sw.ratio_range(by_case["acc"], by_case["bbd"])
        print(f"A_acc / A_bbd in [{lo:.4f}, {hi:.4f}]")
    if "abc" in by_case and "bbd" in by_case:
        lo, _ = sw.ratio_range(by_case["abc"], by_case["bbd"])
        print(f"min A_abc / A_bbd = {lo:.4f}")
    return 0


def cmd_export_mesh(args) -> int:
    m = cand.initial_mesh(args.case, args.eps)
    msh.write_off(m, args.mesh_out)
    print(f"wrote {args.mesh_out}: {m.n_vertices} vertices, "
          f"{m.n_facets} facets")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypisop",
        description="Isoperimetric surface sweeps in a hyperbolic cubic cell",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("constants", help="print closed-form cell constants")
    sub.add_parser("cellvol", help="compute the cell volumes by quadrature")
    sub.add_parser("validate", help="run the closed-form oracle suite")

    p = sub.add_parser("evolve", help="evolve one candidate to convergence")
    p.add_argument("--case", required=True, choices=cand.CASES)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--config")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--out")
    p.add_argument("--mesh-out")

    p = sub.add_parser("sweep", help="sweep one family over a parameter grid")
    p.add_argument("--case", required=True, choices=cand.CASES)
    p.add_argument("--eps-range", help="lo:hi:n grid of shape parameters")
    p.add_argument("--config")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--out")

    p = sub.add_parser("isop", help="lower envelope and turning points")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out")

    p = sub.add_parser("gaps", help="curve separation reports")
    p.add_argument("csv", nargs="+")

    p = sub.add_parser("export-mesh", help="write an initial mesh as OFF")
    p.add_argument("--case", required=True, choices=cand.CASES)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--mesh-out", required=True)

    return parser


_COMMANDS = {
    "constants": cmd_constants,
    "cellvol": cmd_cellvol,
    "validate": cmd_validate,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "isop": cmd_isop,
    "gaps": cmd_gaps,
    "export-mesh": cmd_export_mesh,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
