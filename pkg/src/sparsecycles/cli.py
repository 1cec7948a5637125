"""Batch command-line driver.

Each subcommand runs one reproducible job (a certificate, the summary
table, a simulation cross-check, Hopf analysis, bound formulas, or an oval
dump), prints a JSON report, writes it to <out>/report.json, and exits 0
exactly when every claim the job checks came out true.  Reports are
deterministic byte for byte apart from the trailing timing block; bulk
numeric payloads go to CSV files next to the report.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import __version__
from .construct import DEFAULT_M_CAP, CycleCertificate, certify, discover_annuli
from .dynamics import (
    displacement_profile,
    first_order_check,
    hopf_analysis,
    verify_counts,
    verify_m4_cycles,
)
from .families import (
    SECOND_ORDER_A,
    five_monomial_field,
    four_monomial_field,
    nested_cycle_count,
    optimal_split,
    perturbed_field,
    quadratic_lower_bound,
)
from .geometry import trace_oval

FACTOR_CONVENTION_NOTE = (
    "factor convention: the odd polynomial of degree 2r+1 is the plain "
    "product of (x - k) over k = -r..r, whose k = 0 factor is the single "
    "leading x; no additional origin factor is appended"
)

TABLE_TARGETS = {4: 2, 5: 4, 6: 8, 7: 12, 8: 16, 9: 24, 10: 32}
TABLE_SPLITS = {5: (1, 0), 6: (2, 0), 7: (3, 0), 8: (4, 0), 9: (3, 2), 10: (4, 2)}


def _tagged(value, method: str) -> dict:
    return {"value": value, "method": method}


def _frac(q: Fraction, method: str) -> dict:
    return {"value": float(q), "exact": str(q), "method": method}


def _cert_json(cert: CycleCertificate) -> dict:
    return {
        "n": cert.n,
        "r": cert.r,
        "count": _tagged(cert.count, "certificate"),
        "perturbation": {
            "a": [str(q) for q in cert.perturbation.a],
            "m": list(cert.perturbation.m),
        },
        "method_census": cert.method_census(),
        "annuli": [
            {
                "index": t.index,
                "center": list(t.center),
                "sign_changes": _tagged(t.sign_changes(), "certificate"),
                "entries": [
                    {
                        "position": e.position,
                        "sign": e.sign,
                        "method": e.method,
                        "h": e.h,
                        "alpha": e.alpha,
                        "virtual": e.virtual,
                        "value": e.value,
                        "err": e.err,
                    }
                    for e in t.entries
                ],
            }
            for t in cert.annuli
        ],
    }


def _error_block(exc: Exception) -> dict:
    return {"error": {"type": type(exc).__name__, "message": str(exc)}}


def cmd_certify(args) -> tuple[dict, bool]:
    try:
        cert = certify(args.n, args.r, m_cap=args.m_cap)
    except Exception as exc:
        return _error_block(exc), False
    expected = nested_cycle_count(args.n, args.r)
    return (
        {
            "certificate": _cert_json(cert),
            "expected_count": _tagged(expected, "certificate"),
        },
        cert.count == expected,
    )


def _table_row(m: int) -> dict:
    if m == 4:
        count = verify_m4_cycles(0.05)
        return {
            "m": 4,
            "count": _tagged(count, "simulation"),
            "target": TABLE_TARGETS[4],
            "passed": count == TABLE_TARGETS[4],
        }
    n, r = TABLE_SPLITS[m]
    cert = certify(n, r)
    return {
        "m": m,
        "n": n,
        "r": r,
        "count": _tagged(cert.count, "certificate"),
        "target": TABLE_TARGETS[m],
        "method_census": cert.method_census(),
        "passed": cert.count == TABLE_TARGETS[m],
    }


def cmd_table(args) -> tuple[dict, bool]:
    if args.rows:
        try:
            rows = sorted({int(s) for s in args.rows.split(",")})
        except ValueError:
            raise SystemExit(f"--rows expects a comma list of integers, got {args.rows!r}")
        bad = [m for m in rows if m not in TABLE_TARGETS]
        if bad:
            raise SystemExit(f"rows outside 4..10: {bad}")
    else:
        rows = sorted(TABLE_TARGETS)

    def safe_row(m: int) -> dict:
        try:
            return _table_row(m)
        except Exception as exc:
            return {"m": m, **_error_block(exc), "passed": False}

    threads = max(1, int(os.environ.get("SPARSECYCLES_THREADS", "1")))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            row_reports = list(pool.map(safe_row, rows))
    else:
        row_reports = [safe_row(m) for m in rows]

    beyond = []
    for m in range(11, 17):
        bp = quadratic_lower_bound(m)
        r0 = optimal_split(m)
        beyond.append(
            {
                "m": m,
                "simplified": _frac(bp.simplified, "certificate"),
                "refined": _frac(bp.refined, "certificate"),
                "optimal_r": r0,
                "cycles_at_split": _tagged(
                    nested_cycle_count(m - r0 - 4, r0), "certificate"
                ),
            }
        )
    results = {"rows": row_reports, "beyond_desk_scale": beyond}
    return results, all(r["passed"] for r in row_reports)


def cmd_verify(args) -> tuple[dict, bool]:
    scan = None
    if args.eps_scan:
        try:
            scan = [float(s) for s in args.eps_scan.split(",")]
        except ValueError:
            raise SystemExit(
                f"--eps-scan expects a comma list of numbers, got {args.eps_scan!r}"
            )
    try:
        cert = certify(args.n, args.r, m_cap=args.m_cap)
    except Exception as exc:
        return _error_block(exc), False
    vc = verify_counts(cert, scan)
    fo = first_order_check(cert)

    profile_files = []
    if vc.accepted_eps is not None:
        X = perturbed_field(args.r, cert.perturbation, vc.accepted_eps)
        _, _, annuli = discover_annuli(args.r)
        by_center = {
            (round(a.center[0], 6), round(a.center[1], 6)): a for a in annuli
        }
        pdir = Path(args.out) / "profiles"
        pdir.mkdir(parents=True, exist_ok=True)
        for table in cert.annuli:
            ann = by_center[
                (round(table.center[0], 6), round(table.center[1], 6))
            ]
            span = ann.level_cap - ann.h_center
            grid = [
                ann.h_center + span * (0.05 + 0.90 * j / 11) for j in range(12)
            ]
            prof = displacement_profile(X, ann, grid, vc.accepted_eps)
            name = f"n{args.n}r{args.r}_annulus{table.index}.csv"
            lines = [
                f"# center=({float(ann.center[0])!r},{float(ann.center[1])!r}) "
                f"eps={vc.accepted_eps!r}",
                "h,d",
            ]
            for s in prof.samples:
                d = "" if s.d is None else repr(float(s.d))
                lines.append(f"{float(s.h)!r},{d}")
            (pdir / name).write_text("\n".join(lines) + "\n")
            profile_files.append(f"profiles/{name}")

    results = {
        "certificate": {
            "n": cert.n,
            "r": cert.r,
            "count": _tagged(cert.count, "certificate"),
        },
        "verification": {
            "accepted_eps": vc.accepted_eps,
            "annuli": [
                {
                    "index": a.index,
                    "center": list(a.center),
                    "signs_match": a.signs_match,
                    "zeros": _tagged(list(a.zeros), "simulation"),
                    "simulated": _tagged(a.simulated, "simulation"),
                    "certificate_only": _tagged(
                        a.certificate_only, "certificate"
                    ),
                }
                for a in vc.annuli
            ],
            "simulated_total": _tagged(vc.simulated_total, "simulation"),
            "certificate_only_total": _tagged(
                vc.certificate_only_total, "certificate"
            ),
            "combined_total": _tagged(vc.combined_total, "certificate"),
        },
        "first_order": {
            "eps_pair": [fo.eps_big, fo.eps_small],
            "passed": fo.passed,
            "samples": [
                {
                    "annulus_index": s.annulus_index,
                    "alpha": s.alpha,
                    "h": s.h,
                    "integral": _tagged(s.integral, "quadrature"),
                    "integral_err": s.integral_err,
                    "d_big": _tagged(s.d_big, "simulation"),
                    "d_small": _tagged(s.d_small, "simulation"),
                    "kappa": s.kappa,
                    "checked": s.checked,
                    "sign_ok": s.sign_ok,
                    "ratio_ok": s.ratio_ok,
                }
                for s in fo.samples
            ],
        },
        "profiles": profile_files,
    }
    passed = (
        vc.accepted_eps is not None
        and vc.combined_total == cert.count
        and fo.passed
    )
    return results, passed


def cmd_hopf(args) -> tuple[dict, bool]:
    try:
        if args.family == "m4":
            rep = hopf_analysis(
                four_monomial_field, (1.0, 1.0), (-1.5, -0.5)
            )
            checks = {
                "trace_zero_at_minus_one": abs(rep.param_star + 1.0) <= 1e-9,
                "determinant_is_four": abs(rep.det - 4.0) <= 1e-8,
                "first_coefficient_positive": rep.lyapunov_sign == 1,
            }
        else:
            rep = hopf_analysis(
                lambda b: five_monomial_field(SECOND_ORDER_A, b),
                (1.0, 1.0),
                (-1.5, -0.5),
            )
            checks = {
                "trace_zero_at_minus_one": abs(rep.param_star + 1.0) <= 1e-9,
                "positive_determinant": rep.det > 0,
                "order_two_weak_focus": rep.order_two,
            }
    except Exception as exc:
        return _error_block(exc), False
    results = {
        "family": args.family,
        "report": {
            "param_star": _tagged(rep.param_star, "simulation"),
            "det": _tagged(rep.det, "simulation"),
            "omega": _tagged(rep.omega, "simulation"),
            "c3": _tagged(rep.c3, "simulation"),
            "c5": _tagged(rep.c5, "simulation"),
            "c3_scale": rep.c3_scale,
            "lyapunov_sign": rep.lyapunov_sign,
            "order_two": rep.order_two,
            "radii": list(rep.radii),
            "displacements": _tagged(list(rep.displacements), "simulation"),
        },
        "checks": checks,
    }
    return results, all(checks.values())


def cmd_bounds(args) -> tuple[dict, bool]:
    bp = quadratic_lower_bound(args.m)
    r0 = optimal_split(args.m)
    cycles = nested_cycle_count(args.m - r0 - 4, r0)
    results = {
        "m": args.m,
        "simplified": _frac(bp.simplified, "certificate"),
        "refined": _frac(bp.refined, "certificate"),
        "optimal_r": r0,
        "cycles_at_split": _tagged(cycles, "certificate"),
    }
    return results, bp.simplified <= bp.refined <= cycles


def cmd_dump_ovals(args) -> tuple[dict, bool]:
    _, _, annuli = discover_annuli(args.r)
    odir = Path(args.out) / "ovals"
    odir.mkdir(parents=True, exist_ok=True)
    files = []
    for idx, ann in enumerate(annuli, start=1):
        if args.annulus is not None and idx != args.annulus:
            continue
        span = ann.level_cap - ann.h_center
        for j in range(1, args.levels + 1):
            h = ann.h_center + span * j / (args.levels + 1)
            oval = trace_oval(ann, h)
            name = f"r{args.r}_annulus{idx}_level{j}.csv"
            lines = [
                f"# center=({float(ann.center[0])!r},{float(ann.center[1])!r}) "
                f"h={h!r} alpha={oval.alpha!r}",
                "x,y",
            ]
            lines.extend(f"{float(x)!r},{float(y)!r}" for x, y in oval.points)
            (odir / name).write_text("\n".join(lines) + "\n")
            files.append(
                {
                    "file": f"ovals/{name}",
                    "annulus": idx,
                    "h": _tagged(h, "quadrature"),
                    "alpha": _tagged(oval.alpha, "quadrature"),
                    "vertices": oval.n_vertices,
                }
            )
    return {"ovals": files}, bool(files)


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _m_at_least_9(text: str) -> int:
    v = int(text)
    if v < 9:
        raise argparse.ArgumentTypeError("the bound formulas need m >= 9")
    return v


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsecycles",
        description="certify and cross-check nested limit-cycle counts",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--out", default="out", help="report/CSV directory (default: out)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", parents=[common])
    c.add_argument("--n", type=_positive_int, required=True)
    c.add_argument("--r", type=_nonneg_int, required=True)
    c.add_argument("--m-cap", dest="m_cap", type=_positive_int,
                   default=DEFAULT_M_CAP)
    c.set_defaults(func=cmd_certify)

    t = sub.add_parser("table", parents=[common])
    t.add_argument("--rows", default="", help="comma list within 4..10")
    t.set_defaults(func=cmd_table)

    v = sub.add_parser("verify", parents=[common])
    v.add_argument("--n", type=_positive_int, required=True)
    v.add_argument("--r", type=_nonneg_int, required=True)
    v.add_argument("--eps-scan", dest="eps_scan", default="",
                   help="comma list of perturbation strengths")
    v.add_argument("--m-cap", dest="m_cap", type=_positive_int,
                   default=DEFAULT_M_CAP)
    v.set_defaults(func=cmd_verify)

    h = sub.add_parser("hopf", parents=[common])
    h.add_argument("--family", choices=("m4", "m5"), required=True)
    h.set_defaults(func=cmd_hopf)

    b = sub.add_parser("bounds", parents=[common])
    b.add_argument("--m", type=_m_at_least_9, required=True)
    b.set_defaults(func=cmd_bounds)

    d = sub.add_parser("dump-ovals", parents=[common])
    d.add_argument("--r", type=_nonneg_int, required=True)
    d.add_argument("--levels", type=_positive_int, default=6)
    d.add_argument("--annulus", type=_positive_int, default=None)
    d.set_defaults(func=cmd_dump_ovals)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    echo = " ".join(argv if argv is not None else sys.argv[1:])
    t0 = time.perf_counter()
    results, passed = args.func(args)
    # timing stays the last key so everything before it is reproducible
    report = {
        "command": echo,
        "note": FACTOR_CONVENTION_NOTE,
        "version": __version__,
        "results": results,
        "passed": passed,
        "timing": {"seconds": round(time.perf_counter() - t0, 3)},
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    text = json.dumps(report, indent=2, default=str)
    (out / "report.json").write_text(text + "\n")
    print(text)
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
