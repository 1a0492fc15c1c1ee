"""Command-line entry point: ``lab run|sweep <config>``, ``lab gallery list``, ``lab selftest``."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import _backend
from .errors import LabError
from .experiment import FAMILIES, load_config, run_experiment


def _cmd_run(args, sweep: bool) -> int:
    config = load_config(args.config)
    if args.output:
        from dataclasses import replace
        config = replace(config, output_path=args.output)
    status, report = run_experiment(config, sweep=sweep)
    n = len(report["violations"])
    print(f"{len(report['results'])} cells, {n} violation(s); output in {config.output_path}")
    for v in report["violations"]:
        print(f"  violation [{v['check']}] lambda={v['lambda']!r} order={v['order']}: {v['detail']}",
              file=sys.stderr)
    return status


def _cmd_gallery(args) -> int:
    for name, info in FAMILIES.items():
        print(f"{name:<20} size={info['size']:<11} defaults={json.dumps(info['params'], sort_keys=True)}")
    return 0


def selftest() -> list:
    """Quick end-to-end checks; returns ``(name, passed, detail)`` triples."""
    from . import cayley, gallery, hankel, lab, liaw_treil
    from ._eigkernel_py import eigh_kernel as py_kernel
    from .spectral import SymOp, eig_sym

    out = []
    rng = np.random.default_rng(1)
    g = rng.standard_normal((30, 30))
    a = g + g.T
    ref = np.linalg.eigvalsh(a)
    e = eig_sym(SymOp(a))
    out.append(("eigensolver", bool(np.max(np.abs(e.values - ref)) < 1e-10), _backend.BACKEND))
    d_py = np.sort(py_kernel(a)[0])
    out.append(("python kernel", bool(np.max(np.abs(d_py - ref)) < 1e-10), ""))
    p = gallery.diag_example_one(6, 2)
    _, r = lab.proj_diff(p.T, p.S, -1.2)
    out.append(("rank-bound example", (r.dim_ker_minus_I, r.dim_ker_plus_I) == (2, 0), ""))
    a0, a1, _, _ = gallery.krein_galerkin(20)
    x0, x1 = gallery.krein_exact_galerkin(20)
    dev = max(np.abs(a0 - x0).max(), np.abs(a1 - x1).max())
    out.append(("Krein assembly", bool(dev < 1e-10), f"{dev:.1e}"))
    res = gallery.laguerre_reference_apply(3, np.linspace(0.5, 10, 8))
    out.append(("Laguerre identity", bool(res < 1e-6), f"{res:.1e}"))
    rp = gallery.random_pair(20, 1, 3)
    dev = cayley.verify_reduction(rp.T, rp.S, 0.1)
    out.append(("resolvent reduction", bool(dev < 1e-9), f"{dev:.1e}"))
    phi = rp.phi[0]
    t = liaw_treil.liaw_treil_transform(rp.T, phi, 0.7, [0.3, -1.0, 0.5, 2.0])
    out.append(("rank-one transform", bool(t.discrepancy < 1e-8), f"{t.discrepancy:.1e}"))
    cd = hankel.commutator_defect(hankel.hankel_from_symbol(hankel.hilbert_symbol(8)))
    out.append(("Hankel commutator", bool(cd.interior_norm < 1e-12), ""))
    return out


def _cmd_selftest(args) -> int:
    ok = True
    for name, passed, detail in selftest():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  ({detail})" if detail else ""))
    return 0 if ok else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        p = sub.add_parser(name, help=f"{name} an experiment from a JSON config")
        p.add_argument("config")
        p.add_argument("-o", "--output", help="override the config's output_path")
    g = sub.add_parser("gallery", help="gallery operations")
    g.add_argument("action", choices=["list"])
    sub.add_parser("selftest", help="run quick built-in checks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("run", "sweep"):
            return _cmd_run(args, args.command == "sweep")
        if args.command == "gallery":
            return _cmd_gallery(args)
        return _cmd_selftest(args)
    except (LabError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
