"""Configurable batch experiments over spectral parameters and truncation orders."""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import cayley, gallery, lab, liaw_treil
from .errors import BadParams, LabError, NothingToCheck, ProbeExhausted
from .spectral import SymOp, default_tie_tol, eig_sym

FAMILIES = {
    "DiagExample1": {"size": "n", "params": {"n": 6, "N": 2}},
    "DiagExample2": {"size": "n", "params": {"n": 41}},
    "KreinPair": {"size": "basis_size", "params": {"basis_size": 100, "scheme": "laguerre_galerkin"}},
    "Carleman": {"size": "basis_size", "params": {"basis_size": 100, "scheme": "laguerre_galerkin",
                                                  "rank": 1, "scale": 1.0}},
    "Jacobi": {"size": "m", "params": {"m": 50, "a": 1.0, "b": 0.0, "rank": 1, "scale": 1.0}},
    "AlmostMathieu": {"size": "m", "params": {"m": 50, "kappa": 1.0, "beta": 0.6180339887498949,
                                              "theta": 0.0, "rank": 1, "scale": 1.0}},
    "DiscreteSchrodinger": {"size": "m", "params": {"m": 50, "V": 0.0, "rank": 1, "scale": 1.0}},
    "RandomSym": {"size": "n", "params": {"n": 40, "rank": 1}},
}

# optional parameters beyond the listed defaults
_EXTRA_PARAMS = {
    "DiagExample1": set(),
    "DiagExample2": set(),
    "KreinPair": {"L", "grid"},
    "Carleman": {"L", "grid", "seed"},
}

CHECKS = ("conditions", "halmos", "gap_count", "weyl", "krylov_kernel", "reduction",
          "liaw_treil", "correction")

DEFAULT_TOLERANCES = {
    "tau": lab.TAU,
    "pairing_tol": lab.PAIRING_TOL,
    "krylov_tol": lab.KRYLOV_TOL,
    "krylov_contract": 1e-8,
    "reduction_contract": 1e-9,
    "liaw_treil_contract": 1e-8,
    "weyl_probes": 8,
    "weyl_ratio": 0.2,
    "nudge_factor": 10.0,
    "kernel_fraction": 0.1,
    "trace_growth": 1.5,
}


@dataclass(frozen=True)
class OperatorSpec:
    """Serializable description of a gallery member.

    Families other than the two diagonal examples, the Krein pair and
    ``RandomSym`` carry a seeded random perturbation of rank ``rank`` and
    couplings of size about ``scale``.
    """

    family: str
    params: dict

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise BadParams(f"unknown family {self.family!r}; choose from {sorted(FAMILIES)}")
        allowed = set(FAMILIES[self.family]["params"]) | _EXTRA_PARAMS.get(self.family, {"seed"})
        unknown = set(self.params) - allowed
        if unknown:
            raise BadParams(f"unknown parameters {sorted(unknown)} for {self.family}")
        merged = {**FAMILIES[self.family]["params"], **self.params}
        object.__setattr__(self, "params", merged)
        self._validate()

    def _validate(self):
        p = self.params
        f = self.family
        if f == "DiagExample1" and not 1 <= p["N"] < p["n"]:
            raise BadParams("DiagExample1 needs 1 <= N < n")
        if f == "DiagExample2" and p["n"] < 7:
            raise BadParams("DiagExample2 needs n >= 7")
        if f in ("KreinPair", "Carleman") and p["basis_size"] < 2:
            raise BadParams(f"{f} needs basis_size >= 2")
        if f in ("Jacobi", "AlmostMathieu", "DiscreteSchrodinger") and p["m"] < 1:
            raise BadParams(f"{f} needs m >= 1")
        if f == "AlmostMathieu" and p["kappa"] == 0:
            raise BadParams("AlmostMathieu needs kappa != 0")
        if "rank" in p and p["rank"] < 0:
            raise BadParams("rank must be nonnegative")

    @classmethod
    def from_dict(cls, d: dict) -> "OperatorSpec":
        if not isinstance(d, dict) or "family" not in d:
            raise BadParams("operator entry needs a 'family' field")
        if set(d) - {"family", "params"}:
            raise BadParams(f"operator entry takes only 'family' and 'params', got {sorted(d)}")
        if not isinstance(d.get("params", {}), dict):
            raise BadParams("operator params must be an object")
        return cls(d["family"], dict(d.get("params", {})))

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params)}

    def sized(self, order: int | None) -> "OperatorSpec":
        """Copy with the family's size parameter set from a target ``order``.

        Lattice families use ``m = order // 2`` (order ``2m + 1``).
        """
        if order is None:
            return self
        key = FAMILIES[self.family]["size"]
        value = max(1, int(order) // 2) if key == "m" else int(order)
        return OperatorSpec(self.family, {**self.params, key: value})

    def build(self, order: int | None = None) -> gallery.OperatorPair:
        spec = self.sized(order)
        p, f = spec.params, spec.family
        seed = int(p.get("seed", 0))
        if f == "DiagExample1":
            return gallery.diag_example_one(p["n"], p["N"])
        if f == "DiagExample2":
            return gallery.diag_example_two(p["n"])
        if f == "KreinPair":
            return gallery.krein_pair(p["basis_size"], p["scheme"], L=p.get("L"), grid=p.get("grid"))
        if f == "RandomSym":
            return gallery.random_pair(p["n"], p["rank"], seed)
        if f == "Carleman":
            T = gallery.carleman(p["basis_size"], p["scheme"], L=p.get("L", 40.0), grid=p.get("grid"))
        elif f == "Jacobi":
            T = gallery.jacobi(p["a"], p["b"], p["m"])
        elif f == "AlmostMathieu":
            T = gallery.almost_mathieu(p["kappa"], p["beta"], p["theta"], p["m"])
        else:
            T = gallery.schrodinger(p["V"], p["m"])
        return _perturb(T, p["rank"], seed, p["scale"], family=f)


def _perturb(T: SymOp, rank: int, seed: int, scale: float, **meta) -> gallery.OperatorPair:
    n = T.order
    if rank > n:
        raise BadParams("rank exceeds the order")
    if rank == 0:
        return gallery.OperatorPair(T, SymOp.zeros(n), 0, None, (), dict(meta))
    rng = np.random.default_rng(seed)
    phi = gallery.orthonormalize(rng.standard_normal((rank, n)))
    alphas = scale * rng.choice([-1.0, 1.0], rank) * rng.uniform(0.5, 1.0, rank)
    S = SymOp((phi.T * alphas) @ phi)
    return gallery.OperatorPair(T, S, rank, phi, tuple(alphas), dict(meta))


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class ExperimentConfig:
    operator: OperatorSpec
    lambdas: object
    orders: tuple
    checks: tuple = ()
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    output_path: str = "lab_out"
    interval_kind: str = "open_below"
    tie_policy: str = "reject"

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise BadParams("config must be a JSON object")
        unknown = set(d) - {"operator", "lambdas", "orders", "checks", "tolerances", "seed",
                            "output_path", "interval_kind", "tie_policy"}
        if unknown:
            raise BadParams(f"unknown config keys {sorted(unknown)}")
        if "operator" not in d or "lambdas" not in d:
            raise BadParams("config needs 'operator' and 'lambdas'")
        op = OperatorSpec.from_dict(d["operator"])
        if "seed" not in op.params and op.family not in ("DiagExample1", "DiagExample2", "KreinPair"):
            op = OperatorSpec(op.family, {**op.params, "seed": int(d.get("seed", 0))})
        orders = d.get("orders")
        if orders is None:
            orders = [op.build().order]
        orders = tuple(int(o) for o in orders)
        if not orders or any(o < 1 for o in orders):
            raise BadParams("orders must be a nonempty list of positive integers")
        lambdas = d["lambdas"]
        if isinstance(lambdas, list):
            if not lambdas:
                raise BadParams("lambdas must be nonempty")
            lambdas = [float(x) for x in lambdas]
        elif isinstance(lambdas, dict) and "grid" in lambdas:
            g = lambdas["grid"]
            if int(g.get("count", 0)) < 1 or not float(g["lo"]) <= float(g["hi"]):
                raise BadParams("grid needs lo <= hi and count >= 1")
            lambdas = {"grid": {"lo": float(g["lo"]), "hi": float(g["hi"]), "count": int(g["count"]),
                                "avoid_ties": bool(g.get("avoid_ties", True))}}
        else:
            raise BadParams("lambdas must be a list or {'grid': {...}}")
        checks = tuple(d.get("checks", ()))
        bad = set(checks) - set(CHECKS)
        if bad:
            raise BadParams(f"unknown checks {sorted(bad)}")
        tol = dict(d.get("tolerances", {}))
        unknown_tol = set(tol) - set(DEFAULT_TOLERANCES) - {"tie_tol"}
        if unknown_tol:
            raise BadParams(f"unknown tolerances {sorted(unknown_tol)}")
        if any(not isinstance(v, (int, float)) or v <= 0 for v in tol.values()):
            raise BadParams("tolerances must be positive numbers")
        kind = d.get("interval_kind", "open_below")
        policy = d.get("tie_policy", "reject")
        if kind not in ("open_below", "closed_below") or policy not in ("reject", "resolve"):
            raise BadParams("bad interval_kind or tie_policy")
        return cls(op, lambdas, orders, checks, tol, int(d.get("seed", 0)),
                   str(d.get("output_path", "lab_out")), kind, policy)

    def resolved_tolerances(self) -> dict:
        return {**DEFAULT_TOLERANCES, **self.tolerances}

    def echo(self) -> dict:
        return {
            "operator": self.operator.to_dict(),
            "lambdas": self.lambdas,
            "orders": list(self.orders),
            "checks": list(self.checks),
            "tolerances": self.resolved_tolerances(),
            "seed": self.seed,
            "output_path": self.output_path,
            "interval_kind": self.interval_kind,
            "tie_policy": self.tie_policy,
        }


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BadParams(f"config is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(data)


# ---------------------------------------------------------------- lambda grids

def nudge_off_ties(points, eigenvalues, step: float) -> list:
    """Move grid points lying within ``step`` of an eigenvalue to distance ``step``.

    The point moves into the spectral gap on the side it already sits on.
    When that gap is narrower than ``2 step`` it goes to the gap midpoint.
    """
    ev = np.unique(np.asarray(eigenvalues, dtype=np.float64))
    near = step * (1 - 1e-9)
    out = []
    for p in map(float, points):
        if ev.size:
            i = int(np.argmin(np.abs(ev - p)))
            e = ev[i]
            if abs(e - p) < near:
                if p >= e:
                    other, sign = (ev[i + 1] if i + 1 < ev.size else math.inf), 1.0
                else:
                    other, sign = (ev[i - 1] if i > 0 else -math.inf), -1.0
                p = e + sign * step if abs(other - e) > 2 * step else 0.5 * (e + other)
        out.append(float(p))
    return out


def resolve_lambdas(config: ExperimentConfig, pairs: dict) -> list:
    if isinstance(config.lambdas, list):
        return list(config.lambdas)
    g = config.lambdas["grid"]
    pts = list(np.linspace(g["lo"], g["hi"], g["count"]))
    if not g["avoid_ties"]:
        return [float(x) for x in pts]
    eigs, tols = [], []
    for pair in pairs.values():
        for op in (pair.T, pair.perturbed):
            e = eig_sym(op)
            eigs.extend(e.values.tolist())
            tols.append(default_tie_tol(e))
    tie_tol = config.tolerances.get("tie_tol", max(tols))
    step = config.resolved_tolerances()["nudge_factor"] * tie_tol
    return nudge_off_ties(pts, eigs, step)


# ---------------------------------------------------------------- checks

def _unit_phi(pair):
    if pair.phi is None or pair.rank_S != 1 or pair.phi.shape[0] != 1:
        return None, None
    v = pair.phi[0]
    nv = np.linalg.norm(v)
    return v / nv, pair.alphas[0] * nv * nv


def _run_checks(pair, lam, D, report, config, tol, rng_seed) -> tuple:
    kind, policy = config.interval_kind, config.tie_policy
    out, violations = {}, []

    def violate(check, msg):
        violations.append({"check": check, "lambda": lam, "order": pair.order, "detail": msg})

    for check in config.checks:
        if check == "conditions":
            v = lab.check_conditions(report, pair.rank_S)
            bound_ok = max(report.dim_ker_minus_I, report.dim_ker_plus_I) <= pair.rank_S
            out[check] = {"c3": v.c3, "c2_proxy": v.c2_proxy, "c1_proxy": list(v.c1_proxy),
                          "N": pair.rank_S, "dims_within_rank": bound_ok}
            if not (v.c3 and bound_ok):
                violate(check, f"+-1 eigenspace dimensions exceed rank {pair.rank_S}")
        elif check == "halmos":
            try:
                h = lab.halmos_split(D, tol["tau"])
            except LabError as exc:
                out[check] = {"error": str(exc)}
                violate(check, str(exc))
                continue
            out[check] = {"dim_ker": h.dim_ker, "dim_plus_one": h.dim_plus_one,
                          "dim_minus_one": h.dim_minus_one, "generic_count": len(h.generic_spectrum),
                          "pair_defect": h.pair_defect}
            if h.pair_defect > tol["pairing_tol"]:
                violate(check, f"pair_defect {h.pair_defect:.3e}")
        elif check == "gap_count":
            ev = eig_sym(pair.T).values
            below, above = ev[ev < lam], ev[ev > lam]
            if below.size == 0 or above.size == 0:
                out[check] = {"skipped": "lambda outside the spectral hull of T"}
                continue
            interval = (float(below[-1]), float(above[0]))
            count = lab.gap_eig_count(pair.T, pair.S, interval)
            out[check] = {"interval": list(interval), "count": count, "bound": pair.rank_S}
            if count > pair.rank_S:
                violate(check, f"{count} eigenvalues in a gap, rank {pair.rank_S}")
        elif check == "weyl":
            vecs = pair.phi if pair.phi is not None else np.zeros((0, pair.order))
            alphas = pair.alphas if pair.phi is not None else ()
            # each probe consumes one direction plus one Krylov power per vector
            count = min(int(tol["weyl_probes"]), pair.order // (vecs.shape[0] + 1))
            if count < 2:
                out[check] = {"skipped": "order too small for two probes"}
                continue
            try:
                norms = lab.weyl_probe(pair.T, vecs, lam, count, rng_seed,
                                       alphas=alphas, kind=kind, tie_policy=policy)
            except ProbeExhausted as exc:
                out[check] = {"skipped": str(exc)}
                continue
            ok = norms[-1] <= tol["weyl_ratio"] * norms[0] or norms[0] <= tol["tau"]
            out[check] = {"norms": norms, "decayed": ok}
            if not ok:
                violate(check, f"probe norms {norms[0]:.3e} -> {norms[-1]:.3e}")
        elif check == "krylov_kernel":
            phi, alpha = _unit_phi(pair)
            if phi is None:
                out[check] = {"skipped": "needs a rank-one perturbation"}
                continue
            try:
                worst = lab.krylov_kernel_check(pair.T, phi, alpha, [lam], kind=kind,
                                                tie_policy=policy, tol=tol["krylov_tol"])
            except NothingToCheck:
                out[check] = {"skipped": "phi is cyclic"}
                continue
            out[check] = {"max_norm": worst}
            if worst > tol["krylov_contract"]:
                violate(check, f"complement norm {worst:.3e}")
        elif check == "reduction":
            dev = max(cayley.verify_reduction(pair.T, pair.S, lam, kind, d, policy)
                      for d in cayley.DIRECTIONS)
            out[check] = {"max_abs_deviation": dev}
            if dev > tol["reduction_contract"]:
                violate(check, f"deviation {dev:.3e}")
        elif check == "liaw_treil":
            phi, alpha = _unit_phi(pair)
            if phi is None:
                out[check] = {"skipped": "needs a rank-one perturbation"}
                continue
            coeffs = np.random.default_rng(rng_seed).standard_normal(7)
            try:
                r = liaw_treil.liaw_treil_transform(pair.T, phi, alpha, coeffs)
            except LabError as exc:
                out[check] = {"skipped": f"{type(exc).__name__}: {exc}"}
                continue
            out[check] = {"discrepancy": r.discrepancy, "unitarity_defect": r.unitarity_defect}
            if max(r.discrepancy, r.unitarity_defect) > tol["liaw_treil_contract"]:
                violate(check, f"discrepancy {r.discrepancy:.3e}")
        elif check == "correction":
            K = lab.build_correction(D, None, tol["tau"])
            c = lab.verify_correction(D, K, None, tol["tau"])
            out[check] = {"ok": c.ok, "in_unit_interval": c.in_unit_interval, "balanced": c.balanced,
                          "within_budget": c.within_budget, "kernel_preserved": c.kernel_preserved,
                          "shifts": list(c.shifts)}
            if not c.ok:
                violate(check, "correction postconditions failed")
    return out, violations


def _cell(pair, lam, config, tol, seed):
    D, report = lab.proj_diff(pair.T, pair.S, lam, config.interval_kind, config.tie_policy,
                              tau=tol["tau"], tie_tol=config.tolerances.get("tie_tol"),
                              rank_S=pair.rank_S)
    checks, violations = _run_checks(pair, lam, D, report, config, tol, seed)
    row = {"lambda": lam, "order": pair.order, "report": report.to_dict(),
           "checks": checks, "tolerances": tol}
    return row, violations


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("LAB_THREADS", "1")))
    except ValueError:
        return 1


def evaluate(config: ExperimentConfig) -> dict:
    """Evaluate every (lambda, order) cell; returns the report as a dict.

    Cells run on a thread pool capped by ``LAB_THREADS``; rows come back in
    (lambda, order) order regardless of completion order.
    """
    tol = config.resolved_tolerances()
    pairs = {o: config.operator.build(o) for o in config.orders}
    lambdas = resolve_lambdas(config, pairs)
    cells = [(i, j, lam, o) for i, lam in enumerate(lambdas) for j, o in enumerate(config.orders)]
    seeds = np.random.SeedSequence(config.seed).generate_state(len(cells))

    def task(k):
        _, _, lam, o = cells[k]
        return _cell(pairs[o], lam, config, tol, int(seeds[k]))

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        outcomes = list(pool.map(task, range(len(cells))))
    results = [row for row, _ in outcomes]
    violations = [v for _, vs in outcomes for v in vs]
    return {"config_echo": config.echo(), "lambdas_used": lambdas, "results": results,
            "violations": violations}


def _trend_rows(report: dict, tol: dict) -> list:
    rows = {}
    for r in report["results"]:
        rows.setdefault(r["lambda"], []).append(r)
    trends = []
    for lam, cells in rows.items():
        cells.sort(key=lambda r: r["report"]["order"])
        orders = [c["report"]["order"] for c in cells]
        ker = [c["report"]["dim_ker"] for c in cells]
        ratio = [k / n for k, n in zip(ker, orders)]
        trace = [c["report"]["trace_norm"] for c in cells]
        mins = [c["report"]["min_abs_eig"] for c in cells]
        k0 = cells[0]["report"]["rank_S"]
        if max(ker) <= k0:
            kv = "BoundedKernel"
        elif all(b >= a for a, b in zip(ratio, ratio[1:])) and ratio[-1] >= tol["kernel_fraction"]:
            kv = "GrowingKernel"
        else:
            kv = "Unstable"
        grows = all(b >= a for a, b in zip(trace, trace[1:])) and trace[-1] > tol["trace_growth"] * trace[0]
        tv = "TraceGrowing" if grows else "TraceBounded"
        trends.append({"lambda": lam, "orders": orders, "dim_ker_fraction": ratio,
                       "trace_norm": trace, "min_abs_eig": mins, "kernel_verdict": kv,
                       "trace_verdict": tv, "kernel_k0": k0})
    return trends


def sweep_report(config: ExperimentConfig) -> dict:
    if len(config.orders) < 3:
        raise BadParams("a sweep needs at least three orders")
    report = evaluate(config)
    report["trends"] = _trend_rows(report, config.resolved_tolerances())
    return report


# ---------------------------------------------------------------- output

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def write_outputs(report: dict, out_dir, name: str = "report") -> tuple:
    """Write ``<name>.json`` and ``spectra.csv`` into ``out_dir``; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = dict(_jsonable(report))
    doc["timestamp"] = datetime.now(timezone.utc).isoformat()
    jpath = out / f"{name}.json"
    jpath.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    cpath = out / "spectra.csv"
    with open(cpath, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "order", "eig_index", "eig_value"])
        for r in report["results"]:
            for i, v in enumerate(r["report"]["spectrum"]):
                w.writerow([repr(float(r["lambda"])), r["order"], i, repr(float(v))])
    return jpath, cpath


def run_experiment(config: ExperimentConfig, *, sweep: bool = False) -> tuple:
    """Evaluate and write reports. Returns ``(exit_status, report)``: 0 clean, 2 on violations."""
    report = sweep_report(config) if sweep else evaluate(config)
    write_outputs(report, config.output_path, "sweep" if sweep else "report")
    return (2 if report["violations"] else 0), report


__all__ = ["FAMILIES", "CHECKS", "DEFAULT_TOLERANCES", "OperatorSpec", "ExperimentConfig",
           "load_config", "nudge_off_ties", "resolve_lambdas", "evaluate", "sweep_report",
           "write_outputs", "run_experiment"]
