"""Shared operator suite: one or more instances of every gallery family."""
import numpy as np

from projlab.experiment import OperatorSpec, nudge_off_ties
from projlab.spectral import default_tie_tol, eig_sym

SPECS = [
    ("DiagExample1", {"n": 30, "N": 3}),
    ("DiagExample2", {"n": 41}),
    ("KreinPair", {"basis_size": 100}),
    ("KreinPair", {"basis_size": 120, "scheme": "nystrom", "L": 30.0, "grid": 120}),
    ("Carleman", {"basis_size": 80, "rank": 1, "seed": 1}),
    ("Carleman", {"basis_size": 80, "scheme": "nystrom", "grid": 96, "rank": 2, "seed": 2}),
    ("Jacobi", {"m": 40, "a": 1.0, "b": 0.0, "rank": 2, "seed": 3}),
    ("AlmostMathieu", {"m": 60, "kappa": 1.0, "rank": 1, "seed": 4}),
    ("AlmostMathieu", {"m": 60, "kappa": 0.5, "theta": 0.2, "rank": 3, "seed": 5}),
    ("DiscreteSchrodinger", {"m": 50, "V": 0.0, "rank": 1, "seed": 6}),
    ("RandomSym", {"n": 40, "rank": 0, "seed": 7}),
    ("RandomSym", {"n": 50, "rank": 3, "seed": 8}),
]


def suite_pairs():
    for family, params in SPECS:
        yield f"{family}{params}", OperatorSpec(family, params).build()


def lambda_grid(pair, count=11):
    eT, eTS = eig_sym(pair.T), eig_sym(pair.perturbed)
    lo = min(eT.values[0], eTS.values[0]) - 0.25
    hi = max(eT.values[-1], eTS.values[-1]) + 0.25
    step = 10 * max(default_tie_tol(eT), default_tie_tol(eTS))
    pts = np.linspace(lo, hi, count)
    return nudge_off_ties(pts, np.concatenate([eT.values, eTS.values]), step)
