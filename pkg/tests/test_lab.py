import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import linalg as sla

from projlab.errors import (
    BadParams,
    CorrectionInfeasible,
    GapNotEmpty,
    NotAProjectionDifference,
    NothingToCheck,
    ProbeExhausted,
    TieAtThreshold,
)
from projlab.gallery import diag_example_one, jacobi, random_pair
from projlab.lab import (
    build_correction,
    check_conditions,
    classify_lambda,
    default_a_seq,
    gap_eig_count,
    halmos_split,
    krylov_kernel_check,
    proj_diff,
    verify_correction,
    weyl_probe,
)
from projlab.spectral import SymOp, eig_sym


def lapack_projector(a, lam):
    w, v = sla.eigh(a)
    keep = v[:, w < lam]
    return keep @ keep.T


def off_tie_lambda(rng, *spectra, margin=1e-6):
    allv = np.sort(np.concatenate(spectra))
    while True:
        lam = rng.uniform(allv[0] - 0.5, allv[-1] + 0.5)
        if np.min(np.abs(allv - lam)) > margin:
            return lam


# ---------------------------------------------------------------- proj_diff

def test_sharp_example():
    p = diag_example_one(6, 2)
    _, r = proj_diff(p.T, p.S, -1.2)
    assert (r.dim_ker_minus_I, r.dim_ker_plus_I) == (2, 0)
    assert r.rank_S == 2 and r.c3_satisfied_for_N[2] and not r.c3_satisfied_for_N[1]


def test_zero_perturbation_gives_zero_difference():
    t = np.diag([0.1, 0.2, 0.3])
    D, r = proj_diff(t, np.zeros((3, 3)), 0.25)
    assert not D.entries.any()
    assert r.dim_ker == 3 and r.rank_S == 0 and r.trace_norm == 0


def test_tie_policy_reject_and_resolve():
    p = diag_example_one(4, 1)
    with pytest.raises(TieAtThreshold):
        proj_diff(p.T, p.S, -0.5)
    _, r = proj_diff(p.T, p.S, -0.5, tie_policy="resolve")
    assert r.tie_policy == "resolve"


def test_proj_diff_rejects():
    with pytest.raises(BadParams):
        proj_diff(np.eye(2), np.eye(3), 0.0)
    with pytest.raises(BadParams):
        proj_diff(np.eye(2), np.eye(2), 0.0, tau=-1)


def test_report_serialization():
    p = diag_example_one(5, 1)
    _, r = proj_diff(p.T, p.S, -1.3)
    d = r.to_dict()
    assert d["lambda"] == -1.3 and "lam" not in d
    assert set(d["c3_satisfied_for_N"]) == {"0", "1", "2"}
    assert len(d["spectrum"]) == 5


@given(seed=st.integers(0, 10_000), n=st.integers(3, 30), N=st.integers(0, 3))
def test_difference_against_lapack(seed, n, N):
    pair = random_pair(n, N, seed)
    rng = np.random.default_rng(seed)
    lam = off_tie_lambda(rng, eig_sym(pair.T).values, eig_sym(pair.perturbed).values)
    D, r = proj_diff(pair.T, pair.S, lam)
    ref = lapack_projector(pair.perturbed.entries, lam) - lapack_projector(pair.T.entries, lam)
    assert np.max(np.abs(D.entries - ref)) < 1e-8
    assert r.dim_ker_minus_I <= N and r.dim_ker_plus_I <= N
    assert check_conditions(r, N).c3


@given(seed=st.integers(0, 10_000), n=st.integers(3, 25))
def test_closed_and_open_agree_off_ties(seed, n):
    pair = random_pair(n, 2, seed)
    lam = off_tie_lambda(np.random.default_rng(seed), eig_sym(pair.T).values,
                         eig_sym(pair.perturbed).values)
    d_open, _ = proj_diff(pair.T, pair.S, lam, "open_below")
    d_closed, _ = proj_diff(pair.T, pair.S, lam, "closed_below")
    assert np.max(np.abs(d_open.entries - d_closed.entries)) < 1e-12


# ---------------------------------------------------------------- Halmos split

@given(seed=st.integers(0, 10_000), n=st.integers(2, 30), r1=st.integers(0, 30), r2=st.integers(0, 30))
def test_random_projection_pairs_are_symmetric(seed, n, r1, r2):
    rng = np.random.default_rng(seed)
    def proj(r):
        q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        q = q[:, :min(r, n)]
        return q @ q.T
    D = SymOp(proj(r1) - proj(r2))
    h = halmos_split(D)
    assert h.paired()
    assert h.dim_ker + h.dim_plus_one + h.dim_minus_one + len(h.generic_spectrum) == n


def test_halmos_split_counts():
    h = halmos_split(np.diag([1.0, -1.0, -1.0, 0.0, 0.3, -0.3]))
    assert (h.dim_ker, h.dim_plus_one, h.dim_minus_one) == (1, 1, 2)
    assert h.generic_spectrum == (-0.3, 0.3) and h.pair_defect == 0


def test_halmos_split_detects_asymmetry():
    assert not halmos_split(np.diag([0.3, -0.5])).paired()
    with pytest.raises(NotAProjectionDifference):
        halmos_split(np.diag([1.5, 0.0]))


def test_conditions_verdict():
    p = diag_example_one(8, 3)
    _, r = proj_diff(p.T, p.S, -1.1)
    assert not check_conditions(r, 2).c3 and check_conditions(r, 3).c3
    assert check_conditions(r, 3).c1_proxy == (r.dim_ker, 8)
    with pytest.raises(BadParams):
        check_conditions(r, -1)


# ---------------------------------------------------------------- gaps

def test_gap_example():
    assert gap_eig_count(np.diag([0.0, 1.0, 3.0]), np.diag([0.0, 1.0, 0.0]), (1.5, 2.5)) == 1


def test_gap_requires_empty_interval():
    with pytest.raises(GapNotEmpty):
        gap_eig_count(np.diag([0.0, 2.0]), np.zeros((2, 2)), (1.0, 3.0))
    with pytest.raises(BadParams):
        gap_eig_count(np.eye(2), np.zeros((2, 2)), (1.0, 1.0))


@given(seed=st.integers(0, 10_000), n=st.integers(4, 30), N=st.integers(1, 3))
def test_gap_count_bounded_by_rank(seed, n, N):
    pair = random_pair(n, N, seed, scale=3.0)
    w = eig_sym(pair.T).values
    gaps = np.diff(w)
    i = int(np.argmax(gaps))
    assume(gaps[i] > 1e-6)
    lo, hi = w[i] + 1e-9, w[i + 1] - 1e-9
    assert gap_eig_count(pair.T, pair.S, (lo, hi)) <= N


# ---------------------------------------------------------------- classification

def test_classify_examples():
    spectra = [eig_sym(diag_example_one(n, 1).T).values for n in (40, 80, 160)]
    assert classify_lambda(spectra, 0.0, 0.05).verdict == "M_minus"
    assert classify_lambda(spectra, -1.0, 0.05).verdict == "DiscreteEigenvalue"
    assert classify_lambda(spectra, 5.0, 0.05).verdict == "Resolvent"


def test_classify_twosided_on_free_lattice():
    spectra = [eig_sym(jacobi(1.0, 0.0, m)).values for m in (20, 40, 80)]
    assert classify_lambda(spectra, 0.01, 0.2).verdict == "M_twosided"


def test_classify_rejects():
    with pytest.raises(BadParams):
        classify_lambda([np.zeros(3)], 0.0, 0.1)
    with pytest.raises(BadParams):
        classify_lambda([np.zeros(3), np.zeros(4)], 0.0, 0.0)


# ---------------------------------------------------------------- Weyl probe

def _free_rank_one(m, seed):
    t = jacobi(1.0, 0.0, m)
    phi = np.random.default_rng(seed).standard_normal(t.order)
    return t, phi / np.linalg.norm(phi)


def test_weyl_probe_decays_on_free_lattice():
    t, phi = _free_rank_one(60, 0)
    norms = weyl_probe(t, phi, 0.3, probe_count=8)
    assert len(norms) == 8
    assert norms[-1] < 0.2 * norms[0]


def test_weyl_probe_worst_dominates_random():
    t, phi = _free_rank_one(30, 1)
    worst = weyl_probe(t, phi, 0.3, probe_count=5)
    rand = weyl_probe(t, phi, 0.3, probe_count=5, strategy="random", seed=4)
    assert worst[0] >= rand[0] - 1e-12


def test_weyl_probe_random_is_seeded():
    t, phi = _free_rank_one(20, 2)
    a = weyl_probe(t, phi, 0.3, 4, seed=9, strategy="random")
    b = weyl_probe(t, phi, 0.3, 4, seed=9, strategy="random")
    assert a == b


def test_weyl_probe_exhausts_small_order():
    t, phi = _free_rank_one(2, 3)
    with pytest.raises(ProbeExhausted):
        weyl_probe(t, phi, 0.3, probe_count=5)


def test_weyl_probe_rejects():
    t, phi = _free_rank_one(5, 0)
    with pytest.raises(BadParams):
        weyl_probe(t, phi[:-1], 0.3)
    with pytest.raises(BadParams):
        weyl_probe(t, phi, 0.3, strategy="greedy")
    with pytest.raises(BadParams):
        weyl_probe(t, phi, 0.3, probe_count=0)


# ---------------------------------------------------------------- Krylov complement

@given(seed=st.integers(0, 10_000), n=st.integers(4, 30), distinct=st.integers(1, 4))
def test_complement_is_annihilated(seed, n, distinct):
    rng = np.random.default_rng(seed)
    levels = np.sort(rng.uniform(-1, 1, distinct))
    assume(distinct == 1 or np.min(np.diff(levels)) > 1e-3)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    vals = levels[np.arange(n) % distinct]
    t = (q * vals) @ q.T
    phi = rng.standard_normal(n)
    phi /= np.linalg.norm(phi)
    grid = np.sort(rng.uniform(-1.5, 1.5, 6))
    try:
        worst = krylov_kernel_check(t, phi, rng.uniform(0.2, 1.5), grid, tie_policy="resolve")
    except NothingToCheck:
        assert distinct == n
        return
    assert worst <= 1e-8


def test_krylov_check_cyclic_and_zero_alpha():
    with pytest.raises(NothingToCheck):
        krylov_kernel_check(np.diag([1.0, 2.0]), np.ones(2), 1.0, [1.5])
    with pytest.raises(BadParams):
        krylov_kernel_check(np.eye(2), np.ones(2), 0.0, [0.5])


# ---------------------------------------------------------------- correction

def test_correction_example():
    D = np.diag([1.0, 1.0, -1.0])
    K = build_correction(D)
    assert np.allclose(K.entries, np.diag([0.2, 0.0, 0.0]), atol=1e-15)
    chk = verify_correction(D, K)
    assert chk.ok and chk.shifts == (0.2,)


def test_correction_noop_when_balanced():
    D = np.diag([1.0, -1.0, 0.4, -0.4, 0.0])
    K = build_correction(D)
    assert not K.entries.any()
    assert verify_correction(D, K).ok


def test_correction_budget_and_rejects():
    assert default_a_seq(1) == 0.2 and default_a_seq(3) == pytest.approx(1 / 15)
    with pytest.raises(CorrectionInfeasible):
        build_correction(np.diag([1.0, 1.0, 1.0]), a_seq=[0.2, 0.1])
    with pytest.raises(BadParams):
        build_correction(np.diag([1.0, 1.0]), a_seq=[0.3, 0.1])
    with pytest.raises(BadParams):
        build_correction(np.diag([1.0, 1.0, 1.0]), a_seq=[0.2, 0.2, 0.1])
    with pytest.raises(NotAProjectionDifference):
        build_correction(np.diag([1.5, 0.0]))


def test_verify_detects_bad_correction():
    assert verify_correction(np.diag([1.0, 1.0, -1.0]), np.zeros((3, 3))).balanced
    D = np.diag([1.0, 1.0, 1.0, -1.0])
    assert not verify_correction(D, np.zeros((4, 4))).balanced
    assert verify_correction(D, build_correction(D)).ok
    assert not verify_correction(D, np.diag([0.3, 0.0, 0.0, 0.0])).within_budget
    assert not verify_correction(np.diag([1.0, 0.0]), np.diag([0.0, 0.1])).kernel_preserved


@given(seed=st.integers(0, 10_000), n=st.integers(4, 30), N=st.integers(1, 3))
def test_correction_on_random_differences(seed, n, N):
    pair = random_pair(n, N, seed)
    lam = off_tie_lambda(np.random.default_rng(seed), eig_sym(pair.T).values,
                         eig_sym(pair.perturbed).values)
    D, _ = proj_diff(pair.T, pair.S, lam)
    chk = verify_correction(D, build_correction(D))
    assert chk.ok, chk


# ---------------------------------------------------------------- hand-sized examples

def test_hand_computed_difference():
    D, r = proj_diff(np.diag([0.0, 1.0]), np.diag([1.0, 0.0]), 0.5)
    assert np.array_equal(D.entries, np.diag([-1.0, 0.0]))
    assert (r.dim_ker_plus_I, r.dim_ker_minus_I, r.dim_ker) == (1, 0, 1)


def test_difference_vanishes_below_both_spectra():
    pair = random_pair(15, 2, 4)
    lo = min(eig_sym(pair.T).values[0], eig_sym(pair.perturbed).values[0])
    D, _ = proj_diff(pair.T, pair.S, lo - 0.1)
    assert not D.entries.any()


def test_halmos_trivial_cases():
    h = halmos_split(np.zeros((4, 4)))
    assert (h.dim_ker, h.dim_plus_one, h.dim_minus_one, h.generic_spectrum, h.pair_defect) == (4, 0, 0, (), 0.0)
    h = halmos_split(np.diag([1.0, -1.0, 0.0]))
    assert (h.dim_ker, h.dim_plus_one, h.dim_minus_one, h.generic_spectrum) == (1, 1, 1, ())


def test_halmos_on_krein_difference():
    from projlab.gallery import krein_pair
    p = krein_pair(200)
    D, _ = proj_diff(p.T, p.S, 0.5)
    assert halmos_split(D).pair_defect < 1e-8


def test_zero_difference_satisfies_c3_for_all_N():
    _, r = proj_diff(np.diag([0.0, 1.0]), np.zeros((2, 2)), 0.5)
    assert all(check_conditions(r, N).c3 for N in range(4))


def test_gap_hand_examples():
    a = np.diag([0.0, 0.0, 1.0, 1.0])
    b = np.zeros((4, 4))
    b[0, 0] = 0.5
    assert gap_eig_count(a, b, (0.2, 0.8)) == 1
    assert gap_eig_count(a, np.zeros((4, 4)), (0.2, 0.8)) == 0


def test_weyl_probe_zero_perturbation():
    assert weyl_probe(jacobi(1.0, 0.0, 10), None, 0.3, probe_count=4) == [0.0] * 4


def test_weyl_probe_free_lattice_m150():
    t, phi = _free_rank_one(150, 0)
    assert weyl_probe(t, phi, 0.3, probe_count=8)[-1] < 0.2


def test_krylov_check_small_examples():
    assert krylov_kernel_check(np.diag([1.0, 1.0, 2.0]), np.eye(3)[0], 1.0, [0.5, 1.5, 2.5],
                               tie_policy="resolve") < 1e-10
    assert krylov_kernel_check(np.eye(5), np.eye(5)[0], 1.0, [0.5, 1.5, 2.5]) == 0.0


def test_krylov_check_block_diagonal():
    rng = np.random.default_rng(12)
    g = rng.standard_normal((6, 6))
    t1 = (g + g.T) / 4
    m = np.diag([5.0, 6.0, 7.0])
    t = np.block([[t1, np.zeros((6, 3))], [np.zeros((3, 6)), m]])
    phi = np.concatenate([rng.standard_normal(6), np.zeros(3)])
    phi /= np.linalg.norm(phi)
    assert krylov_kernel_check(t, phi, 0.8, np.linspace(-2.05, 7.55, 9)) < 1e-10


def test_correction_trivial_cases():
    assert not build_correction(np.diag([1.0, -1.0])).entries.any()
    assert not build_correction(np.zeros((3, 3))).entries.any()
