"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line at its stated tolerance."""
import time

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.stats import unitary_group

from kcontract import (build_W_from_quadruple, build_WT, builtin_kernel, canonical_dilation, check_conditions,
                       compare_dilations, da_multiplier_check, minimal_support, verify_kinner, wandering_subspace)
from kcontract.contraction import defect_operator, pureness_residuals
from kcontract.corpus import KERNELS, TUPLES, corpus_kernel, entries, entry
from kcontract.dilation import wandering_checks, span_angles
from kcontract.errors import NonCommutingTuple
from kcontract.realization import TransferFunction, sample_ball
from kcontract.series import builtin_kernel as kernel_of, cauchy_product
from kcontract.space import IndexBasis, SpaceSpec, cauchy_dual, column_adjoint, delta_ops, range_projection, shift_matrices

FAMILIES = {
    "drury-arveson": dict(family="drury_arveson"),
    "power 2": dict(family="power", nu=2),
    "power 1/2": dict(family="power", nu="1/2"),
    "dirichlet": dict(family="dirichlet"),
}
SHIFT_BAND = 3


@pytest.fixture(scope="module")
def corpus():
    """Every corpus entry with its dilation, wandering subspace and inner function; built once."""
    start = time.perf_counter()
    built = []
    for e in entries():
        k = e.kernel()
        pack = canonical_dilation(e.T, k, e.N)
        built.append((e, k, pack))
    dilation_time = time.perf_counter() - start
    return built, dilation_time


@pytest.fixture(scope="module")
def inner_functions(corpus):
    built, _ = corpus
    return {e.name: build_WT(pack) for e, _, pack in built}


def dense(m):
    return m.toarray() if sp.issparse(m) else np.asarray(m)


def test_reciprocal_identity(record_criterion):
    start = time.perf_counter()
    worst_float, exact_ok = 0.0, True
    for params in FAMILIES.values():
        k = builtin_kernel(max_degree=32, **params)
        conv = cauchy_product(k.a, k.c)
        if k.exact:
            exact_ok &= conv == [1] + [0] * 32
        else:
            scale = max(abs(v) for v in k.a_float)
            worst_float = max(worst_float, max(abs(float(v)) for v in conv[1:]) / scale)
    elapsed = time.perf_counter() - start
    ok = exact_ok and worst_float <= 1e-12 and elapsed < 1.0
    record_criterion(1, "reciprocal series identity", ok,
                     f"exact={exact_ok}, float rel residual {worst_float:.1e} <= 1e-12, {elapsed:.2f}s < 1s")
    assert ok


def test_delta_intertwining_and_projection(record_criterion):
    start = time.perf_counter()
    inter = pinv = proj = 0.0
    for params in FAMILIES.values():
        k = builtin_kernel(max_degree=10, **params)
        for d in (1, 2, 3):
            for N in (4, 6):
                space = SpaceSpec(k, IndexBasis(d, N), 1)
                small, big = delta_ops(space)
                shifts, _ = shift_matrices(space)
                for m in shifts:
                    inter = max(inter, np.abs(dense(small @ m) - dense(m @ big)).max())
                R = dense(cauchy_dual(space))
                X = column_adjoint(space)
                P = dense(range_projection(space))
                band = space.band_mask()
                band_d = np.tile(band, d)
                expected = np.diag((space.flat_degrees > 0).astype(float))
                pinv = max(pinv,
                           np.abs((R @ X - expected)[np.ix_(band, band)]).max(),
                           np.abs((R @ X @ R - R)[np.ix_(band, band_d)]).max(),
                           np.abs((X @ R @ X - X)[np.ix_(band_d, band)]).max())
                proj = max(proj, np.abs(P @ P - P).max(), np.abs(space.weighted_adjoint(P) - P).max())
    elapsed = time.perf_counter() - start
    ok = inter <= 1e-12 and pinv <= 1e-10 and proj <= 1e-12 and elapsed < 10.0
    record_criterion(2, "degree scaling intertwining and projection", ok,
                     f"intertwining {inter:.1e} <= 1e-12, pseudo-inverse {pinv:.1e} <= 1e-10, "
                     f"projection {proj:.1e} <= 1e-12, {elapsed:.2f}s < 10s")
    assert ok


def test_canonical_dilation_corpus(corpus, record_criterion):
    built, elapsed = corpus
    failures = []
    worst_iso = worst_inter = 0.0
    for e, k, pack in built:
        diag = pack.diagnostics
        # residuals reproduce the tail to the last digit; allow relative rounding only
        iso_bound = max(1e-8, pack.truncation_tail * (1 + 1e-10))
        inter_bound = max(1e-8, max(diag["intertwining_theoretical"], default=0.0) * (1 + 1e-10))
        iso, inter = diag["isometry_residual"], max(diag["intertwining_residuals"], default=0.0)
        worst_iso, worst_inter = max(worst_iso, iso), max(worst_inter, inter)
        # rounding slack for residuals already at machine precision
        grows = (diag["isometry_residual_N_plus_2"] > iso + 1e-13
                 or max(diag["intertwining_residuals_N_plus_2"], default=0.0) > inter + 1e-13)
        if iso > iso_bound or inter > inter_bound or grows:
            failures.append(e.name)
    ok = len(TUPLES) >= 12 and not failures and elapsed < 60.0
    record_criterion(3, "canonical dilation on the corpus", ok,
                     f"{len(built)} entries, worst isometry {worst_iso:.1e}, worst intertwining "
                     f"{worst_inter:.1e} (bound max(1e-8, tail)), failures {failures}, {elapsed:.1f}s < 60s")
    assert ok


def test_wandering_parametrization(corpus, record_criterion):
    built, _ = corpus
    worst, failures = 0.0, []
    for e, _, pack in built:
        wand = wandering_subspace(pack)
        checks = wandering_checks(pack, wand)
        val = max(checks["decomposition_residual"], checks["norm_identity_relative_error"])
        worst = max(worst, val)
        if val > 1e-8:
            failures.append(e.name)
    dims_ok = True
    for d in (1, 2, 3):
        for key in KERNELS:
            pack = canonical_dilation(np.zeros((d, 1, 1)), corpus_kernel(key), 4)
            dims_ok &= wandering_subspace(pack).dim == d
    ok = not failures and dims_ok
    record_criterion(4, "wandering parametrization and norm identity", ok,
                     f"worst residual {worst:.1e} <= 1e-8, zero tuple dim = d: {dims_ok}, failures {failures}")
    assert ok


def test_inner_function_spans_wandering(corpus, inner_functions, record_criterion):
    built, _ = corpus
    worst_iso = worst_orth = worst_angle = 0.0
    failures = []
    for e, k, pack in built:
        W = inner_functions[e.name].W
        rep = verify_kinner(W, k, pack.N + SHIFT_BAND)
        angles = span_angles(W, wandering_subspace(pack), pack.space)
        angle = float(angles.max()) if angles.size else 0.0
        worst_iso = max(worst_iso, rep["isometry_residual"])
        worst_orth = max(worst_orth, rep["orthogonality_residual"])
        worst_angle = max(worst_angle, angle)
        if rep["isometry_residual"] > 1e-8 or rep["orthogonality_residual"] > 1e-8 or angle > 1e-6:
            failures.append(e.name)
    ok = not failures
    record_criterion(5, "inner function is K-inner and spans the wandering subspace", ok,
                     f"isometry {worst_iso:.1e} <= 1e-8, orthogonality {worst_orth:.1e} <= 1e-8, "
                     f"angle {worst_angle:.1e} <= 1e-6, failures {failures}")
    assert ok


def test_realization_round_trip(corpus, inner_functions, record_criterion):
    built, _ = corpus
    worst_k = worst_coef = 0.0
    failures = []
    for e, k, pack in built:
        wt = inner_functions[e.name]
        rep = check_conditions(wt.quadruple, k, pack.N, defect_op=pack.defect.defect_op)
        W2 = build_W_from_quadruple(wt.quadruple, k, pack.N)
        coef = float(np.abs(W2.coeffs - wt.W.coeffs).max())
        worst_k = max(worst_k, max(rep["residuals"].values()))
        worst_coef = max(worst_coef, coef)
        if not rep["all_passed"] or max(rep["residuals"].values()) > 1e-8 or coef > 1e-10:
            failures.append(e.name)
    fixture = inner_functions["da_lambda_0.5"].quadruple
    D = fixture.D.copy()
    D[0, 0] += 0.1
    fixture_pack = [p for e, _, p in built if e.name == "da_lambda_0.5"][0]
    broken = check_conditions(fixture.replace(D=D), fixture_pack.kernel, fixture_pack.N)
    broken_val = max(broken["residuals"].values())
    ok = not failures and broken_val >= 1e-2
    record_criterion(6, "realization conditions round trip", ok,
                     f"conditions {worst_k:.1e} <= 1e-8, coefficients {worst_coef:.1e} <= 1e-10, "
                     f"perturbed fixture {broken_val:.2e} >= 1e-2, failures {failures}")
    assert ok


def test_minimal_dilation_uniqueness(corpus, record_criterion):
    built, _ = corpus
    worst_u = worst_def = 0.0
    failures = []
    for idx, (e, _, pack) in enumerate(built):
        r, n = pack.space.coeff_dim, len(pack.space.basis)
        support_full = minimal_support(pack.J, pack.space).shape[1] == r
        for seed in range(5):
            U0 = unitary_group.rvs(r, random_state=1000 * idx + seed) if r > 1 else \
                np.exp(2j * np.pi * np.random.default_rng(seed).uniform()) * np.eye(1)
            cmp = compare_dilations(pack.J, np.kron(np.eye(n), U0) @ pack.J, pack.space, pack.space)
            err = float(np.linalg.norm(cmp.U - U0, 2))
            worst_u, worst_def = max(worst_u, err), max(worst_def, cmp.unitarity_defect)
            if err > 1e-8 or cmp.unitarity_defect > 1e-10:
                failures.append(e.name)
        if not support_full:
            failures.append(e.name)
    ok = not failures
    record_criterion(7, "uniqueness of minimal dilations", ok,
                     f"recovery {worst_u:.1e} <= 1e-8, unitarity defect {worst_def:.1e} <= 1e-10, "
                     f"failures {sorted(set(failures))}")
    assert ok


def test_degenerate_paths(record_criterion):
    da = kernel_of("drury_arveson", 200)
    unit = defect_operator([[[1.0]]], da)
    not_pure = not pureness_residuals([[[1.0]]], da, unit).is_pure()
    try:
        from kcontract import OperatorTuple
        OperatorTuple([[[0, 1], [0, 0]], [[0, 0], [1, 0]]])
        rejected = False
    except NonCommutingTuple:
        rejected = True
    from kcontract.dilation import InnerFunctionPoly
    W = InnerFunctionPoly(IndexBasis(1, 1), np.array([[[0.0]], [[1.0]]]))
    rep = verify_kinner(W, kernel_of("power", 20, nu=2), 6)
    iso_ok = abs(rep["isometry_residual"] - 0.5) <= 1e-12 and not rep["verdict"]
    ok = not_pure and rejected and iso_ok
    record_criterion(8, "degenerate and negative paths", ok,
                     f"unit scalar not pure: {not_pure}, noncommuting rejected: {rejected}, "
                     f"z under power 2 isometry residual {rep['isometry_residual']:.15f} (1/2 +- 1e-12)")
    assert ok


@pytest.mark.parametrize("kernel_key", ["da", "dirichlet"])
def test_multiplier_positivity(corpus, inner_functions, record_criterion, kernel_key):
    built, _ = corpus
    worst, failures = np.inf, []
    for e, k, pack in built:
        if e.kernel_key != kernel_key:
            continue
        tf = TransferFunction(inner_functions[e.name].quadruple, k)
        for seed in range(20):
            pts = sample_ball(pack.T.d, 10, 0.8, np.random.default_rng(seed))
            # strict mode would refuse kernels whose shift is not a row contraction
            val = da_multiplier_check(tf, k, pts, strict=False)
            worst = min(worst, val)
            if val < -1e-8:
                failures.append(e.name)
    failures = sorted(set(failures))
    ok = not failures
    record_criterion(9, f"multiplier positivity ({kernel_key})", ok,
                     f"min eigenvalue {worst:.2e} >= -1e-8 over 20 point sets, failures {failures}")
    assert ok
