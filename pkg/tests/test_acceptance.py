"""End-to-end acceptance checks, one per numbered criterion.

Each test prints a single ``[criterion N] PASS/FAIL`` summary line so the
full run doubles as a report.  The stochastic criteria farm their
independent jobs out to a four-worker process pool; every job carries a
fixed seed, so the suite is reproducible run to run.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from slitflow.classify import (
    build_u,
    check_annihilation,
    enumerate_families,
    solve_system,
    system_residuals,
)
from slitflow.cli import main as cli_main
from slitflow.fields import (
    SCALAR,
    FieldCoeffs,
    green_as_sampler,
    lie_derivative,
    lie_green_closed,
)
from slitflow.flow import chordal_loewner, inverse_map, zero_driving
from slitflow.gff import TestFn as Bump
from slitflow.observables import (
    bpz_sc_residual,
    cardy_zhan,
    martingale_suite,
    qv_check,
    run_coupling,
)

POOL_WORKERS = 4

CARDY_POINTS = (0.5 + 0.8j, -0.3 + 1.5708j, 1.0 + 2.2j)
CARDY_CONFIGS = ((6.0, 0.0), (6.0, 0.3), (8.0, 0.2))
MARTINGALE_CONFIGS = (
    ("chordal", 4.0, 0.0),
    ("chordal", 4.0, 1.0),
    ("dipolar", 6.0, 0.0),
    ("dipolar", 6.0, 0.3),
)


def _report(n, ok, detail):
    line = f"[criterion {n}] {'PASS' if ok else 'FAIL'} {detail}"
    print("\n" + line)
    assert ok, line


# -- 1: exact family catalogue ---------------------------------------------------


def test_criterion_1_classification_roundtrip():
    worst = Fraction(0)
    families = 0
    for kappa in (2, 3, 4, 5, 6):
        for spec in enumerate_families(Fraction(kappa)):
            if spec.parameter == "alpha":
                b, alpha, B = spec.coefficients(alpha=Fraction(1, 3))
            else:
                b, alpha, B = spec.coefficients(B=Fraction(2, 9))
            sol = solve_system(
                Fraction(kappa), spec.sigma.c1, spec.sigma.c2, alpha, B=B
            )
            assert sol.status in ("unique", "free"), spec.name
            if sol.status == "unique":
                assert sol.b.coeffs == b.coeffs, spec.name
            direct = system_residuals(
                Fraction(kappa), spec.sigma.c1, spec.sigma.c2, alpha, B, b
            )
            worst = max(worst, *(abs(r) for r in (*sol.residuals, *direct)))
            families += 1
    radial = [s.name for s in enumerate_families(6.0)]
    assert "radial6-drift" in radial and families >= 21
    ok = worst < Fraction(1, 10 ** 12)
    _report(1, ok, f"{families} family round-trips, max residual {float(worst):g}")


# -- 2: Lie derivative of the Green's function ------------------------------------


def test_criterion_2_hadamard_identities():
    rng = np.random.default_rng(2024)
    z1 = rng.uniform(-3, 3, 1000) + 1j * rng.uniform(0.2, 3, 1000)
    z2 = rng.uniform(-3, 3, 1000) + 1j * rng.uniform(0.2, 3, 1000)
    sig = FieldCoeffs.sigma_field(0.31, -0.17)
    b = FieldCoeffs.b_field(0.12, -0.4, 0.21)
    sig_max = max(abs(lie_green_closed(sig, a, c)) for a, c in zip(z1, z2))
    b_max = max(
        abs(lie_green_closed(b, a, c) - 4.0 * (1 / a).imag * (1 / c).imag)
        for a, c in zip(z1, z2)
    )
    fd_max = 0.0
    for a, c in zip(z1[:100], z2[:100]):
        if abs(a - c) < 0.2:
            continue
        for v in (sig, b):
            fd = complex(lie_derivative(v, green_as_sampler, SCALAR, (a, c)))
            fd_max = max(fd_max, abs(fd - lie_green_closed(v, a, c)))
    ok = sig_max < 1e-12 and b_max < 1e-10 and fd_max < 1e-6
    _report(2, ok, f"sigma {sig_max:.2e}, b {b_max:.2e}, fd {fd_max:.2e}")


# -- 3: generator annihilation ----------------------------------------------------


def test_criterion_3_generator_annihilation():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-2.5, 2.5, 100) + 1j * rng.uniform(0.3, 3.0, 100)
    worst = 0.0
    checked = 0
    for kappa in (3.0, 4.0, 6.0):
        for spec in enumerate_families(kappa):
            if spec.parameter == "alpha":
                model = spec.instantiate(alpha=0.3)
            else:
                model = spec.instantiate(B=0.2)
            res = check_annihilation(model, build_u(model), pts)
            worst = max(worst, res["max"])
            checked += 1
    ok = worst < 1e-8
    _report(3, ok, f"{checked} families, max residual {worst:.2e}")


# -- 4: deterministic Loewner flow -------------------------------------------------


def test_criterion_4_deterministic_loewner():
    drv = zero_driving(4.0, 0.0, 1.0, 1e-3)
    z = inverse_map(drv, 1j, 1.0)
    point_err = abs(z - 1j * math.sqrt(5.0))
    path = chordal_loewner(drv, 100j)
    g1 = path.w[path.last_alive_index()]
    cap_err = abs((g1 - 100j) * 100j - 2.0)
    ok = point_err < 1e-8 and cap_err < 1e-3
    _report(4, ok, f"point error {point_err:.2e}, capacity error {cap_err:.2e}")


# -- 5: martingale drift tests ------------------------------------------------------


def _mg_job(args):
    geometry, kappa, alpha, seed = args
    reports = martingale_suite(geometry, kappa, alpha, seed=seed)
    return [(r.name, r.zscore, r.passed) for r in reports]


def test_criterion_5_martingale_suite():
    jobs = [(g, k, a, 500 + i) for i, (g, k, a) in enumerate(MARTINGALE_CONFIGS)]
    with ProcessPoolExecutor(max_workers=POOL_WORKERS) as pool:
        results = list(pool.map(_mg_job, jobs))
    ok = True
    worst = 0.0
    n_tests = 0
    for (geometry, kappa, alpha, _), reports in zip(jobs, results):
        for name, z, passed in reports:
            ok = ok and passed
            worst = max(worst, abs(z))
            n_tests += 1
            if not passed:
                print(f"  drift fail: {geometry} k={kappa} a={alpha} {name} z={z:.2f}")
    _report(5, ok, f"{n_tests} drift tests over 4 configs, max |z| {worst:.2f}")


# -- 6: quadratic variation law ------------------------------------------------------


def test_criterion_6_quadratic_variation():
    res = qv_check(n_paths=2000, seed=6, bump=Bump(2.0j, 0.3), kappa=4.0)
    ok = res.rel_error < 0.1
    _report(6, ok, f"QV {res.qv_mean:.5f} vs energy drop {res.target:.5f}, "
                   f"rel err {res.rel_error:.3f}")


# -- 7: flow/field coupling law -------------------------------------------------------


def test_criterion_7_coupling_law():
    res = run_coupling(n_samples=5000, seed=7, threads=POOL_WORKERS)
    ks_stat, ks_crit = res.ks()
    mean_ok = abs(res.mean - res.mean_target) < 3.0 * res.se
    var_ok = abs(res.variance - res.var_target) < 0.05 * res.var_target
    ks_ok = ks_stat < ks_crit
    ok = mean_ok and var_ok and ks_ok and res.flagged == 0
    _report(
        7, ok,
        f"mean {res.mean:.4f} (target {res.mean_target:.4f}, se {res.se:.4f}), "
        f"var {res.variance:.4f} (target {res.var_target:.4f}), "
        f"KS {ks_stat:.4f} < {ks_crit:.4f}",
    )


# -- 8: hitting probabilities vs the triangle-map oracle --------------------------------


def _cz_job(args):
    kappa, alpha, z, seed = args
    return cardy_zhan(kappa, alpha, z, seed=seed)


def test_criterion_8_hitting_probabilities():
    for kappa, alpha in CARDY_CONFIGS:
        res = bpz_sc_residual(kappa, alpha, 0.4 + 1.1j)
        assert res["map_residual"] < 1e-8, (kappa, alpha)
        assert res["vertex_residual"] < 1e-8, (kappa, alpha)
    jobs = [
        (kappa, alpha, z, 800 + 10 * i + j)
        for i, (kappa, alpha) in enumerate(CARDY_CONFIGS)
        for j, z in enumerate(CARDY_POINTS)
    ]
    with ProcessPoolExecutor(max_workers=POOL_WORKERS) as pool:
        results = list(pool.map(_cz_job, jobs))
    ok = True
    worst_err = worst_amb = 0.0
    for res in results:
        ok = ok and res.passed
        worst_err = max(worst_err, res.max_abs_err)
        worst_amb = max(worst_amb, res.ambiguous_frac)
        if not res.passed:
            print(f"  fail: k={res.kappa} a={res.alpha} z={res.z} "
                  f"mc={res.mc} oracle={res.oracle} amb={res.ambiguous_frac:.3f}")
    _report(8, ok, f"9 points, max |MC-oracle| {worst_err:.4f}, "
                   f"max ambiguous {worst_amb:.4f}, oracle residuals < 1e-8")


# -- 9: byte-identical reruns ------------------------------------------------------------


def test_criterion_9_determinism(tmp_path):
    cases = {
        "simulate": ["simulate", "--seed", "9", "--z", "0.5+1.2i",
                     "--n-paths", "8"],
        "gff-couple": ["gff-couple", "--seed", "9", "--n-samples", "60",
                       "--T", "0.05", "--dt", "1e-3"],
        "cardy-zhan": ["cardy-zhan", "--seed", "9", "--z", "0.4+0.9i",
                       "--n-paths", "400", "--dt", "1e-3", "--t-max", "10"],
    }
    ok = True
    for name, args in cases.items():
        outs = []
        for tag, threads in (("a", "1"), ("b", "3")):
            path = tmp_path / f"{name}-{tag}.csv"
            rc = cli_main(args + ["--threads", threads, "--out", str(path)])
            assert rc in (0, 1), (name, rc)
            outs.append(path.read_bytes())
        same = outs[0] == outs[1]
        ok = ok and same
        if not same:
            print(f"  rerun mismatch for {name}")
    _report(9, ok, f"{len(cases)} stochastic commands byte-identical across "
                   f"--threads 1 vs 3")
