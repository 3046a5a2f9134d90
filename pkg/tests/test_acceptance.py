"""Acceptance battery: every formulation of entropy production is
cross-validated against an independent route on exactly solvable
instances, at pinned tolerances.  One test per criterion; each prints a
PASS/FAIL line so the battery reads as a report under `pytest -s`.
"""

import time

from entroprod import verify


def _assert_suite(name, records, budget=None, elapsed=None):
    all_ok = all(passed for _, passed, _ in records)
    for rec_name, passed, detail in records:
        tag = "PASS" if passed else "FAIL"
        suffix = f" ({detail})" if detail else ""
        print(f"[{tag}] {rec_name}{suffix}")
    if budget is not None:
        tag = "PASS" if elapsed < budget else "FAIL"
        print(f"[{tag}] {name} runtime {elapsed:.1f}s (budget {budget:.0f}s)")
        assert elapsed < budget
    assert all_ok, f"{name}: " + "; ".join(
        rec_name for rec_name, passed, _ in records if not passed)


def test_criterion_01_ft_table_identities():
    """25 random 2x2 episodes: all four backward-choice averages at 1e-10
    and the integral fluctuation theorem, within 10 s."""
    start = time.time()
    records = verify.ft_table_suite(n_episodes=25, tol=1e-10)
    _assert_suite("ft-table", records, budget=10.0, elapsed=time.time() - start)


def test_criterion_02_route_equality():
    """Information, Clausius, free-energy and fixed-point routes agree
    pairwise at 1e-10 on 25 random thermal episodes."""
    _assert_suite("route-equality", verify.route_equality_suite(n_episodes=25,
                                                                tol=1e-10))


def test_criterion_03_swap_engine():
    """Closed forms vs exact 4x4 simulation at 1e-12 over a 50-point sweep
    at T_b/T_a = 1/2; Carnot point all-zero; Otto efficiency exact."""
    _assert_suite("swap-engine", verify.swap_engine_suite(n_points=50,
                                                          tol=1e-12))


def test_criterion_04_landauer_bounds():
    """100 random qubit-bath episodes: Q >= -T dS, the finite-dimension
    tightening, the exponential-average bound, the heat-capacity chain,
    and the linear-capacity closed form at 1e-10."""
    _assert_suite("landauer", verify.landauer_suite(n_episodes=100, tol=1e-10))


def test_criterion_05_gaussian_ness():
    """Two-mode steady state: Pi equals the general linear-dynamics
    formula at 1e-8 across a coupling sweep, diverges by > 10x near the
    critical coupling, and the phase-space flux prefactor reaches 1/T
    within 1% at T = 50 omega."""
    _assert_suite("gaussian-ness", verify.gaussian_ness_suite(tol=1e-8))


def test_criterion_06_classical_suite():
    """Schnakenberg non-negativity on 200 random generators, the exact
    rate balance, the TUR on 20 two-bath instances and the lattice NESS
    within 30 s."""
    start = time.time()
    records = verify.classical_suite()
    _assert_suite("classical", records, budget=30.0, elapsed=time.time() - start)


def test_criterion_07_quench_suite():
    """Qubit sudden quenches: the commuting fluctuation-dissipation
    relation at 1e-9, its coherence-induced breaking with positive higher
    cumulants, and the Gallavotti-Cohen symmetry on a 21-point grid."""
    _assert_suite("quench", verify.quench_suite(tol=1e-9))


def test_criterion_08_resource_suite():
    """Thermo-majorization verdict equals the embedding verdict on 50
    qubit pairs (D = 10^4), Renyi monotonicity on 100 pairs, the work
    sandwich on 20 sudden quenches, and the 2x2 Gibbs-stochastic oracle
    on 100 pairs."""
    _assert_suite("majorization", verify.majorization_suite())


def test_criterion_09_squeezed_bath():
    """Affinity and fixed-point routes agree at 1e-8 on 10 conserving
    two-mode episodes at Fock cut 20; r = 0 reduces to the thermal
    route."""
    _assert_suite("squeezed", verify.squeezed_suite(tol=1e-8))


def test_criterion_10_liouvillian_suite():
    """Kerr gap has a local minimum inside the semiclassical bistable
    window at N = 3; the macrospin order parameter stays negative below
    h = 2 kappa with monotone approach; within 60 s."""
    start = time.time()
    records = verify.liouvillian_suite()
    _assert_suite("liouvillian", records, budget=60.0,
                  elapsed=time.time() - start)
