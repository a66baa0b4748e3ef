import math

import numpy as np
import pytest

from mixlab.cocycle import (badly_approximable, birkhoff, birkhoff_word, brin_set, continued_fraction,
                            diophantine_certify, displacement, displacement_partial, splice, tail_constants, twist,
                            twist_partial, torus_mode_deltas)
from mixlab.errors import (ConfigInvalid, NotOnSameLeaf, PreconditionViolated, RationalAlpha,
                           SearchBudgetExceeded)
from mixlab.groups import axis_angle
from mixlab.sft import TwoSidedPoint

from .conftest import GOLDEN, make_fn, make_system

X = TwoSidedPoint.periodic((0,))
AHEAD = TwoSidedPoint((0,), (0, 0, 0, 1), (0,))  # differs from X at index 3
BEHIND = TwoSidedPoint((0,), (1, 0, 0, 0), (0,), offset=3)  # differs from X at index -3


def _random_su2_system(shift, su2, rng, depth=2):
    table = {w: rng.normal(size=4).tolist() for w in shift.words(depth)}
    return make_system(shift, group=su2, cocycle={"".join(map(str, w)): q for w, q in table.items()})


def test_birkhoff_sums(golden_roof_system, golden_angle_system, torus):
    r, theta = birkhoff_word(golden_roof_system, (0, 1))
    assert r == pytest.approx(1 + GOLDEN)
    np.testing.assert_allclose(theta, torus.identity())
    r, theta = birkhoff_word(golden_angle_system, (0, 1, 1))
    assert r == pytest.approx(3.0)
    assert torus.distance(theta, torus.element([4 * np.pi * GOLDEN])) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(PreconditionViolated):
        birkhoff(golden_roof_system, X, -1)


def test_birkhoff_composes_on_the_left(full2, su2):
    q0, q1 = axis_angle([1, 0, 0], 0.3), axis_angle([0, 1, 0], 1.1)
    sys = make_system(full2, group=su2, cocycle={"0": q0.tolist(), "1": q1.tolist()})
    _, theta = birkhoff_word(sys, (0, 1))
    np.testing.assert_allclose(theta, su2.compose(q1, q0), atol=1e-12)


def test_skew_system_validation(full2, su2):
    with pytest.raises(ConfigInvalid):
        make_system(full2, roof={"0": 1.0, "1": 0.0})
    sys = make_system(full2)
    with pytest.raises(ConfigInvalid):
        sys.with_cocycle(make_fn(full2, su2.identity().tolist(), "group", su2))


def test_stable_displacement(golden_roof_system):
    sys = golden_roof_system
    assert displacement(sys, X, AHEAD, "s") == pytest.approx(GOLDEN - 1)
    assert displacement(sys, AHEAD, X, "s") == pytest.approx(1 - GOLDEN)
    assert displacement(sys, X, X.shifted(4), "s") == 0.0
    long_run = birkhoff(sys, AHEAD, 12)[0] - birkhoff(sys, X, 12)[0]
    assert displacement(sys, X, AHEAD, "s") == pytest.approx(long_run)


def test_unstable_displacement(golden_roof_system):
    sys = golden_roof_system
    assert displacement(sys, X, BEHIND, "u") == pytest.approx(1 - GOLDEN)
    assert displacement(sys, X, BEHIND, "u") == pytest.approx(displacement_partial(sys, X, BEHIND, 12))


def test_displacement_requires_a_leaf(golden_roof_system):
    with pytest.raises(NotOnSameLeaf):
        displacement(golden_roof_system, X, TwoSidedPoint.periodic((1,)), "s")
    with pytest.raises(PreconditionViolated):
        displacement(golden_roof_system, X, AHEAD, "x")


def test_torus_twists(golden_angle_system, torus):
    sys = golden_angle_system
    expected = torus.element([-2 * np.pi * GOLDEN])
    assert torus.distance(twist(sys, X, AHEAD, "s"), expected) == pytest.approx(0.0, abs=1e-12)
    assert torus.distance(twist(sys, X, BEHIND, "u"), torus.inverse(expected)) == pytest.approx(0.0, abs=1e-12)


def test_nonabelian_twists_match_long_products(full2, su2, rng):
    sys = _random_su2_system(full2, su2, rng)
    n = 12
    long_s = su2.compose(su2.inverse(birkhoff(sys, AHEAD, n)[1]), birkhoff(sys, X, n)[1])
    assert su2.distance(twist(sys, X, AHEAD, "s"), long_s) == pytest.approx(0.0, abs=1e-10)
    long_u = twist_partial(sys, X, BEHIND, n)
    assert su2.distance(twist(sys, X, BEHIND, "u"), long_u) == pytest.approx(0.0, abs=1e-10)


def test_tail_constants(golden_roof_system):
    c10, c12 = tail_constants(golden_roof_system)
    assert c10 == pytest.approx(2 * (GOLDEN - 1))
    assert c12 == 0.0


def test_splice():
    y = splice(X, 3, (1,), X)
    assert y.symbols(-2, 6) == (0, 0, 0, 0, 0, 1, 0, 0)
    z = splice(TwoSidedPoint.periodic((1,)), 0, (0, 0), X)
    assert z.symbols(-2, 4) == (1, 1, 0, 0, 0, 0)


def _alternates(sides):
    return all(a != b for a, b in zip(sides, sides[1:]))


def test_brin_set_closes_chains(golden_angle_system, torus):
    chains = brin_set(golden_angle_system, X, n0=2, p0=3)
    trivial = chains[0]
    assert trivial.length == 1
    np.testing.assert_allclose(trivial.twist, torus.identity())
    for chain in chains:
        assert chain.points[0] == X and chain.points[-1] == X
        assert abs(chain.displacement_sum) <= 1e-10
        assert _alternates(chain.sides)
    assert max(float(torus.distance(c.twist, torus.identity())) for c in chains) > 0.1


def test_brin_set_filters_displacements(golden_roof_system):
    for chain in brin_set(golden_roof_system, X, n0=2, p0=3, tol=1e-9):
        assert abs(chain.displacement_sum) <= 1e-9


def test_brin_set_guards(golden_angle_system):
    with pytest.raises(PreconditionViolated):
        brin_set(golden_angle_system, X, n0=2, p0=1)
    with pytest.raises(SearchBudgetExceeded):
        brin_set(golden_angle_system, X, n0=2, p0=4, max_nodes=3)


def test_torus_certificate_matches_mode_deltas(torus):
    angle = 2 * np.pi * math.sqrt(2)
    report = diophantine_certify(torus, [[angle]], weight_cutoff=4)
    deltas = torus_mode_deltas(angle, 4)
    assert len(report.rows) == 8
    for row in report.rows:
        m = abs(int(row.label.split(":")[1]))
        assert row.lower_bound == pytest.approx(deltas[m - 1], abs=1e-12)
    assert report.fitted_delta > 0


def test_single_element_has_spin_one_fixed_vectors(su2):
    report = diophantine_certify(su2, [axis_angle([0, 0, 1], 1.3)], weight_cutoff=2, restarts=4)
    rows = {row.label: row for row in report.rows}
    assert rows["su2:1/2"].lower_bound > 0.1
    assert rows["su2:1"].lower_bound == pytest.approx(0.0, abs=1e-7)
    assert rows["su2:1"].minimax == pytest.approx(0.0, abs=1e-7)


def test_generic_pair_is_diophantine(su2):
    gamma = [axis_angle([1, 0, 0], 1.0), axis_angle([0, 1, 1], 2.1)]
    report = diophantine_certify(su2, gamma, weight_cutoff=4, restarts=8, iterations=100)
    assert [row.weight_norm for row in report.rows] == [1.0, 2.0, 3.0, 4.0]
    for row in report.rows:
        assert row.lower_bound > 1e-3
        assert row.minimax >= row.lower_bound
    again = diophantine_certify(su2, gamma, weight_cutoff=4, restarts=8, iterations=100, threads=3)
    assert again.rows == report.rows


def test_certificate_needs_points(su2):
    with pytest.raises(PreconditionViolated):
        diophantine_certify(su2, np.zeros((0, 4)), weight_cutoff=2)


def test_continued_fraction():
    terms, convergents = continued_fraction(math.sqrt(2), 100)
    assert terms[:5] == [1, 2, 2, 2, 2]
    assert convergents[:4] == [(1, 1), (3, 2), (7, 5), (17, 12)]


def test_badly_approximable():
    delta, exponent = badly_approximable(math.sqrt(2), 10_000)
    assert exponent == 1.0
    assert delta >= 0.34
    delta, exponent = badly_approximable((math.sqrt(5) - 1) / 2, 10_000)
    assert exponent == 1.0
    assert delta == pytest.approx((3 - math.sqrt(5)) / 2, abs=1e-9)
    with pytest.raises(RationalAlpha):
        badly_approximable(0.5, 100)
