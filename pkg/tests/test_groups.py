import numpy as np
import pytest

from mixlab.errors import ConfigInvalid, IncompatibleGroup, QuadratureCutoffExceeded, TrivialRep
from mixlab.groups import (SO3, SU2, Torus, axis_angle, character, class_coefficient, epsilon_net, fourier_coeff,
                           haar_quadrature, irreps_up_to, lipschitz_fit, make_group, peter_weyl_truncate, rep_matrix,
                           weight_zeta_partial_sums)
from mixlab.labels import IrrepLabel, SU2Label, TorusLabel, parse_label


@pytest.mark.parametrize("group, cutoff", [(Torus(1), 3), (Torus(2), 2), (SU2(), 3), (SO3(), 4)])
def test_character_orthonormality(group, cutoff):
    irreps = irreps_up_to(group, cutoff)
    quad = haar_quadrature(group, group.quadrature_order(2 * cutoff) + 1)
    assert quad.weights.sum() == pytest.approx(1.0, abs=1e-12)
    chars = [pi.character(quad.nodes) for pi in irreps]
    gram = np.array([[quad.integrate(a * np.conj(b)) for b in chars] for a in chars])
    np.testing.assert_allclose(gram, np.eye(len(irreps)), atol=1e-10)


def test_matrix_coefficient_orthogonality(su2):
    irreps = irreps_up_to(su2, 2)
    quad = haar_quadrature(su2, su2.quadrature_order(4) + 1)
    for pi in irreps:
        mats = pi.matrix(quad.nodes)
        gram = np.einsum("k,kab,kcd->abcd", quad.weights, mats, mats.conj())
        expected = np.einsum("ac,bd->abcd", np.eye(pi.dim), np.eye(pi.dim)) / pi.dim
        np.testing.assert_allclose(gram, expected, atol=1e-10)


@pytest.mark.parametrize("label", ["su2:1/2", "su2:1", "su2:3/2", "su2:2"])
def test_wigner_matrices_are_unitary_homomorphisms(su2, rng, label):
    pi = su2.irrep(label)
    g, h = su2.random(20, rng), su2.random(20, rng)
    G, H = pi.matrix(g), pi.matrix(h)
    np.testing.assert_allclose(pi.matrix(su2.compose(g, h)), G @ H, atol=1e-12)
    np.testing.assert_allclose(G @ np.conj(np.swapaxes(G, -1, -2)), np.broadcast_to(np.eye(pi.dim), G.shape),
                               atol=1e-12)
    np.testing.assert_allclose(pi.character(g), np.trace(G, axis1=-2, axis2=-1), atol=1e-12)


def test_spin_half_matrix(su2):
    pi = su2.irrep("su2:1/2")
    q = axis_angle([0, 0, 1], 0.7)
    expected = np.diag([np.exp(-0.35j), np.exp(0.35j)])
    np.testing.assert_allclose(rep_matrix(pi, q), expected, atol=1e-14)
    assert complex(character(pi, q)) == pytest.approx(2 * np.cos(0.35))


@pytest.mark.parametrize("group", [Torus(2), SU2(), SO3()])
def test_characters_are_class_functions(group, rng):
    g, h = group.random(30, rng), group.random(30, rng)
    for pi in irreps_up_to(group, 2):
        np.testing.assert_allclose(pi.character(group.conjugate(h, g)), pi.character(g), atol=1e-10)


def test_so3_identifies_antipodes(rng):
    so3 = SO3()
    g = so3.random(10, rng)
    for pi in irreps_up_to(so3, 4):
        np.testing.assert_allclose(pi.character(-g), pi.character(g), atol=1e-12)
    np.testing.assert_allclose(so3.distance(g, -g), 0.0, atol=1e-12)


def test_eigenphases_reproduce_characters(su2, rng):
    g = su2.random(10, rng)
    inv = su2.conjugacy_invariant(g)
    for pi in irreps_up_to(su2, 3):
        np.testing.assert_allclose(pi.eigenphases(inv).sum(axis=-1), pi.character(g), atol=1e-12)


def test_peter_weyl_recovers_band_limited_functions(su2, rng):
    pi = su2.irrep("su2:1")
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    quad = haar_quadrature(su2, 3)

    def F(g):
        return np.einsum("ab,kba->k", A, pi.matrix(g)) + 2.0

    points = su2.random(25, rng)
    recovered = peter_weyl_truncate(F(quad.nodes), quad, 2, at=points, band=2)
    np.testing.assert_allclose(recovered, F(points), atol=1e-10)
    np.testing.assert_allclose(fourier_coeff(F(quad.nodes), pi, quad, band=2), A / 3, atol=1e-10)


def test_fourier_decay_of_smooth_family(torus):
    # f = Σ_{m≠0} |m|^{-(2n+2)} e^{imθ} is C^{2n}
    n = 2
    modes = np.arange(-40, 41)
    modes = modes[modes != 0]
    quad = haar_quadrature(torus, 96)
    values = np.sum(np.abs(modes)[:, None] ** -(2.0 * n + 2) * np.exp(1j * np.outer(modes, quad.nodes[:, 0])), axis=0)
    ms = np.arange(1, 21)
    coeffs = [abs(fourier_coeff(values, torus.irrep(TorusLabel((m,))), quad)[0, 0]) for m in ms]
    slope, _ = np.polyfit(np.log(ms), np.log(coeffs), 1)
    assert slope <= -2 * n


def test_strict_quadrature_cutoff(torus):
    quad = haar_quadrature(torus, 2)
    pi = torus.irrep("torus:1")
    with pytest.raises(QuadratureCutoffExceeded):
        fourier_coeff(np.ones(len(quad)), pi, quad, band=1.0, strict=True)
    fourier_coeff(np.ones(len(quad)), pi, quad, band=1.0)


def test_class_coefficient(su2):
    quad = haar_quadrature(su2, 4)
    pi, rho = su2.irrep("su2:1"), su2.irrep("su2:3/2")
    values = pi.character(quad.nodes)
    assert class_coefficient(values, pi, quad) == pytest.approx(1.0, abs=1e-10)
    assert class_coefficient(values, rho, quad) == pytest.approx(0.0, abs=1e-10)


def test_irreps_up_to_ordering():
    labels = [str(pi.label) for pi in irreps_up_to(Torus(1), 2)]
    assert labels[0] == "torus:0"
    assert set(labels) == {"torus:0", "torus:1", "torus:-1", "torus:2", "torus:-2"}
    assert [pi.weight_norm for pi in irreps_up_to(SU2(), 2)] == [0.0, 1.0, 2.0]
    assert [pi.dim for pi in irreps_up_to(SO3(), 4)] == [1, 3, 5]
    with pytest.raises(ConfigInvalid):
        irreps_up_to(SU2(), 0)


def test_labels_round_trip():
    for text in ("torus:1,-2", "su2:3/2", "su2:1", "so3:2"):
        assert str(parse_label(text)) == text
    assert parse_label("su2:1") == SU2Label(2)
    with pytest.raises(ValueError):
        parse_label("so3:1/2")


def test_label_base_is_abstract():
    with pytest.raises(TypeError):
        IrrepLabel()

    class Partial(IrrepLabel):
        namespace = "partial"

        @property
        def reference(self) -> str:
            return "0"

    with pytest.raises(TypeError):
        Partial()
    assert sorted([SU2Label(3), SU2Label(1)]) == [SU2Label(1), SU2Label(3)]


def test_irrep_group_mismatch(su2):
    with pytest.raises(IncompatibleGroup):
        su2.irrep("torus:1")
    with pytest.raises(IncompatibleGroup):
        Torus(2).irrep("torus:1")
    with pytest.raises(ConfigInvalid):
        su2.irrep("spin:1")


def test_lipschitz_fit(torus, su2):
    pi = torus.irrep("torus:3")
    assert 0.5 < lipschitz_fit(torus, pi, 400, seed=1) <= 1.0 + 1e-9
    assert np.isfinite(lipschitz_fit(su2, su2.irrep("su2:1"), 400, seed=1))
    with pytest.raises(TrivialRep):
        lipschitz_fit(torus, torus.irrep("torus:0"), 10, seed=1)


def test_weight_zeta_partial_sums():
    assert weight_zeta_partial_sums(Torus(1), 2.0, [1, 3]) == pytest.approx([2.0, 2 * (1 + 1 / 4 + 1 / 9)])
    assert weight_zeta_partial_sums(SU2(), 2.0, [3]) == pytest.approx([1 + 1 / 4 + 1 / 9])
    assert weight_zeta_partial_sums(SO3(), 1.0, [4]) == pytest.approx([1 / 2 + 1 / 4])


@pytest.mark.parametrize("group, eps", [(Torus(1), 0.1), (Torus(2), 0.3), (SU2(), 0.5)])
def test_epsilon_net_covers(group, eps, rng):
    net = epsilon_net(group, eps)
    points = group.random(200, rng)
    nearest = [group.distance(net, p).min() for p in points]
    assert max(nearest) <= eps + 1e-9


def test_make_group():
    assert make_group("torus", 3) == Torus(3)
    assert make_group("SU2") == SU2()
    with pytest.raises(ConfigInvalid):
        make_group("u1")
    with pytest.raises(ConfigInvalid):
        SU2().element([0, 0, 0, 0])
