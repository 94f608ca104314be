import numpy as np
import pytest

from src.errors import InputError, RankError, ShapeError
from src.graphs import permutation_union_mask, validate_biregular
from src.linalg import frobenius_norm, spectral_norm, svd
from src.subspace import (
    SubspacePair,
    centered_operator,
    coherence_report,
    mu0_of,
    mu1_of,
    neighborhood_deviations,
    phi_of,
    phi_value,
    project_T,
    project_Tperp,
    subspace_of,
    theta_graph,
    truncate,
)
from tests.conftest import flat_sign_factor, random_orthonormal


def full_mask(n: int):
    return validate_biregular([(i, j) for i in range(n) for j in range(n)], n, n)


def random_pair(n_r: int, n_c: int, r: int, rng) -> SubspacePair:
    return SubspacePair(
        U=random_orthonormal(n_r, r, rng),
        gamma=np.sort(rng.uniform(1.0, 2.0, r))[::-1],
        V=random_orthonormal(n_c, r, rng),
    )


def random_tangent(sp: SubspacePair, rng) -> np.ndarray:
    return project_T(rng.standard_normal(sp.shape), sp)


# truncation ----------------------------------------------------------------


def test_truncate_identity():
    sp = truncate(svd(np.eye(3)), 2)
    assert sp.rank == 2
    assert np.allclose(np.abs(sp.U), np.eye(3)[:, :2])
    assert np.allclose(sp.gamma, [1.0, 1.0])


def test_truncate_rank_one():
    x = np.outer([1.0, 2.0, 2.0], [3.0, 4.0])
    sp = subspace_of(x, 1)
    assert sp.gamma == pytest.approx([15.0])
    assert np.allclose(sp.matrix(), x)


def test_truncate_random_rank_three(rng):
    x = rng.standard_normal((10, 3)) @ rng.standard_normal((8, 3)).T
    sp = subspace_of(x, 3)
    assert sp.gamma[2] > 1e-8
    assert np.allclose(sp.U.T @ sp.U, np.eye(3), atol=1e-9)
    assert np.allclose(sp.V.T @ sp.V, np.eye(3), atol=1e-9)


def test_truncate_rejects_rank_above_numerical_rank(rng):
    x = rng.standard_normal((6, 2)) @ rng.standard_normal((6, 2)).T
    with pytest.raises(RankError, match="singular value 3"):
        subspace_of(x, 3)
    with pytest.raises(RankError):
        subspace_of(x, 0)
    with pytest.raises(RankError):
        subspace_of(x, 7)


# projections ---------------------------------------------------------------


def test_project_T_fixes_sign_matrix(rng):
    sp = random_pair(7, 5, 2, rng)
    assert np.allclose(project_T(sp.w0(), sp), sp.w0(), atol=1e-12)


def test_project_T_kills_orthogonal_blocks(rng):
    sp = random_pair(7, 5, 2, rng)
    left = np.eye(7) - sp.U @ sp.U.T
    right = np.eye(5) - sp.V @ sp.V.T
    z = left @ rng.standard_normal((7, 5)) @ right
    assert np.allclose(project_T(z, sp), 0.0, atol=1e-12)
    assert np.allclose(project_Tperp(z, sp), z, atol=1e-12)


def test_projections_are_complementary(rng):
    for _ in range(50):
        sp = random_pair(9, 6, 3, rng)
        z = rng.standard_normal((9, 6))
        pz = project_T(z, sp)
        assert np.allclose(project_T(pz, sp), pz, atol=1e-10)
        assert abs(np.sum(pz * project_Tperp(z, sp))) < 1e-10
        assert np.allclose(project_Tperp(pz, sp), 0.0, atol=1e-10)


def test_projection_shape_mismatch(rng):
    sp = random_pair(4, 3, 1, rng)
    with pytest.raises(ShapeError):
        project_T(np.ones((3, 4)), sp)


def test_complement_gram_identity(rng):
    # off-diagonal entries of UU^T and I - UU^T have equal magnitude
    u = random_orthonormal(9, 3, rng)
    inside = u @ u.T
    outside = np.eye(9) - inside
    off = ~np.eye(9, dtype=bool)
    assert np.allclose(inside[off], -outside[off], atol=1e-14)


# coherence -----------------------------------------------------------------


def test_mu0_examples():
    assert mu0_of(np.eye(6)[:, :2]) == pytest.approx(3.0)
    assert mu0_of(flat_sign_factor(8, 3)) == pytest.approx(1.0)
    assert mu0_of(np.array([[1.0], [1.0]]) / np.sqrt(2)) == pytest.approx(1.0)


def test_mu0_bounds(rng):
    for _ in range(20):
        u = random_orthonormal(12, 3, rng)
        assert 1.0 - 1e-12 <= mu0_of(u) <= 12 / 3 + 1e-12


def test_mu0_rejects_non_orthonormal_columns():
    with pytest.raises(InputError):
        mu0_of(np.ones((4, 2)))


def test_mu1_examples(rng):
    e = np.eye(5)[:, :1]
    assert mu1_of(SubspacePair(U=e, gamma=np.array([1.0]), V=e)) == pytest.approx(5.0)

    flat = flat_sign_factor(8, 1)
    assert mu1_of(SubspacePair(U=flat, gamma=np.array([1.0]), V=flat)) == pytest.approx(1.0)

    sp = random_pair(8, 8, 2, rng)
    w0 = sp.U @ sp.V.T
    brute = max(abs(w0[i, j]) for i in range(8) for j in range(8))
    assert mu1_of(sp) == pytest.approx(np.sqrt(64 / 2) * brute)


# theta ---------------------------------------------------------------------


def test_theta_on_full_two_by_two():
    u = np.array([[1.0], [1.0]]) / np.sqrt(2)
    sp = SubspacePair(U=u, gamma=np.array([1.0]), V=u)
    assert theta_graph(sp, full_mask(2)) == pytest.approx(0.0, abs=1e-14)


def test_theta_with_canonical_column():
    e1 = np.eye(4)[:, :1]
    sp = SubspacePair(U=e1, gamma=np.array([1.0]), V=flat_sign_factor(4, 1))
    mask = validate_biregular([(i, (i + 1) % 4) for i in range(4)], 4, 4)
    assert theta_graph(sp, mask) >= 1.0


def test_theta_matches_per_neighborhood_oracle(lps_5_13, lps_pair):
    mask, sp = lps_5_13, lps_pair
    alpha = mask.alpha
    expected = 0.0
    for factor, neighborhoods in ((sp.U, mask.column_neighborhoods()), (sp.V, mask.row_neighborhoods())):
        for rows in neighborhoods:
            block = factor[rows]
            gram = block.T @ block / alpha - np.eye(sp.rank)
            expected = max(expected, np.linalg.norm(gram, 2))
    assert theta_graph(sp, mask) == pytest.approx(expected, rel=1e-10)


def test_theta_is_rotation_invariant(lps_5_13, lps_pair):
    angle = 0.7
    q = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    rotated = SubspacePair(U=lps_pair.U @ q, gamma=lps_pair.gamma, V=lps_pair.V @ q.T)
    assert theta_graph(rotated, lps_5_13) == pytest.approx(theta_graph(lps_pair, lps_5_13), rel=1e-10)


def test_theta_shape_mismatch(lps_5_13, rng):
    with pytest.raises(ShapeError):
        theta_graph(random_pair(10, 10, 1, rng), lps_5_13)


# phi -----------------------------------------------------------------------


@pytest.mark.parametrize("d,expected", [(800, 0.2121), (500, 0.2683)])
def test_phi_worked_example(d, expected):
    # sigma2 / sigma1 = 2 / sqrt(d), mu0 * r = 3
    assert phi_value(d, 2 * np.sqrt(d), 1.5, 2) == pytest.approx(expected, abs=1e-4)


def test_phi_of_uses_mask_spectrum(lps_5_13):
    assert phi_of(lps_5_13, 1.0, 2) == pytest.approx(lps_5_13.sigma2 / lps_5_13.sigma1 * 2)
    assert phi_of(full_mask(3), 1.0, 1) == pytest.approx(0.0, abs=1e-12)


# centered operator ---------------------------------------------------------


def test_centered_operator_norm_on_lps(lps_5_13):
    op = centered_operator(lps_5_13)
    assert op.spectral_norm() == pytest.approx(lps_5_13.sigma2 / lps_5_13.alpha, rel=1e-8)


def test_centered_operator_norm_on_permutation_masks():
    for seed in range(20):
        mask = permutation_union_mask(12 + seed % 5, 3 + seed % 4, seed)
        op = centered_operator(mask)
        assert op.spectral_norm() == pytest.approx(mask.sigma2 / mask.alpha, rel=1e-8)


def test_centered_operator_on_full_mask_is_zero():
    op = centered_operator(full_mask(4))
    assert np.array_equal(op.materialize(), np.zeros((4, 4)))


def test_centered_operator_apply(lps_5_13, rng):
    op = centered_operator(lps_5_13)
    x = rng.standard_normal(lps_5_13.shape)
    expected = lps_5_13.indicator * x / lps_5_13.alpha - x
    assert np.allclose(op.apply(x), expected, atol=1e-12)
    assert np.allclose(op.materialize() * x, expected, atol=1e-12)


# Hadamard-product bounds ---------------------------------------------------


def test_triple_product_identity(rng):
    for _ in range(200):
        n_r, n_c = rng.integers(1, 13, size=2)
        r = int(rng.integers(1, 5))
        m = rng.standard_normal((n_r, n_c))
        a = rng.standard_normal((n_r, r))
        b = rng.standard_normal((n_c, r))
        x = rng.standard_normal(n_r)
        y = rng.standard_normal(n_c)
        left = x @ (m * (a @ b.T)) @ y
        right = sum((x * a[:, k]) @ m @ (b[:, k] * y) for k in range(r))
        assert abs(left - right) < 1e-10


def test_row_norm_hadamard_bound(rng):
    for _ in range(100):
        a = rng.standard_normal((10, 3))
        z = rng.standard_normal(10)
        row_bound = np.max(np.linalg.norm(a, axis=1))
        total = sum(np.sum((a[:, k] * z) ** 2) for k in range(3))
        assert total <= row_bound**2 * np.sum(z**2) * (1 + 1e-12)


def test_hadamard_spectral_bound(rng):
    for _ in range(100):
        m = rng.standard_normal((8, 7))
        a = rng.standard_normal((8, 2))
        b = rng.standard_normal((7, 2))
        a_max = np.max(np.linalg.norm(a, axis=1))
        b_max = np.max(np.linalg.norm(b, axis=1))
        assert spectral_norm(m * (a @ b.T)) <= a_max * b_max * spectral_norm(m) * (1 + 1e-9)


@pytest.mark.slow
def test_centered_operator_approximation_bound(lps_5_13):
    rng = np.random.default_rng(2024)
    op = centered_operator(lps_5_13)
    n = lps_5_13.n_rows
    for trial in range(100):
        r = 1 + trial % 4
        sp = random_pair(n, n, r, rng)
        x = sp.matrix()
        mu0 = max(mu0_of(sp.U), mu0_of(sp.V))
        phi = phi_of(lps_5_13, mu0, r)
        assert spectral_norm(op.apply(x)) <= phi * sp.gamma[0] + 1e-9


# tangent-space operator ----------------------------------------------------


def _check_gram_deviation_bounds(sp, mask, rng):
    theta = theta_graph(sp, mask)
    u_devs, v_devs = neighborhood_deviations(sp, mask)
    op = centered_operator(mask)

    b = rng.standard_normal((sp.shape[1], sp.rank))
    f = op.apply(sp.U @ b.T).T @ sp.U
    row_norms = np.linalg.norm(f, axis=1)
    assert np.all(row_norms <= u_devs * np.linalg.norm(b, axis=1) + 1e-9)
    assert frobenius_norm(f) <= theta * frobenius_norm(b) + 1e-9

    c = rng.standard_normal((sp.shape[0], sp.rank))
    g = op.apply(c @ sp.V.T) @ sp.V
    assert np.all(np.linalg.norm(g, axis=1) <= v_devs * np.linalg.norm(c, axis=1) + 1e-9)
    assert frobenius_norm(g) <= theta * frobenius_norm(c) + 1e-9


def test_gram_deviation_bounds_on_lps(lps_5_13, lps_pair, rng):
    for _ in range(5):
        _check_gram_deviation_bounds(lps_pair, lps_5_13, rng)


def test_gram_deviation_bounds_on_dense_mask(dense_mask, flat_pair, rng):
    for _ in range(5):
        _check_gram_deviation_bounds(flat_pair, dense_mask, rng)


def _tangent_components(z, sp):
    b = z.T @ sp.U
    c = (z @ sp.V) - sp.U @ (sp.U.T @ (z @ sp.V))
    return frobenius_norm(b), frobenius_norm(c)


@pytest.mark.parametrize("mask_name,pair_name", [("lps_5_13", "lps_pair"), ("dense_mask", "flat_pair")])
def test_tangent_operator_bounds(mask_name, pair_name, request):
    mask = request.getfixturevalue(mask_name)
    sp = request.getfixturevalue(pair_name)
    rng = np.random.default_rng(99)
    report = coherence_report(sp, mask)
    theta, phi = report.theta, report.phi

    for _ in range(100):
        z = random_tangent(sp, rng)
        z_bar = project_T(mask.indicator * z, sp) / mask.alpha - z
        b_norm, c_norm = _tangent_components(z, sp)
        b_bar, c_bar = _tangent_components(z_bar, sp)
        assert b_bar <= theta * b_norm + phi * c_norm + 1e-9
        assert c_bar <= phi * b_norm + theta * c_norm + 1e-9
        assert frobenius_norm(z_bar) <= (theta + phi) * frobenius_norm(z) + 1e-9


# report --------------------------------------------------------------------


def test_coherence_report_fields(dense_mask, flat_pair):
    report = coherence_report(flat_pair, dense_mask)
    assert report.mu0_U == pytest.approx(1.0)
    assert report.mu0 == max(report.mu0_U, report.mu0_V)
    assert report.sigma2 == pytest.approx(1.0)
    assert report.sigma1 == pytest.approx(59.0)
    assert report.phi == pytest.approx(2 / 59)
    assert report.theta == pytest.approx(1 / 59, rel=1e-9)
    assert [key for key, _ in report.as_pairs()] == [
        "mu0_U", "mu0_V", "mu0", "mu1", "theta", "phi", "sigma1", "sigma2", "alpha",
    ]


def test_coherence_report_theta_override(dense_mask, flat_pair):
    assert coherence_report(flat_pair, dense_mask, theta_override=0.25).theta == 0.25
