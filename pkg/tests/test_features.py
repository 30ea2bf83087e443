import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tnvqc.errors import InputError
from tnvqc.features import (
    N_PIXELS,
    embed_image,
    fit_pca,
    local_feature_map,
    normalize_pixels,
    pca_project,
)

R2 = np.sqrt(2) / 2


class TestNormalize:
    def test_values(self):
        raw = np.zeros(N_PIXELS, dtype=int)
        raw[0], raw[1] = 255, 51
        out = normalize_pixels(raw)
        assert out[0] == 1.0
        assert out[1] == pytest.approx(0.2, abs=1e-15)
        assert np.all(out[2:] == 0.0)

    @pytest.mark.parametrize("raw", [np.zeros(783), np.full(N_PIXELS, 256), np.full(N_PIXELS, -1)])
    def test_rejects(self, raw):
        with pytest.raises(InputError):
            normalize_pixels(raw)


class TestFeatureMap:
    @pytest.mark.parametrize("x,expected", [(0.0, (1.0, 0.0)), (1.0, (0.0, 1.0)), (0.5, (R2, R2))])
    def test_values(self, x, expected):
        np.testing.assert_allclose(local_feature_map(x), expected, atol=1e-15)

    @pytest.mark.parametrize("x", [-0.01, 1.01, np.nan])
    def test_domain(self, x):
        with pytest.raises(InputError):
            local_feature_map(x)

    @settings(max_examples=200)
    @given(st.floats(0.0, 1.0))
    def test_unit_norm(self, x):
        assert abs(np.linalg.norm(local_feature_map(x)) - 1.0) < 1e-12


class TestEmbed:
    def test_blank_and_full(self):
        np.testing.assert_array_equal(embed_image(np.zeros(N_PIXELS)), np.tile([1.0, 0.0], (N_PIXELS, 1)))
        np.testing.assert_allclose(embed_image(np.ones(N_PIXELS)), np.tile([0.0, 1.0], (N_PIXELS, 1)), atol=1e-15)

    def test_single_grey(self):
        img = np.zeros(N_PIXELS)
        img[0] = 0.5
        phi = embed_image(img)
        np.testing.assert_allclose(phi[0], [R2, R2])
        np.testing.assert_array_equal(phi[1:], np.tile([1.0, 0.0], (N_PIXELS - 1, 1)))

    def test_length(self):
        with pytest.raises(InputError):
            embed_image(np.zeros(10))


class TestPca:
    def test_constant_dataset(self):
        v = np.linspace(0, 1, N_PIXELS)
        model = fit_pca(np.tile(v, (6, 1)))
        np.testing.assert_allclose(model.mean, v)
        np.testing.assert_allclose(model.explained_variances, 0.0, atol=1e-12)

    def test_toy_direction(self):
        t = np.linspace(0, 1, 9)
        x = np.zeros((9, N_PIXELS))
        x[:, 0], x[:, 1] = t, 2 * t
        model = fit_pca(x)
        expected = np.zeros(N_PIXELS)
        expected[:2] = np.array([1.0, 2.0]) / np.sqrt(5)
        # frozen from an SVD of the centred data: first right singular vector
        # (0.4472136, 0.89442719, 0, ...), variance s0**2 / (n - 1) = 0.5859375
        np.testing.assert_allclose(model.components[0], expected, atol=1e-10)
        assert model.explained_variances[0] == pytest.approx(0.5859375, rel=1e-10)

    def test_too_few_samples(self):
        with pytest.raises(InputError):
            fit_pca(np.zeros((4, N_PIXELS)))

    @pytest.fixture
    def fitted(self, rng):
        x = rng.random((50, N_PIXELS)) * rng.random(N_PIXELS)
        return x, fit_pca(x)

    def test_orthonormal_and_sorted(self, fitted):
        _, model = fitted
        c = model.components
        np.testing.assert_allclose(c @ c.T, np.eye(4), atol=1e-10)
        assert np.all(np.diff(model.explained_variances) <= 0)
        for row in c:
            assert row[np.argmax(np.abs(row))] > 0

    def test_matches_svd_oracle(self, fitted):
        x, model = fitted
        xc = x - x.mean(axis=0)
        _, s, vt = np.linalg.svd(xc, full_matrices=False)
        np.testing.assert_allclose(model.explained_variances, s[:4] ** 2 / (len(x) - 1), rtol=1e-10)
        for row, ref in zip(model.components, vt[:4]):
            assert abs(abs(row @ ref) - 1.0) < 1e-10

    def test_projections_uncorrelated(self, fitted):
        x, model = fitted
        proj = pca_project(model, x)
        cov = np.cov(proj, rowvar=False)
        off = cov - np.diag(np.diag(cov))
        assert np.abs(off).max() <= 1e-8 * model.explained_variances[0]

    def test_permutation_invariant(self, fitted, rng):
        x, model = fitted
        other = fit_pca(x[rng.permutation(len(x))])
        np.testing.assert_allclose(other.components, model.components, atol=1e-10)

    def test_projection(self, fitted, rng):
        x, model = fitted
        np.testing.assert_allclose(pca_project(model, model.mean), 0.0, atol=1e-12)
        np.testing.assert_allclose(pca_project(model, model.mean + model.components[0]), [1, 0, 0, 0], atol=1e-12)
        img = rng.random(N_PIXELS)
        ref = [sum(model.components[r, i] * (img[i] - model.mean[i]) for i in range(N_PIXELS)) for r in range(4)]
        np.testing.assert_allclose(pca_project(model, img), ref, atol=1e-12)
