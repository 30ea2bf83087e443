import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mps_dense_contract, mps_dense_from_sites
from tnvqc import _sweep_py, kernels
from tnvqc.errors import ConfigError, InputError, NumericError, UsageError
from tnvqc.features import local_feature_map
from tnvqc.mps import (
    MpsModel,
    calibrate_site_scales,
    full_tensor,
    init_mps,
    mps_backward,
    mps_classify_logits,
    mps_forward,
)
from tnvqc.optim import Adam
from tnvqc.training import softmax_cross_entropy


def random_state(rng, n):
    return local_feature_map(rng.random(n))


def random_model(rng, n, chi, d, k=None):
    k = int(rng.integers(n)) if k is None else k
    return init_mps(n, chi, d, k, seed=int(rng.integers(2**31)), noise=0.5)


class TestInit:
    def test_shapes(self):
        m = init_mps(784, 3, 4, seed=0)
        assert m.output_site == 391
        shapes = [s.shape for s in m.sites]
        assert shapes[0] == (1, 2, 3)
        assert shapes[-1] == (3, 2, 1)
        assert shapes[391] == (3, 2, 3, 4)
        assert sum(len(s) == 4 for s in shapes) == 1
        for left, right in zip(shapes[:-1], shapes[1:]):
            assert left[2] == right[0]

    def test_deterministic(self):
        a, b = init_mps(50, 2, 4, seed=7), init_mps(50, 2, 4, seed=7)
        np.testing.assert_array_equal(a.cores, b.cores)
        np.testing.assert_array_equal(a.out_core, b.out_core)
        c = init_mps(50, 2, 4, seed=8)
        assert not np.array_equal(a.cores, c.cores)

    def test_identity_core(self):
        m = init_mps(6, 2, 4, output_site=3, seed=0, noise=0.0)
        np.testing.assert_array_equal(m.sites[1][:, 0, :], np.eye(2))
        np.testing.assert_array_equal(m.sites[1][:, 1, :], np.eye(2))
        np.testing.assert_array_equal(m.sites[0][:, 0, :], [[1.0, 0.0]])
        assert not m.out_core.any()

    @pytest.mark.parametrize("kwargs", [dict(chi=0), dict(d_out=0), dict(output_site=6), dict(n_sites=0)])
    def test_invalid(self, kwargs):
        args = dict(n_sites=6, chi=2, d_out=4, output_site=2)
        args.update(kwargs)
        with pytest.raises(InputError):
            init_mps(**args)

    def test_calibrated_scales(self, rng):
        images = rng.random((30, 20)) * (rng.random(20) > 0.5)
        scales = calibrate_site_scales(images)
        blank = ~images.any(axis=0)
        np.testing.assert_array_equal(scales[blank], 1.0)
        m = init_mps(20, 1, 4, output_site=5, seed=0, noise=0.0, site_scales=scales)
        m.out_core[...] = 1.0
        f, _ = mps_forward(m, local_feature_map(images))
        # geometric mean of the chain product over the data is the output-site factor
        gain = np.cos(np.pi * images / 2) + np.sin(np.pi * images / 2)
        expected = np.exp(np.log(gain).sum(1) - np.log(gain).mean(0).sum() + np.log(gain[:, 5]).mean())
        np.testing.assert_allclose(f[:, 0], expected, rtol=1e-12)


class TestForward:
    def test_trivial_chain(self):
        m = init_mps(10, 1, 4, output_site=4, seed=0, noise=0.0)
        m.cores[:, 0, :, 0] = [1.0, 0.0]
        m.out_core[0, 0, 0, :] = [1.0, 2.0, 3.0, 4.0]
        phi = np.tile([1.0, 0.0], (10, 1))
        f, _ = mps_forward(m, phi)
        np.testing.assert_array_equal(f, [1.0, 2.0, 3.0, 4.0])

    def test_chi1_scalar_products(self, rng):
        m = random_model(rng, 7, 1, 4, k=2)
        phi = random_state(rng, 7)
        scalars = [m.sites[i][0, :, 0] @ phi[i] for i in range(7) if i != 2]
        expected = np.prod(scalars) * (phi[2] @ m.sites[2][0, :, 0, :])
        np.testing.assert_allclose(mps_forward(m, phi)[0], expected, rtol=1e-12)

    def test_annihilating_site(self, rng):
        m = random_model(rng, 8, 3, 4)
        phi = random_state(rng, 8)
        phi[5] = 0.0
        np.testing.assert_array_equal(mps_forward(m, phi)[0], 0.0)

    def test_toy_chain_oracle(self):
        m = init_mps(6, 2, 4, output_site=3, seed=42, noise=0.3)
        phi = local_feature_map(np.linspace(0.1, 0.9, 6))
        oracle = mps_dense_contract(mps_dense_from_sites(m.sites, 3), phi)
        np.testing.assert_allclose(mps_forward(m, phi)[0], oracle, atol=1e-10, rtol=0)

    def test_full_tensor_matches_entrywise_oracle(self, rng):
        m = random_model(rng, 5, 3, 2)
        np.testing.assert_allclose(full_tensor(m).array, mps_dense_from_sites(m.sites, m.output_site), atol=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 8), st.integers(1, 4), st.sampled_from([2, 4]), st.integers(0, 2**31))
    def test_sweep_equals_brute_force(self, n, chi, d, seed):
        rng = np.random.default_rng(seed)
        m = random_model(rng, n, chi, d)
        phi = random_state(rng, n)
        oracle = mps_dense_contract(full_tensor(m).array, phi)
        np.testing.assert_allclose(mps_forward(m, phi)[0], oracle, atol=1e-10, rtol=0)

    def test_batched_equals_single(self, rng):
        m = random_model(rng, 8, 3, 4)
        phis = np.stack([random_state(rng, 8) for _ in range(5)])
        batch, _ = mps_forward(m, phis)
        for b in range(5):
            np.testing.assert_allclose(batch[b], mps_forward(m, phis[b])[0], atol=1e-14)

    @pytest.mark.parametrize("lam", [-3.0, 0.5, 7.0])
    def test_multilinear(self, rng, lam):
        m = random_model(rng, 8, 2, 4)
        phi = random_state(rng, 8)
        f0 = mps_forward(m, phi)[0]
        j = 5 if m.output_site != 5 else 6
        m.cores[j] *= lam
        np.testing.assert_allclose(mps_forward(m, phi)[0], lam * f0, atol=1e-12)

    def test_wrong_site_count(self, rng):
        with pytest.raises(InputError):
            mps_forward(random_model(rng, 8, 2, 4), random_state(rng, 7))

    @pytest.mark.parametrize("scale", [2.0, 0.5])
    def test_overflow_guard(self, scale):
        m = init_mps(784, 1, 4, seed=0, noise=0.0)
        m.cores *= scale
        with pytest.raises(NumericError):
            mps_forward(m, np.tile([1.0, 0.0], (784, 1)))


def fd_site_grad(m, phi, g, h=1e-6):
    grads = []
    for site in m.sites:
        out = np.zeros(site.shape)
        for idx in np.ndindex(site.shape):
            orig = site[idx]
            site[idx] = orig + h
            up = mps_forward(m, phi)[0] @ g
            site[idx] = orig - h
            down = mps_forward(m, phi)[0] @ g
            site[idx] = orig
            out[idx] = (up - down) / (2 * h)
        grads.append(out)
    return grads


class TestBackward:
    def test_zero_upstream(self, rng):
        m = random_model(rng, 8, 2, 4)
        _, tr = mps_forward(m, random_state(rng, 8))
        grad, gphi = mps_backward(m, tr, np.zeros(4))
        assert not grad.cores.any() and not grad.out_core.any() and not gphi.any()

    def test_chi1_product_rule(self, rng):
        n, k = 6, 2
        m = random_model(rng, n, 1, 4, k=k)
        phi = random_state(rng, n)
        g = rng.standard_normal(4)
        _, tr = mps_forward(m, phi)
        grad, _ = mps_backward(m, tr, g)
        scalars = {i: m.sites[i][0, :, 0] @ phi[i] for i in range(n) if i != k}
        out_leg = phi[k] @ m.sites[k][0, :, 0, :]
        for j in scalars:
            others = np.prod([v for i, v in scalars.items() if i != j])
            np.testing.assert_allclose(grad.sites[j][0, :, 0], others * (out_leg @ g) * phi[j], rtol=1e-12)

    def test_finite_differences(self, rng):
        m = random_model(rng, 8, 2, 4)
        phi = random_state(rng, 8)
        g = rng.standard_normal(4)
        _, tr = mps_forward(m, phi)
        grad, _ = mps_backward(m, tr, g)
        for analytic, oracle in zip(grad.sites, fd_site_grad(m, phi, g)):
            err = np.abs(analytic - oracle) / np.maximum(np.abs(oracle), 1e-3)
            assert err.max() < 1e-5

    def test_input_gradient(self, rng):
        m = random_model(rng, 6, 3, 2)
        phi = random_state(rng, 6)
        g = rng.standard_normal(2)
        _, tr = mps_forward(m, phi)
        _, gphi = mps_backward(m, tr, g)
        # the output is linear in each site vector
        for i in range(6):
            for s in range(2):
                e = phi.copy()
                e[i] = 0.0
                e[i, s] = 1.0
                assert gphi[i, s] == pytest.approx(mps_forward(m, e)[0] @ g, abs=1e-12)

    def test_batch_gradient_is_sum(self, rng):
        m = random_model(rng, 7, 2, 4)
        phis = np.stack([random_state(rng, 7) for _ in range(4)])
        g = rng.standard_normal((4, 4))
        _, tr = mps_forward(m, phis)
        total, gphi = mps_backward(m, tr, g)
        acc = np.zeros_like(total.cores)
        for b in range(4):
            _, t1 = mps_forward(m, phis[b])
            one, gp1 = mps_backward(m, t1, g[b])
            acc += one.cores
            np.testing.assert_allclose(gphi[b], gp1, atol=1e-13)
        np.testing.assert_allclose(total.cores, acc, atol=1e-13)

    def test_stale_trace(self, rng):
        m = random_model(rng, 8, 2, 4)
        _, tr = mps_forward(m, random_state(rng, 8))
        m.mark_modified()
        with pytest.raises(UsageError):
            mps_backward(m, tr, np.ones(4))
        with pytest.raises(UsageError):
            mps_backward(m.copy(), tr, np.ones(4))

    @pytest.mark.parametrize("n", [8, 100, 784])
    def test_linear_cost(self, rng, n):
        m = random_model(rng, n, 2, 4)
        _, tr = mps_forward(m, random_state(rng, n))
        _, _, _, back = kernels.backward(
            m.cores, m.out_core, tr.phi, m.output_site, tr.left, tr.right, np.ones((1, 4))
        )
        assert tr.products + back <= 4 * n + 4

    def test_python_backend_counts_match(self, rng):
        m = random_model(rng, 30, 2, 4)
        phi = random_state(rng, 30)[None]
        _, _, _, fwd, _ = _sweep_py.forward(m.cores, m.out_core, phi, m.output_site)
        _, tr = mps_forward(m, phi)
        assert fwd == tr.products


class TestClassifier:
    def test_requires_two_outputs(self, rng):
        with pytest.raises(ConfigError):
            mps_classify_logits(random_model(rng, 5, 2, 4), random_state(rng, 5))

    def test_symmetric_model_ties(self, rng):
        m = random_model(rng, 5, 2, 2)
        m.out_core[..., 1] = m.out_core[..., 0]
        logits = mps_classify_logits(m, random_state(rng, 5))
        assert logits[0] == logits[1]
        assert int(np.argmax(logits)) == 0

    def test_separates_toy_pair(self):
        images = np.array([[0.0, 1.0, 0.0, 1.0], [1.0, 0.0, 1.0, 0.0]])
        labels = np.array([0, 1])
        phi = local_feature_map(images)
        m = init_mps(4, 1, 2, output_site=2, seed=3)
        opt = Adam(lr=0.05)
        for _ in range(2000):
            f, tr = mps_forward(m, phi)
            losses, g = softmax_cross_entropy(f, labels)
            if losses.mean() < 1e-3:
                break
            grad, _ = mps_backward(m, tr, g / 2)
            opt.step(m.parameters(), grad.arrays())
            m.mark_modified()
        assert losses.mean() < 1e-3
        np.testing.assert_array_equal(np.argmax(mps_classify_logits(m, phi), axis=1), labels)


def test_model_rejects_bad_shapes():
    with pytest.raises(ConfigError):
        MpsModel(np.zeros((4, 2, 2, 3)), np.zeros((2, 2, 2, 4)), 1)
    with pytest.raises(ConfigError):
        MpsModel(np.zeros((4, 2, 2, 2)), np.zeros((2, 2, 2, 4)), 4)
