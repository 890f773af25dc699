"""Random-feature posterior draws and sampled-front extraction."""

import numpy as np
import pytest

from paretomax.gp import KernelParams, fit, matern52
from paretomax.pareto import non_dominated
from paretomax.sampler import (
    FrontSample,
    RffFunctionSample,
    draw_posterior_sample,
    sample_front,
)


def prior_model(dim=1, amplitude=1.0, ls=0.3):
    return fit(np.empty((0, dim)), [], KernelParams(amplitude, np.full(dim, ls), 0.0))


def constant_sample(value, num_features=8, amplitude=0.5, dim=1):
    """Zero frequencies and phases make every feature sqrt(2a/F); weights
    then set an exactly constant function."""
    scale = np.sqrt(2.0 * amplitude / num_features)
    weights = np.full(num_features, value / (scale * num_features))
    return RffFunctionSample(
        np.zeros((num_features, dim)), np.zeros(num_features), weights, amplitude
    )


class TestDrawPosteriorSample:
    def test_prior_covariance_matches_kernel(self):
        model = prior_model()
        xq = np.array([[0.0], [0.2], [0.45], [0.7], [1.0]])
        draws = np.array(
            [draw_posterior_sample(model, 500, s)(xq) for s in range(20000)]
        )
        cov = np.cov(draws.T)
        gram = matern52(xq, xq, model.params)
        assert np.abs(cov - gram).max() < 0.05

    def test_posterior_pins_training_points(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(size=(8, 1))
        y = np.sin(6 * x[:, 0])
        model = fit(x, y, KernelParams(1.0, [0.3], 1e-6))
        draws = np.array([draw_posterior_sample(model, 500, s)(x) for s in range(2000)])
        assert draws.std(axis=0).max() <= 0.05
        assert np.abs(draws.mean(axis=0) - y).max() <= 0.05

    def test_same_seed_identical(self):
        model = prior_model(dim=2)
        xq = np.random.default_rng(1).uniform(size=(9, 2))
        a = draw_posterior_sample(model, 128, 42)(xq)
        b = draw_posterior_sample(model, 128, 42)(xq)
        np.testing.assert_array_equal(a, b)

    def test_distinct_seeds_distinct(self):
        model = prior_model()
        hashes = {
            draw_posterior_sample(model, 64, s).weights.tobytes() for s in range(10)
        }
        assert len(hashes) == 10

    def test_constant_construction(self):
        s = constant_sample(-2.5)
        vals = s(np.linspace(0, 1, 7)[:, None])
        np.testing.assert_allclose(vals, -2.5, rtol=1e-12)

    def test_zero_noise_regression_stable(self):
        model = fit([[0.2], [0.8]], [1.0, -1.0], KernelParams(1.0, [0.3], 0.0))
        vals = draw_posterior_sample(model, 300, 0)([[0.2], [0.8]])
        np.testing.assert_allclose(vals, [1.0, -1.0], atol=0.1)


class TestSampleFront:
    def setup_method(self):
        model = prior_model(ls=0.25)
        self.f = [draw_posterior_sample(model, 200, s) for s in (1, 2)]
        self.c = [draw_posterior_sample(model, 200, 3)]

    def test_matches_brute_force_scan(self):
        fs = sample_front(
            self.f, self.c, [0.0], [1.0], None, 500, 50, np.random.default_rng(7)
        )
        grid = np.random.default_rng(7).uniform(0, 1, size=(500, 1))
        objs = np.column_stack([s(grid) for s in self.f])
        feas = np.nonzero(self.c[0](grid) >= 0)[0]
        expect = objs[feas[non_dominated(objs[feas])]]
        assert not fs.used_fallback
        np.testing.assert_allclose(
            np.sort(fs.objectives, axis=0), np.sort(expect, axis=0)
        )

    def test_single_objective_reduces_to_argmin(self):
        fs = sample_front(
            [self.f[0]], [], [0.0], [1.0], None, 300, 50, np.random.default_rng(3)
        )
        grid = np.random.default_rng(3).uniform(0, 1, size=(300, 1))
        assert len(fs) == 1
        np.testing.assert_allclose(fs.objectives[0, 0], self.f[0](grid).min())

    def test_constraint_values_attached_and_feasible(self):
        fs = sample_front(
            self.f, self.c, [0.0], [1.0], None, 400, 50, np.random.default_rng(11)
        )
        assert fs.constraint_values.shape == (len(fs), 1)
        assert np.all(fs.constraint_values >= 0)
        np.testing.assert_allclose(
            fs.constraint_values[:, 0], self.c[0](fs.inputs), atol=1e-12
        )

    def test_everywhere_infeasible_takes_fallback(self):
        fs = sample_front(
            self.f,
            [constant_sample(-3.0)],
            [0.0],
            [1.0],
            None,
            200,
            50,
            np.random.default_rng(5),
        )
        assert fs.used_fallback
        assert len(fs) >= 1
        assert np.all(fs.constraint_values < 0)

    def test_observed_inputs_joined_to_grid(self):
        # an observed input that dominates everything must appear in the front
        special = np.array([[0.5]])
        shifted = [
            RffFunctionSample(
                s.frequencies, s.phases, s.weights * 0.0, s.amplitude
            )
            for s in self.f
        ]
        # zero weights -> constant 0 objectives; every point ties, all kept
        fs = sample_front(
            shifted, [], [0.0], [1.0], special, 50, 200, np.random.default_rng(9)
        )
        assert any(np.allclose(x, 0.5) for x in fs.inputs)

    def test_thinning_caps_size_and_keeps_extremes(self):
        fs_full = sample_front(
            self.f, [], [0.0], [1.0], None, 2000, 10_000, np.random.default_rng(13)
        )
        fs_thin = sample_front(
            self.f, [], [0.0], [1.0], None, 2000, 5, np.random.default_rng(13)
        )
        assert len(fs_thin) == 5
        np.testing.assert_allclose(
            fs_thin.objectives.min(axis=0), fs_full.objectives.min(axis=0)
        )

    def test_front_is_non_dominated(self):
        fs = sample_front(
            self.f, self.c, [0.0], [1.0], None, 600, 50, np.random.default_rng(17)
        )
        assert len(non_dominated(fs.objectives)) == len(fs)

    def test_distinct_rngs_distinct_fronts(self):
        hashes = set()
        for s in range(10):
            fs = sample_front(
                self.f, self.c, [0.0], [1.0], None, 300, 50, np.random.default_rng(s)
            )
            hashes.add(fs.objectives.tobytes())
        assert len(hashes) == 10
