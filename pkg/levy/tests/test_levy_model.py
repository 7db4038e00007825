# levy/tests/test_levy_model.py

import math

import numpy as np
from django.test import SimpleTestCase

from levy.exceptions import ModelDomainError, PreconditionError
from levy.levy_model import (
    LevyModel,
    TailModel,
    inverse_tail,
    rate_cost,
    tail,
    truncated_mean,
    truncated_mean_by_quadrature,
)


def pareto_model(c=1.0, alpha=2.0, **kwargs):
    return LevyModel(pos=TailModel(c=c, index=alpha), **kwargs)


def log_power_model(c=1.0, alpha=2.0, p=1.0):
    return LevyModel(pos=TailModel(c=c, index=alpha, slow_var='log_power', p=p))


class TailTests(SimpleTestCase):

    def test_pareto_tail_values(self):
        model = pareto_model()
        self.assertAlmostEqual(tail(model, 'pos', 10.0), 0.01, places=15)
        self.assertEqual(tail(model, 'pos', 1.0), 1.0)

    def test_tail_is_frozen_below_one(self):
        model = pareto_model(c=3.0)
        self.assertEqual(tail(model, 'pos', 0.25), 3.0)

    def test_log_power_tail_at_e(self):
        self.assertAlmostEqual(tail(log_power_model(), 'pos', math.e), 2.0 * math.exp(-2.0), places=14)

    def test_constant_slow_variation_is_exact_power(self):
        model = pareto_model(c=2.5, alpha=1.7)
        x = np.geomspace(1.0, 1e6, 50)
        np.testing.assert_allclose(tail(model, 'pos', x) * x**1.7, 2.5, rtol=1e-12)

    def test_absent_side_has_no_mass(self):
        model = pareto_model()
        self.assertEqual(tail(model, 'neg', 5.0), 0.0)

    def test_nonpositive_argument_is_rejected(self):
        with self.assertRaises(ModelDomainError):
            tail(pareto_model(), 'pos', 0.0)
        with self.assertRaises(ModelDomainError):
            tail(pareto_model(), 'pos', -1.0)

    def test_tail_is_nonincreasing(self):
        rng = np.random.default_rng(11)
        for model in (pareto_model(alpha=1.3), log_power_model(alpha=2.5, p=2.0)):
            x = np.sort(rng.uniform(0.01, 500.0, 2000))
            values = tail(model, 'pos', x)
            self.assertTrue(np.all(np.diff(values) <= 0))

    def test_tail_model_validation(self):
        with self.assertRaises(ModelDomainError):
            TailModel(c=1.0, index=1.0)
        with self.assertRaises(ModelDomainError):
            TailModel(c=-1.0, index=2.0)
        with self.assertRaises(ModelDomainError):
            TailModel(c=1.0, index=2.0, slow_var='log_power', p=-0.5)
        with self.assertRaises(ModelDomainError):
            TailModel(c=1.0, index=2.0, slow_var='bessel')
        with self.assertRaises(ModelDomainError):
            LevyModel(pos=TailModel(c=1.0, index=2.0), sigma=-1.0)


class InverseTailTests(SimpleTestCase):

    def test_pareto_closed_form(self):
        self.assertAlmostEqual(inverse_tail(pareto_model(), 'pos', 100, 4.0), 5.0, places=12)

    def test_above_total_mass_is_zero(self):
        self.assertEqual(inverse_tail(pareto_model(c=1.0), 'pos', 10, 10.5), 0.0)

    def test_sandwich_on_random_levels(self):
        rng = np.random.default_rng(3)
        eta = 1e-9
        for model in (pareto_model(c=2.0, alpha=1.5), log_power_model(c=1.0, alpha=2.0, p=1.5)):
            n = 50
            for y in rng.uniform(0.01, n * model.pos.c, 200):
                q = inverse_tail(model, 'pos', n, y)
                self.assertLess(n * tail(model, 'pos', q + eta), y)
                self.assertLessEqual(y, n * tail(model, 'pos', max(q - eta, 1e-12)))

    def test_log_power_matches_grid_inversion(self):
        model = log_power_model(c=1.0, alpha=2.0, p=1.0)
        n = 100
        grid = np.linspace(1.0, 200.0, 1_000_000)
        values = n * tail(model, 'pos', grid)
        for y in (0.5, 3.0, 17.0, 80.0):
            q_grid = grid[np.argmax(values < y)]
            self.assertAlmostEqual(inverse_tail(model, 'pos', n, y), q_grid, delta=grid[1] - grid[0])

    def test_inverse_is_nonincreasing_in_level(self):
        model = log_power_model(alpha=3.0, p=0.5)
        y = np.sort(np.random.default_rng(5).uniform(0.1, 40.0, 300))
        q = inverse_tail(model, 'pos', 40, y)
        self.assertTrue(np.all(np.diff(q) <= 1e-12))


class TruncatedMeanTests(SimpleTestCase):

    def test_pareto_means(self):
        self.assertEqual(truncated_mean(pareto_model(alpha=2.0), 'pos'), (1.0, 2.0))
        nu_1, mu_1 = truncated_mean(pareto_model(alpha=3.0), 'pos')
        self.assertEqual(nu_1, 1.0)
        self.assertAlmostEqual(mu_1, 1.5, places=14)

    def test_closed_forms_match_quadrature(self):
        for model in (pareto_model(c=0.7, alpha=1.8), log_power_model(c=1.3, alpha=2.2, p=1.7)):
            nu_1, mu_1 = truncated_mean(model, 'pos')
            nu_q, mu_q = truncated_mean_by_quadrature(model, 'pos')
            self.assertEqual(nu_1, nu_q)
            self.assertAlmostEqual(mu_1, mu_q, delta=1e-7 * mu_q)

    def test_missing_side_is_a_precondition_error(self):
        with self.assertRaises(PreconditionError):
            truncated_mean(pareto_model(), 'neg')

    def test_centering_rate_combines_both_sides(self):
        model = LevyModel(pos=TailModel(c=1.0, index=2.0), neg=TailModel(c=2.0, index=3.0))
        self.assertAlmostEqual(model.centering_rate(), 1.0 * 2.0 - 2.0 * 1.5, places=14)


class RateCostTests(SimpleTestCase):

    def test_examples(self):
        self.assertEqual(rate_cost(2.0, 3.0, 0, 0), 0.0)
        self.assertEqual(rate_cost(2.0, 3.0, 2, 2), 6.0)
        self.assertAlmostEqual(rate_cost(1.5, 2.5, 3, 1), 3.0, places=14)

    def test_additive(self):
        for j1, k1, j2, k2 in ((0, 1, 2, 0), (3, 2, 1, 4), (1, 1, 1, 1)):
            self.assertAlmostEqual(
                rate_cost(1.7, 2.2, j1 + j2, k1 + k2),
                rate_cost(1.7, 2.2, j1, k1) + rate_cost(1.7, 2.2, j2, k2),
                places=12,
            )

    def test_rejects_small_indices(self):
        with self.assertRaises(ModelDomainError):
            rate_cost(1.0, 2.0, 1, 1)
