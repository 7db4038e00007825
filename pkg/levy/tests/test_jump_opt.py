# levy/tests/test_jump_opt.py

import math
import os
import tempfile

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from levy.cadlag import TargetSet, eval_step
from levy.exceptions import BudgetExceededError, CorridorError, PreconditionError
from levy.jump_opt import (
    Corridor,
    brute_force_min_jumps,
    feasible_interval,
    optimal_jump_path,
)

ONE_UP = Corridor([0.0, 0.4, 0.5, 1.0], [-0.1, -0.1, 1.0, 1.0], [2.0, 2.0, 2.0, 2.0])
UP_THEN_DOWN = Corridor(
    [0.0, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
    [-0.1, -0.1, 1.0, 1.0, -0.1, -0.1, -0.1, -0.1],
    [2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 0.0, 0.0],
)

LEVELS = np.linspace(-4.0, 4.0, 161)
TIMES = np.linspace(0.0, 1.0, 201)


def corridor_target(c):
    return TargetSet(membership=c.contains_step, name='corridor', corridor=c)


def above_diagonal(path):
    cuts = [*path.times, 1.0]
    return all(abs(level) >= end - 0.5 for level, end in zip(path.levels(), cuts))


def random_corridor(rng, knots=6):
    centres = [0.0]
    for _ in range(knots - 1):
        centres.append(float(np.clip(centres[-1] + rng.uniform(-1.0, 1.0), -2.0, 2.0)))
    centres = np.array(centres)
    half_width = rng.uniform(0.5, 0.8, knots)
    return Corridor(np.linspace(0.0, 1.0, knots), centres - half_width, centres + half_width)


class CorridorTests(SimpleTestCase):

    def test_validation(self):
        with self.assertRaises(CorridorError):
            Corridor([0.1, 1.0], [-1.0, -1.0], [1.0, 1.0])
        with self.assertRaises(CorridorError):
            Corridor([0.0, 0.5, 1.0], [-1.0, 1.0, -1.0], [1.0, 1.0, 1.0])
        with self.assertRaises(CorridorError):
            Corridor([0.0, 1.0], [0.5, 0.5], [1.0, 1.0])
        with self.assertRaises(CorridorError):
            Corridor([0.0, 1.0], [-1.0, -math.inf], [1.0, 1.0])
        with self.assertRaises(CorridorError):
            Corridor([0.0, 1.0], [-1.0], [1.0, 1.0])

    def test_interpolation(self):
        self.assertAlmostEqual(float(ONE_UP.l(0.45)), 0.45, places=12)
        self.assertEqual(float(ONE_UP.u(0.7)), 2.0)

    def test_csv_round_trip_and_missing_columns(self):
        with tempfile.TemporaryDirectory() as tmp:
            target = os.path.join(tmp, 'corridor.csv')
            UP_THEN_DOWN.to_frame().to_csv(target, index=False)
            loaded = Corridor.from_csv(target)
            np.testing.assert_array_equal(loaded.knots, UP_THEN_DOWN.knots)
            np.testing.assert_array_equal(loaded.upper, UP_THEN_DOWN.upper)

            pd.DataFrame({'knot': [0.0, 1.0], 'l': [-1.0, -1.0]}).to_csv(target, index=False)
            with self.assertRaises(CorridorError):
                Corridor.from_csv(target)

    def test_contains_step(self):
        flat = Corridor.constant(-0.5, 0.5)
        result = optimal_jump_path(UP_THEN_DOWN)
        self.assertTrue(UP_THEN_DOWN.contains_step(result.path))
        self.assertFalse(flat.contains_step(result.path))


class FeasibleIntervalTests(SimpleTestCase):

    def test_examples(self):
        self.assertEqual(feasible_interval(Corridor.constant(-1.0, 1.0), 0.0, 1.0), (-1.0, 1.0))
        self.assertEqual(feasible_interval(ONE_UP, 0.0, 0.5), (1.0, 2.0))
        self.assertEqual(feasible_interval(UP_THEN_DOWN, 0.3, 0.6), (1.0, 2.0))
        self.assertIsNone(feasible_interval(UP_THEN_DOWN, 0.5, 0.95))

    def test_degenerate_interval(self):
        lo, hi = feasible_interval(ONE_UP, 0.45, 0.45)
        self.assertAlmostEqual(lo, 0.45, places=12)
        self.assertEqual(hi, 2.0)

    def test_precondition(self):
        with self.assertRaises(PreconditionError):
            feasible_interval(ONE_UP, 0.6, 0.2)


class OptimalJumpPathTests(SimpleTestCase):

    def assertInside(self, c, path, points=10_000):
        for t in np.linspace(0.0, 1.0, points):
            value = eval_step(path, float(t))
            self.assertGreaterEqual(value, float(c.l(t)) - 1e-9)
            self.assertLessEqual(value, float(c.u(t)) + 1e-9)

    def test_flat_corridor_needs_no_jump(self):
        result = optimal_jump_path(Corridor.constant(-1.0, 1.0))
        self.assertEqual(result.counts, (0, 0))
        self.assertEqual(len(result.path), 0)

    def test_single_upward_jump(self):
        result = optimal_jump_path(ONE_UP)
        self.assertEqual(result.counts, (1, 0))
        (t, h), = result.path.jumps
        self.assertAlmostEqual(t, 0.4 + 0.1 / 11, places=12)
        self.assertTrue(1.0 <= h <= 2.0)
        self.assertInside(ONE_UP, result.path)

    def test_up_then_down(self):
        result = optimal_jump_path(UP_THEN_DOWN)
        self.assertEqual((result.J, result.K), (1, 1))
        self.assertAlmostEqual(result.breakpoints[1], 0.85, places=12)
        self.assertInside(UP_THEN_DOWN, result.path)

    def test_record(self):
        record = optimal_jump_path(ONE_UP).to_record()
        self.assertEqual((record['J'], record['K']), (1, 0))
        self.assertEqual(len(record['breakpoints']), len(record['levels']))

    def test_random_corridors_are_respected(self):
        rng = np.random.default_rng(404)
        for _ in range(20):
            c = random_corridor(rng)
            self.assertInside(c, optimal_jump_path(c).path, points=2_000)


class BruteForceTests(SimpleTestCase):

    def test_corridor_examples(self):
        for corridor, expected in ((Corridor.constant(-1.0, 1.0), (0, 0)), (ONE_UP, (1, 0)), (UP_THEN_DOWN, (1, 1))):
            result = brute_force_min_jumps(corridor_target(corridor), 2, 2, LEVELS, TIMES, 2.0, 2.0)
            self.assertEqual(result.best, expected)

    def test_corridor_grids_are_refined_with_knots_and_bounds(self):
        # neither 0.3 nor 0.7 works as a jump time, and 5.0 is above u; the knot at 0.4 and l = 1.0 do
        result = brute_force_min_jumps(corridor_target(ONE_UP), 1, 1, [5.0], [0.3, 0.7], 2.0, 2.0)
        self.assertEqual(result.best, (1, 0))

    def test_anchor_joins_the_grids(self):
        optimal = optimal_jump_path(UP_THEN_DOWN)
        result = brute_force_min_jumps(corridor_target(UP_THEN_DOWN), 2, 2, [], [], 2.0, 2.0, anchor=optimal.path)
        self.assertEqual(result.best, optimal.counts)

    def test_multiple_optima(self):
        target = TargetSet(membership=above_diagonal, name='diagonal', hint_delta=0.5)
        result = brute_force_min_jumps(target, 1, 1, [-1.0, -0.5, 0.5, 1.0], [0.25, 0.5, 0.75], 2.0, 2.0)
        self.assertIn((1, 0), result.feasible)
        self.assertIn((0, 1), result.feasible)
        self.assertNotIn((0, 0), result.feasible)
        self.assertEqual(result.best, (0, 1))

    def test_nothing_found(self):
        target = TargetSet(membership=lambda path: False, name='nothing')
        result = brute_force_min_jumps(target, 1, 1, [1.0], [0.5], 2.0, 2.0)
        self.assertIsNone(result.best)
        self.assertEqual(result.to_record(), {'best': None, 'feasible': []})

    def test_budget(self):
        target = TargetSet(membership=above_diagonal, name='diagonal')
        with self.assertRaises(BudgetExceededError):
            brute_force_min_jumps(target, 3, 3, LEVELS, TIMES, 2.0, 2.0, budget=1000)

    def test_preconditions(self):
        with self.assertRaises(PreconditionError):
            brute_force_min_jumps(corridor_target(ONE_UP), -1, 0, LEVELS, TIMES, 2.0, 2.0)
        with self.assertRaises(PreconditionError):
            brute_force_min_jumps(corridor_target(ONE_UP), 1, 0, LEVELS, [0.5, 1.5], 2.0, 2.0)

    def test_random_corridors_agree_with_optimal_path(self):
        rng = np.random.default_rng(2025)
        agree = 0
        for _ in range(100):
            c = random_corridor(rng)
            optimal = optimal_jump_path(c)
            brute = brute_force_min_jumps(corridor_target(c), 6, 6, LEVELS, TIMES, 2.0, 2.0, anchor=optimal.path)
            self.assertIsNotNone(brute.best)
            self.assertGreaterEqual(brute.best[0], optimal.J)
            self.assertGreaterEqual(brute.best[1], optimal.K)
            agree += brute.best == optimal.counts
        self.assertEqual(agree, 100)
