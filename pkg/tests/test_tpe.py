import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tunelab.errors import ConfigurationError
from tunelab.space import CATEGORICAL, CONTINUOUS, INTEGER, ParamSpec, SearchSpace, validate_assignment
from tunelab.tpe import (
    ObservationSet,
    acquisition_log_ratio,
    fit_density,
    split_observations,
    suggest_tpe,
)


def obs_from_scores(scores, direction="minimize"):
    obs = ObservationSet(direction=direction)
    for i, s in enumerate(scores):
        obs.add({"x": i / max(len(scores), 2)}, s)
    return obs


class TestSplitObservations:
    def test_four_rows_quarter_gamma(self):
        split = split_observations(obs_from_scores([1, 2, 3, 4]), gamma=0.25)
        assert [s for _, s in split.good] == [1]
        assert sorted(s for _, s in split.bad) == [2, 3, 4]

    def test_ceil_arithmetic_ten_rows(self):
        # oracle: ceil(0.25 * 10) = ceil(2.5) = 3
        assert math.ceil(0.25 * 10) == 3
        split = split_observations(obs_from_scores(list(range(1, 11))), gamma=0.25)
        assert len(split.good) == 3

    def test_single_row_floor(self):
        split = split_observations(obs_from_scores([5.0]), gamma=0.1)
        assert len(split.good) == 1 and split.bad == []

    def test_empty_is_an_error(self):
        with pytest.raises(ConfigurationError):
            split_observations(ObservationSet(), gamma=0.25)

    def test_maximize_negates_internally(self):
        split = split_observations(obs_from_scores([1, 2, 3, 4], "maximize"), gamma=0.25)
        assert [s for _, s in split.good] == [4]

    def test_threshold_tie_goes_to_earlier_row(self):
        obs = ObservationSet()
        obs.add({"x": 0.0}, 1.0)
        obs.add({"x": 1.0}, 1.0)
        obs.add({"x": 0.5}, 2.0)
        split = split_observations(obs, gamma=0.25)
        assert split.good == [({"x": 0.0}, 1.0)]

    def test_good_bad_partition_boundary(self):
        obs = obs_from_scores([3, 1, 2, 5, 4])
        split = split_observations(obs, gamma=0.4)
        worst_good = max(s for _, s in split.good)
        best_bad = min(s for _, s in split.bad)
        assert worst_good <= best_bad
        assert split.y_star == worst_good
        assert len(split.good) + len(split.bad) == len(obs)

    @given(
        scores=st.lists(st.floats(-50, 50), min_size=2, max_size=20, unique=True),
        a=st.floats(0.1, 5.0),
        b=st.floats(-10, 10),
        gamma=st.floats(0.05, 0.95),
    )
    def test_membership_invariant_under_increasing_transforms(self, scores, a, b, gamma):
        from hypothesis import assume

        def transform(s):
            return a * s**3 + a * s + b

        mapped_scores = [transform(s) for s in scores]
        # strictly increasing must survive float rounding to stay a transform
        assume(len(set(mapped_scores)) == len(scores))
        base = split_observations(obs_from_scores(scores), gamma)
        mapped = split_observations(obs_from_scores(mapped_scores), gamma)
        assert [p for p, _ in base.good] == [p for p, _ in mapped.good]

    def test_direction_duality(self):
        scores = [3.0, -1.0, 4.0, 1.5, 0.0]
        mini = split_observations(obs_from_scores(scores, "minimize"), 0.4)
        maxi = split_observations(obs_from_scores([-s for s in scores], "maximize"), 0.4)
        assert [p for p, _ in mini.good] == [p for p, _ in maxi.good]


class TestFitDensity:
    def test_empty_rows_uniform(self):
        space = SearchSpace.of(ParamSpec("x", CONTINUOUS, low=0.0, high=1.0))
        model = fit_density([], space)
        grid = np.linspace(0.0, 1.0, 11)
        assert np.allclose(model.estimators["x"].pdf(grid), 1.0)

    @pytest.mark.parametrize(
        "rows",
        [
            [],
            [{"x": 0.5}],
            [{"x": 0.1}, {"x": 0.11}, {"x": 0.9}],
            [{"x": 0.0}, {"x": 1.0}],
        ],
    )
    def test_quadrature_normalization(self, rows):
        # oracle: trapezoid quadrature on a 10^4-point grid
        space = SearchSpace.of(ParamSpec("x", CONTINUOUS, low=0.0, high=1.0))
        model = fit_density(rows, space)
        grid = np.linspace(0.0, 1.0, 10_000)
        integral = np.trapezoid(model.estimators["x"].pdf(grid), grid)
        assert integral == pytest.approx(1.0, abs=1e-3)

    def test_quadrature_normalization_log_scale(self):
        space = SearchSpace.of(ParamSpec("lr", CONTINUOUS, low=1e-3, high=1.0, log_scale=True))
        model = fit_density([{"lr": 0.01}, {"lr": 0.3}], space)
        grid = np.linspace(1e-3, 1.0, 10_000)
        integral = np.trapezoid(model.estimators["lr"].pdf(grid), grid)
        assert integral == pytest.approx(1.0, abs=1e-3)

    def test_laplace_smoothing_example(self):
        # oracle: (2+1)/(3+2) and (1+1)/(3+2)
        space = SearchSpace.of(ParamSpec("c", CATEGORICAL, choices=["a", "b"]))
        model = fit_density([{"c": "a"}, {"c": "a"}, {"c": "b"}], space)
        assert model.estimators["c"].probs["a"] == pytest.approx(3 / 5)
        assert model.estimators["c"].probs["b"] == pytest.approx(2 / 5)

    def test_categorical_probabilities_sum_to_one(self):
        space = SearchSpace.of(ParamSpec("c", CATEGORICAL, choices=["a", "b", "c", "d"]))
        model = fit_density([{"c": "a"}] * 5, space)
        assert sum(model.estimators["c"].probs.values()) == pytest.approx(1.0, abs=1e-9)

    def test_density_positivity_at_random_points(self):
        rng = np.random.default_rng(3)
        space = SearchSpace.of(
            ParamSpec("x", CONTINUOUS, low=-5.0, high=5.0),
            ParamSpec("n", INTEGER, low=1, high=100),
            ParamSpec("c", CATEGORICAL, choices=["a", "b"]),
        )
        rows = [{"x": -4.9, "n": 1, "c": "a"}, {"x": -4.85, "n": 2, "c": "a"}]
        good = fit_density(rows, space)
        bad = fit_density([], space)
        for _ in range(1000):
            point = {
                "x": float(rng.uniform(-5, 5)),
                "n": int(rng.integers(1, 101)),
                "c": ["a", "b"][int(rng.integers(2))],
            }
            assert math.isfinite(good.logpdf(point))
            assert math.isfinite(bad.logpdf(point))


class TestSuggestTpe:
    def test_no_data_gives_uniform_in_range_draw(self):
        space = SearchSpace.of(ParamSpec("x", CONTINUOUS, low=2.0, high=3.0))
        suggestion = suggest_tpe(ObservationSet(), space, rng=np.random.default_rng(0))
        assert validate_assignment(space, suggestion).ok

    def test_two_point_discrete_brute_force_oracle(self):
        space = SearchSpace.of(ParamSpec("c", CATEGORICAL, choices=["A", "B"]))
        obs = ObservationSet()
        for _ in range(6):
            obs.add({"c": "A"}, 0.0)  # A is always good
        for _ in range(6):
            obs.add({"c": "B"}, 10.0)
        from tunelab.tpe import split_observations as split_fn

        split = split_fn(obs, 0.25)
        good = fit_density([p for p, _ in split.good], space)
        bad = fit_density([p for p, _ in split.bad], space)
        oracle = max(
            ({"c": c} for c in ["A", "B"]),
            key=lambda a: acquisition_log_ratio(good, bad, a),
        )
        assert oracle == {"c": "A"}
        suggestion = suggest_tpe(obs, space, rng=np.random.default_rng(1))
        assert suggestion == oracle

    def test_seeded_determinism(self):
        space = SearchSpace.of(
            ParamSpec("x", CONTINUOUS, low=0.0, high=1.0),
            ParamSpec("c", CATEGORICAL, choices=["a", "b"]),
        )
        obs = ObservationSet()
        rng = np.random.default_rng(7)
        for _ in range(12):
            obs.add({"x": float(rng.uniform(0, 1)), "c": "a"}, float(rng.uniform(0, 5)))
        first = suggest_tpe(obs, space, rng=np.random.default_rng(42))
        second = suggest_tpe(obs, space, rng=np.random.default_rng(42))
        assert first == second

    def test_suggestions_validate_against_space(self):
        space = SearchSpace.of(
            ParamSpec("x", CONTINUOUS, low=-1.0, high=1.0),
            ParamSpec("n", INTEGER, low=2, high=5),
            ParamSpec("lr", CONTINUOUS, low=1e-4, high=1.0, log_scale=True),
        )
        rng = np.random.default_rng(11)
        obs = ObservationSet()
        for i in range(25):
            from tunelab.space import uniform_assignment

            a = uniform_assignment(space, rng)
            obs.add(a, float(i))
            suggestion = suggest_tpe(obs, space, rng=rng)
            assert validate_assignment(space, suggestion).ok

    def test_n_candidates_must_be_positive(self, unit_space):
        with pytest.raises(ConfigurationError):
            suggest_tpe(ObservationSet(), unit_space, n_candidates=0)
