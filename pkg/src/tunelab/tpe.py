"""From-scratch Tree-structured Parzen Estimator.

Observations are split at a score quantile into a good and a bad set; each
set gets an independent one-dimensional density per parameter (truncated
Gaussian kernel mixture blended with a uniform component for numeric
parameters, add-one smoothed frequencies for categoricals). Candidates are
drawn from the good-set densities and the one maximizing
``sum_p log l(v_p) - log g(v_p)`` is suggested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri  # Gaussian cdf / inverse cdf

from .errors import ConfigurationError
from .space import (
    CATEGORICAL,
    INTEGER,
    Params,
    ParamSpec,
    SearchSpace,
    round_half_away,
    uniform_assignment,
)

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

# Bandwidth floor as a fraction of the (possibly log-transformed) range width.
MIN_BANDWIDTH_FRACTION = 1e-3


@dataclass
class ObservationSet:
    """Evaluated configurations in iteration order, plus the direction."""

    rows: list[tuple[Params, float]] = field(default_factory=list)
    direction: str = MINIMIZE

    def add(self, params: Params, score: float) -> None:
        self.rows.append((dict(params), float(score)))

    def __len__(self) -> int:
        return len(self.rows)


@dataclass
class SplitResult:
    good: list[tuple[Params, float]]
    bad: list[tuple[Params, float]]
    y_star: float
    gamma: float


def split_observations(obs: ObservationSet, gamma: float) -> SplitResult:
    """Partition rows so the best ``max(1, ceil(gamma * n))`` are good.

    Scores are negated internally under maximize so "good" always means
    best. Ties at the threshold go to the earlier row (stable order).
    """
    n = len(obs.rows)
    if n == 0:
        raise ConfigurationError("cannot split an empty observation set")
    if not 0 < gamma < 1:
        raise ConfigurationError("gamma must be in (0, 1)")
    sign = 1.0 if obs.direction == MINIMIZE else -1.0
    internal = np.array([sign * score for _, score in obs.rows])
    order = np.argsort(internal, kind="stable")
    n_good = max(1, math.ceil(gamma * n))
    good_idx = order[:n_good]
    bad_idx = order[n_good:]
    return SplitResult(
        good=[obs.rows[i] for i in good_idx],
        bad=[obs.rows[i] for i in bad_idx],
        y_star=obs.rows[good_idx[-1]][1],
        gamma=gamma,
    )


class _NumericDensity:
    """Kernel mixture over one numeric parameter, strictly positive in range.

    All k kernels are truncated to the range, so together with the uniform
    blend component (weight 1/(k+1) each) the density integrates to one
    over [low, high]. Log-scaled parameters are modeled in log domain; pdf
    values include the 1/v Jacobian so they stay densities in value space.
    """

    def __init__(self, spec: ParamSpec, values: Sequence[float]):
        self.spec = spec
        self.lo = math.log(spec.low) if spec.log_scale else float(spec.low)
        self.hi = math.log(spec.high) if spec.log_scale else float(spec.high)
        self.width = self.hi - self.lo
        mus = np.array([math.log(v) if spec.log_scale else float(v) for v in values])
        self.mus = mus
        k = len(mus)
        if k:
            sigma = float(np.std(mus))
            # Silverman-style rule, clipped from below so repeated near-identical
            # observations cannot collapse the kernels into self-reinforcing
            # spikes, and from above at the range width.
            floor = max(self.width / min(100, k + 1), MIN_BANDWIDTH_FRACTION * self.width)
            self.h = min(max(sigma * k ** (-1 / 5), floor), self.width)
            z = ndtr((self.hi - mus) / self.h) - ndtr((self.lo - mus) / self.h)
            self.z = np.maximum(z, 1e-300)
            self.degenerate = z < 1e-12  # kernel mass left in range is negligible
        else:
            self.h = 0.0
            self.z = np.empty(0)
            self.degenerate = np.empty(0, dtype=bool)

    def _to_model(self, value) -> float:
        v = float(value)
        if self.spec.log_scale:
            v = math.log(max(v, self.spec.low))
        return min(max(v, self.lo), self.hi)

    def pdf(self, values: np.ndarray | float) -> np.ndarray:
        """Density in value space, vectorized over in-range values."""
        arr = np.atleast_1d(np.asarray(values, dtype=float))
        if self.spec.log_scale:
            u = np.log(arr)
            jac = 1.0 / arr
        else:
            u = arr
            jac = np.ones_like(arr)
        k = len(self.mus)
        uniform = 1.0 / self.width
        if k == 0:
            return uniform * jac
        comp = np.exp(-0.5 * ((u[:, None] - self.mus[None, :]) / self.h) ** 2)
        comp = comp / (self.h * math.sqrt(2 * math.pi) * self.z[None, :])
        comp = np.where(self.degenerate[None, :], uniform, comp)
        total = (uniform + comp.sum(axis=1)) / (k + 1)
        return total * jac

    def logpdf(self, value) -> float:
        return float(np.log(self.pdf(self._from_model_clip(value))[0]))

    def _from_model_clip(self, value) -> float:
        # Evaluate at the nearest in-range point so stale observations from
        # before a space update still get a positive, finite density.
        v = float(value)
        return min(max(v, self.spec.low), self.spec.high)

    def sample(self, rng: np.random.Generator) -> float:
        k = len(self.mus)
        idx = int(rng.integers(k + 1))
        if idx == k or (k and self.degenerate[idx]):
            u = float(rng.uniform(self.lo, self.hi))
        else:
            a = ndtr((self.lo - self.mus[idx]) / self.h)
            b = ndtr((self.hi - self.mus[idx]) / self.h)
            t = a + rng.random() * (b - a)
            u = self.mus[idx] + self.h * float(ndtri(min(max(t, 1e-15), 1 - 1e-15)))
            u = min(max(u, self.lo), self.hi)
        value = math.exp(u) if self.spec.log_scale else u
        if self.spec.kind == INTEGER:
            return min(max(round_half_away(value), int(self.spec.low)), int(self.spec.high))
        return min(max(value, self.spec.low), self.spec.high)


class _CategoricalDensity:
    """Add-one smoothed category frequencies; probabilities sum to one."""

    def __init__(self, spec: ParamSpec, values: Sequence[str]):
        self.spec = spec
        counts = {c: 1 for c in spec.choices}  # add-one smoothing
        for v in values:
            if v in counts:
                counts[v] += 1
        total = sum(counts.values())
        self.probs = {c: counts[c] / total for c in spec.choices}

    def pdf(self, value: str) -> float:
        return self.probs.get(value, min(self.probs.values()))

    def logpdf(self, value: str) -> float:
        return math.log(self.pdf(value))

    def sample(self, rng: np.random.Generator) -> str:
        p = np.array([self.probs[c] for c in self.spec.choices])
        idx = int(rng.choice(len(self.spec.choices), p=p))
        return self.spec.choices[idx]


@dataclass
class DensityModel:
    """Per-parameter independent densities for one side of the split."""

    estimators: dict[str, _NumericDensity | _CategoricalDensity]

    def logpdf(self, assignment: Params) -> float:
        return sum(self.estimators[n].logpdf(v) for n, v in assignment.items())

    def sample(self, rng: np.random.Generator) -> Params:
        return {name: est.sample(rng) for name, est in self.estimators.items()}


def fit_density(rows: Sequence[Params], space: SearchSpace) -> DensityModel:
    """Fit the per-parameter densities for the given rows.

    Empty rows fall back to a uniform density over each range, so both
    split sides always evaluate to a strictly positive density in range.
    """
    estimators: dict[str, _NumericDensity | _CategoricalDensity] = {}
    for name, spec in space.params.items():
        values = [row[name] for row in rows if name in row]
        if spec.kind == CATEGORICAL:
            estimators[name] = _CategoricalDensity(spec, values)
        else:
            estimators[name] = _NumericDensity(spec, values)
    return DensityModel(estimators)


def acquisition_log_ratio(good: DensityModel, bad: DensityModel, assignment: Params) -> float:
    """log l(x) - log g(x), the quantity a suggestion maximizes."""
    return good.logpdf(assignment) - bad.logpdf(assignment)


def suggest_tpe(
    obs: ObservationSet,
    space: SearchSpace,
    n_candidates: int = 24,
    gamma: float = 0.25,
    rng: np.random.Generator | None = None,
) -> Params:
    """Draw candidates from the good-set density and return the one with the
    highest good/bad log-density ratio. Deterministic for a seeded rng."""
    if n_candidates < 1:
        raise ConfigurationError("n_candidates must be >= 1")
    rng = rng if rng is not None else np.random.default_rng()
    if not obs.rows:
        return uniform_assignment(space, rng)
    split = split_observations(obs, gamma)
    good = fit_density([p for p, _ in split.good], space)
    bad = fit_density([p for p, _ in split.bad], space)
    best_candidate: Params | None = None
    best_score = -math.inf
    for _ in range(n_candidates):
        candidate = good.sample(rng)
        score = acquisition_log_ratio(good, bad, candidate)
        if score > best_score:
            best_candidate, best_score = candidate, score
    assert best_candidate is not None
    return best_candidate
