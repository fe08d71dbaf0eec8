"""Known-variance allocation: Type-2 errors and the minimax-power split.

Sample sizes are continuous throughout. :func:`round_allocation` turns a
continuous allocation into integers for reporting only.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from powalloc import special
from powalloc.errors import DomainError, PreconditionError


@dataclass(frozen=True)
class Pilot:
    """Pilot-study summary: pilot size and, once observed, the sample sd.

    ``s`` may be left out when only the pilot size matters (known-sigma
    studies of the correction factors).
    """

    epsilon: int
    s: float | None = None

    def __post_init__(self):
        if self.s is not None and not (self.s > 0 and math.isfinite(self.s)):
            raise PreconditionError(f"pilot s must be positive, got {self.s!r}")
        if int(self.epsilon) != self.epsilon or self.epsilon < 2:
            raise PreconditionError(f"pilot size must be >= 2, got {self.epsilon!r}")


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment.

    ``theta`` is the decision threshold of the one-sided test. It never
    enters a computation and is carried for reporting.
    """

    delta_gap: float
    sigma: float | None = None
    pilot: Pilot | None = None
    theta: float = 0.0

    def __post_init__(self):
        if not (self.delta_gap > 0 and math.isfinite(self.delta_gap)):
            raise PreconditionError(f"delta_gap must be positive, got {self.delta_gap!r}")
        if self.sigma is None and (self.pilot is None or self.pilot.s is None):
            raise PreconditionError("experiment needs sigma or a pilot estimate s")
        if self.sigma is not None and not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise PreconditionError(f"sigma must be positive, got {self.sigma!r}")


@dataclass(frozen=True)
class Portfolio:
    experiments: tuple
    budget: float
    alpha: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "experiments", tuple(self.experiments))
        if len(self.experiments) < 1:
            raise PreconditionError("portfolio needs at least one experiment")
        if not (self.budget > 0 and math.isfinite(self.budget)):
            raise PreconditionError(f"budget must be positive, got {self.budget!r}")
        if not 0.0 < self.alpha < 1.0:
            raise PreconditionError(f"alpha must lie in (0, 1), got {self.alpha!r}")

    def __len__(self):
        return len(self.experiments)

    @classmethod
    def from_arrays(cls, deltas, budget, alpha=0.05, sigmas=None, pilot_s=None, epsilons=None):
        deltas = np.asarray(deltas, dtype=float)
        m = len(deltas)
        exps = []
        for i in range(m):
            pilot = None
            if epsilons is not None:
                s = None if pilot_s is None else float(pilot_s[i])
                pilot = Pilot(int(epsilons[i]), s)
            sigma = None if sigmas is None else float(sigmas[i])
            exps.append(ExperimentSpec(float(deltas[i]), sigma=sigma, pilot=pilot))
        return cls(tuple(exps), float(budget), float(alpha))

    @property
    def deltas(self):
        return np.array([e.delta_gap for e in self.experiments])

    @property
    def sigmas(self):
        if any(e.sigma is None for e in self.experiments):
            missing = [i for i, e in enumerate(self.experiments) if e.sigma is None]
            raise PreconditionError(f"sigma missing for experiments {missing}")
        return np.array([e.sigma for e in self.experiments])

    @property
    def pilot_s(self):
        missing = [i for i, e in enumerate(self.experiments) if e.pilot is None or e.pilot.s is None]
        if missing:
            raise PreconditionError(f"pilot data missing for experiments {missing}")
        return np.array([e.pilot.s for e in self.experiments])

    @property
    def epsilons(self):
        missing = [i for i, e in enumerate(self.experiments) if e.pilot is None]
        if missing:
            raise PreconditionError(f"pilot data missing for experiments {missing}")
        return np.array([e.pilot.epsilon for e in self.experiments], dtype=int)


@dataclass(frozen=True)
class AllocationResult:
    n: np.ndarray
    per_experiment_beta: np.ndarray
    max_beta: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "max_beta", float(np.max(self.per_experiment_beta)))


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")


def critical_value(alpha):
    """q_{1-alpha}, the one-sided z-test rejection point."""
    _check_alpha(alpha)
    return special.std_normal_quantile(1.0 - alpha)


def type2_error(sigma, n, delta_gap, alpha):
    """Probability the one-sided z-test misses a true gap of ``delta_gap``."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma!r}")
    if not delta_gap > 0:
        raise DomainError(f"delta_gap must be positive, got {delta_gap!r}")
    if not n >= 0:
        raise DomainError(f"n must be nonnegative, got {n!r}")
    return special.std_normal_cdf(critical_value(alpha) - delta_gap * math.sqrt(n) / sigma)


def type2_errors(sigmas, n, deltas, alpha):
    """Vectorised :func:`type2_error` over aligned arrays (no validation)."""
    q = critical_value(alpha)
    z = q - np.asarray(deltas) * np.sqrt(np.asarray(n, dtype=float)) / np.asarray(sigmas)
    return special.kernels.norm_cdf_array(z)


def difficulty(sigma, delta_gap):
    """(sigma / delta)^2: samples needed per unit of squared noncentrality."""
    return (np.asarray(sigma, dtype=float) / np.asarray(delta_gap, dtype=float)) ** 2


def beta_star_from_difficulties(difficulties, budget, alpha):
    """Common optimal Type-2 error for difficulty indices ``difficulties``."""
    total = float(np.sum(difficulties))
    return special.std_normal_cdf(critical_value(alpha) - math.sqrt(budget / total))


def _proportional(weights, budget):
    weights = np.asarray(weights, dtype=float)
    return budget * weights / weights.sum()


def power_optimal_allocation(portfolio):
    """Minimax-Type-2 split for known sigmas; equalizes every experiment's error."""
    sig = portfolio.sigmas
    delta = portfolio.deltas
    n = _proportional(difficulty(sig, delta), portfolio.budget)
    return AllocationResult(n, type2_errors(sig, n, delta, portfolio.alpha))


def optimal_max_type2(portfolio):
    a = difficulty(portfolio.sigmas, portfolio.deltas)
    return beta_star_from_difficulties(a, portfolio.budget, portfolio.alpha)


def mse_optimal_allocation(portfolio):
    """Split proportional to sigma^2, the minimax-MSE rule that ignores the gaps."""
    sig = portfolio.sigmas
    n = _proportional(sig**2, portfolio.budget)
    return AllocationResult(n, type2_errors(sig, n, portfolio.deltas, portfolio.alpha))


def _check_corrections(k, s, m):
    k = np.asarray(k, dtype=float)
    s = np.asarray(s, dtype=float)
    if k.shape != (m,) or s.shape != (m,):
        raise PreconditionError(f"expected {m} correction factors and estimates, got {k.shape} and {s.shape}")
    if np.any(k < 1.0):
        raise PreconditionError("correction factors must be >= 1")
    if np.any(s <= 0.0):
        raise PreconditionError("standard deviation estimates must be positive")
    return k, s


def corrected_allocation(k, s, deltas, budget):
    """n_i proportional to k_i (s_i / delta_i)^2; no validation."""
    return _proportional(np.asarray(k) * difficulty(s, deltas), budget)


def allocation_with_corrections(k, s, portfolio, true_sigmas=None):
    """Plug-in allocation using inflated variances k_i * s_i^2.

    Type-2 errors in the result are evaluated at ``true_sigmas`` when given,
    otherwise at the estimates ``s`` themselves.
    """
    k, s = _check_corrections(k, s, len(portfolio))
    n = corrected_allocation(k, s, portfolio.deltas, portfolio.budget)
    eval_sigma = s if true_sigmas is None else np.asarray(true_sigmas, dtype=float)
    return AllocationResult(n, type2_errors(eval_sigma, n, portfolio.deltas, portfolio.alpha))


def realized_max_type2(k, s, true_sigmas, portfolio):
    """Worst Type-2 error actually incurred when allocating with (k, s)."""
    true_sigmas = np.asarray(true_sigmas, dtype=float)
    if true_sigmas.shape != (len(portfolio),) or np.any(true_sigmas <= 0):
        raise PreconditionError("true sigmas must be positive, one per experiment")
    return allocation_with_corrections(k, s, portfolio, true_sigmas).max_beta


def realized_max_type2_batch(k, s, sigmas, deltas, budget, alpha):
    """Row-wise realized maximum Type-2 error.

    ``k`` and ``s`` are (R, M) or broadcastable to it; each row is one
    pilot draw. Uses max over rows of the noncentrality minimum, so only
    one normal CDF is evaluated per row.
    """
    s = np.atleast_2d(np.asarray(s, dtype=float))
    k = np.broadcast_to(np.asarray(k, dtype=float), s.shape)
    w = k * (s / deltas) ** 2
    n = budget * w / w.sum(axis=1, keepdims=True)
    ncp = np.asarray(deltas) * np.sqrt(n) / np.asarray(sigmas)
    return special.kernels.norm_cdf_array(critical_value(alpha) - ncp.min(axis=1))


def round_allocation(n, budget=None):
    """Largest-remainder integer rounding that preserves the (rounded) total."""
    n = np.asarray(n, dtype=float)
    total = int(round(n.sum() if budget is None else budget))
    floors = np.floor(n).astype(int)
    short = total - floors.sum()
    order = np.argsort(-(n - floors), kind="stable")
    floors[order[:max(short, 0)]] += 1
    return floors
