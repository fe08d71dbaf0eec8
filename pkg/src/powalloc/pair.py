"""Exact analysis for two experiments sharing one pilot size.

With pilot chi-squared draws Y1, Y2 on nu = epsilon - 1 degrees of freedom
and inflation ratio r = k1 / k2, the realized worst-case Type-2 error is
Phi(q - sqrt(N / max(U1, U2))) where

    U1 = a1 + a2 * Y2 / (r * Y1),    U2 = a2 + r * a1 * Y1 / Y2.

Everything below is a statement about the law of max(U1, U2).
"""

from dataclasses import dataclass
import math

import numpy as np

from powalloc import special
from powalloc.errors import DomainError, NumericError, PreconditionError
from powalloc.power import beta_star_from_difficulties, critical_value

GOLDEN = 0.5 * (math.sqrt(5.0) - 1.0)
S_BOUND = 10.0
SCAN_POINTS = 41
GOLDEN_TOL = 1e-6
NORMALIZATION_TOL = 1e-10


@dataclass(frozen=True)
class PairInstance:
    a1: float
    a2: float
    epsilon: int
    N: float
    alpha: float = 0.05

    def __post_init__(self):
        if not (self.a1 > 0 and self.a2 > 0):
            raise PreconditionError("difficulties must be positive")
        if int(self.epsilon) != self.epsilon or self.epsilon < 2:
            raise PreconditionError(f"pilot size must be >= 2, got {self.epsilon!r}")
        if not self.N > 0:
            raise PreconditionError(f"budget must be positive, got {self.N!r}")
        if not 0.0 < self.alpha < 1.0:
            raise PreconditionError(f"alpha must lie in (0, 1), got {self.alpha!r}")

    @property
    def nu(self):
        return self.epsilon - 1

    @property
    def beta_star(self):
        return beta_star_from_difficulties([self.a1, self.a2], self.N, self.alpha)

    @classmethod
    def from_ratio(cls, ratio, epsilon, N, scale=20.0, alpha=0.05):
        """Instance with a1 / a2 = ``ratio`` and geometric mean ``scale``."""
        root = math.sqrt(ratio)
        return cls(scale * root, scale / root, epsilon, N, alpha)


@dataclass(frozen=True)
class PairOptimum:
    r_star: float
    objective: float
    kind: str
    d_star: float | None = None
    coverage: float | None = None


def critical_threshold(delta, beta_star, N, alpha):
    """Largest max(U1, U2) compatible with a Type-2 error of beta_star + delta.

    ``delta = 0`` is accepted and gives the known-sigma total difficulty.
    """
    q = critical_value(alpha)
    upper = 1.0 - alpha - beta_star
    if not 0.0 <= delta < upper:
        raise DomainError(f"delta must lie in [0, {upper:.6g}), got {delta!r}")
    gap = q - special.std_normal_quantile(beta_star + delta)
    return N / (gap * gap)


def tolerance_from_threshold(d, beta_star, N, alpha):
    """Inverse of :func:`critical_threshold`."""
    return special.std_normal_cdf(critical_value(alpha) - math.sqrt(N / d)) - beta_star


def coverage_H(r, d, inst):
    """P(max(U1, U2) <= d) at inflation ratio ``r``; zero when d <= a1 + a2."""
    if not r > 0:
        raise DomainError(f"r must be positive, got {r!r}")
    a1, a2 = inst.a1, inst.a2
    if d <= a1 + a2:
        return 0.0
    k = special.kernels
    hi = k.f_cdf((d - a2) / (r * a1), inst.nu)
    lo = k.f_cdf(a2 / (r * (d - a1)), inst.nu)
    return max(hi - lo, 0.0)


def maximizer_r(d, a1, a2):
    """The ratio maximizing coverage at threshold ``d``."""
    if not d > a1 + a2:
        raise DomainError(f"threshold must exceed a1 + a2 = {a1 + a2!r}, got {d!r}")
    return math.sqrt((a2 / (d - a1)) * ((d - a2) / a1))


def _m_pair(d, a1, a2):
    return a2 / (d - a1), (d - a2) / a1


def tol_optimum(gamma, inst):
    """Smallest tolerance reachable with confidence ``gamma``."""
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    a1, a2 = inst.a1, inst.a2
    f = special.f_quantile(0.5 * (1.0 + gamma), inst.nu)
    d = 0.5 * (a1 + a2 + math.sqrt((a1 - a2) ** 2 + 4.0 * a1 * a2 * f * f))
    m1, m2 = _m_pair(d, a1, a2)
    r = math.sqrt(m1 * m2)
    delta = tolerance_from_threshold(d, inst.beta_star, inst.N, inst.alpha)
    return PairOptimum(r, delta, "tol", d_star=d, coverage=coverage_H(r, d, inst))


def conf_optimum(delta, inst, beta_star=None):
    """Largest confidence that the tolerance ``delta`` is met."""
    beta_star = inst.beta_star if beta_star is None else beta_star
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta!r}")
    d = critical_threshold(delta, beta_star, inst.N, inst.alpha)
    r = maximizer_r(d, inst.a1, inst.a2)
    gamma = coverage_H(r, d, inst)
    return PairOptimum(r, gamma, "conf", d_star=d, coverage=gamma)


# ---------------------------------------------------------------------------
# expected worst-case error

def _log_w_density(w, nu):
    """log density of log(Y1 / Y2); symmetric, written as -nu * log(2 cosh(w/2))."""
    half = 0.5 * np.abs(w)
    log_cosh2 = half + np.log1p(np.exp(-2.0 * half))
    lbeta = 2.0 * math.lgamma(0.5 * nu) - math.lgamma(nu)
    return -nu * log_cosh2 - lbeta


def _w_half_width(nu):
    # 40 standard deviations near normality; the e^{-nu |w| / 2} tail sets it for small nu
    return max(40.0 / math.sqrt(nu), 80.0 / nu)


class _ExpQuadrature:
    """Composite Gauss-Legendre rule for J(s) = E[Phi(q - sqrt(N / M(W + s)))].

    M(y) = max(a1 + a2 e^{-y}, a2 + a1 e^{y}) has its kink at y = 0, where
    both branches equal a1 + a2; the panel containing w = -s is split there.
    """

    def __init__(self, inst, panels=64, order=20):
        self.inst = inst
        self.q = critical_value(inst.alpha)
        self.half = _w_half_width(inst.nu)
        self.panels = panels
        self.nodes, self.weights = np.polynomial.legendre.leggauss(order)
        edges = np.linspace(-self.half, self.half, panels + 1)
        w, wt = self._rule(edges)
        self.norm = float(np.sum(wt * np.exp(_log_w_density(w, inst.nu))))
        if abs(self.norm - 1.0) > NORMALIZATION_TOL:
            raise NumericError("W density does not integrate to one",
                               {"normalization": self.norm, "nu": inst.nu, "panels": panels})

    def _rule(self, edges):
        lo, hi = edges[:-1, None], edges[1:, None]
        mid, rad = 0.5 * (lo + hi), 0.5 * (hi - lo)
        return (mid + rad * self.nodes).ravel(), (rad * self.weights).ravel()

    def _edges(self, s):
        edges = np.linspace(-self.half, self.half, self.panels + 1)
        cut = -s
        if -self.half < cut < self.half:
            edges = np.unique(np.append(edges, cut))
        return edges

    def value(self, s):
        a1, a2, N = self.inst.a1, self.inst.a2, self.inst.N
        w, wt = self._rule(self._edges(s))
        y = w + s
        m = np.maximum(a1 + a2 * np.exp(-y), a2 + a1 * np.exp(y))
        beta = special.kernels.norm_cdf_array(self.q - np.sqrt(N / m))
        dens = np.exp(_log_w_density(w, self.inst.nu))
        return float(np.sum(wt * dens * beta)) / self.norm


def expected_max_type2(r, inst, panels=64):
    """E[realized worst-case Type-2 error] at inflation ratio ``r``, by quadrature."""
    if not r > 0:
        raise DomainError(f"r must be positive, got {r!r}")
    return _ExpQuadrature(inst, panels).value(math.log(r))


def _golden_min(f, lo, hi, tol):
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def golden_section(f, lo, hi, scan=SCAN_POINTS, tol=GOLDEN_TOL):
    """Minimize ``f`` on [lo, hi]: coarse scan, then refine around the best point."""
    grid = np.linspace(lo, hi, scan)
    vals = [f(x) for x in grid]
    j = int(np.argmin(vals))
    left = grid[max(j - 1, 0)]
    right = grid[min(j + 1, scan - 1)]
    x, fx = _golden_min(f, left, right, tol)
    if vals[j] < fx:
        x, fx = grid[j], vals[j]
    return float(x), float(fx)


def exp_optimum(inst, panels=64):
    """Ratio minimizing the expected worst-case Type-2 error."""
    quad = _ExpQuadrature(inst, panels)
    s, val = golden_section(quad.value, -S_BOUND, S_BOUND)
    # the rule is fixed; confirm it is resolved at the optimum
    fine = _ExpQuadrature(inst, 2 * panels).value(s)
    if abs(fine - val) > 1e-9 * max(val, 1e-300) + 1e-14:
        raise NumericError("quadrature not converged at the optimum",
                           {"s": s, "coarse": val, "fine": fine, "panels": panels})
    return PairOptimum(math.exp(s), val, "exp")


# ---------------------------------------------------------------------------
# Monte Carlo checks

def _draw_u(inst, r, draws, seed):
    rng = np.random.default_rng(seed)
    y1 = rng.chisquare(inst.nu, draws)
    y2 = rng.chisquare(inst.nu, draws)
    u1 = inst.a1 + inst.a2 * y2 / (r * y1)
    u2 = inst.a2 + r * inst.a1 * y1 / y2
    return np.maximum(u1, u2)


def mc_coverage(r, d, inst, draws=400_000, seed=0):
    """Simulated P(max(U1, U2) <= d); returns (estimate, standard error)."""
    hit = _draw_u(inst, r, draws, seed) <= d
    p = float(hit.mean())
    return p, math.sqrt(max(p * (1.0 - p), 1e-300) / draws)


def mc_expected_max_type2(r, inst, draws=1_000_000, seed=0):
    """Simulated E[realized worst-case Type-2 error]; returns (mean, standard error)."""
    m = _draw_u(inst, r, draws, seed)
    beta = special.kernels.norm_cdf_array(critical_value(inst.alpha) - np.sqrt(inst.N / m))
    return float(beta.mean()), float(beta.std(ddof=1) / math.sqrt(draws))
