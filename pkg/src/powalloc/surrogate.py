"""Robust surrogate programs for general M.

A pilot of size epsilon pins sigma^2 inside [phi_lower S^2, phi_upper S^2]
with probability c. Requiring every interval to hold at once (probability
prod c_i) bounds the realized worst-case Type-2 error by

    Phi(q - sqrt(N / sum_i kappa(eps_i, c_i) a_i)),   kappa = phi_upper / phi_lower.

In x = log c the cost g(x) = kappa(eps, e^x) is convex and increasing, so
all three programs (TOL, CONF, EXP) are separable convex problems whose
solutions lie on one path: a_i g_i'(x_i) = lambda for a shared multiplier.
Each solver walks that path in log(lambda).
"""

from dataclasses import dataclass, field
import math

import numpy as np

from powalloc import special
from powalloc.errors import DomainError, NumericError, PreconditionError
from powalloc.pair import critical_threshold, golden_section
from powalloc.power import (
    AllocationResult,
    allocation_with_corrections,
    beta_star_from_difficulties,
    critical_value,
    difficulty,
    Portfolio,
)

C_MIN = 1e-12
C_MAX = 1.0 - 1e-9
X_MIN = math.log(C_MIN)
X_MAX = math.log1p(-1e-9)

DUAL_TOL = 1e-10
MAXIT_DUAL = 300
EXP_GAMMA_RANGE = (1e-6, 1.0 - 1e-6)
EXP_SCAN_POINTS = 21
EXP_TOL = 1e-7

OBJECTIVES = ("tol", "conf", "exp")


@dataclass(frozen=True)
class ScalingPair:
    phi_lower: float
    phi_upper: float


@dataclass(frozen=True)
class CorrectionPlan:
    """Confidence levels, the correction factors they imply, and what they certify.

    ``k`` holds the raw upper scaling factors; ``k_normalized`` divides by
    the smallest one. Only ratios of ``k`` move the allocation.
    """

    c: np.ndarray
    k: np.ndarray
    objective_kind: str
    objective_value: float
    certified_gamma: float
    log_lambda: float
    metadata: dict = field(default_factory=dict)

    @property
    def k_normalized(self):
        return self.k / self.k.min()


def _check_eps(epsilon):
    if int(epsilon) != epsilon or epsilon < 2:
        raise DomainError(f"pilot size must be an integer >= 2, got {epsilon!r}")
    return float(epsilon - 1)


def _check_c(c):
    if not 0.0 <= c < 1.0:
        raise DomainError(f"confidence level must lie in [0, 1), got {c!r}")
    return float(c)


def scaling_factors(epsilon, c):
    """Lower and upper multipliers of S^2 bounding sigma^2 with probability c."""
    nu = _check_eps(epsilon)
    lo, hi = special.kernels.phi_factors(nu, _check_c(c))
    return ScalingPair(lo, hi)


def kappa(epsilon, c):
    """Ratio of upper to lower scaling factor; exactly 1 at c = 0."""
    return special.kernels.kappa_value(_check_eps(epsilon), _check_c(c))


def kappa_inverse(epsilon, target):
    """Confidence level c with kappa(epsilon, c) = target."""
    nu = _check_eps(epsilon)
    if not target > 1.0:
        raise DomainError(f"target must exceed 1, got {target!r}")
    kern = special.kernels
    k_lo, g1_lo, _ = kern.kappa_derivs(nu, X_MIN)
    if target <= k_lo:
        # kappa is linear in c this close to zero
        return (target - 1.0) / (g1_lo / C_MIN)
    if target > kern.kappa_value(nu, C_MAX):
        raise DomainError(f"target {target!r} exceeds kappa at the largest confidence level")
    lo, hi = X_MIN, X_MAX
    x = 0.5 * (lo + hi)
    for _ in range(200):
        kap, g1, _ = kern.kappa_derivs(nu, x)
        resid = kap - target
        if resid > 0.0:
            hi = x
        else:
            lo = x
        if abs(resid) <= 1e-14 * target:
            break
        x_new = x - resid / g1
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * max(1.0, abs(x)):
            x = x_new
            break
        x = x_new
    return math.exp(x)


def _kappas(nu, c):
    kv = special.kernels.kappa_value
    return np.array([kv(n, ci) for n, ci in zip(nu, c)])


def _inputs(difficulties, epsilons):
    a = np.ascontiguousarray(difficulties, dtype=float)
    eps = np.asarray(epsilons)
    if a.ndim != 1 or a.shape != eps.shape:
        raise PreconditionError(f"difficulties and pilot sizes must align, got {a.shape} and {eps.shape}")
    if np.any(a <= 0.0) or not np.all(np.isfinite(a)):
        raise PreconditionError("difficulties must be positive and finite")
    if np.any(eps < 2) or np.any(eps != np.round(eps)):
        raise PreconditionError("pilot sizes must be integers >= 2")
    return a, np.ascontiguousarray(eps - 1, dtype=float)


def surrogate_objective_beta(c, difficulties, epsilons, N, alpha):
    """Worst-case Type-2 error over the uncertainty set at confidence levels c."""
    a, nu = _inputs(difficulties, epsilons)
    c = np.asarray(c, dtype=float)
    if c.shape != a.shape:
        raise PreconditionError(f"expected {a.size} confidence levels, got {c.shape}")
    if np.any(c < 0.0) or np.any(c >= 1.0):
        raise DomainError("confidence levels must lie in [0, 1)")
    return beta_star_from_difficulties(_kappas(nu, c) * a, N, alpha)


class _Path:
    """Solutions x(lambda) of a_i g_i'(x_i) = lambda, clamped to [X_MIN, X_MAX]."""

    def __init__(self, a, nu):
        self.a, self.nu = a, nu
        m = a.size
        self.xlo = np.full(m, X_MIN)
        self.xhi = np.full(m, X_MAX)
        self.x = np.full(m, -1.0)
        g1 = special.kernels.kappa_derivs
        lo = [math.log(ai * g1(n, X_MIN)[1]) for ai, n in zip(a, nu)]
        hi = [math.log(ai * g1(n, X_MAX)[1]) for ai, n in zip(a, nu)]
        # below lam_lo every coordinate sits at X_MIN, above lam_hi at X_MAX
        self.lam_lo, self.lam_hi = min(lo) - 1.0, max(hi) + 1.0

    def at(self, log_lam):
        special.kernels.path_point(self.a, self.nu, log_lam, self.xlo, self.xhi, self.x)
        return self.x.copy()


def _dual_root(fun, target, lo, hi, tol):
    """Root of the increasing ``fun(t) = target`` on [lo, hi] (Illinois false position)."""
    f_lo, f_hi = fun(lo) - target, fun(hi) - target
    if f_lo > 0 or f_hi < 0:
        raise NumericError("dual bracket does not straddle the target",
                           {"lo": lo, "hi": hi, "f_lo": f_lo, "f_hi": f_hi})
    side = 0
    t, f_t = lo, f_lo
    for it in range(MAXIT_DUAL):
        t = hi - f_hi * (hi - lo) / (f_hi - f_lo) if f_hi != f_lo else 0.5 * (lo + hi)
        if not lo < t < hi:
            t = 0.5 * (lo + hi)
        f_t = fun(t) - target
        if abs(f_t) <= tol or hi - lo <= 1e-15 * max(1.0, abs(t)):
            return t
        if f_t > 0:
            hi, f_hi = t, f_t
            if side == -1:
                f_lo *= 0.5
            side = -1
        else:
            lo, f_lo = t, f_t
            if side == 1:
                f_hi *= 0.5
            side = 1
    raise NumericError("dual search did not converge",
                       {"iterations": MAXIT_DUAL, "t": t, "residual": f_t})


def _plan(x, a, nu, kind, value, log_lam, **metadata):
    c = np.exp(x)
    k = np.array([special.kernels.phi_factors(n, ci)[1] for n, ci in zip(nu, c)])
    return CorrectionPlan(c, k, kind, float(value), float(np.prod(c)), float(log_lam), metadata)


def _tol_point(path, log_gamma):
    m = path.a.size
    if not m * X_MIN < log_gamma < m * X_MAX:
        raise DomainError(f"gamma = {math.exp(log_gamma)!r} is outside the attainable range")
    log_lam = _dual_root(lambda t: path.at(t).sum(), log_gamma, path.lam_lo, path.lam_hi, DUAL_TOL)
    return log_lam, path.at(log_lam)


def solve_r_tol(difficulties, epsilons, gamma, N, alpha):
    """Confidence levels with product ``gamma`` that minimize the surrogate tolerance."""
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    a, nu = _inputs(difficulties, epsilons)
    log_lam, x = _tol_point(_Path(a, nu), math.log(gamma))
    kap = _kappas(nu, np.exp(x))
    delta = beta_star_from_difficulties(kap * a, N, alpha) - beta_star_from_difficulties(a, N, alpha)
    return _plan(x, a, nu, "tol", delta, log_lam, gamma=gamma)


def solve_r_conf(difficulties, epsilons, delta, N, alpha, beta_star=None):
    """Confidence levels maximizing their product with the tolerance ``delta`` guaranteed.

    ``beta_star`` defaults to the optimum implied by ``difficulties``.
    """
    a, nu = _inputs(difficulties, epsilons)
    if beta_star is None:
        beta_star = beta_star_from_difficulties(a, N, alpha)
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta!r}")
    d = critical_threshold(delta, beta_star, N, alpha)
    path = _Path(a, nu)

    def spend(t):
        return float(np.sum(a * _kappas(nu, np.exp(path.at(t)))))

    if d <= spend(path.lam_lo):
        log_lam = path.lam_lo
    elif d >= spend(path.lam_hi):
        log_lam = path.lam_hi
    else:
        log_lam = _dual_root(spend, d, path.lam_lo, path.lam_hi, DUAL_TOL * d)
    x = path.at(log_lam)
    gamma = float(np.exp(x.sum()))
    return _plan(x, a, nu, "conf", gamma, log_lam, delta=delta, threshold=d, beta_star=beta_star)


def solve_r_exp(difficulties, epsilons, N, alpha):
    """Confidence levels minimizing the surrogate bound on the expected worst-case error.

    The objective 1 + (Phi(q - sqrt(N / sum kappa a)) - 1) prod c is searched
    along the multiplier path. Each multiplier is the TOL solution for the
    confidence prod c it produces, so this is the line search over gamma
    in a monotone reparameterization.
    """
    a, nu = _inputs(difficulties, epsilons)
    q = critical_value(alpha)
    path = _Path(a, nu)
    t_lo, _ = _tol_point(path, math.log(EXP_GAMMA_RANGE[0]))
    t_hi, _ = _tol_point(path, math.log(EXP_GAMMA_RANGE[1]))

    def objective(t):
        x = path.at(t)
        spend = float(np.sum(a * _kappas(nu, np.exp(x))))
        bound = special.kernels.norm_cdf(q - math.sqrt(N / spend))
        return 1.0 + (bound - 1.0) * math.exp(x.sum())

    log_lam, value = golden_section(objective, t_lo, t_hi, EXP_SCAN_POINTS, EXP_TOL * max(1.0, t_hi - t_lo))
    x = path.at(log_lam)
    return _plan(x, a, nu, "exp", value, log_lam, gamma=float(np.exp(x.sum())))


def solve(objective, difficulties, epsilons, N, alpha, gamma=None, delta=None, beta_star=None):
    """Dispatch to the TOL, CONF or EXP solver by name."""
    if objective == "tol":
        if gamma is None:
            raise PreconditionError("TOL needs gamma")
        return solve_r_tol(difficulties, epsilons, gamma, N, alpha)
    if objective == "conf":
        if delta is None:
            raise PreconditionError("CONF needs delta")
        return solve_r_conf(difficulties, epsilons, delta, N, alpha, beta_star)
    if objective == "exp":
        return solve_r_exp(difficulties, epsilons, N, alpha)
    raise PreconditionError(f"objective must be one of {OBJECTIVES}, got {objective!r}")


def surrogate_s_pipeline(pilot_s, epsilons, deltas, N, alpha, objective, gamma=None, delta=None):
    """Pilot estimates in, correction plan and allocation out.

    The surrogate is solved with S in place of sigma. CONF needs a
    reference optimum for its threshold and uses the plug-in beta*(S).
    Per-experiment errors in the allocation are evaluated at S.
    """
    s = np.asarray(pilot_s, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    portfolio = Portfolio.from_arrays(deltas, N, alpha, pilot_s=s, epsilons=epsilons)
    a = difficulty(s, deltas)
    beta_proxy = beta_star_from_difficulties(a, N, alpha)
    plan = solve(objective, a, portfolio.epsilons, N, alpha, gamma, delta, beta_proxy)
    plan.metadata["beta_star_proxy"] = "plug-in beta*(S)" if objective == "conf" else "none"
    plan.metadata["beta_star_S"] = beta_proxy
    alloc = allocation_with_corrections(plan.k, s, portfolio)
    return plan, alloc


__all__ = [
    "AllocationResult",
    "CorrectionPlan",
    "ScalingPair",
    "kappa",
    "kappa_inverse",
    "scaling_factors",
    "solve",
    "solve_r_conf",
    "solve_r_exp",
    "solve_r_tol",
    "surrogate_objective_beta",
    "surrogate_s_pipeline",
]
