"""Pure-Python numerical kernels.

Reference implementation of every routine in the compiled ``_ckernels``
extension. The two modules expose the same names and signatures and are
checked against each other in the test suite; :mod:`powalloc.special`
picks one at import time.

No argument validation happens here. Callers in :mod:`powalloc.special`
and the solver modules check domains first.
"""

import math

import numpy as np

MACHEP = 1.11022302462515654042e-16
FPMIN = 1e-300
MAXIT_SERIES = 1_000_000
MAXIT_NEWTON = 200

P_MIN = 1e-300
P_MAX = 1.0 - 1e-16

SQRT1_2 = 0.70710678118654752440


# ---------------------------------------------------------------------------
# standard normal

def norm_cdf(z):
    return 0.5 * math.erfc(-z * SQRT1_2)


def norm_sf(z):
    return 0.5 * math.erfc(z * SQRT1_2)


def norm_pdf(z):
    return 0.3989422804014327 * math.exp(-0.5 * z * z)


def norm_ppf(p):
    """Wichura's AS241 (PPND16), relative accuracy about 1e-16."""
    q = p - 0.5
    if abs(q) <= 0.425:
        r = 0.180625 - q * q
        num = (((((((2509.0809287301226727 * r + 33430.575583588128105) * r
                    + 67265.770927008700853) * r + 45921.953931549871457) * r
                  + 13731.693765509461125) * r + 1971.5909503065514427) * r
                + 133.14166789178437745) * r + 3.387132872796366608)
        den = (((((((5226.495278852545925 * r + 28729.085735721942674) * r
                    + 39307.89580009271061) * r + 21213.794301586595867) * r
                  + 5394.1960214247511077) * r + 687.1870074920579083) * r
                + 42.313330701600911252) * r + 1.0)
        return q * num / den
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r
                    + 0.24178072517745061177) * r + 1.27045825245236838258) * r
                  + 3.64784832476320460504) * r + 5.7694972214606914055) * r
                + 4.6303378461565452959) * r + 1.42343711074968357734)
        den = (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r
                    + 0.0151986665636164571966) * r + 0.14810397642748007459) * r
                  + 0.68976733498510000455) * r + 1.6763848301838038494) * r
                + 2.05319162663775882187) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 0.0012426609473880784386) * r + 0.026532189526576123093) * r
                  + 0.29656057182850489123) * r + 1.7848265399172913358) * r
                + 5.4637849111641143699) * r + 6.6579046435011037772)
        den = (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r
                    + 1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r
                  + 0.0148753612908506148525) * r + 0.13692988092273580531) * r
                + 0.59983220655588793769) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


def norm_cdf_array(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    flat_in = z.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = 0.5 * math.erfc(-flat_in[i] * SQRT1_2)
    return out


# ---------------------------------------------------------------------------
# regularized incomplete gamma

def _gser(a, x):
    # series for P(a, x); valid for x < a + 1
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(MAXIT_SERIES):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * MACHEP:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gcf(a, x):
    # modified Lentz continued fraction for Q(a, x); valid for x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / FPMIN
    d = 1.0 / b
    h = d
    i = 1
    while i < MAXIT_SERIES:
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < MACHEP:
            break
        i += 1
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammainc_lower(a, x):
    if x <= 0.0:
        return 0.0
    if x < a + 1.0:
        return _gser(a, x)
    return 1.0 - _gcf(a, x)


def gammainc_upper(a, x):
    if x <= 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gser(a, x)
    return _gcf(a, x)


# ---------------------------------------------------------------------------
# regularized incomplete beta

def _betacf(a, b, x):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    m = 1
    while m < MAXIT_SERIES:
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if abs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < MACHEP:
            break
        m += 1
    return h


def _log_beta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def betainc(a, b, x):
    """I_x(a, b) for 0 <= x <= 1."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    return betainc_pair(a, b, x, 1.0 - x)


def betainc_pair(a, b, x, y):
    """I_x(a, b) where the caller also supplies y = 1 - x exactly."""
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    lbt = a * math.log(x) + b * math.log(y) - _log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(lbt) * _betacf(a, b, x) / a
    return 1.0 - math.exp(lbt) * _betacf(b, a, y) / b


# ---------------------------------------------------------------------------
# chi-squared

def chi2_cdf(x, nu):
    return gammainc_lower(0.5 * nu, 0.5 * x)


def chi2_sf(x, nu):
    return gammainc_upper(0.5 * nu, 0.5 * x)


def chi2_logpdf(x, nu):
    h = 0.5 * nu
    return (h - 1.0) * math.log(x) - 0.5 * x - h * math.log(2.0) - math.lgamma(h)


def chi2_pdf(x, nu):
    if x <= 0.0:
        if nu == 2.0:
            return 0.5
        return 0.0 if nu > 2.0 else math.inf
    return math.exp(chi2_logpdf(x, nu))


def _chi2_start(p, nu, upper):
    # Wilson-Hilferty with a small-p power-law correction on the lower tail
    z = -norm_ppf(p) if upper else norm_ppf(p)
    h = 2.0 / (9.0 * nu)
    base = 1.0 - h + z * math.sqrt(h)
    if base > 0.0:
        x = nu * base * base * base
    else:
        x = 0.0
    if not upper:
        a = 0.5 * nu
        xs = 2.0 * math.exp((math.log(p) + math.log(a) + math.lgamma(a)) / a)
        if x <= 0.0 or p < 1e-4:
            x = xs
    if x <= 0.0 or not math.isfinite(x):
        x = nu
    return x


def _chi2_invert(p, nu, upper):
    """Solve log(tail(x)) = log(p) for x, Newton in log(x) with bisection."""
    target = math.log(p)
    y = math.log(_chi2_start(p, nu, upper))
    lo = -math.inf
    hi = math.inf
    for _ in range(MAXIT_NEWTON):
        x = math.exp(y)
        tail = chi2_sf(x, nu) if upper else chi2_cdf(x, nu)
        if tail <= 0.0:
            # underflow: far out in the tail, move back toward the bulk
            if upper:
                hi = y
            else:
                lo = y
            y_new = 0.5 * (lo + hi) if math.isfinite(lo) and math.isfinite(hi) else (y - 1.0 if upper else y + 1.0)
            y = y_new
            continue
        resid = math.log(tail) - target
        if abs(resid) <= 2.0 * MACHEP:
            break
        # lower tail increases in y, upper tail decreases
        if (resid > 0.0) != upper:
            hi = y
        else:
            lo = y
        dens = math.exp(chi2_logpdf(x, nu) + y)
        slope = dens / tail
        if upper:
            slope = -slope
        if slope == 0.0:
            step = math.nan
        else:
            step = resid / slope
        y_new = y - step
        if not (lo < y_new < hi) or not math.isfinite(y_new):
            if math.isfinite(lo) and math.isfinite(hi):
                y_new = 0.5 * (lo + hi)
            else:
                y_new = y + (2.0 if (resid < 0.0) != upper else -2.0)
        if abs(y_new - y) <= 4.0 * MACHEP * max(1.0, abs(y)):
            y = y_new
            break
        y = y_new
    return math.exp(y)


def chi2_ppf(p, nu):
    """Lower-tail quantile: x with P(X <= x) = p."""
    if p <= 0.5:
        return _chi2_invert(max(p, P_MIN), nu, False)
    return _chi2_invert(max(1.0 - p, P_MIN), nu, True)


def chi2_isf(q, nu):
    """Upper-tail quantile: x with P(X > x) = q."""
    if q <= 0.5:
        return _chi2_invert(max(q, P_MIN), nu, True)
    return _chi2_invert(max(1.0 - q, P_MIN), nu, False)


# ---------------------------------------------------------------------------
# F with symmetric degrees of freedom (nu, nu)

def f_cdf(x, nu):
    if x <= 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    a = 0.5 * nu
    if x <= 1.0:
        return betainc_pair(a, a, x / (1.0 + x), 1.0 / (1.0 + x))
    return 1.0 - betainc_pair(a, a, 1.0 / (1.0 + x), x / (1.0 + x))


def f_logpdf(x, nu):
    a = 0.5 * nu
    return (a - 1.0) * math.log(x) - nu * math.log1p(x) - _log_beta(a, a)


def f_pdf(x, nu):
    if x <= 0.0:
        return 0.0
    return math.exp(f_logpdf(x, nu))


def _f_lower_quantile(p, nu):
    # p <= 0.5: Newton in log(x) on log(F_cdf), bracketed
    target = math.log(p)
    a = 0.5 * nu
    # start: for p near 0, F(x) ~ x^a / (a B(a,a))
    y = min(0.0, (target + math.log(a) + _log_beta(a, a)) / a)
    if p > 0.05:
        y = 2.0 * norm_ppf(p) / math.sqrt(nu) if nu > 2 else y
        y = min(y, 0.0)
    lo, hi = -math.inf, 0.0
    for _ in range(MAXIT_NEWTON):
        x = math.exp(y)
        cdf = f_cdf(x, nu)
        if cdf <= 0.0:
            lo = y
            y = 0.5 * (lo + hi) if math.isfinite(lo) else y + 1.0
            continue
        resid = math.log(cdf) - target
        if abs(resid) <= 2.0 * MACHEP:
            break
        if resid > 0.0:
            hi = y
        else:
            lo = y
        slope = math.exp(f_logpdf(x, nu) + y) / cdf
        y_new = y - resid / slope if slope > 0.0 else math.nan
        if not (lo < y_new < hi) or not math.isfinite(y_new):
            y_new = 0.5 * (lo + hi) if math.isfinite(lo) else y - 2.0
        if abs(y_new - y) <= 4.0 * MACHEP * max(1.0, abs(y)):
            y = y_new
            break
        y = y_new
    return math.exp(y)


def f_ppf(p, nu):
    if p == 0.5:
        return 1.0
    if p < 0.5:
        return _f_lower_quantile(max(p, P_MIN), nu)
    return 1.0 / _f_lower_quantile(max(1.0 - p, P_MIN), nu)


# ---------------------------------------------------------------------------
# interval scaling factors and the inflation cost kappa(eps, c)

def phi_factors(nu, c):
    """(lower, upper) variance scaling factors at confidence c."""
    tail = 0.5 * (1.0 - c)
    return nu / chi2_isf(tail, nu), nu / chi2_ppf(tail, nu)


def _dlogpdf(x, nu):
    return (0.5 * nu - 1.0) / x - 0.5


def kappa_derivs(nu, x):
    """kappa(c), g'(x) and g''(x) at c = exp(x), with g(x) = kappa(exp(x)).

    Quantile derivatives come from dQ/dp = 1/f(Q) and
    d2Q/dp2 = -f'(Q) / f(Q)^3.
    """
    c = math.exp(x)
    tail = -0.5 * math.expm1(x)
    A = chi2_isf(tail, nu)
    B = chi2_ppf(tail, nu)
    fA = chi2_pdf(A, nu)
    fB = chi2_pdf(B, nu)
    dA = 0.5 / fA
    dB = -0.5 / fB
    d2A = -0.25 * _dlogpdf(A, nu) / (fA * fA)
    d2B = -0.25 * _dlogpdf(B, nu) / (fB * fB)
    kap = A / B
    num = dA * B - A * dB
    dk = num / (B * B)
    d2k = (d2A * B - A * d2B) / (B * B) - 2.0 * dB * num / (B * B * B)
    g1 = c * dk
    g2 = g1 + c * c * d2k
    return kap, g1, g2


def kappa_value(nu, c):
    if c <= 0.0:
        return 1.0
    tail = 0.5 * (1.0 - c)
    return chi2_isf(tail, nu) / chi2_ppf(tail, nu)


def solve_marginal(a, nu, log_lam, xlo, xhi, x0):
    """x in [xlo, xhi] with a * g'(x) = exp(log_lam); clamps at the ends.

    Newton on log g'(x), which is increasing because g is convex and
    increasing, with bisection whenever a step leaves the bracket.
    """
    target = log_lam - math.log(a)
    lo, hi = xlo, xhi
    x = x0 if lo < x0 < hi else 0.5 * (lo + hi)
    for _ in range(MAXIT_NEWTON):
        _, g1, g2 = kappa_derivs(nu, x)
        resid = math.log(g1) - target
        if resid > 0.0:
            hi = x
        else:
            lo = x
        x_new = x - resid * g1 / g2
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-13 * max(1.0, abs(x)) or hi - lo <= 1e-13 * max(1.0, abs(lo)):
            x = x_new
            break
        x = x_new
    return min(max(x, xlo), xhi)


def path_point(a, nu, log_lam, xlo, xhi, x_out):
    """Per-coordinate KKT solutions for one multiplier.

    ``x_out`` holds warm starts on entry and the solutions on exit.
    """
    for i in range(len(a)):
        x_out[i] = solve_marginal(a[i], nu[i], log_lam, xlo[i], xhi[i], x_out[i])
    return x_out
