# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels.

Same names, signatures and algorithms as ``_pykernels``; see that module
for the reference implementation. No argument validation happens here.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport erfc, exp, log, lgamma, log1p, expm1, sqrt, fabs, INFINITY, isfinite, isnan

cnp.import_array()

cdef double MACHEP = 1.11022302462515654042e-16
cdef double FPMIN = 1e-300
cdef long MAXIT_SERIES = 1000000
cdef int MAXIT_NEWTON = 200
cdef double P_MIN = 1e-300
cdef double SQRT1_2 = 0.70710678118654752440
cdef double LOG2 = 0.69314718055994530942

P_MAX = 1.0 - 1e-16


# ---------------------------------------------------------------------------
# standard normal

cdef inline double _norm_cdf(double z) nogil:
    return 0.5 * erfc(-z * SQRT1_2)


cpdef double norm_cdf(double z):
    return _norm_cdf(z)


cpdef double norm_sf(double z):
    return 0.5 * erfc(z * SQRT1_2)


cpdef double norm_pdf(double z):
    return 0.3989422804014327 * exp(-0.5 * z * z)


cdef double _norm_ppf(double p) nogil:
    cdef double q = p - 0.5
    cdef double r, num, den, val
    if fabs(q) <= 0.425:
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
    if q < 0.0:
        r = p
    else:
        r = 1.0 - p
    r = sqrt(-log(r))
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
    if q < 0.0:
        return -val
    return val


cpdef double norm_ppf(double p):
    return _norm_ppf(p)


def norm_cdf_array(z):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat_in = np.ascontiguousarray(z, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat_out = np.empty_like(flat_in)
    cdef Py_ssize_t i, n = flat_in.shape[0]
    with nogil:
        for i in range(n):
            flat_out[i] = 0.5 * erfc(-flat_in[i] * SQRT1_2)
    return flat_out.reshape(np.shape(z))


# ---------------------------------------------------------------------------
# regularized incomplete gamma

cdef double _gser(double a, double x) nogil:
    cdef double ap = a
    cdef double term = 1.0 / a
    cdef double total = term
    cdef long it
    for it in range(MAXIT_SERIES):
        ap += 1.0
        term *= x / ap
        total += term
        if fabs(term) < fabs(total) * MACHEP:
            break
    return total * exp(-x + a * log(x) - lgamma(a))


cdef double _gcf(double a, double x) nogil:
    cdef double b = x + 1.0 - a
    cdef double c = 1.0 / FPMIN
    cdef double d = 1.0 / b
    cdef double h = d
    cdef double an, delta
    cdef long i = 1
    while i < MAXIT_SERIES:
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if fabs(d) < FPMIN:
            d = FPMIN
        c = b + an / c
        if fabs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < MACHEP:
            break
        i += 1
    return exp(-x + a * log(x) - lgamma(a)) * h


cdef double _gammainc_lower(double a, double x) nogil:
    if x <= 0.0:
        return 0.0
    if x < a + 1.0:
        return _gser(a, x)
    return 1.0 - _gcf(a, x)


cdef double _gammainc_upper(double a, double x) nogil:
    if x <= 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gser(a, x)
    return _gcf(a, x)


cpdef double gammainc_lower(double a, double x):
    return _gammainc_lower(a, x)


cpdef double gammainc_upper(double a, double x):
    return _gammainc_upper(a, x)


# ---------------------------------------------------------------------------
# regularized incomplete beta

cdef double _betacf(double a, double b, double x) nogil:
    cdef double qab = a + b
    cdef double qap = a + 1.0
    cdef double qam = a - 1.0
    cdef double c = 1.0
    cdef double d = 1.0 - qab * x / qap
    cdef double h, aa, delta
    cdef long m = 1
    cdef double m2
    if fabs(d) < FPMIN:
        d = FPMIN
    d = 1.0 / d
    h = d
    while m < MAXIT_SERIES:
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if fabs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if fabs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < FPMIN:
            d = FPMIN
        c = 1.0 + aa / c
        if fabs(c) < FPMIN:
            c = FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < MACHEP:
            break
        m += 1
    return h


cdef inline double _log_beta(double a, double b) nogil:
    return lgamma(a) + lgamma(b) - lgamma(a + b)


cdef double _betainc_pair(double a, double b, double x, double y) nogil:
    cdef double lbt
    if x <= 0.0:
        return 0.0
    if y <= 0.0:
        return 1.0
    lbt = a * log(x) + b * log(y) - _log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return exp(lbt) * _betacf(a, b, x) / a
    return 1.0 - exp(lbt) * _betacf(b, a, y) / b


cpdef double betainc_pair(double a, double b, double x, double y):
    return _betainc_pair(a, b, x, y)


cpdef double betainc(double a, double b, double x):
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    return _betainc_pair(a, b, x, 1.0 - x)


# ---------------------------------------------------------------------------
# chi-squared

cdef inline double _chi2_cdf(double x, double nu) nogil:
    return _gammainc_lower(0.5 * nu, 0.5 * x)


cdef inline double _chi2_sf(double x, double nu) nogil:
    return _gammainc_upper(0.5 * nu, 0.5 * x)


cdef inline double _chi2_logpdf(double x, double nu) nogil:
    cdef double h = 0.5 * nu
    return (h - 1.0) * log(x) - 0.5 * x - h * LOG2 - lgamma(h)


cdef double _chi2_pdf(double x, double nu) nogil:
    if x <= 0.0:
        if nu == 2.0:
            return 0.5
        if nu > 2.0:
            return 0.0
        return INFINITY
    return exp(_chi2_logpdf(x, nu))


cpdef double chi2_cdf(double x, double nu):
    return _chi2_cdf(x, nu)


cpdef double chi2_sf(double x, double nu):
    return _chi2_sf(x, nu)


cpdef double chi2_logpdf(double x, double nu):
    return _chi2_logpdf(x, nu)


cpdef double chi2_pdf(double x, double nu):
    return _chi2_pdf(x, nu)


cdef double _chi2_start(double p, double nu, bint upper) nogil:
    cdef double z, h, base, x, a, xs
    if upper:
        z = -_norm_ppf(p)
    else:
        z = _norm_ppf(p)
    h = 2.0 / (9.0 * nu)
    base = 1.0 - h + z * sqrt(h)
    if base > 0.0:
        x = nu * base * base * base
    else:
        x = 0.0
    if not upper:
        a = 0.5 * nu
        xs = 2.0 * exp((log(p) + log(a) + lgamma(a)) / a)
        if x <= 0.0 or p < 1e-4:
            x = xs
    if x <= 0.0 or not isfinite(x):
        x = nu
    return x


cdef double _chi2_invert(double p, double nu, bint upper) nogil:
    cdef double target = log(p)
    cdef double y = log(_chi2_start(p, nu, upper))
    cdef double lo = -INFINITY
    cdef double hi = INFINITY
    cdef double x, tail, resid, dens, slope, step, y_new
    cdef int it
    for it in range(MAXIT_NEWTON):
        x = exp(y)
        if upper:
            tail = _chi2_sf(x, nu)
        else:
            tail = _chi2_cdf(x, nu)
        if tail <= 0.0:
            if upper:
                hi = y
            else:
                lo = y
            if isfinite(lo) and isfinite(hi):
                y = 0.5 * (lo + hi)
            elif upper:
                y = y - 1.0
            else:
                y = y + 1.0
            continue
        resid = log(tail) - target
        if fabs(resid) <= 2.0 * MACHEP:
            break
        if (resid > 0.0) != upper:
            hi = y
        else:
            lo = y
        dens = exp(_chi2_logpdf(x, nu) + y)
        slope = dens / tail
        if upper:
            slope = -slope
        if slope == 0.0:
            y_new = 0.0 / 0.0
        else:
            step = resid / slope
            y_new = y - step
        if not (lo < y_new and y_new < hi) or not isfinite(y_new):
            if isfinite(lo) and isfinite(hi):
                y_new = 0.5 * (lo + hi)
            elif (resid < 0.0) != upper:
                y_new = y + 2.0
            else:
                y_new = y - 2.0
        if fabs(y_new - y) <= 4.0 * MACHEP * (fabs(y) if fabs(y) > 1.0 else 1.0):
            y = y_new
            break
        y = y_new
    return exp(y)


cdef double _chi2_ppf(double p, double nu) nogil:
    if p <= 0.5:
        return _chi2_invert(p if p > P_MIN else P_MIN, nu, False)
    return _chi2_invert(1.0 - p if 1.0 - p > P_MIN else P_MIN, nu, True)


cdef double _chi2_isf(double q, double nu) nogil:
    if q <= 0.5:
        return _chi2_invert(q if q > P_MIN else P_MIN, nu, True)
    return _chi2_invert(1.0 - q if 1.0 - q > P_MIN else P_MIN, nu, False)


cpdef double chi2_ppf(double p, double nu):
    return _chi2_ppf(p, nu)


cpdef double chi2_isf(double q, double nu):
    return _chi2_isf(q, nu)


# ---------------------------------------------------------------------------
# F with symmetric degrees of freedom (nu, nu)

cdef double _f_cdf(double x, double nu) nogil:
    cdef double a = 0.5 * nu
    if x <= 0.0:
        return 0.0
    if not isfinite(x):
        return 1.0
    if x <= 1.0:
        return _betainc_pair(a, a, x / (1.0 + x), 1.0 / (1.0 + x))
    return 1.0 - _betainc_pair(a, a, 1.0 / (1.0 + x), x / (1.0 + x))


cdef inline double _f_logpdf(double x, double nu) nogil:
    cdef double a = 0.5 * nu
    return (a - 1.0) * log(x) - nu * log1p(x) - _log_beta(a, a)


cpdef double f_cdf(double x, double nu):
    return _f_cdf(x, nu)


cpdef double f_logpdf(double x, double nu):
    return _f_logpdf(x, nu)


cpdef double f_pdf(double x, double nu):
    if x <= 0.0:
        return 0.0
    return exp(_f_logpdf(x, nu))


cdef double _f_lower_quantile(double p, double nu) nogil:
    cdef double target = log(p)
    cdef double a = 0.5 * nu
    cdef double y, x, cdf, resid, slope, y_new
    cdef double lo = -INFINITY
    cdef double hi = 0.0
    cdef int it
    y = (target + log(a) + _log_beta(a, a)) / a
    if y > 0.0:
        y = 0.0
    if p > 0.05 and nu > 2:
        y = 2.0 * _norm_ppf(p) / sqrt(nu)
        if y > 0.0:
            y = 0.0
    for it in range(MAXIT_NEWTON):
        x = exp(y)
        cdf = _f_cdf(x, nu)
        if cdf <= 0.0:
            lo = y
            if isfinite(lo):
                y = 0.5 * (lo + hi)
            else:
                y = y + 1.0
            continue
        resid = log(cdf) - target
        if fabs(resid) <= 2.0 * MACHEP:
            break
        if resid > 0.0:
            hi = y
        else:
            lo = y
        slope = exp(_f_logpdf(x, nu) + y) / cdf
        if slope > 0.0:
            y_new = y - resid / slope
        else:
            y_new = 0.0 / 0.0
        if not (lo < y_new and y_new < hi) or not isfinite(y_new):
            if isfinite(lo):
                y_new = 0.5 * (lo + hi)
            else:
                y_new = y - 2.0
        if fabs(y_new - y) <= 4.0 * MACHEP * (fabs(y) if fabs(y) > 1.0 else 1.0):
            y = y_new
            break
        y = y_new
    return exp(y)


cpdef double f_ppf(double p, double nu):
    if p == 0.5:
        return 1.0
    if p < 0.5:
        return _f_lower_quantile(p if p > P_MIN else P_MIN, nu)
    return 1.0 / _f_lower_quantile(1.0 - p if 1.0 - p > P_MIN else P_MIN, nu)


# ---------------------------------------------------------------------------
# interval scaling factors and the inflation cost kappa(eps, c)

def phi_factors(double nu, double c):
    cdef double tail = 0.5 * (1.0 - c)
    return nu / _chi2_isf(tail, nu), nu / _chi2_ppf(tail, nu)


cdef inline double _dlogpdf(double x, double nu) nogil:
    return (0.5 * nu - 1.0) / x - 0.5


cdef void _kappa_derivs(double nu, double x, double* kap, double* g1, double* g2) nogil:
    cdef double c = exp(x)
    cdef double tail = -0.5 * expm1(x)
    cdef double A = _chi2_isf(tail, nu)
    cdef double B = _chi2_ppf(tail, nu)
    cdef double fA = _chi2_pdf(A, nu)
    cdef double fB = _chi2_pdf(B, nu)
    cdef double dA = 0.5 / fA
    cdef double dB = -0.5 / fB
    cdef double d2A = -0.25 * _dlogpdf(A, nu) / (fA * fA)
    cdef double d2B = -0.25 * _dlogpdf(B, nu) / (fB * fB)
    cdef double num = dA * B - A * dB
    cdef double dk = num / (B * B)
    cdef double d2k = (d2A * B - A * d2B) / (B * B) - 2.0 * dB * num / (B * B * B)
    kap[0] = A / B
    g1[0] = c * dk
    g2[0] = g1[0] + c * c * d2k


def kappa_derivs(double nu, double x):
    cdef double kap, g1, g2
    _kappa_derivs(nu, x, &kap, &g1, &g2)
    return kap, g1, g2


cpdef double kappa_value(double nu, double c):
    cdef double tail
    if c <= 0.0:
        return 1.0
    tail = 0.5 * (1.0 - c)
    return _chi2_isf(tail, nu) / _chi2_ppf(tail, nu)


cdef double _solve_marginal(double a, double nu, double log_lam,
                            double xlo, double xhi, double x0) nogil:
    cdef double target = log_lam - log(a)
    cdef double lo = xlo
    cdef double hi = xhi
    cdef double x, x_new, resid, kap, g1, g2
    cdef int it
    if lo < x0 and x0 < hi:
        x = x0
    else:
        x = 0.5 * (lo + hi)
    for it in range(MAXIT_NEWTON):
        _kappa_derivs(nu, x, &kap, &g1, &g2)
        resid = log(g1) - target
        if resid > 0.0:
            hi = x
        else:
            lo = x
        x_new = x - resid * g1 / g2
        if not (lo < x_new and x_new < hi):
            x_new = 0.5 * (lo + hi)
        if (fabs(x_new - x) <= 1e-13 * (fabs(x) if fabs(x) > 1.0 else 1.0)
                or hi - lo <= 1e-13 * (fabs(lo) if fabs(lo) > 1.0 else 1.0)):
            x = x_new
            break
        x = x_new
    if x < xlo:
        return xlo
    if x > xhi:
        return xhi
    return x


cpdef double solve_marginal(double a, double nu, double log_lam,
                            double xlo, double xhi, double x0):
    return _solve_marginal(a, nu, log_lam, xlo, xhi, x0)


def path_point(double[::1] a, double[::1] nu, double log_lam,
               double[::1] xlo, double[::1] xhi, double[::1] x_out):
    cdef Py_ssize_t i, n = a.shape[0]
    with nogil:
        for i in range(n):
            x_out[i] = _solve_marginal(a[i], nu[i], log_lam, xlo[i], xhi[i], x_out[i])
    return np.asarray(x_out)
