"""Normal, chi-squared and symmetric-F distribution functions.

The arithmetic lives in a compiled extension (``_ckernels``) when it is
available and in ``_pykernels`` otherwise. Set ``POWALLOC_PURE_PYTHON=1``
before import to force the fallback. :data:`BACKEND` names the one in use.

Every function here validates its arguments and raises
:class:`~powalloc.errors.DomainError` outside the domain; the raw kernels
do not.
"""

import math
import os

import numpy as np

from powalloc.errors import DomainError

if os.environ.get("POWALLOC_PURE_PYTHON"):
    from powalloc import _pykernels as kernels
    BACKEND = "python"
else:
    try:
        from powalloc import _ckernels as kernels
        BACKEND = "cython"
    except ImportError:
        from powalloc import _pykernels as kernels
        BACKEND = "python"

# Probabilities are clamped into this range before any inversion.
P_FLOOR = 1e-300
P_CEIL = 1.0 - 1e-16


def _finite(x, name):
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return x


def _open_prob(p, name="p"):
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {p!r}")
    return min(max(p, P_FLOOR), P_CEIL)


def _dof(nu):
    nu = float(nu)
    if not (nu > 0.0 and math.isfinite(nu)):
        raise DomainError(f"degrees of freedom must be positive, got {nu!r}")
    return nu


def _nonneg(x, name="x"):
    x = float(x)
    if math.isnan(x) or x < 0.0:
        raise DomainError(f"{name} must be nonnegative, got {x!r}")
    return x


def std_normal_cdf(z):
    """Phi(z)."""
    return kernels.norm_cdf(_finite(z, "z"))


def std_normal_sf(z):
    """1 - Phi(z), without cancellation."""
    return kernels.norm_sf(_finite(z, "z"))


def std_normal_pdf(z):
    return kernels.norm_pdf(_finite(z, "z"))


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf`."""
    return kernels.norm_ppf(_open_prob(p))


def std_normal_cdf_array(z):
    """Vectorised Phi for numpy input."""
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise DomainError("z must be finite")
    return kernels.norm_cdf_array(z)


def chi2_cdf(x, nu):
    """P(X <= x) for X ~ chi-squared with ``nu`` degrees of freedom."""
    return kernels.chi2_cdf(_nonneg(x), _dof(nu))


def chi2_sf(x, nu):
    return kernels.chi2_sf(_nonneg(x), _dof(nu))


def chi2_pdf(x, nu):
    return kernels.chi2_pdf(_nonneg(x), _dof(nu))


def chi2_quantile(p, nu):
    """Lower-tail quantile of the chi-squared law.

    Inverts on whichever tail is smaller, so both ends keep full relative
    precision.
    """
    return kernels.chi2_ppf(_open_prob(p), _dof(nu))


def chi2_upper_quantile(q, nu):
    """x with P(X > x) = q."""
    return kernels.chi2_isf(_open_prob(q, "q"), _dof(nu))


def f_cdf(x, nu):
    """CDF of the F distribution with (nu, nu) degrees of freedom."""
    x = float(x)
    if math.isnan(x) or x < 0.0:
        raise DomainError(f"x must be nonnegative, got {x!r}")
    return kernels.f_cdf(x, _dof(nu))


def f_pdf(x, nu):
    return kernels.f_pdf(_nonneg(x), _dof(nu))


def f_quantile(p, nu):
    """Quantile of F(nu, nu); exactly reciprocal for p and 1 - p."""
    return kernels.f_ppf(_open_prob(p), _dof(nu))


def gammainc_lower(a, x):
    """Regularized lower incomplete gamma P(a, x)."""
    if not a > 0.0:
        raise DomainError(f"a must be positive, got {a!r}")
    return kernels.gammainc_lower(float(a), _nonneg(x))


def gammainc_upper(a, x):
    if not a > 0.0:
        raise DomainError(f"a must be positive, got {a!r}")
    return kernels.gammainc_upper(float(a), _nonneg(x))


def betainc(a, b, x):
    """Regularized incomplete beta I_x(a, b)."""
    if not (a > 0.0 and b > 0.0):
        raise DomainError("shape parameters must be positive")
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x!r}")
    return kernels.betainc(float(a), float(b), x)
