"""Reproducing kernels with the representation (1-w)^(-gamma) * Cauchy(nu).

Two evaluation routes are provided and cross-checked: the power series
sum x^n / (2 omega_{2n+1}) driven by a moment sequence, and the integral
form (1-w)^(-gamma) int dnu(r)/(1-rw). The moment construction turns a
measure nu on [0,1] into the moment sequence of a radial weight whose
kernel has exactly that integral form (gamma = 1), via

    F(x) = int (1 - r^((x+1/2)/2)) / (1-r) dnu(r),   omega_m = 1/(2 F(m + 1/2)).

Also here: small analytic verifiers used throughout the test batteries
(complete monotonicity of sequences, the 1/sqrt(2) Cauchy-transform
lower bound, the kernel/tail ratio, the kernel difference bound with its
explicit constant, and the |1-rz| two-sided equivalence).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import nnls

from ._integrate import adaptive_simpson, adaptive_simpson_rel, graded_gl_rule
from .errors import (ConfigError, InvalidRangeError, QuadratureMismatchError,
                     SeparationError, TailVanishedError,
                     TruncationInfeasibleError)
from .measures import RadialMeasure, make_measure

MAX_SERIES_ARG = 1.0 - 2.0 ** -20
_IDENTITY_TOL = 1e-10
_IDENTITY_CHECK_LIMIT = 48


def binomial_weights(gamma, n_max):
    """b_k = C(k+gamma-1, k) for k = 0..n_max, by the ratio recurrence."""
    b = np.empty(n_max + 1)
    b[0] = 1.0
    for k in range(1, n_max + 1):
        b[k] = b[k - 1] * (k + gamma - 1.0) / k
    return b


def nu_moment_table(nu: RadialMeasure, n_max, rule=None):
    """nu_j = int r^j dnu for j = 0..n_max, vectorized over j.

    Density part uses the graded Gauss-Legendre rule (panels refine
    dyadically toward r = 1, where high moments concentrate); atoms are
    added exactly.
    """
    out = np.zeros(n_max + 1)
    if nu.density is not None:
        nodes, weights = rule if rule is not None else graded_gl_rule()
        dens_w = weights * np.asarray(nu.density(nodes), dtype=float)
        powers = np.ones_like(nodes)
        for j in range(n_max + 1):
            out[j] = dens_w @ powers
            powers *= nodes
    for loc, mass in nu.atoms:
        out += mass * loc ** np.arange(n_max + 1, dtype=float)
    return out


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Kernel data: exponent gamma >= 1 and the representing measure nu.

    omega_moments, when supplied, caches omega_{2k+1} for the series
    route; entries are validated against the convolution identity
    1/(2 omega_{2n+1}) = sum_k C(k+gamma-1,k) nu_{n-k} on a desk-scale
    index set.
    """

    gamma: float
    nu: RadialMeasure
    omega_moments: Optional[tuple] = None
    series_tolerance: float = 1e-12
    name: str = "kernel"

    def __post_init__(self):
        if self.gamma < 1.0:
            raise InvalidRangeError("kernel exponent gamma must be >= 1")
        mass = self.nu.total_mass()
        if not (0.0 < mass < math.inf):
            raise InvalidRangeError("nu must have finite positive mass")
        if self.omega_moments is not None:
            m = np.asarray(self.omega_moments, dtype=float)
            if m.size and m.min() <= 0.0:
                raise InvalidRangeError("cached omega moments must be positive")
            self._validate_moment_identity(m)

    def _validate_moment_identity(self, m):
        n = m.size
        if n == 0:
            return
        if n <= _IDENTITY_CHECK_LIMIT:
            check = np.arange(n)
        else:
            head = np.arange(_IDENTITY_CHECK_LIMIT // 2)
            geo = np.unique(np.geomspace(_IDENTITY_CHECK_LIMIT // 2, n - 1,
                                         _IDENTITY_CHECK_LIMIT // 2).astype(int))
            check = np.union1d(head, geo)
        top = int(check.max())
        coeffs = self._coefficients_from_nu(top)
        lhs = 1.0 / (2.0 * m[check])
        rhs = coeffs[check]
        scale = np.maximum(np.abs(lhs), np.abs(rhs))
        bad = np.abs(lhs - rhs) > _IDENTITY_TOL * np.maximum(scale, 1.0)
        if bad.any():
            i = int(check[bad][0])
            raise QuadratureMismatchError(
                f"moment cache disagrees with nu at index {i}: "
                f"1/(2 m) = {lhs[bad][0]:.15g}, convolution = {rhs[bad][0]:.15g}")

    def _coefficients_from_nu(self, n_max):
        table = nu_moment_table(self.nu, n_max)
        if self.gamma == 1.0:
            return np.cumsum(table)
        b = binomial_weights(self.gamma, n_max)
        return np.convolve(b, table)[:n_max + 1]

    def coefficients(self, n_max):
        """c_n with kernel B(w) = sum c_n w^n, for n = 0..n_max."""
        if self.omega_moments is not None and len(self.omega_moments) > n_max:
            return 1.0 / (2.0 * np.asarray(self.omega_moments[:n_max + 1]))
        return self._coefficients_from_nu(n_max)

    def moments(self, n_max):
        """omega_{2n+1} for n = 0..n_max (from cache or from nu)."""
        if self.omega_moments is not None and len(self.omega_moments) > n_max:
            return np.asarray(self.omega_moments[:n_max + 1], dtype=float)
        return 1.0 / (2.0 * self._coefficients_from_nu(n_max))


# -- series route -------------------------------------------------------------

def kernel_series(moments: Sequence[float], x, tol=1e-12):
    """Sum x^n / (2 omega_{2n+1}) with a certified geometric tail cutoff.

    The tail past index N is bounded by 4 |x|^{N+1} / ((1-|x|) 2 omega_{2N+1})
    (coefficients of these kernels are nondecreasing, factor 4 is slack);
    summation is in ascending n, so identical inputs sum identically.
    """
    ax = abs(x)
    if ax > MAX_SERIES_ARG:
        raise TruncationInfeasibleError(
            f"|x| = {ax} too close to 1 for the series route")
    total = 0.0 + 0.0j if isinstance(x, complex) else 0.0
    power = 1.0 if not isinstance(x, complex) else 1.0 + 0.0j
    for n, m in enumerate(moments):
        if m <= 0.0:
            raise InvalidRangeError(f"moment {n} is not positive")
        a = 1.0 / (2.0 * m)
        total += a * power
        power *= x
        tail = 4.0 * a * ax ** (n + 1) / (1.0 - ax)
        if tail < tol:
            return total
    raise TruncationInfeasibleError(
        f"moment list of length {len(moments)} exhausted before the tail "
        f"bound met {tol} at |x| = {ax}")


# -- integral route -----------------------------------------------------------

def nu_cauchy_transform(nu: RadialMeasure, w, tol=1e-12):
    """int dnu(r) / (1 - r w) for complex |w| < 1; atoms exact."""
    total = 0.0 + 0.0j
    if nu.density is not None:
        dens = nu.density

        def f(r):
            return dens(r) / (1.0 - r * w)

        total += adaptive_simpson(f, 0.0, 1.0, tol=tol)
    for loc, mass in nu.atoms:
        total += mass / (1.0 - loc * w)
    return total


def kernel_integral(spec: KernelSpec, w):
    """(1-w)^(-gamma) * int dnu/(1-rw), principal branch."""
    w = complex(w)
    if abs(w) >= 1.0:
        raise InvalidRangeError("kernel argument must satisfy |w| < 1")
    pref = (1.0 - w) ** (-spec.gamma)
    return pref * nu_cauchy_transform(spec.nu, w, tol=spec.series_tolerance)


def nu_cauchy_grid(nu: RadialMeasure, w_values, rule=None, block=65536):
    """Vectorized int dnu/(1-rw) over an array of arguments."""
    w = np.asarray(w_values)
    flat = w.ravel()
    out = np.zeros(flat.shape, dtype=complex)
    if nu.density is not None:
        nodes, weights = rule if rule is not None else graded_gl_rule()
        dens_w = weights * np.asarray(nu.density(nodes), dtype=float)
        for start in range(0, flat.size, block):
            seg = flat[start:start + block]
            out[start:start + block] = dens_w @ (
                1.0 / (1.0 - np.outer(nodes, seg)))
    for loc, mass in nu.atoms:
        out += mass / (1.0 - loc * flat)
    return out.reshape(w.shape)


def kernel_integral_grid(spec: KernelSpec, w_values, rule=None):
    """Vectorized kernel_integral over an array of complex arguments."""
    w = np.asarray(w_values, dtype=complex)
    pref = (1.0 - w) ** (-spec.gamma)
    return pref * nu_cauchy_grid(spec.nu, w, rule=rule)


def psi_of(spec: KernelSpec, t):
    """Psi(t) = t^(1-gamma) int dnu/(1 - r(1-t)) for t in (0, 2]."""
    t_arr = np.asarray(t, dtype=float)
    vals = nu_cauchy_grid(spec.nu, 1.0 - t_arr).real
    out = np.power(t_arr, 1.0 - spec.gamma) * vals
    return float(out) if np.isscalar(t) else out


# -- moment construction ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MomentConstruction:
    """Moment sequence of a radial weight built from nu (gamma = 1).

    F_values[m] = F(shift_a + m); constructed_moments[m] = 1/(2 F_values[m]);
    phi_coefficients[j] = nu_j, with the partial-sum identity
    F(a + 2n + 1) = sum_{j<=n} nu_j validated at construction.
    hypothesis_warning is set when the divergence proxy for
    int dnu/(1-r) fails (tail of the constructed weight then decays too
    fast for the representation class).
    """

    nu: RadialMeasure
    shift_a: float
    F_values: np.ndarray
    phi_coefficients: np.ndarray
    constructed_moments: np.ndarray
    identity_max_error: float
    hypothesis_warning: bool

    def moment_at(self, m):
        """omega_m = 1/(2 F(a + m)) at arbitrary real order m >= 0."""
        return 1.0 / (2.0 * _construction_F(self.nu, self.shift_a + m))

    def tail(self, x):
        """Tail surrogate omega-hat(x) := omega_{1/(1-x)} for x in [0, 1)."""
        if not 0.0 <= x < 1.0:
            raise InvalidRangeError("tail surrogate needs x in [0, 1)")
        return self.moment_at(1.0 / (1.0 - x))

    def kernel_coefficients(self):
        """1/(2 omega_{2n+1}) = F(a + 2n + 1) for the stored odd orders."""
        return self.F_values[1::2].copy()


def _stable_power_quotient(u, s):
    """(1 - (1-u)^s) / u, evaluated without cancellation; limit s at u=0."""
    if u <= 0.0:
        return s
    if u >= 1.0:
        return 1.0
    return -math.expm1(s * math.log1p(-u)) / u


def _construction_F(nu: RadialMeasure, x, tol=1e-12):
    """F(x) = int (1 - r^((x+1/2)/2)) / (1-r) dnu(r)."""
    s = (x + 0.5) / 2.0
    total = 0.0
    if nu.density is not None:
        dens = nu.density

        def f(r):
            return _stable_power_quotient(1.0 - r, s) * dens(r)

        total += adaptive_simpson_rel(f, 0.0, 1.0, rel_tol=tol)
    for loc, mass in nu.atoms:
        total += mass * _stable_power_quotient(1.0 - loc, s)
    return total


def _construction_F_table(nu: RadialMeasure, a, m_max, rule=None):
    """F(a + m) for m = 0..m_max in one pass over the graded rule.

    Same integrand as _construction_F; -expm1(s log r)/(1-r) avoids the
    cancellation of 1 - r^s near r = 1, where the rule's panels cluster.
    """
    orders = (a + np.arange(m_max + 1) + 0.5) / 2.0
    out = np.zeros(m_max + 1)
    if nu.density is not None:
        nodes, weights = rule if rule is not None else graded_gl_rule()
        dens_w = weights * np.asarray(nu.density(nodes), dtype=float)
        quot = np.empty((orders.size, nodes.size))
        interior = nodes < 1.0   # deepest panels can round onto r = 1,
        quot[:, interior] = -np.expm1(
            np.outer(orders, np.log(nodes[interior]))) / (1.0 - nodes[interior])
        quot[:, ~interior] = orders[:, None]  # where the quotient's limit is s
        out += quot @ dens_w
    for loc, mass in nu.atoms:
        out += mass * np.array([_stable_power_quotient(1.0 - loc, s)
                                for s in orders])
    return out


def construct_omega_from_nu(nu: RadialMeasure, m_max) -> MomentConstruction:
    """Build the moment sequence omega_m = 1/(2 F(1/2 + m)), m = 0..m_max."""
    if m_max < 1:
        raise InvalidRangeError("m_max must be >= 1")
    a = 0.5
    F = _construction_F_table(nu, a, m_max)
    if np.any(F <= 0.0):
        raise InvalidRangeError("construction produced a nonpositive F value")
    moments = 1.0 / (2.0 * F)

    n_top = (m_max - 1) // 2
    phi = nu_moment_table(nu, n_top)
    partial = np.cumsum(phi)
    lhs = F[1::2]
    err = float(np.max(np.abs(lhs - partial) /
                       np.maximum(np.abs(partial), 1.0))) if n_top >= 0 else 0.0
    if err > _IDENTITY_TOL:
        raise QuadratureMismatchError(
            f"partial-sum identity off by {err:.3g} (> {_IDENTITY_TOL})")

    warning = _divergence_proxy_fails(nu)
    return MomentConstruction(nu=nu, shift_a=a, F_values=F,
                              phi_coefficients=phi,
                              constructed_moments=moments,
                              identity_max_error=err,
                              hypothesis_warning=warning)


def _divergence_proxy_fails(nu: RadialMeasure):
    """True when int dnu/(1-r) looks convergent (representation suspect).

    An atom at 1 makes the integral infinite outright. Otherwise the
    truncated integral I(c) = int_0^c dnu/(1-r) is computed at cutoffs
    1 - 2^{-10}, 1 - 2^{-20}, 1 - 2^{-30}. A small final value alone is
    not conclusive (log divergence grows slowly), so the hypothesis is
    flagged only when the value stays at or below 1e3 times the nu mass
    AND the increments between successive cutoffs are shrinking, which
    is what a convergent tail does and a log-divergent one does not.
    """
    if any(loc == 1.0 and mass > 0.0 for loc, mass in nu.atoms):
        return False

    def truncated(cutoff):
        total = 0.0
        if nu.density is not None:
            dens = nu.density
            total += adaptive_simpson(lambda r: dens(r) / (1.0 - r),
                                      0.0, cutoff, tol=1e-9)
        total += sum(mass / (1.0 - loc)
                     for loc, mass in nu.atoms if loc <= cutoff)
        return total

    i10 = truncated(1.0 - 2.0 ** -10)
    i20 = truncated(1.0 - 2.0 ** -20)
    i30 = truncated(1.0 - 2.0 ** -30)
    mass = nu.total_mass()
    if i30 > 1e3 * mass:
        return False
    # Increments at or below quadrature noise count as zero: a convergent
    # tail gives d1 = d2 = 0 up to rounding and must still be flagged.
    floor = 1e-6 * max(abs(i30), mass)
    d1 = max(i20 - i10, 0.0)
    d2 = max(i30 - i20, 0.0)
    return d2 <= 0.5 * d1 + floor


def moments_from_phi(phi_values):
    """omega_{2n+1} = 1/(2 sum_{j<=n} phi(j)): the odd-order moments a
    coefficient sequence phi-hat generates through the construction."""
    phi = np.asarray(phi_values, dtype=float)
    if np.any(phi <= 0.0):
        raise InvalidRangeError("phi coefficients must be positive")
    return 1.0 / (2.0 * np.cumsum(phi))


def nu_moments_from_coefficients(coeffs, gamma):
    """Invert c_n = sum_k C(k+gamma-1,k) nu_{n-k} for the nu moments."""
    c = np.asarray(coeffs, dtype=float)
    b = binomial_weights(gamma, c.size - 1)
    nu = np.empty_like(c)
    for n in range(c.size):
        nu[n] = c[n] - np.dot(b[1:n + 1], nu[:n][::-1])
    return nu


# -- analytic verifiers -------------------------------------------------------

@dataclass(frozen=True)
class MonotonicityReport:
    max_order_checked: int
    first_violation: Optional[tuple]  # (k, n, value)
    passed: bool


def check_completely_monotone(seq, k_max, tol=1e-12) -> MonotonicityReport:
    """Check (-1)^k (Delta^k m)_n >= -tol for k = 0..k_max."""
    m = np.asarray(seq, dtype=float)
    if m.size < k_max + 1:
        raise InvalidRangeError("sequence too short for requested order")
    diff = m.copy()
    for k in range(k_max + 1):
        signed = diff if k % 2 == 0 else -diff
        bad = np.nonzero(signed < -tol)[0]
        if bad.size:
            n = int(bad[0])
            return MonotonicityReport(k_max, (k, n, float(signed[n])), False)
        diff = diff[1:] - diff[:-1]
    return MonotonicityReport(k_max, None, True)


def lower_bound_eq4(nu: RadialMeasure, z, tol=1e-12):
    """|int dnu/(1-rz)| against (1/sqrt 2) int dnu/|1-rz|; ratio >= 1."""
    z = complex(z)
    if abs(z) >= 1.0:
        raise InvalidRangeError("need |z| < 1")
    lhs = abs(nu_cauchy_transform(nu, z, tol=tol))
    rhs = 0.0
    if nu.density is not None:
        dens = nu.density
        rhs += adaptive_simpson(lambda r: dens(r) / abs(1.0 - r * z),
                                0.0, 1.0, tol=tol)
    rhs += sum(mass / abs(1.0 - loc * z) for loc, mass in nu.atoms)
    rhs /= math.sqrt(2.0)
    return lhs, rhs, lhs / rhs


def lower_bound_eq4_grid(nu: RadialMeasure, z_values, rule=None):
    """Vectorized lower_bound_eq4 over many z (fixed graded rule)."""
    z = np.asarray(z_values, dtype=complex)
    if np.any(np.abs(z) >= 1.0):
        raise InvalidRangeError("need |z| < 1")
    lhs = np.abs(nu_cauchy_grid(nu, z, rule=rule))
    rhs = np.zeros(z.shape)
    if nu.density is not None:
        nodes, wts = graded_gl_rule() if rule is None else rule
        dens_w = wts * nu.density(nodes)
        step = 65536 // max(len(nodes), 1) + 1
        flat, out = z.ravel(), rhs.ravel()
        for k in range(0, flat.size, step):
            blk = flat[k:k + step]
            out[k:k + step] += np.abs(
                1.0 - nodes[None, :] * blk[:, None]) ** -1 @ dens_w
        rhs = out.reshape(z.shape)
    for loc, mass in nu.atoms:
        rhs += mass / np.abs(1.0 - loc * z)
    rhs /= math.sqrt(2.0)
    return lhs, rhs, lhs / rhs


def difference_bound_grid(spec: KernelSpec, z0, z, zeta, c, rule=None):
    """Vectorized difference_bound_check over admissible triple arrays."""
    z0 = np.asarray(z0, dtype=complex)
    z = np.asarray(z, dtype=complex)
    zeta = np.asarray(zeta, dtype=complex)
    if max(np.max(np.abs(z0)), np.max(np.abs(z)),
           np.max(np.abs(zeta))) >= 1.0:
        raise InvalidRangeError("all points must lie in the open disk")
    sep = np.abs(1.0 - zeta.conjugate() * z)
    step = np.abs(z - z0)
    if np.any(sep < c * step):
        raise SeparationError("inadmissible triple in the batch")
    b_z = kernel_integral_grid(spec, zeta * z.conjugate(), rule=rule)
    b_z0 = kernel_integral_grid(spec, zeta * z0.conjugate(), rule=rule)
    lhs = np.abs(b_z0 - b_z)
    bound = difference_constant(c, spec.gamma) * (step / sep) * np.abs(b_z)
    return lhs, bound


def shi_ratio(spec: KernelSpec, omega, x, tol=1e-12):
    """[int dnu/(1-rx)] * omega-hat(x) / (1-x)^(gamma-1).

    omega is anything with a tail(x) method: a RadialMeasure or a
    MomentConstruction (whose tail is the moment surrogate).
    """
    if not 0.0 <= x < 1.0:
        raise InvalidRangeError("need x in [0, 1)")
    tail = omega.tail(x)
    if tail <= 0.0:
        raise TailVanishedError(f"omega tail vanishes at x = {x}")
    val = nu_cauchy_transform(spec.nu, x, tol=tol).real
    return val * tail / (1.0 - x) ** (spec.gamma - 1.0)


def difference_constant(c, gamma):
    """C(c, gamma) = sqrt(2) (2+gamma) c^(gamma+1) (3c+1) / (c-1)^(gamma+2)."""
    if c <= 1.0:
        raise InvalidRangeError("separation parameter c must be > 1")
    return math.sqrt(2.0) * (2.0 + gamma) * c ** (gamma + 1.0) * \
        (3.0 * c + 1.0) / (c - 1.0) ** (gamma + 2.0)


def difference_bound_check(spec: KernelSpec, z0, z, zeta, c):
    """|B_{z0}(zeta) - B_z(zeta)| against C(c,gamma) (|z-z0|/|1-conj(zeta) z|) |B_z(zeta)|."""
    z0, z, zeta = complex(z0), complex(z), complex(zeta)
    for pt in (z0, z, zeta):
        if abs(pt) >= 1.0:
            raise InvalidRangeError("all points must lie in the open disk")
    sep = abs(1.0 - zeta.conjugate() * z)
    step = abs(z - z0)
    if sep < c * step:
        raise SeparationError(
            f"|1-conj(zeta) z| = {sep:.3g} < c |z-z0| = {c * step:.3g}")
    b_z = kernel_integral(spec, zeta * z.conjugate())
    b_z0 = kernel_integral(spec, zeta * z0.conjugate())
    lhs = abs(b_z0 - b_z)
    bound = difference_constant(c, spec.gamma) * (step / sep) * abs(b_z)
    return lhs, bound


def one_minus_rz_equivalence(z, r):
    """|1-rz| against (1-r) + r|1-z| and 1 - r(1-|1-z|).

    The first ratio is <= 1, the second lies in [1/6, 2]; the two
    denominators are the same quantity written two ways, so the ratios
    agree to rounding.
    """
    z = complex(z)
    if abs(z) >= 1.0:
        raise InvalidRangeError("need |z| < 1")
    if not 0.0 <= r <= 1.0:
        raise InvalidRangeError("need r in [0, 1]")
    num = abs(1.0 - r * z)
    d1 = (1.0 - r) + r * abs(1.0 - z)
    d2 = 1.0 - r * (1.0 - abs(1.0 - z))
    return num / d1, num / d2


# -- moment inversion sanity oracle -------------------------------------------

def fit_discrete_measure(target_moments, grid_size=256):
    """Nonnegative least-squares fit of a discrete measure to moments.

    Grid clusters dyadically toward r = 1 (and includes 1 itself); this
    is a sanity oracle for the Hausdorff direction, not a solver: the
    inverse problem is ill-posed and only the residual is meaningful.
    """
    m = np.asarray(target_moments, dtype=float)
    u = np.linspace(0.0, 1.0, grid_size - 1, endpoint=False)
    grid = np.concatenate([1.0 - np.power(2.0, -12.0 * u), [1.0]])
    design = np.power(grid[None, :], np.arange(m.size, dtype=float)[:, None])
    masses, residual = nnls(design, m)
    return grid, masses, residual


# -- config -------------------------------------------------------------------

def kernel_from_config(section) -> KernelSpec:
    """Build a KernelSpec from a config section (gamma, nu, alpha, tolerance)."""
    try:
        gamma = float(section.get("gamma", "1"))
    except ValueError:
        raise ConfigError(f"bad gamma {section['gamma']!r}") from None
    nu_kind = section.get("nu", "point1").strip()
    params = {}
    if "alpha" in section:
        params["alpha"] = float(section["alpha"])
    nu = make_measure(nu_kind, **params)
    tol = float(section.get("tolerance", "1e-12"))
    return KernelSpec(gamma=gamma, nu=nu, series_tolerance=tol,
                      name=section.get("name", f"gamma{gamma:g}-{nu.name}"))
