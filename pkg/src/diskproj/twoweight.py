"""Sparse dyadic model operators, stopping squares, and testing constants.

The sparse operator T f = sum_S tau_S (E^mu_S f) 1_S runs over Carleson
squares of one shifted dyadic grid up to a level cap. The default
coefficient table tau_S = Psi(|I|) mu(S(I)) / |I| makes T the dyadic
model of the kernel with profile Psi. Everything here is computed per
level with bincount reductions, so applications are linear in cell
count times levels; a dense kernel matrix is only assembled for norm
computations on small quadratures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .disk import DiskQuadrature, DyadicInterval, Field, arc_index
from .errors import BudgetExceededError, InvalidRangeError
from .kernels import KernelSpec
from .operators import (MATRIX_THRESHOLD, PsiProfile, positive_handle,
                        weighted_norm_lp_lower, weighted_norm_p2)
from .weights import (WeightField, bp_characteristic, dual_weight,
                      dyadic_maximal)

Square = Tuple[int, int]          # (level, arc index) on a fixed grid


def _conjugate(p):
    if not p > 1.0:
        raise InvalidRangeError(f"exponent p={p} must exceed 1")
    return p / (p - 1.0)


@dataclass(eq=False)
class SparseOperator:
    """T f = sum_S tau_S (E^mu_S f) 1_S over squares of one grid."""

    beta: float
    quad: DiskQuadrature
    L_max: int
    mu: np.ndarray                     # cell masses of the base measure
    tau: List[np.ndarray]              # tau[level][arc], levels 0..L_max

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=float)
        if self.mu.shape != (self.quad.size,) or np.any(self.mu < 0.0):
            raise InvalidRangeError("mu must be nonnegative, one per cell")
        if len(self.tau) != self.L_max + 1:
            raise InvalidRangeError("need one tau array per level")
        for lev, row in enumerate(self.tau):
            if len(row) != 2 ** lev or np.any(np.asarray(row) < 0.0):
                raise InvalidRangeError(f"bad tau table at level {lev}")
        self._levels = []
        r, t = self.quad.nodes_r, self.quad.nodes_t
        for lev in range(self.L_max + 1):
            sel = r >= 1.0 - 2.0 ** -lev if lev else np.ones(r.size, bool)
            idx = arc_index(self.beta, lev, t[sel])
            mu_s = np.bincount(idx, weights=self.mu[sel], minlength=2 ** lev)
            self._levels.append((np.nonzero(sel)[0], idx, mu_s))

    def square_masses(self, lev):
        """mu(S) for every arc at one level."""
        return self._levels[lev][2]


def sparse_bergman_model(psi: PsiProfile, quad: DiskQuadrature, beta=0.0,
                         L_max: Optional[int] = None, mu=None,
                         tau: Optional[List[np.ndarray]] = None
                         ) -> SparseOperator:
    """The dyadic model of the kernel profile: tau_S = Psi(|I|) mu(S)/|I|.

    A custom tau table overrides the default (for stress tests)."""
    if L_max is None:
        L_max = quad.J
    if mu is None:
        mu = quad.masses
    op = SparseOperator(beta=beta, quad=quad, L_max=L_max,
                        mu=np.asarray(mu, dtype=float),
                        tau=[np.zeros(2 ** lev) for lev in range(L_max + 1)])
    if tau is not None:
        if len(tau) != L_max + 1:
            raise InvalidRangeError("tau table does not match level cap")
        op.tau = [np.asarray(row, dtype=float) for row in tau]
        for lev, row in enumerate(op.tau):
            if row.shape != (2 ** lev,) or np.any(row < 0.0):
                raise InvalidRangeError(f"bad tau table at level {lev}")
        return op
    lengths = 2.0 ** -np.arange(L_max + 1)
    psi_vals = psi(lengths)
    op.tau = [psi_vals[lev] * op.square_masses(lev) * 2.0 ** lev
              for lev in range(L_max + 1)]
    return op


def apply_sparse(T: SparseOperator, f: Field) -> Field:
    """Evaluate sum_S tau_S (E^mu_S f) 1_S; linear, positive on f >= 0."""
    if not T.quad.same_as(f.quad):
        from .errors import QuadratureMismatchError
        raise QuadratureMismatchError("field on a different quadrature")
    vals = np.asarray(f.values)
    out = np.zeros(T.quad.size,
                   dtype=complex if np.iscomplexobj(vals) else float)
    for lev in range(T.L_max + 1):
        members, idx, mu_s = T._levels[lev]
        sums = np.bincount(idx, weights=vals[members] * T.mu[members],
                           minlength=2 ** lev)
        avg = np.divide(sums, mu_s, out=np.zeros_like(sums),
                        where=mu_s > 0.0)
        out[members] += (T.tau[lev] * avg)[idx]
    return Field(T.quad, out)


def sparse_kernel_matrix(T: SparseOperator) -> np.ndarray:
    """Dense K with K_ij = sum_{S containing both} tau_S / mu(S), so
    that T f = K (f mu) cellwise."""
    n = T.quad.size
    if n > MATRIX_THRESHOLD:
        raise BudgetExceededError(
            f"{n} cells exceeds the dense-matrix threshold")
    out = np.zeros((n, n))
    for lev in range(T.L_max + 1):
        members, idx, mu_s = T._levels[lev]
        weight = np.divide(T.tau[lev], mu_s,
                           out=np.zeros_like(mu_s), where=mu_s > 0.0)
        w = weight[idx]
        eq = idx[:, None] == idx[None, :]
        out[np.ix_(members, members)] += np.where(eq, w[:, None], 0.0)
    return out


# -- stopping squares ----------------------------------------------------------

@dataclass(eq=False)
class StoppingFamily:
    root: Square
    beta: float
    level_cap: int
    generations: List[List[Square]]
    expectations: Dict[Square, float]       # stopped E^{sigma mu}_L |f|
    assignment: Dict[Square, Square]        # lambda(S): minimal stopping
    #                                         ancestor, over positive-mass S
    collections: Dict[Square, List[Square]]  # D(L) = {S: lambda(S) = L}
    quad: DiskQuadrature
    sigma_mu: np.ndarray
    f_abs: np.ndarray

    def stopping_squares(self):
        return [L for gen in self.generations for L in gen]


def stopping_family(f: Field, sigma: WeightField, s0: DyadicInterval,
                    level_cap: Optional[int] = None) -> StoppingFamily:
    """Breadth-first stopping-square generations at threshold factor 4.

    Starting from S0, each stopping square L spawns the maximal squares
    strictly inside it whose sigma*mu average of |f| exceeds 4 times
    L's. Zero-mass squares are skipped (all their descendants are
    massless too). The assignment map sends every positive-mass square
    under S0 to its minimal stopping ancestor.
    """
    quad = f.quad
    if not quad.same_as(sigma.quad):
        from .errors import QuadratureMismatchError
        raise QuadratureMismatchError("weight on a different quadrature")
    if s0.beta != 0.0:
        raise InvalidRangeError("stopping construction runs on the "
                                "unshifted grid (its squares nest)")
    if level_cap is None:
        level_cap = quad.J
    if s0.level > level_cap:
        raise InvalidRangeError("root below the level cap")

    sm_cell = sigma.values * quad.masses
    f_abs = np.abs(np.asarray(f.values))
    r, t = quad.nodes_r, quad.nodes_t
    sm, ex = [], []
    for lev in range(level_cap + 1):
        sel = r >= 1.0 - 2.0 ** -lev if lev else np.ones(r.size, bool)
        idx = arc_index(0.0, lev, t[sel])
        mass = np.bincount(idx, weights=sm_cell[sel], minlength=2 ** lev)
        fsum = np.bincount(idx, weights=(f_abs * sm_cell)[sel],
                           minlength=2 ** lev)
        sm.append(mass)
        ex.append(np.divide(fsum, mass, out=np.zeros_like(fsum),
                            where=mass > 0.0))

    root = (s0.level, s0.index)
    if not ex[root[0]][root[1]] > 0.0:
        raise InvalidRangeError("root average of |f| must be positive")

    expectations = {root: float(ex[root[0]][root[1]])}
    assignment = {root: root}
    collections = {root: [root]}
    generations = [[root]]
    current = [root]
    while current:
        nxt = []
        for L in current:
            e_l = expectations[L]
            stack = [(L[0] + 1, 2 * L[1]), (L[0] + 1, 2 * L[1] + 1)]
            while stack:
                lev, m = stack.pop()
                if lev > level_cap or sm[lev][m] <= 0.0:
                    continue
                e_s = float(ex[lev][m])
                if e_s > 4.0 * e_l:
                    expectations[(lev, m)] = e_s
                    assignment[(lev, m)] = (lev, m)
                    collections[(lev, m)] = [(lev, m)]
                    nxt.append((lev, m))
                else:
                    assignment[(lev, m)] = L
                    collections[L].append((lev, m))
                    stack.extend([(lev + 1, 2 * m), (lev + 1, 2 * m + 1)])
        if nxt:
            generations.append(nxt)
        current = nxt
    return StoppingFamily(root=root, beta=0.0, level_cap=level_cap,
                          generations=generations, expectations=expectations,
                          assignment=assignment, collections=collections,
                          quad=quad, sigma_mu=sm_cell, f_abs=f_abs)


def pointwise_linearization(family: StoppingFamily):
    """(lhs, rhs) of the pointwise stopped-sum bound at the nodes:
    lhs(z) = sum of E_L over stopping L containing z, rhs = (4/3) M f(z)
    with M the dyadic maximal function of |f| in sigma*mu."""
    quad = family.quad
    r, t = quad.nodes_r, quad.nodes_t
    lhs = np.zeros(quad.size)
    for (lev, m), e_l in family.expectations.items():
        sel = (r >= 1.0 - 2.0 ** -lev) if lev else np.ones(r.size, bool)
        sub = sel & (arc_index(0.0, lev, t) == m)
        lhs[sub] += e_l
    maximal = dyadic_maximal(quad, family.sigma_mu, 0.0, family.f_abs,
                             L_max=family.level_cap)
    return lhs, (4.0 / 3.0) * maximal


def carleson_embedding_sum(family: StoppingFamily, p) -> float:
    """sum_L (E^{sigma mu}_L |f|)^p (sigma mu)(L) over the stopping family."""
    _conjugate(p)
    quad = family.quad
    r, t = quad.nodes_r, quad.nodes_t
    total = 0.0
    for (lev, m), e_l in family.expectations.items():
        sel = (r >= 1.0 - 2.0 ** -lev) if lev else np.ones(r.size, bool)
        sub = sel & (arc_index(0.0, lev, t) == m)
        total += e_l ** p * float(family.sigma_mu[sub].sum())
    return total


# -- testing constants ---------------------------------------------------------

@dataclass(frozen=True)
class TestingReport:
    p: float
    depth: int
    c0: float                  # sup ||T(sigma 1_S)||^p_{L^p_mu(u)} / (sigma mu)(S)
    c0_star: float             # dual sup with (u, p') in place of (sigma, p)
    c0_root: float             # c0 ** (1/p)
    c0_star_root: float        # c0_star ** (1/p')
    witness_c0: Square
    witness_c0_star: Square
    norm_lower: float
    norm_exact: bool           # True at p = 2 (singular value), else lower bound
    c1_measured: float         # norm / (c0_root + c0_star_root)
    norm_upper_claimed: float  # c1_measured * (c0_root + c0_star_root)


def _testing_sup(T, source_vals, target_vals, denom_cell, p, depth):
    """sup over squares of ||T(source 1_S)||^p_{L^p_mu(target)} / denom(S)."""
    quad = T.quad
    best, witness = 0.0, (0, 0)
    tmu = target_vals * T.mu
    for lev in range(min(T.L_max, depth) + 1):
        members, idx, _ = T._levels[lev]
        denom = np.bincount(idx, weights=denom_cell[members],
                            minlength=2 ** lev)
        for m in range(2 ** lev):
            if denom[m] <= 0.0:
                continue
            f_vals = np.zeros(quad.size)
            cells = members[idx == m]
            f_vals[cells] = source_vals[cells]
            out = apply_sparse(T, Field(quad, f_vals)).values
            val = float(np.sum(np.abs(out) ** p * tmu))
            ratio = val / denom[m]
            if ratio > best:
                best, witness = ratio, (lev, m)
    return best, witness


def testing_constants(T: SparseOperator, sigma: WeightField, u: WeightField,
                      p, depth) -> TestingReport:
    """Sawyer testing constants on squares to the given depth, plus the
    operator norm from L^p(sigma mu) to L^p(u mu) acting as f -> T(sigma f).

    The norm is the exact largest singular value of the weighted
    similarity at p = 2 and a random-restart lower bound otherwise; the
    necessity inequalities c0^(1/p) <= norm and c0*^(1/p') <= norm are
    exact only against the exact norm.
    """
    q = _conjugate(p)
    if depth < 0:
        raise InvalidRangeError("depth must be nonnegative")
    sig_mu = sigma.values * T.mu
    u_mu = u.values * T.mu
    c0, wit0 = _testing_sup(T, sigma.values, u.values, sig_mu, p, depth)
    c0s, wits = _testing_sup(T, u.values, sigma.values, u_mu, q, depth)

    kernel = sparse_kernel_matrix(T)
    if p == 2.0:
        norm, exact = weighted_norm_p2(kernel, T.mu, u.values,
                                       sigma.values), True
    else:
        norm, exact = weighted_norm_lp_lower(kernel, T.mu, u.values,
                                             sigma.values, p), False
    c0_root = c0 ** (1.0 / p)
    c0s_root = c0s ** (1.0 / q)
    denom = c0_root + c0s_root
    c1 = norm / denom if denom > 0.0 else math.inf
    return TestingReport(p=p, depth=depth, c0=c0, c0_star=c0s,
                         c0_root=c0_root, c0_star_root=c0s_root,
                         witness_c0=wit0, witness_c0_star=wits,
                         norm_lower=norm, norm_exact=exact, c1_measured=c1,
                         norm_upper_claimed=c1 * denom)


def split_by_criterion(f: Field, g: Field, sigma: WeightField,
                       u: WeightField, p, depth, beta=0.0):
    """Partition squares to the given depth: S goes to S1 when
    (E^{mu sigma}_S f)^p (mu sigma)(S) >= (E^{mu u}_S g)^{p'} (mu u)(S),
    to S2 otherwise. Ties go to S1; massless squares are skipped."""
    q = _conjugate(p)
    quad = f.quad
    fv, gv = np.asarray(f.values), np.asarray(g.values)
    if np.any(fv < 0.0) or np.any(gv < 0.0):
        raise InvalidRangeError("the splitting criterion takes f, g >= 0")
    mu = quad.masses
    sig_mu, u_mu = sigma.values * mu, u.values * mu
    r, t = quad.nodes_r, quad.nodes_t
    s1, s2 = [], []
    for lev in range(depth + 1):
        sel = r >= 1.0 - 2.0 ** -lev if lev else np.ones(r.size, bool)
        idx = arc_index(beta, lev, t[sel])
        count = 2 ** lev
        msig = np.bincount(idx, weights=sig_mu[sel], minlength=count)
        mu_tot = np.bincount(idx, weights=mu[sel], minlength=count)
        m_u = np.bincount(idx, weights=u_mu[sel], minlength=count)
        e_f = np.divide(np.bincount(idx, weights=(fv * sig_mu)[sel],
                                    minlength=count), msig,
                        out=np.zeros(count), where=msig > 0.0)
        e_g = np.divide(np.bincount(idx, weights=(gv * u_mu)[sel],
                                    minlength=count), m_u,
                        out=np.zeros(count), where=m_u > 0.0)
        lhs = e_f ** p * msig
        rhs = e_g ** q * m_u
        for m in range(count):
            if mu_tot[m] <= 0.0:
                continue
            (s1 if lhs[m] >= rhs[m] else s2).append((lev, m))
    return s1, s2


# -- one-weight experiment -----------------------------------------------------

@dataclass(frozen=True)
class OneWeightReport:
    p: float
    depth: int
    bp_value: float
    norm: float
    norm_exact: bool
    ratio: float               # norm / bp ** max(1, 1/(p-1))
    psi_mu_ratios: tuple       # Psi(|I|) mu(S(I)) / |I| per level
    psi_mu_band: tuple         # (min, max) of the ratios over levels with mass
    top_half_max_ratio: float  # max over levels of mu(S(I)) / mu(T(I))


def one_weight_norm_experiment(spec: KernelSpec, v: WeightField, p,
                               depth) -> OneWeightReport:
    """Norm of the positive projection on L^p(v) against the weight
    characteristic, plus the structural facts the comparison rests on:
    Psi(|I|) mu(S(I)) / |I| stays in a band over levels, and the square
    keeps a fixed share of its mass in the top half."""
    quad = v.quad
    mu = quad.masses
    bp = bp_characteristic(v, p, depth)
    sigma = dual_weight(v, p)
    kernel = positive_handle(spec, quad).matrix()
    if p == 2.0:
        norm, exact = weighted_norm_p2(kernel, mu, v.values,
                                       sigma.values), True
    else:
        norm, exact = weighted_norm_lp_lower(kernel, mu, v.values,
                                             sigma.values, p), False
    ratio = norm / bp.value ** max(1.0, 1.0 / (p - 1.0))

    psi = PsiProfile(spec.gamma, spec.nu)
    lengths = 2.0 ** -np.arange(depth + 1)
    psi_vals = psi(lengths)
    r = quad.nodes_r
    ratios, shares = [], []
    for lev in range(depth + 1):
        tail = float(mu[r >= 1.0 - lengths[lev]].sum()) / 2 ** lev
        if tail <= 0.0:
            ratios.append(0.0)
            continue
        ratios.append(psi_vals[lev] * tail * 2.0 ** lev)
        band = (r >= 1.0 - lengths[lev]) & (r < 1.0 - lengths[lev] / 2.0)
        top = float(mu[band].sum()) / 2 ** lev
        if top > 0.0:
            shares.append(tail / top)
    live = [x for x in ratios if x > 0.0]
    band_lim = (min(live), max(live)) if live else (0.0, math.inf)
    return OneWeightReport(p=p, depth=depth, bp_value=bp.value, norm=norm,
                           norm_exact=exact, ratio=ratio,
                           psi_mu_ratios=tuple(ratios), psi_mu_band=band_lim,
                           top_half_max_ratio=max(shares) if shares else
                           math.inf)


def random_instance(quad: DiskQuadrature, seed):
    """A reproducible (sigma, u, f, g) tuple: power-law-times-bump
    weights and heavy-tailed nonnegative fields, for stress sweeps."""
    from .weights import weight_field
    rng = np.random.default_rng(seed)
    def one_weight(tag):
        return weight_field(quad, eta=rng.uniform(-0.45, 0.45),
                            bump_center=rng.uniform(0.0, 1.0),
                            bump_height=rng.uniform(0.0, 3.0),
                            name=tag)
    sigma = one_weight(f"sigma[{seed}]")
    u = one_weight(f"u[{seed}]")
    f_vals = rng.pareto(1.5, quad.size) + 1e-3
    g_vals = rng.pareto(1.5, quad.size) + 1e-3
    return sigma, u, Field(quad, f_vals), Field(quad, g_vals)
