"""Calderon-Zygmund decomposition on dyadic Carleson squares.

Selection is greedy and top-down: a polar rectangle Q is selected as
soon as int_Q |f| >= lambda * omega(Q); otherwise it is subdivided
(Carleson squares into two child squares plus two top rectangles,
single-band rectangles by angular halving, which keeps every region a
union of whole quadrature cells) until the cell floor. All region
masses are node-membership sums of cell masses, so the decomposition's
set identities are exact at quadrature level, not approximate.

The good part g equals f off the selected squares and the signed
average of f on each; b = f - g is supported on the selection and has
exactly zero mean on each selected square.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .disk import (Arc, DiskQuadrature, Field, PolarRectangle,
                   carleson_square, cz_children)
from .errors import InvalidRangeError
from .kernels import KernelSpec
from .weights import WeightField, b1_characteristic


@dataclass(eq=False)
class CZDecomposition:
    region: PolarRectangle
    threshold: float
    selected: List[PolarRectangle]
    selected_cells: List[np.ndarray]
    f_cells: np.ndarray            # unselected-cell indices (the set F)
    g: Field
    b: Field
    parent_constant: float         # measured max omega(parent)/omega(Q_k)
    unresolved: int                # floor cells in F with |f| > lambda
    root_selected: bool


def _is_single_cell(quad: DiskQuadrature, q: PolarRectangle, cells):
    if cells.size != 1:
        return False
    b = quad.bands[quad.cell_band[cells[0]]]
    return q.arc.length <= b.arc_length * (1.0 + 1e-12) and \
        q.r_hi - q.r_lo <= (b.r_hi - b.r_lo) * (1.0 + 1e-12)


def _subdivide(q: PolarRectangle):
    if q.h_prime == 0.0:
        return cz_children(q)
    left, right = q.arc.halves()
    return [PolarRectangle(left, q.h, q.h_prime),
            PolarRectangle(right, q.h, q.h_prime)]


def cz_decompose(f: Field, lam, region: PolarRectangle) -> CZDecomposition:
    """Decompose f restricted to the region at height lambda.

    Requires lambda > ||f||_{L^1_omega} (the lemma hypothesis). The
    region itself may be selected when its average already exceeds
    lambda (possible here because omega x m is not normalized to give
    the region mass >= 1); that case is flagged and contributes no
    parent ratio.
    """
    quad = f.quad
    vals = np.asarray(f.values)
    norm1 = float(np.sum(np.abs(vals) * quad.masses))
    if not lam > norm1:
        raise InvalidRangeError(
            f"threshold {lam} must exceed ||f||_1 = {norm1}")

    region_mask = quad.node_mask(region)
    selected, selected_cells = [], []
    f_cells = []
    unresolved = 0
    parent_ratio = 1.0
    root_selected = False

    # stack entries: (rectangle, its cell indices, parent mass or None)
    root_cells = np.nonzero(region_mask)[0]
    stack = [(region, root_cells, None)]
    while stack:
        q, cells, parent_mass = stack.pop()
        if cells.size == 0:
            continue
        mass = float(quad.masses[cells].sum())
        if mass <= 0.0:
            f_cells.append(cells)
            continue
        integral = float(np.sum(np.abs(vals[cells]) * quad.masses[cells]))
        if integral >= lam * mass:
            selected.append(q)
            selected_cells.append(cells)
            if parent_mass is None:
                root_selected = True
            else:
                parent_ratio = max(parent_ratio, parent_mass / mass)
            continue
        if _is_single_cell(quad, q, cells):
            f_cells.append(cells)
            if abs(vals[cells[0]]) > lam:
                unresolved += 1
            continue
        for child in _subdivide(q):
            child_mask = child.contains(quad.nodes_r[cells],
                                        quad.nodes_t[cells])
            stack.append((child, cells[child_mask], mass))

    f_idx = (np.concatenate(f_cells) if f_cells
             else np.array([], dtype=np.int64))
    g_vals = np.zeros(quad.size, dtype=vals.dtype)
    b_vals = np.zeros(quad.size, dtype=vals.dtype)
    g_vals[f_idx] = vals[f_idx]
    for cells in selected_cells:
        m = quad.masses[cells]
        avg = np.sum(vals[cells] * m) / m.sum()
        g_vals[cells] = avg
        b_vals[cells] = vals[cells] - avg
    return CZDecomposition(region=region, threshold=lam, selected=selected,
                           selected_cells=selected_cells, f_cells=f_idx,
                           g=Field(quad, g_vals), b=Field(quad, b_vals),
                           parent_constant=parent_ratio,
                           unresolved=unresolved,
                           root_selected=root_selected)


def level_one_regions():
    """R1, R2: the Carleson squares over the two level-1 arcs."""
    return (carleson_square(Arc(0.0, 0.5)), carleson_square(Arc(0.5, 0.5)))


def circumscribed_disc(q: PolarRectangle):
    """Center and radius of a disc containing the polar rectangle."""
    t_mid = q.arc.midpoint
    r_mid = 0.5 * (q.r_lo + q.r_hi)
    center = r_mid * np.exp(2j * np.pi * t_mid)
    corners = []
    for r in (q.r_lo, q.r_hi):
        for dt in (0.0, q.arc.length):
            corners.append(r * np.exp(2j * np.pi * (q.arc.start + dt)))
    radius = max(abs(c - center) for c in corners)
    return complex(center), float(radius)


@dataclass(frozen=True)
class CZWeakReport:
    good_part_ratio: float    # ||g||^2_{L^2(v)} / (lambda B1 ||f 1_R||_{L^1(v)})
    bad_tail_ratio: float     # tail integral of |P b| over complement of
    #                           the doubled discs / (B1^2 ||f 1_R||_{L^1(v)})
    omega_prime_ratio: float  # (v omega)(Omega') * lambda / ||f 1_R||_{L^1(v)}
    b1_value: float
    selected_count: int
    unresolved: int


def cz_reconstruct_weak11_bound(spec: KernelSpec, v: WeightField, f: Field,
                                lam, region: Optional[PolarRectangle] = None
                                ) -> CZWeakReport:
    """The weak-(1,1) proof's intermediate quantities, each as a ratio
    against the bound it is compared to in the argument."""
    from .operators import bergman_handle  # local: czd -> operators only here

    quad = f.quad
    if region is None:
        region = level_one_regions()[0]
    dec = cz_decompose(f, lam, region)
    b1 = b1_characteristic(v).value
    vmass = v.values * quad.masses
    rmask = quad.node_mask(region)
    norm1v = float(np.sum(np.abs(f.values[rmask]) * vmass[rmask]))
    if norm1v <= 0.0:
        raise InvalidRangeError("f vanishes on the region")

    g_sq = float(np.sum(np.abs(dec.g.values) ** 2 * vmass))
    good_ratio = g_sq / (lam * b1 * norm1v)

    omega_prime = np.zeros(quad.size, dtype=bool)
    for q in dec.selected:
        center, radius = circumscribed_disc(q)
        omega_prime |= np.abs(quad.nodes_z - center) < 2.0 * radius

    handle = bergman_handle(spec, quad)
    pb = np.abs(handle.apply(dec.b.values))
    tail = float(np.sum(pb[~omega_prime] * vmass[~omega_prime]))
    bad_ratio = tail / (b1 ** 2 * norm1v)

    vo_prime = float(vmass[omega_prime].sum())
    prime_ratio = vo_prime * lam / norm1v

    return CZWeakReport(good_part_ratio=good_ratio, bad_tail_ratio=bad_ratio,
                        omega_prime_ratio=prime_ratio, b1_value=b1,
                        selected_count=len(dec.selected),
                        unresolved=dec.unresolved)
