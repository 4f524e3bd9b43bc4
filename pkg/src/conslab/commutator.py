"""Nonlinear commutator of flux and mollification, and the residual it
leaves in the mollified companion law.

The central object is W = G([U]_eps) - [G(U)]_eps.  Entries in affine
flux columns or rows vanish identically (mollification commutes with
affine maps against a kernel of unit discrete mass) and are short-
circuited to exact zeros.

residual_R integrates the defect of the mollified companion law against a
test function, split as the multiplier-derivative part I1 and the
test-gradient part I2:

    I1 = -integral  W : (D_U B^T([U]_eps) . D_X [U]_eps) psi
    I2 = -integral  W : (B^T([U]_eps) . D_X psi)

so that I1 + I2 equals -integral Q([U]_eps) . D_X psi for exact weak
solutions.  The leading minus comes from the integration by parts that
moves the divergence off the commutator; with it, admissible shocks
produce negative totals matching their dissipation rate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainViolationError, ParameterError
from .fields import DiscreteField
from .mollifier import MollifierKernel, axis_derivative, mollify
from .rates import RateFit, aitken_limit, fit_loglog
from .systems import SystemSpec, fd_jacobian
from .testfunctions import TestFunction


def _needed_entries(system: SystemSpec):
    return [(i, j)
            for i in range(system.n) if i not in system.affine_rows
            for j in range(system.k + 1) if j not in system.affine_columns]


def _check_states(system: SystemSpec, field: DiscreteField,
                  mollified: DiscreteField) -> None:
    if system.domain.kind == "all-space":
        return
    ok = system.domain.contains(field.values)
    if not bool(np.all(ok)):
        bad = field.values[tuple(np.argwhere(~ok)[0])]
        raise DomainViolationError(
            f"field state {np.array2string(bad, precision=6)} lies outside the "
            f"domain of {system.name!r}")
    ok = system.domain.contains(mollified.values)
    if not bool(np.all(ok)):
        bad = mollified.values[tuple(np.argwhere(~ok)[0])]
        raise DomainViolationError(
            f"mollified state {np.array2string(bad, precision=6)} leaves the "
            f"domain of {system.name!r}; replace the system with "
            "extend_to_compact_range(...) over the field's range box")


def _commutator_parts(system: SystemSpec, field: DiscreteField,
                      kernel: MollifierKernel, method: str,
                      mollified: Optional[DiscreteField] = None):
    """Mollified field plus the nonzero commutator entries.

    Returns (mollified, entries, parts) where parts[m] is the lattice
    array for the entry index pair entries[m].
    """
    if mollified is None:
        mollified = mollify(field, kernel, method=method)
    _check_states(system, field, mollified)
    entries = _needed_entries(system)
    if not entries:
        return mollified, entries, []
    G_of_U = system.G(field.values)
    stacked = np.stack([G_of_U[..., i, j] for i, j in entries], axis=-1)
    del G_of_U
    smoothed_G = mollify(
        DiscreteField(lattice=field.lattice, values=stacked,
                      periodic_time=field.periodic_time),
        kernel, method=method)
    G_of_mollified = system.G(mollified.values)
    parts = [G_of_mollified[..., i, j] - smoothed_G.values[..., m]
             for m, (i, j) in enumerate(entries)]
    return mollified, entries, parts


def commutator_field(system: SystemSpec, field: DiscreteField,
                     kernel: MollifierKernel,
                     method: str = "auto") -> DiscreteField:
    """G([U]_eps) - [G(U)]_eps as a matrix-valued field (n x (k+1) per node).

    Affine columns and rows are exact zeros by construction.  Raises a
    domain violation when the field or its mollification leaves a bounded
    state domain; the fix is to extend the system to a compact range
    first.
    """
    mollified, entries, parts = _commutator_parts(system, field, kernel, method)
    out = np.zeros(mollified.lattice.shape + (system.n, system.k + 1))
    for (i, j), part in zip(entries, parts):
        out[..., i, j] = part
    return DiscreteField(lattice=mollified.lattice, values=out,
                         periodic_time=mollified.periodic_time)


def _power_norm(arrays, q: float, cell_volume: float) -> float:
    """L^q norm of the Euclidean magnitude over a list of component arrays."""
    if not arrays:
        return 0.0
    mag2 = np.zeros_like(arrays[0])
    for a in arrays:
        mag2 += a * a
    return float((np.sum(mag2 ** (q / 2.0)) * cell_volume) ** (1.0 / q))


@dataclass(frozen=True)
class CommutatorSweep:
    """Commutator norms against the square-difference bound, per epsilon.

    lemma_bound_values holds the bound with unit constant:
    ||[U]_eps - U||^2_{L^{2q}} plus the max over nonzero stencil offsets Y
    of ||U - U(. - Y)||^2_{L^{2q}}.  measured_C is the ratio of the two
    sides (NaN where the bound vanishes).
    """

    q: float
    epsilons: np.ndarray
    commutator_Lq_norms: np.ndarray
    lemma_bound_values: np.ndarray
    measured_C: np.ndarray
    rate_fit: RateFit


def lemma_bound_audit(system: SystemSpec, field: DiscreteField,
                      kernels: Sequence[MollifierKernel], q: float,
                      method: str = "auto") -> CommutatorSweep:
    """Measure ||W||_{L^q} against the square-difference bound per epsilon.

    The sup over kernel-support shifts is realized exactly as a max over
    all nonzero stencil offsets, so the cost grows with the stencil size;
    intended for audit-scale lattices.
    """
    if not kernels:
        raise ParameterError("empty kernel sweep")
    if q < 1:
        raise ParameterError(f"q must be >= 1, got {q}")
    if not field.periodic_time:
        raise ParameterError(
            "lemma_bound_audit requires a fully periodic field (the shift "
            "maximum wraps every axis)")
    kernels = sorted(kernels, key=lambda k: -k.epsilon)
    eps, lhs, bounds = [], [], []
    for kernel in kernels:
        mollified, entries, parts = _commutator_parts(system, field, kernel, method)
        vol = mollified.lattice.cell_volume
        lhs.append(_power_norm(parts, q, vol))
        approx = _lq_of_magnitude(mollified.values - _window(field, mollified),
                                  2.0 * q, vol)
        shift_sup = _max_shift_norm(field, kernel, 2.0 * q)
        bounds.append(approx ** 2 + shift_sup ** 2)
        eps.append(kernel.epsilon)
    eps = np.array(eps)
    lhs = np.array(lhs)
    bounds = np.array(bounds)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bounds > 0, lhs / bounds, np.nan)
    return CommutatorSweep(q=float(q), epsilons=eps,
                           commutator_Lq_norms=lhs,
                           lemma_bound_values=bounds, measured_C=ratio,
                           rate_fit=fit_loglog(eps, lhs))


def _window(field: DiscreteField, like: DiscreteField) -> np.ndarray:
    """Field values restricted to the (possibly time-trimmed) window of `like`."""
    if like.lattice.n_time == field.lattice.n_time:
        return field.values
    r = (field.lattice.n_time - like.lattice.n_time) // 2
    return field.values[r:r + like.lattice.n_time]


def _lq_of_magnitude(values: np.ndarray, q: float, cell_volume: float) -> float:
    comps = [values[..., i] for i in range(values.shape[-1])]
    return _power_norm(comps, q, cell_volume)


def _max_shift_norm(field: DiscreteField, kernel: MollifierKernel,
                    q: float) -> float:
    lat = field.lattice
    vol = lat.cell_volume
    best = 0.0
    for off, _w in kernel.offsets():
        if all(o == 0 for o in off):
            continue
        # ||U - U(. - Y)|| equals ||U - U(. + Y)|| on fully periodic
        # lattices, so visit one of each opposite pair.
        if field.periodic_time and off < tuple([0] * len(off)):
            continue
        shifted = np.roll(field.values, shift=off, axis=tuple(range(lat.n_axes)))
        comps = [field.values[..., i] - shifted[..., i]
                 for i in range(field.n)]
        best = max(best, _power_norm(comps, q, vol))
    return best


@dataclass(frozen=True)
class ResidualReport:
    """Companion-law defect integral per epsilon with its I1/I2 split.

    total = I1 + I2 summand by summand.  rate_fit is a log-log fit of
    |total| against epsilon; limit_estimate extrapolates total toward
    epsilon -> 0 from the tail of the sweep.
    """

    epsilons: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    total: np.ndarray
    rate_fit: RateFit
    limit_estimate: float


def residual_R(system: SystemSpec, field: DiscreteField,
               kernels: Sequence[MollifierKernel], testfn: TestFunction,
               method: str = "auto", fd_step: float = 1e-5) -> ResidualReport:
    """Integrate the mollified companion-law defect against a test function.

    Per epsilon: I1 pairs the commutator with the multiplier derivative
    along D_X[U]_eps times psi; I2 pairs it with the multiplier times
    D_X psi.  The multiplier Jacobian D_U B uses the system's analytic DB
    when present, else central differences with step fd_step.
    """
    if not kernels:
        raise ParameterError("empty kernel sweep")
    kernels = sorted(kernels, key=lambda k: -k.epsilon)
    eps, I1s, I2s, totals = [], [], [], []
    test_cache = {}
    for kernel in kernels:
        mollified, entries, parts = _commutator_parts(system, field, kernel, method)
        lat = mollified.lattice
        key = (lat, mollified.periodic_time)
        if key not in test_cache:
            test_cache[key] = testfn.evaluate(lat, mollified.periodic_time)
        psi, dpsi = test_cache[key]
        vol = lat.cell_volume
        B = system.B(mollified.values)
        if system.DB is not None:
            DB = system.DB(mollified.values)
        else:
            DB = fd_jacobian(system.B, mollified.values, fd_step)
        deriv_cache = {}
        I1 = 0.0
        I2 = 0.0
        for (i, j), W_ij in zip(entries, parts):
            if j not in deriv_cache:
                deriv_cache[j] = axis_derivative(mollified, j)
            DU_j = deriv_cache[j]
            chain = np.einsum("...m,...m->...", DB[..., i, :], DU_j)
            I1 -= np.sum(W_ij * chain * psi) * vol
            I2 -= np.sum(W_ij * B[..., i] * dpsi[..., j]) * vol
        eps.append(kernel.epsilon)
        I1s.append(float(I1))
        I2s.append(float(I2))
        totals.append(float(I1 + I2))
    eps = np.array(eps)
    I1s, I2s, totals = np.array(I1s), np.array(I2s), np.array(totals)
    return ResidualReport(epsilons=eps, I1=I1s, I2=I2s, total=totals,
                          rate_fit=fit_loglog(eps, np.abs(totals)),
                          limit_estimate=aitken_limit(totals))


def good_set_measure(field: DiscreteField, kernel: MollifierKernel,
                     delta: float, method: str = "auto") -> float:
    """Fraction of lattice nodes where |U - [U]_eps| < delta."""
    if delta <= 0:
        raise ParameterError(f"delta must be positive, got {delta}")
    mollified = mollify(field, kernel, method=method)
    diff = mollified.values - _window(field, mollified)
    mag = np.sqrt(np.einsum("...i,...i->...", diff, diff))
    return float(np.mean(mag < delta))
