"""Discrete mollification on the space-time lattice.

The kernel is the classic compactly supported bump exp(-1/(1-|X/eps|^2))
sampled on the lattice stencil of radius eps and renormalized so the
discrete sum times the cell volume is exactly one; mollification is then
circular convolution with that stencil.  Direct stencil summation is the
reference semantics; an FFT path computes the same circular convolution
and is the default for speed.

verify_estimates audits the three smoothing estimates that drive the
commutator analysis: the gradient bound (slope alpha - 1), the
approximation bound (slope alpha), and the translation bound (slope
alpha), for fields of Besov exponent alpha.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import fft as sfft

from ._bumps import bump
from ._runtime import get_workers
from .errors import ParameterError, ResolutionError
from .fields import DiscreteField, Lattice, shift_difference_norm
from .rates import RateFit, fit_loglog


class MollifierKernel:
    """Sampled bump kernel bound to one lattice.

    profile_samples holds the renormalized weights on the centered stencil
    (time axis first; a space-only kernel has a single time slice).
    discrete_sum records sum(weights) * cell_volume, which renormalization
    makes 1 up to rounding.
    """

    def __init__(self, epsilon: float, lattice: Lattice,
                 space_only: bool = False):
        if epsilon <= 0:
            raise ParameterError(f"epsilon must be positive, got {epsilon}")
        spacings = [lattice.h_space] * lattice.k if space_only else \
            [lattice.h_time] + [lattice.h_space] * lattice.k
        h_coarse = max(spacings)
        if epsilon < 4.0 * h_coarse:
            raise ResolutionError(
                f"epsilon {epsilon:g} under-resolved: needs >= 4 nodes per "
                f"radius, minimum epsilon here is {4.0 * h_coarse:g}")

        radius = []
        for axis in range(lattice.n_axes):
            if axis == 0 and space_only:
                radius.append(0)
                continue
            h = lattice.axis_spacing(axis)
            r = int(np.floor(epsilon / h))
            n = lattice.shape[axis]
            if 2 * r + 1 > n:
                raise ResolutionError(
                    f"epsilon {epsilon:g} too large: stencil spans {2*r+1} nodes "
                    f"on axis {axis} of size {n}")
            radius.append(r)

        grids = np.meshgrid(
            *[np.arange(-r, r + 1) * lattice.axis_spacing(a)
              for a, r in enumerate(radius)], indexing="ij")
        dist = np.sqrt(sum(g * g for g in grids))
        weights = bump(dist / epsilon)
        cell = float(np.prod([lattice.axis_spacing(a)
                              for a in range(lattice.n_axes)
                              if not (a == 0 and space_only)]))
        total = weights.sum() * cell
        if total <= 0:
            raise ResolutionError("kernel stencil carries no mass")
        weights = weights / total
        weights.flags.writeable = False

        self.epsilon = float(epsilon)
        self.lattice = lattice
        self.space_only = bool(space_only)
        self.radius_nodes = tuple(radius)
        self.profile_samples = weights
        self.cell_volume = cell
        self.discrete_sum = float(weights.sum() * cell)
        self._spectrum: Optional[np.ndarray] = None

    def padded(self) -> np.ndarray:
        """Kernel weights embedded (wrapped) into a full lattice-shaped array."""
        out = np.zeros(self.lattice.shape)
        idx = [(np.arange(-r, r + 1)) % n
               for r, n in zip(self.radius_nodes, self.lattice.shape)]
        out[np.ix_(*idx)] = self.profile_samples
        return out

    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            self._spectrum = sfft.rfftn(self.padded(), workers=get_workers())
        return self._spectrum

    def offsets(self):
        """(offset tuple, weight) pairs over the nonzero stencil entries."""
        nz = np.argwhere(self.profile_samples > 0.0)
        for index in nz:
            off = tuple(int(index[a]) - self.radius_nodes[a]
                        for a in range(len(self.radius_nodes)))
            yield off, float(self.profile_samples[tuple(index)])


def make_kernel(epsilon: float, lattice: Lattice,
                space_only: bool = False) -> MollifierKernel:
    """Build the discrete mollification kernel at scale epsilon."""
    return MollifierKernel(epsilon, lattice, space_only=space_only)


def _convolve_fft(values: np.ndarray, kernel: MollifierKernel) -> np.ndarray:
    lat_axes = kernel.lattice.n_axes
    shape = kernel.lattice.shape
    spec = kernel.spectrum()
    out = np.empty_like(values)
    flat = values.reshape(shape + (-1,))
    oflat = out.reshape(shape + (-1,))
    axes = tuple(range(lat_axes))
    workers = get_workers()
    for c in range(flat.shape[-1]):
        fhat = sfft.rfftn(flat[..., c], axes=axes, workers=workers)
        oflat[..., c] = sfft.irfftn(fhat * spec, s=shape, axes=axes,
                                    workers=workers)
    out *= kernel.cell_volume
    return out


def _convolve_direct(values: np.ndarray, kernel: MollifierKernel) -> np.ndarray:
    lat_axes = kernel.lattice.n_axes
    axes = tuple(range(lat_axes))
    out = np.zeros_like(values)
    for off, w in kernel.offsets():
        out += w * np.roll(values, shift=off, axis=axes)
    out *= kernel.cell_volume
    return out


def mollify(field: DiscreteField, kernel: MollifierKernel,
            method: str = "auto") -> DiscreteField:
    """Convolve a field with the kernel.

    Fully periodic fields (space always, time via periodic_time) return a
    field on the same lattice.  A field that is not periodic in time is
    convolved circularly and then trimmed by the kernel's time radius at
    both ends, so every surviving node saw only legitimate neighbors.

    method: "fft" (default via "auto") and "direct" compute the same
    circular convolution; "direct" is the reference stencil summation with
    exact shift equivariance.
    """
    if kernel.lattice != field.lattice:
        raise ParameterError("kernel was built for a different lattice")
    if method == "auto":
        method = "fft"
    if method not in ("fft", "direct"):
        raise ParameterError(f"unknown method {method!r}")

    conv = _convolve_fft if method == "fft" else _convolve_direct
    values = conv(np.asarray(field.values), kernel)

    r_t = kernel.radius_nodes[0]
    if field.periodic_time or r_t == 0:
        return DiscreteField(lattice=field.lattice, values=values,
                             periodic_time=field.periodic_time)
    n_keep = field.lattice.n_time - 2 * r_t
    if n_keep < 8:
        raise ResolutionError(
            f"trimming {r_t} nodes from both time ends leaves {n_keep} < 8 "
            "samples; enlarge the time extent or shrink epsilon")
    trimmed = Lattice(k=field.lattice.k, n_time=n_keep,
                      n_space=field.lattice.n_space,
                      extent_time=n_keep * field.lattice.h_time,
                      extent_space=field.lattice.extent_space)
    return DiscreteField(lattice=trimmed, values=values[r_t:r_t + n_keep],
                         periodic_time=False)


def lq_norm(field: DiscreteField, q: float) -> float:
    """L^q norm of the pointwise Euclidean magnitude over the lattice."""
    mag = field.pointwise_magnitude()
    return float((np.sum(mag ** q) * field.lattice.cell_volume) ** (1.0 / q))


def axis_derivative(field: DiscreteField, axis: int) -> np.ndarray:
    """Central-difference derivative along one lattice axis.

    Periodic axes wrap; a non-periodic time axis falls back to one-sided
    differences at the two boundary slices.
    """
    v = field.values
    h = field.lattice.axis_spacing(axis)
    if axis == 0 and not field.periodic_time:
        return np.gradient(v, h, axis=0)
    return (np.roll(v, -1, axis=axis) - np.roll(v, 1, axis=axis)) / (2.0 * h)


def gradient_magnitude(field: DiscreteField) -> np.ndarray:
    """Pointwise Frobenius norm of the central-difference space-time gradient."""
    acc = np.zeros(field.lattice.shape)
    for axis in range(field.lattice.n_axes):
        d = axis_derivative(field, axis)
        flat = d.reshape(field.lattice.shape + (-1,))
        acc += np.einsum("...i,...i->...", flat, flat)
    return np.sqrt(acc)


@dataclass(frozen=True)
class MollifierAudit:
    """Per-epsilon norms and log-log fits for the three smoothing estimates.

    Expected slopes for a field of Besov exponent alpha_ref: gradient_fit
    about alpha_ref - 1, approximation_fit about alpha_ref, translation_fit
    about alpha_ref.  Degenerate fits (all norms zero, e.g. constant
    fields) carry the RateFit degenerate sentinel.
    """

    q: float
    alpha_ref: float
    epsilons: np.ndarray
    gradient_norms: np.ndarray
    approximation_norms: np.ndarray
    translation_norms: np.ndarray
    gradient_fit: RateFit
    approximation_fit: RateFit
    translation_fit: RateFit


def verify_estimates(field: DiscreteField, q: float,
                     epsilons: Sequence[float], alpha_ref: float,
                     method: str = "auto") -> MollifierAudit:
    """Measure the three mollification estimates across an epsilon sweep."""
    if len(epsilons) < 4:
        raise ParameterError("need at least 4 epsilons for stable fits")
    if not 0.0 < alpha_ref < 1.0:
        raise ParameterError(f"alpha_ref must lie in (0, 1), got {alpha_ref}")
    eps = np.sort(np.asarray(epsilons, dtype=float))[::-1]
    lat = field.lattice
    grad_norms, diff_norms, trans_norms = [], [], []
    for e in eps:
        kernel = make_kernel(e, lat)
        smoothed = mollify(field, kernel, method=method)
        grad = gradient_magnitude(smoothed)
        grad_norms.append(float(
            (np.sum(grad ** q) * smoothed.lattice.cell_volume) ** (1.0 / q)))
        reference = field.values
        if smoothed.lattice.n_time != lat.n_time:
            r_t = kernel.radius_nodes[0]
            reference = reference[r_t:r_t + smoothed.lattice.n_time]
        delta = DiscreteField(lattice=smoothed.lattice,
                              values=smoothed.values - reference,
                              periodic_time=smoothed.periodic_time)
        diff_norms.append(lq_norm(delta, q))
        best = 0.0
        for axis in range(lat.n_axes):
            nodes = round(e / lat.axis_spacing(axis))
            if nodes < 1 or nodes >= lat.shape[axis] // 2:
                continue
            best = max(best, shift_difference_norm(field, axis, nodes, q))
        trans_norms.append(best)
    grad_norms = np.array(grad_norms)
    diff_norms = np.array(diff_norms)
    trans_norms = np.array(trans_norms)
    return MollifierAudit(
        q=float(q), alpha_ref=float(alpha_ref), epsilons=eps,
        gradient_norms=grad_norms, approximation_norms=diff_norms,
        translation_norms=trans_norms,
        gradient_fit=fit_loglog(eps, grad_norms),
        approximation_fit=fit_loglog(eps, diff_norms),
        translation_fit=fit_loglog(eps, trans_norms),
    )


def kernel_to_csv(kernel: MollifierKernel, path) -> None:
    """Dump the stencil: node offsets, physical offsets, weight."""
    lat = kernel.lattice
    idx = np.argwhere(np.ones_like(kernel.profile_samples, dtype=bool))
    offs = idx - np.array(kernel.radius_nodes)
    phys = offs * np.array([lat.axis_spacing(a) for a in range(lat.n_axes)])
    w = kernel.profile_samples.reshape(-1)
    header = ",".join([f"d{'t' if a == 0 else 'x' + str(a)}"
                       for a in range(lat.n_axes)]
                      + [f"off_{'t' if a == 0 else 'x' + str(a)}"
                         for a in range(lat.n_axes)] + ["weight"])
    np.savetxt(path, np.column_stack([offs, phys, w]), delimiter=",",
               header=header, comments="")
