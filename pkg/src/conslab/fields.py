"""Discrete space-time state fields on periodic lattices.

Fields live on a uniform lattice over [0, extent_time) x torus^k with
time-major storage.  Generators produce the two field families the rest of
the package studies: exact traveling-shock weak solutions and synthetic
lacunary (Weierstrass-type) fields with a prescribed Besov regularity
exponent.  The Besov estimator measures that exponent back from finite
differences.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ParameterError, ResolutionError, UnsupportedGeometryError
from .rates import RateFit, fit_loglog
from .systems import SystemSpec, require_in_domain

_MAGIC = b"CLABFLD1"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Lattice:
    """Uniform space-time lattice: n_time samples over [0, extent_time),
    n_space samples per spatial axis over a torus of circumference
    extent_space."""

    k: int
    n_time: int
    n_space: int
    extent_time: float
    extent_space: float

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError("space dimension k must be >= 1")
        if self.n_time < 8 or self.n_space < 8:
            raise ParameterError(
                f"lattice counts must be >= 8, got n_time={self.n_time}, "
                f"n_space={self.n_space}")
        if not (self.extent_time > 0 and self.extent_space > 0):
            raise ParameterError("lattice extents must be positive")

    @property
    def h_time(self) -> float:
        return self.extent_time / self.n_time

    @property
    def h_space(self) -> float:
        return self.extent_space / self.n_space

    @property
    def shape(self) -> tuple:
        return (self.n_time,) + (self.n_space,) * self.k

    @property
    def n_axes(self) -> int:
        return self.k + 1

    @property
    def cell_volume(self) -> float:
        return self.h_time * self.h_space ** self.k

    def axis_spacing(self, axis: int) -> float:
        return self.h_time if axis == 0 else self.h_space

    def axis_extent(self, axis: int) -> float:
        return self.extent_time if axis == 0 else self.extent_space

    def times(self) -> np.ndarray:
        return np.arange(self.n_time) * self.h_time

    def space_nodes(self) -> np.ndarray:
        return np.arange(self.n_space) * self.h_space


@dataclass(frozen=True)
class DiscreteField:
    """Array of values over a lattice; trailing axes hold the value shape
    ((n,) for state fields, (n, k+1) for flux-like matrix fields)."""

    lattice: Lattice
    values: np.ndarray
    periodic_time: bool = True

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        lshape = self.lattice.shape
        if values.shape[:len(lshape)] != lshape or values.ndim <= len(lshape):
            raise ParameterError(
                f"values shape {values.shape} does not extend lattice shape {lshape}")
        if not np.all(np.isfinite(values)):
            raise ParameterError("field values must be finite")
        view = values.view()
        view.flags.writeable = False
        object.__setattr__(self, "values", view)

    @property
    def value_shape(self) -> tuple:
        return self.values.shape[self.lattice.n_axes:]

    @property
    def n(self) -> int:
        return self.value_shape[0]

    def pointwise_magnitude(self) -> np.ndarray:
        """Euclidean norm over all value axes, per lattice node."""
        flat = self.values.reshape(self.lattice.shape + (-1,))
        return np.sqrt(np.einsum("...i,...i->...", flat, flat))


def _adjust_extent_time(lattice: Lattice, speed: float) -> Lattice:
    # Traveling waves are time-periodic only when speed * extent_time is an
    # integer multiple of the spatial period; snap to the nearest such
    # extent and record it on the lattice.
    if speed == 0.0:
        return lattice
    period = lattice.extent_space
    mult = max(1, round(abs(speed) * lattice.extent_time / period))
    adjusted = mult * period / abs(speed)
    if adjusted == lattice.extent_time:
        return lattice
    return replace(lattice, extent_time=adjusted)


def make_shock_field(system: SystemSpec, U_left, U_right, speed: float,
                     lattice: Lattice) -> DiscreteField:
    """Traveling two-state field: U_left where (x - speed*t) mod L is in
    [0, L/2), U_right otherwise.

    The left-to-right interface sits on the co-moving line
    x - speed*t = L/2 (the companion right-to-left interface on x - speed*t
    = 0); a periodic field necessarily carries both.  With the
    Rankine-Hugoniot speed this is an exact weak solution.  The lattice
    extent_time is snapped so the wave is exactly time-periodic; read it
    back from the returned field.
    """
    if lattice.k != 1:
        raise UnsupportedGeometryError(
            f"shock fields are one-dimensional; got k={lattice.k}")
    U_left = np.asarray(U_left, dtype=float).reshape(-1)
    U_right = np.asarray(U_right, dtype=float).reshape(-1)
    if U_left.shape != (system.n,) or U_right.shape != (system.n,):
        raise ParameterError(f"states must have shape ({system.n},)")
    if np.array_equal(U_left, U_right):
        raise ParameterError("U_left equals U_right: no jump")
    if not np.isfinite(speed):
        raise ParameterError("speed must be finite")
    require_in_domain(system.domain, U_left[None, :], "make_shock_field U_left")
    require_in_domain(system.domain, U_right[None, :], "make_shock_field U_right")

    lattice = _adjust_extent_time(lattice, speed)
    L = lattice.extent_space
    t = lattice.times()
    x = lattice.space_nodes()
    xi = (x[None, :] - speed * t[:, None]) % L
    left = xi < 0.5 * L
    values = np.where(left[..., None], U_left, U_right)
    return DiscreteField(lattice=lattice, values=values)


def lacunary_profile(alpha: float, n_octaves: int, seed: int, period: float,
                     amplitude: float, x: np.ndarray) -> np.ndarray:
    """Evaluate amplitude * sum_j 2^{-alpha j} cos(2^j 2 pi x/period + phi_j)
    with phases phi_j drawn once from the seeded generator."""
    phases = np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi, n_octaves)
    out = np.zeros_like(np.asarray(x, dtype=float))
    base = 2.0 * np.pi / period
    for j in range(1, n_octaves + 1):
        out += 2.0 ** (-alpha * j) * np.cos((2 ** j) * base * x + phases[j - 1])
    return amplitude * out


def make_lacunary_field(alpha: float, n_octaves: int, seed: int,
                        travel_speed: float, lattice: Lattice,
                        amplitude: float = 1.0) -> DiscreteField:
    """Scalar traveling field U(t, x) = f(x - travel_speed * t) where f is
    the lacunary profile with exact Besov/Hoelder exponent alpha."""
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if lattice.k != 1:
        raise UnsupportedGeometryError(
            f"lacunary fields are one-dimensional; got k={lattice.k}")
    if n_octaves < 1:
        raise ParameterError("n_octaves must be >= 1")
    max_octaves = int(np.floor(np.log2(lattice.n_space / 4)))
    if 2 ** n_octaves > lattice.n_space / 4:
        raise ResolutionError(
            f"2^{n_octaves} oscillations per period are not resolvable on "
            f"{lattice.n_space} nodes; maximum n_octaves here is {max_octaves}")

    lattice = _adjust_extent_time(lattice, travel_speed)
    L = lattice.extent_space
    t = lattice.times()
    x = lattice.space_nodes()

    shift_per_step = travel_speed * lattice.h_time / lattice.h_space
    if abs(shift_per_step - round(shift_per_step)) < 1e-9:
        # The wave moves an integer number of nodes per time step, so each
        # time slice is an exact circular shift of the base profile.
        profile = lacunary_profile(alpha, n_octaves, seed, L, amplitude, x)
        shifts = (np.arange(lattice.n_time) * round(shift_per_step)) % lattice.n_space
        idx = (np.arange(lattice.n_space)[None, :] - shifts[:, None]) % lattice.n_space
        values = profile[idx]
    else:
        xi = x[None, :] - travel_speed * t[:, None]
        values = lacunary_profile(alpha, n_octaves, seed, L, amplitude, xi)
    return DiscreteField(lattice=lattice, values=values[..., None])


# ---------------------------------------------------------------------------
# Besov estimation


def shift_difference_norm(field: DiscreteField, axis: int, nodes: int,
                          q: float) -> float:
    """L^q norm of U(. + shift) - U(.) for a shift of `nodes` lattice nodes
    along one axis.  Periodic axes wrap; a non-periodic time axis restricts
    to the overlap window."""
    if nodes < 1:
        raise ParameterError("shift must be >= 1 node")
    v = field.values
    if axis == 0 and not field.periodic_time:
        if nodes >= field.lattice.n_time:
            raise ResolutionError("shift exceeds the time extent")
        diff = v[nodes:] - v[:-nodes]
    else:
        diff = np.roll(v, -nodes, axis=axis) - v
    flat = diff.reshape(diff.shape[:field.lattice.n_axes] + (-1,))
    mag2 = np.einsum("...i,...i->...", flat, flat)
    vol = field.lattice.cell_volume
    return float((np.sum(mag2 ** (q / 2.0)) * vol) ** (1.0 / q))


@dataclass(frozen=True)
class BesovEstimate:
    """Finite-difference Besov diagnostic at integrability q.

    shifts are physical shift magnitudes in strictly decreasing dyadic
    order; diff_norms are the matching L^q difference norms, maximized
    over the participating axes.  fitted_alpha is the log-log slope (with
    its regression residual inside `fit`); seminorm_proxy is
    max_i diff_norms[i] / shifts[i]^fitted_alpha.
    """

    q: float
    shifts: np.ndarray
    diff_norms: np.ndarray
    fitted_alpha: float
    fit: RateFit
    seminorm_proxy: float


def estimate_besov(field: DiscreteField, q: float, n_shifts: int = 9) -> BesovEstimate:
    """Estimate the Besov exponent from dyadic shift differences.

    Shift magnitudes are 2*h_space*2^i capped at one eighth of the
    relevant extent; each is realized along every axis where it rounds to
    at least one node (spatial axes always; the time axis additionally
    when within its extent), and the reported norm is the max over axes.
    The regression drops the smallest and largest shift.
    """
    if q < 1:
        raise ParameterError(f"q must be >= 1, got {q}")
    if n_shifts < 3:
        raise ParameterError("n_shifts must be >= 3")
    lat = field.lattice
    shifts = []
    norms = []
    for i in range(n_shifts):
        s = 2.0 * lat.h_space * 2.0 ** i
        best = 0.0
        usable = False
        for axis in range(lat.n_axes):
            if s > lat.axis_extent(axis) / 8.0:
                continue
            nodes = round(s / lat.axis_spacing(axis))
            if nodes < 1:
                continue
            usable = True
            best = max(best, shift_difference_norm(field, axis, nodes, q))
        if usable:
            shifts.append(s)
            norms.append(best)
    if len(shifts) < 3:
        raise ResolutionError(
            f"only {len(shifts)} usable shifts on this lattice; need >= 3 "
            "(shrink the shift count or refine the lattice)")
    shifts = np.array(shifts[::-1])
    norms = np.array(norms[::-1])
    fit = fit_loglog(shifts, norms, drop_endpoints=True)
    alpha = fit.slope
    if np.all(norms == 0.0):
        proxy = 0.0
    elif np.isfinite(alpha):
        proxy = float(np.max(norms / shifts ** alpha))
    else:
        proxy = float("nan")
    return BesovEstimate(q=float(q), shifts=shifts, diff_norms=norms,
                         fitted_alpha=float(alpha), fit=fit,
                         seminorm_proxy=proxy)


# ---------------------------------------------------------------------------
# serialization


def save_field(field: DiscreteField, path) -> None:
    """Write a state field to the flat binary container (little endian)."""
    if len(field.value_shape) != 1:
        raise ParameterError("only state fields (one value axis) serialize")
    header = struct.pack(
        "<8sIIIB3xQQdd", _MAGIC, _FORMAT_VERSION, field.lattice.k, field.n,
        1 if field.periodic_time else 0, field.lattice.n_time,
        field.lattice.n_space, field.lattice.extent_time,
        field.lattice.extent_space)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def load_field(path) -> DiscreteField:
    with open(path, "rb") as fh:
        header = fh.read(struct.calcsize("<8sIIIB3xQQdd"))
        magic, version, k, n, periodic, n_time, n_space, ext_t, ext_x = \
            struct.unpack("<8sIIIB3xQQdd", header)
        if magic != _MAGIC:
            raise ParameterError(f"not a field container: bad magic {magic!r}")
        if version != _FORMAT_VERSION:
            raise ParameterError(f"unsupported container version {version}")
        lattice = Lattice(k=k, n_time=n_time, n_space=n_space,
                          extent_time=ext_t, extent_space=ext_x)
        count = n_time * n_space ** k * n
        data = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
    values = data.astype(float).reshape(lattice.shape + (n,))
    return DiscreteField(lattice=lattice, values=values,
                         periodic_time=bool(periodic))


def field_to_csv(field: DiscreteField, path, max_nodes: int = 2_000_000) -> None:
    """One row per lattice node: time, space coordinates, state components.
    Intended for small fields; larger ones should use the binary container."""
    if len(field.value_shape) != 1:
        raise ParameterError("only state fields (one value axis) export to CSV")
    n_nodes = int(np.prod(field.lattice.shape))
    if n_nodes > max_nodes:
        raise ParameterError(
            f"{n_nodes} nodes exceed the CSV limit {max_nodes}; "
            "use save_field instead")
    lat = field.lattice
    axes = [lat.times()] + [lat.space_nodes()] * lat.k
    grids = np.meshgrid(*axes, indexing="ij")
    cols = [g.reshape(-1) for g in grids]
    cols += [field.values[..., i].reshape(-1) for i in range(field.n)]
    header = ",".join(["t"] + [f"x{i+1}" for i in range(lat.k)]
                      + [f"u{i+1}" for i in range(field.n)])
    np.savetxt(path, np.column_stack(cols), delimiter=",", header=header,
               comments="")
