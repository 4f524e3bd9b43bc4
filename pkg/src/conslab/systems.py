"""Conservation-law systems with companion laws.

A system is a space-time divergence form div_X G(U) = 0 for a state field
U with values in an open domain O of R^n, where G maps states to n x (k+1)
flux matrices and column 0 is the temporal flux.  A companion law is a
scalar conservation law div_X Q(U) = 0 that every classical solution
inherits; it exists exactly when a row-vector multiplier B satisfies the
per-column identity

    D_U Q_j(U) = B(U) . D_U G_j(U)      for j = 0, ..., k.

This module provides the system container, a numerical checker for the
identity, the built-in catalogue (Burgers, compressible Euler in velocity
and momentum variables, 1-d elastodynamics, incompressible Euler in 2-d,
and a 1-d incompressible MHD reduction), and the compact-range extension
that replaces a system by a globally defined, globally bounded one agreeing
with the original near a prescribed range box.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from ._bumps import smoothstep, smoothstep_deriv
from .errors import DomainViolationError, GeometryError, ParameterError

Evaluator = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# state domains


@dataclass(frozen=True)
class StateDomain:
    """Open set of admissible states with a pure membership test.

    kind is one of "all-space", "box", "half-space-positive-coordinate",
    "predicate".  Box bounds may be infinite on one side.  The convex flag
    is advisory metadata used by callers that need midpoint closure (for
    example when mollified states must stay admissible).
    """

    kind: str
    lower: Optional[tuple] = None
    upper: Optional[tuple] = None
    coordinate: Optional[int] = None
    predicate: Optional[Callable[[np.ndarray], np.ndarray]] = None
    convex: bool = True
    description: str = ""

    @staticmethod
    def all_space() -> "StateDomain":
        return StateDomain(kind="all-space", description="all of R^n")

    @staticmethod
    def box(lower, upper, convex: bool = True, description: str = "") -> "StateDomain":
        lower = tuple(float(v) for v in lower)
        upper = tuple(float(v) for v in upper)
        if len(lower) != len(upper):
            raise ParameterError("box bounds must have equal length")
        for i, (lo, hi) in enumerate(zip(lower, upper)):
            if not lo < hi:
                raise ParameterError(f"box bound {i} empty: [{lo}, {hi}]")
        return StateDomain(kind="box", lower=lower, upper=upper,
                           convex=convex, description=description)

    @staticmethod
    def half_space(coordinate: int, convex: bool = True,
                   description: str = "") -> "StateDomain":
        """Open half space {U : U[coordinate] > 0}."""
        return StateDomain(kind="half-space-positive-coordinate",
                           coordinate=int(coordinate), convex=convex,
                           description=description)

    @staticmethod
    def from_predicate(predicate, convex: bool = False,
                       description: str = "") -> "StateDomain":
        return StateDomain(kind="predicate", predicate=predicate,
                           convex=convex, description=description)

    def contains(self, U: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """Vectorized membership of states shaped (..., n).

        With margin > 0 the test is for distance > margin from the
        boundary along each coordinate (boxes and half spaces only; for
        predicate domains the margin is ignored beyond plain membership).
        """
        U = np.asarray(U, dtype=float)
        if self.kind == "all-space":
            return np.ones(U.shape[:-1], dtype=bool)
        if self.kind == "box":
            lo = np.asarray(self.lower) + margin
            hi = np.asarray(self.upper) - margin
            return np.all((U > lo) & (U < hi), axis=-1)
        if self.kind == "half-space-positive-coordinate":
            return U[..., self.coordinate] > margin
        if self.kind == "predicate":
            out = np.asarray(self.predicate(U))
            if out.shape != U.shape[:-1]:
                raise ParameterError(
                    "domain predicate must map (..., n) states to (...) booleans")
            return out
        raise ParameterError(f"unknown domain kind {self.kind!r}")


def require_in_domain(domain: StateDomain, U: np.ndarray, what: str,
                      margin: float = 0.0) -> None:
    """Raise DomainViolationError naming the first offending state."""
    ok = domain.contains(U, margin=margin)
    if bool(np.all(ok)):
        return
    bad = np.argwhere(~ok)
    first = tuple(bad[0])
    state = np.asarray(U, dtype=float)[first]
    raise DomainViolationError(
        f"{what}: state {np.array2string(state, precision=6)} at index {first} "
        f"is outside the admissible domain"
        + (f" (margin {margin:g})" if margin else ""))


# ---------------------------------------------------------------------------
# system container


@dataclass(frozen=True)
class SystemSpec:
    """A conservation-law system together with its companion-law data.

    Evaluators are pure, vectorized over leading axes: G maps (..., n) to
    (..., n, k+1), B to (..., n), Q to (..., k+1).  Optional Jacobians:
    DG maps to (..., n, k+1, n), DB to (..., n, n), DQ to (..., k+1, n),
    each indexed [..., output..., state-component].  When a Jacobian is
    absent, consumers fall back to central finite differences.

    affine_columns (affine_rows) lists flux columns j (rows i) whose
    entries are affine functions of the state; mollification commutes with
    those entries exactly, which downstream code exploits.
    """

    name: str
    n: int
    k: int
    domain: StateDomain
    G: Evaluator
    B: Evaluator
    Q: Evaluator
    DG: Optional[Evaluator] = None
    DB: Optional[Evaluator] = None
    DQ: Optional[Evaluator] = None
    affine_columns: frozenset = frozenset()
    affine_rows: frozenset = frozenset()

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ParameterError("state and space dimensions must be >= 1")
        for j in self.affine_columns:
            if not 0 <= j <= self.k:
                raise ParameterError(f"affine column index {j} out of range")
        for i in self.affine_rows:
            if not 0 <= i <= self.n - 1:
                raise ParameterError(f"affine row index {i} out of range")

    @property
    def has_analytic_jacobians(self) -> bool:
        return self.DG is not None and self.DQ is not None


def fd_jacobian(f: Evaluator, U: np.ndarray, step: float) -> np.ndarray:
    """Central finite-difference Jacobian of a vectorized evaluator.

    Steps are scaled per sample by (1 + max|U_i|) to balance truncation
    against rounding for states of any magnitude.  Output shape is
    f(U).shape + (n,).
    """
    U = np.asarray(U, dtype=float)
    n = U.shape[-1]
    h = step * (1.0 + np.max(np.abs(U), axis=-1))
    base_shape = f(U).shape
    out = np.empty(base_shape + (n,))
    for m in range(n):
        Up = U.copy()
        Um = U.copy()
        Up[..., m] += h
        Um[..., m] -= h
        diff = f(Up) - f(Um)
        denom = (2.0 * h).reshape(h.shape + (1,) * (len(base_shape) - h.ndim))
        out[..., m] = diff / denom
    return out


# ---------------------------------------------------------------------------
# compatibility check


@dataclass(frozen=True)
class CompatibilityReport:
    """Result of sampling the companion-law identity D_U Q_j = B . D_U G_j."""

    max_residual: float
    worst_state: np.ndarray
    worst_column: int
    samples: int
    method: str
    system_name: str = ""


def uniform_box_sampler(lower, upper):
    """Sampler drawing states uniformly from a box; use with check_compatibility."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape or lower.ndim != 1:
        raise ParameterError("sampler bounds must be two 1-d arrays of equal length")
    if not np.all(lower < upper):
        raise ParameterError("sampler box is empty")

    def sample(rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(lower, upper, size=(count, lower.size))

    return sample


def check_compatibility(system: SystemSpec, sampler, n_samples: int,
                        fd_step: float = 1e-5, *, rng=0,
                        method: str = "auto") -> CompatibilityReport:
    """Sample the identity D_U Q_j = B . D_U G_j over random interior states.

    The sampler is called as sampler(rng, n_samples) and must return states
    strictly inside the system domain at distance > fd_step (finite
    differences step outside otherwise).  method is "auto" (analytic
    Jacobians when the system supplies them), "analytic", or
    "finite-difference".
    """
    if n_samples < 1:
        raise ParameterError("n_samples must be >= 1")
    if fd_step <= 0:
        raise ParameterError(f"fd_step must be positive, got {fd_step}")
    if method not in ("auto", "analytic", "finite-difference"):
        raise ParameterError(f"unknown method {method!r}")
    if method == "analytic" and not system.has_analytic_jacobians:
        raise ParameterError(
            f"system {system.name!r} has no analytic Jacobians; "
            "use method='finite-difference'")
    if method == "auto":
        method = "analytic" if system.has_analytic_jacobians else "finite-difference"

    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    U = np.asarray(sampler(rng, n_samples), dtype=float)
    if U.shape != (n_samples, system.n):
        raise ParameterError(
            f"sampler returned shape {U.shape}, expected {(n_samples, system.n)}")
    margin = fd_step if method == "finite-difference" else 0.0
    require_in_domain(system.domain, U, "check_compatibility sample", margin=margin)

    if method == "analytic":
        DG = system.DG(U)
        DQ = system.DQ(U)
    else:
        DG = fd_jacobian(system.G, U, fd_step)
        DQ = fd_jacobian(system.Q, U, fd_step)
    B = system.B(U)
    # residual[s, j, m] = DQ[s, j, m] - sum_i B[s, i] DG[s, i, j, m]
    resid = DQ - np.einsum("si,sijm->sjm", B, DG)
    worst = np.unravel_index(int(np.argmax(np.abs(resid))), resid.shape)
    return CompatibilityReport(
        max_residual=float(np.max(np.abs(resid))),
        worst_state=U[worst[0]].copy(),
        worst_column=int(worst[1]),
        samples=n_samples,
        method=method,
        system_name=system.name,
    )


# ---------------------------------------------------------------------------
# constitutive catalogues


@dataclass(frozen=True)
class PressureLaw:
    """Barotropic pressure p(rho) with the normalized primitive P.

    P solves P'(rho) = p(rho)/rho^2 with P(1) = 0; the pair (p, P) is what
    the Euler companion laws are built from.
    """

    name: str
    p: Callable
    dp: Callable
    P: Callable
    dP: Callable
    d2P: Callable
    params: dict = field(default_factory=dict)


def make_pressure_law(spec: Optional[dict]) -> PressureLaw:
    spec = dict(spec or {"name": "polytropic"})
    name = spec.pop("name", "polytropic")
    if name != "polytropic":
        raise ParameterError(
            f"unknown pressure law {name!r}; catalogue: ['polytropic']")
    kappa = float(spec.pop("kappa", 1.0))
    gamma = float(spec.pop("gamma", 2.0))
    if spec:
        raise ParameterError(f"unknown pressure-law parameters: {sorted(spec)}")
    if kappa <= 0:
        raise ParameterError(f"pressure-law kappa must be positive, got {kappa}")
    if gamma <= 0:
        raise ParameterError(f"pressure-law gamma must be positive, got {gamma}")

    def p(rho):
        return kappa * rho ** gamma

    def dp(rho):
        return kappa * gamma * rho ** (gamma - 1.0)

    if abs(gamma - 1.0) < 1e-12:
        def P(rho):
            return kappa * np.log(rho)
    else:
        def P(rho):
            return kappa * (rho ** (gamma - 1.0) - 1.0) / (gamma - 1.0)

    def dP(rho):
        return kappa * rho ** (gamma - 2.0)

    def d2P(rho):
        return kappa * (gamma - 2.0) * rho ** (gamma - 3.0)

    return PressureLaw(name="polytropic", p=p, dp=dp, P=P, dP=dP, d2P=d2P,
                       params={"kappa": kappa, "gamma": gamma})


@dataclass(frozen=True)
class StoredEnergy:
    """Hyperelastic stored energy W(w) with derivatives up to third order."""

    name: str
    W: Callable
    dW: Callable
    d2W: Callable
    d3W: Callable
    params: dict = field(default_factory=dict)


def make_stored_energy(spec: Optional[dict]) -> StoredEnergy:
    spec = dict(spec or {"name": "power"})
    name = spec.pop("name", "power")
    if name != "power":
        raise ParameterError(
            f"unknown stored energy {name!r}; catalogue: ['power']")
    amplitude = float(spec.pop("amplitude", 1.0))
    exponent = float(spec.pop("exponent", 4.0))
    if spec:
        raise ParameterError(f"unknown stored-energy parameters: {sorted(spec)}")
    if amplitude <= 0:
        raise ParameterError(f"stored-energy amplitude must be positive, got {amplitude}")
    if exponent < 3:
        raise ParameterError(
            f"stored-energy exponent must be >= 3 for a C^3 law on w > 0, got {exponent}")

    m = exponent

    def W(w):
        return amplitude * w ** m / m

    def dW(w):
        return amplitude * w ** (m - 1.0)

    def d2W(w):
        return amplitude * (m - 1.0) * w ** (m - 2.0)

    def d3W(w):
        return amplitude * (m - 1.0) * (m - 2.0) * w ** (m - 3.0)

    return StoredEnergy(name="power", W=W, dW=dW, d2W=d2W, d3W=d3W,
                        params={"amplitude": amplitude, "exponent": m})


# ---------------------------------------------------------------------------
# built-in systems

BUILTIN_NAMES = (
    "burgers",
    "euler-compressible-1d",
    "euler-compressible-m-form-1d",
    "elastodynamics-1d",
    "euler-incompressible-2d",
    "mhd-incompressible-1d",
)


def _density_domain(params: dict, what: str, coordinate: int = 0) -> StateDomain:
    # rho_min < 0 would let the admissible range touch rho = 0 where the
    # companion data is singular; rho_min = 0 keeps the open half space.
    rho_min = params.pop("rho_min", 0.0)
    rho_min = float(rho_min)
    if rho_min < 0:
        raise ParameterError(
            f"{what}: density range [{rho_min}, inf) includes 0 where the "
            "multiplier is singular; rho_min must be >= 0")
    if rho_min == 0.0:
        return StateDomain.half_space(coordinate, description=f"{what} > 0")
    n_hint = params.get("_n", 2)
    lower = [-np.inf] * n_hint
    upper = [np.inf] * n_hint
    lower[coordinate] = rho_min
    return StateDomain.box(lower, upper, description=f"{what} > {rho_min}")


def _stack(shape, entries):
    """Assemble an output array from a {index: value} map, zeros elsewhere."""
    out = np.zeros(shape)
    for idx, val in entries.items():
        out[(...,) + idx] = val
    return out


def _make_burgers(params: dict) -> SystemSpec:
    if params:
        raise ParameterError(f"burgers takes no parameters, got {sorted(params)}")

    def G(U):
        u = U[..., 0]
        return np.stack([u, 0.5 * u * u], axis=-1)[..., None, :]

    def DG(U):
        u = U[..., 0]
        out = np.empty(U.shape[:-1] + (1, 2, 1))
        out[..., 0, 0, 0] = 1.0
        out[..., 0, 1, 0] = u
        return out

    def B(U):
        return U.copy()

    def DB(U):
        return np.ones(U.shape[:-1] + (1, 1))

    def Q(U):
        u = U[..., 0]
        return np.stack([0.5 * u * u, u ** 3 / 3.0], axis=-1)

    def DQ(U):
        u = U[..., 0]
        out = np.empty(U.shape[:-1] + (2, 1))
        out[..., 0, 0] = u
        out[..., 1, 0] = u * u
        return out

    return SystemSpec(name="burgers", n=1, k=1, domain=StateDomain.all_space(),
                      G=G, B=B, Q=Q, DG=DG, DB=DB, DQ=DQ,
                      affine_columns=frozenset({0}))


def _make_euler_velocity(params: dict) -> SystemSpec:
    law = make_pressure_law(params.pop("pressure", None))
    domain = _density_domain({**params, "_n": 2}, "density")
    params.pop("rho_min", None)
    if params:
        raise ParameterError(
            f"euler-compressible-1d parameters: pressure, rho_min; got {sorted(params)}")
    p, dp, P, dP, d2P = law.p, law.dp, law.P, law.dP, law.d2P

    # states (rho, u); the enthalpy-like quantity P + rho P' carries the
    # pressure into the velocity equation.
    def G(U):
        rho, u = U[..., 0], U[..., 1]
        out = np.empty(U.shape[:-1] + (2, 2))
        out[..., 0, 0] = rho
        out[..., 0, 1] = rho * u
        out[..., 1, 0] = u
        out[..., 1, 1] = 0.5 * u * u + P(rho) + rho * dP(rho)
        return out

    def DG(U):
        rho, u = U[..., 0], U[..., 1]
        out = np.zeros(U.shape[:-1] + (2, 2, 2))
        out[..., 0, 0, 0] = 1.0
        out[..., 0, 1, 0] = u
        out[..., 0, 1, 1] = rho
        out[..., 1, 0, 1] = 1.0
        out[..., 1, 1, 0] = 2.0 * dP(rho) + rho * d2P(rho)
        out[..., 1, 1, 1] = u
        return out

    def B(U):
        rho, u = U[..., 0], U[..., 1]
        return np.stack([0.5 * u * u + P(rho) + rho * dP(rho), rho * u], axis=-1)

    def DB(U):
        rho, u = U[..., 0], U[..., 1]
        out = np.empty(U.shape[:-1] + (2, 2))
        out[..., 0, 0] = 2.0 * dP(rho) + rho * d2P(rho)
        out[..., 0, 1] = u
        out[..., 1, 0] = u
        out[..., 1, 1] = rho
        return out

    def Q(U):
        rho, u = U[..., 0], U[..., 1]
        e = 0.5 * rho * u * u + rho * P(rho)
        return np.stack([e, (e + p(rho)) * u], axis=-1)

    def DQ(U):
        rho, u = U[..., 0], U[..., 1]
        out = np.empty(U.shape[:-1] + (2, 2))
        out[..., 0, 0] = 0.5 * u * u + P(rho) + rho * dP(rho)
        out[..., 0, 1] = rho * u
        out[..., 1, 0] = (0.5 * u * u + P(rho) + rho * dP(rho) + dp(rho)) * u
        out[..., 1, 1] = 1.5 * rho * u * u + rho * P(rho) + p(rho)
        return out

    return SystemSpec(name="euler-compressible-1d", n=2, k=1, domain=domain,
                      G=G, B=B, Q=Q, DG=DG, DB=DB, DQ=DQ,
                      affine_columns=frozenset({0}))


def _make_euler_m_form(params: dict) -> SystemSpec:
    law = make_pressure_law(params.pop("pressure", None))
    domain = _density_domain({**params, "_n": 2}, "density")
    params.pop("rho_min", None)
    if params:
        raise ParameterError(
            f"euler-compressible-m-form-1d parameters: pressure, rho_min; "
            f"got {sorted(params)}")
    p, dp, P, dP, d2P = law.p, law.dp, law.P, law.dP, law.d2P

    # states (rho, m) with m the momentum density; the continuity row and
    # the whole temporal column are affine.
    def G(U):
        rho, m = U[..., 0], U[..., 1]
        out = np.empty(U.shape[:-1] + (2, 2))
        out[..., 0, 0] = rho
        out[..., 0, 1] = m
        out[..., 1, 0] = m
        out[..., 1, 1] = m * m / rho + p(rho)
        return out

    def DG(U):
        rho, m = U[..., 0], U[..., 1]
        out = np.zeros(U.shape[:-1] + (2, 2, 2))
        out[..., 0, 0, 0] = 1.0
        out[..., 0, 1, 1] = 1.0
        out[..., 1, 0, 1] = 1.0
        out[..., 1, 1, 0] = -(m / rho) ** 2 + dp(rho)
        out[..., 1, 1, 1] = 2.0 * m / rho
        return out

    def B(U):
        rho, m = U[..., 0], U[..., 1]
        return np.stack(
            [P(rho) + rho * dP(rho) - 0.5 * (m / rho) ** 2, m / rho], axis=-1)

    def DB(U):
        rho, m = U[..., 0], U[..., 1]
        out = np.empty(U.shape[:-1] + (2, 2))
        out[..., 0, 0] = 2.0 * dP(rho) + rho * d2P(rho) + m * m / rho ** 3
        out[..., 0, 1] = -m / rho ** 2
        out[..., 1, 0] = -m / rho ** 2
        out[..., 1, 1] = 1.0 / rho
        return out

    def Q(U):
        rho, m = U[..., 0], U[..., 1]
        e = 0.5 * m * m / rho + rho * P(rho)
        return np.stack([e, (e + p(rho)) * m / rho], axis=-1)

    def DQ(U):
        rho, m = U[..., 0], U[..., 1]
        out = np.empty(U.shape[:-1] + (2, 2))
        out[..., 0, 0] = -0.5 * (m / rho) ** 2 + P(rho) + rho * dP(rho)
        out[..., 0, 1] = m / rho
        out[..., 1, 0] = (-m ** 3 / rho ** 3 + m * dP(rho)
                          + m * dp(rho) / rho - m * p(rho) / rho ** 2)
        out[..., 1, 1] = 1.5 * (m / rho) ** 2 + P(rho) + p(rho) / rho
        return out

    return SystemSpec(name="euler-compressible-m-form-1d", n=2, k=1,
                      domain=domain, G=G, B=B, Q=Q, DG=DG, DB=DB, DQ=DQ,
                      affine_columns=frozenset({0}),
                      affine_rows=frozenset({0}))


def _make_elastodynamics(params: dict) -> SystemSpec:
    energy = make_stored_energy(params.pop("stored_energy", None))
    w_min = float(params.pop("w_min", 0.0))
    if params:
        raise ParameterError(
            f"elastodynamics-1d parameters: stored_energy, w_min; got {sorted(params)}")
    if w_min < 0:
        raise ParameterError(
            f"elastodynamics-1d strain range [{w_min}, inf) includes 0; "
            "w_min must be >= 0")
    # The physically meaningful strain domain (orientation-preserving
    # deformations) is not convex in general; the half line stands in for
    # it, so the convex flag is off and the extension path must be used
    # whenever mollified states could leave the range of the data.
    if w_min == 0.0:
        domain = StateDomain.half_space(0, convex=False, description="strain w > 0")
    else:
        domain = StateDomain.box([w_min, -np.inf], [np.inf, np.inf], convex=False,
                                 description=f"strain w > {w_min}")
    dW, d2W, d3W, Wfn = energy.dW, energy.d2W, energy.d3W, energy.W

    # states (w, v): strain and velocity; the kinematic row w_t = v_x is affine.
    def G(U):
        w, v = U[..., 0], U[..., 1]
        out = np.empty(U.shape[:-1] + (2, 2))
        out[..., 0, 0] = w
        out[..., 0, 1] = -v
        out[..., 1, 0] = v
        out[..., 1, 1] = -dW(w)
        return out

    def DG(U):
        w = U[..., 0]
        out = np.zeros(U.shape[:-1] + (2, 2, 2))
        out[..., 0, 0, 0] = 1.0
        out[..., 0, 1, 1] = -1.0
        out[..., 1, 0, 1] = 1.0
        out[..., 1, 1, 0] = -d2W(w)
        return out

    def B(U):
        w, v = U[..., 0], U[..., 1]
        return np.stack([dW(w), v], axis=-1)

    def DB(U):
        w = U[..., 0]
        out = np.zeros(U.shape[:-1] + (2, 2))
        out[..., 0, 0] = d2W(w)
        out[..., 1, 1] = 1.0
        return out

    def Q(U):
        w, v = U[..., 0], U[..., 1]
        return np.stack([0.5 * v * v + Wfn(w), -dW(w) * v], axis=-1)

    def DQ(U):
        w, v = U[..., 0], U[..., 1]
        out = np.empty(U.shape[:-1] + (2, 2))
        out[..., 0, 0] = dW(w)
        out[..., 0, 1] = v
        out[..., 1, 0] = -d2W(w) * v
        out[..., 1, 1] = -dW(w)
        return out

    return SystemSpec(name="elastodynamics-1d", n=2, k=1, domain=domain,
                      G=G, B=B, Q=Q, DG=DG, DB=DB, DQ=DQ,
                      affine_columns=frozenset({0}),
                      affine_rows=frozenset({0}))


def _make_euler_incompressible_2d(params: dict) -> SystemSpec:
    if params:
        raise ParameterError(
            f"euler-incompressible-2d takes no parameters, got {sorted(params)}")

    # states (p, u1, u2); the divergence constraint occupies row 0 and has
    # no temporal flux, so the system is not hyperbolic and p acts as a
    # multiplier state.
    def G(U):
        p, u1, u2 = U[..., 0], U[..., 1], U[..., 2]
        out = np.empty(U.shape[:-1] + (3, 3))
        out[..., 0, 0] = 0.0
        out[..., 0, 1] = u1
        out[..., 0, 2] = u2
        out[..., 1, 0] = u1
        out[..., 1, 1] = u1 * u1 + p
        out[..., 1, 2] = u1 * u2
        out[..., 2, 0] = u2
        out[..., 2, 1] = u2 * u1
        out[..., 2, 2] = u2 * u2 + p
        return out

    def DG(U):
        u1, u2 = U[..., 1], U[..., 2]
        out = np.zeros(U.shape[:-1] + (3, 3, 3))
        out[..., 0, 1, 1] = 1.0
        out[..., 0, 2, 2] = 1.0
        out[..., 1, 0, 1] = 1.0
        out[..., 1, 1, 0] = 1.0
        out[..., 1, 1, 1] = 2.0 * u1
        out[..., 1, 2, 1] = u2
        out[..., 1, 2, 2] = u1
        out[..., 2, 0, 2] = 1.0
        out[..., 2, 1, 1] = u2
        out[..., 2, 1, 2] = u1
        out[..., 2, 2, 0] = 1.0
        out[..., 2, 2, 2] = 2.0 * u2
        return out

    def B(U):
        p, u1, u2 = U[..., 0], U[..., 1], U[..., 2]
        return np.stack([p - 0.5 * (u1 * u1 + u2 * u2), u1, u2], axis=-1)

    def DB(U):
        u1, u2 = U[..., 1], U[..., 2]
        out = np.zeros(U.shape[:-1] + (3, 3))
        out[..., 0, 0] = 1.0
        out[..., 0, 1] = -u1
        out[..., 0, 2] = -u2
        out[..., 1, 1] = 1.0
        out[..., 2, 2] = 1.0
        return out

    def Q(U):
        p, u1, u2 = U[..., 0], U[..., 1], U[..., 2]
        e = 0.5 * (u1 * u1 + u2 * u2)
        return np.stack([e, (e + p) * u1, (e + p) * u2], axis=-1)

    def DQ(U):
        p, u1, u2 = U[..., 0], U[..., 1], U[..., 2]
        e = 0.5 * (u1 * u1 + u2 * u2)
        out = np.zeros(U.shape[:-1] + (3, 3))
        out[..., 0, 1] = u1
        out[..., 0, 2] = u2
        out[..., 1, 0] = u1
        out[..., 1, 1] = e + p + u1 * u1
        out[..., 1, 2] = u2 * u1
        out[..., 2, 0] = u2
        out[..., 2, 1] = u1 * u2
        out[..., 2, 2] = e + p + u2 * u2
        return out

    return SystemSpec(name="euler-incompressible-2d", n=3, k=2,
                      domain=StateDomain.all_space(), G=G, B=B, Q=Q,
                      DG=DG, DB=DB, DQ=DQ,
                      affine_columns=frozenset({0}),
                      affine_rows=frozenset({0}))


def _make_mhd_incompressible_1d(params: dict) -> SystemSpec:
    if params:
        raise ParameterError(
            f"mhd-incompressible-1d takes no parameters, got {sorted(params)}")

    # 1-d reduction of incompressible ideal MHD: fields depend on (t, x1)
    # only.  States (p, q, u1, u2, h1, h2) where q is a spectator filling
    # the row freed by the magnetic divergence constraint; no flux entry
    # depends on q, which keeps the flux matrix square without affecting
    # the companion identity.
    def G(U):
        u1, u2 = U[..., 2], U[..., 3]
        h1, h2 = U[..., 4], U[..., 5]
        p = U[..., 0]
        out = np.zeros(U.shape[:-1] + (6, 2))
        out[..., 0, 1] = u1
        out[..., 1, 1] = h1
        out[..., 2, 0] = u1
        out[..., 2, 1] = u1 * u1 + p + 0.5 * (h2 * h2 - h1 * h1)
        out[..., 3, 0] = u2
        out[..., 3, 1] = u2 * u1 - h2 * h1
        out[..., 4, 0] = h1
        out[..., 5, 0] = h2
        out[..., 5, 1] = h2 * u1 - u2 * h1
        return out

    def DG(U):
        u1, u2 = U[..., 2], U[..., 3]
        h1, h2 = U[..., 4], U[..., 5]
        out = np.zeros(U.shape[:-1] + (6, 2, 6))
        out[..., 0, 1, 2] = 1.0
        out[..., 1, 1, 4] = 1.0
        out[..., 2, 0, 2] = 1.0
        out[..., 2, 1, 0] = 1.0
        out[..., 2, 1, 2] = 2.0 * u1
        out[..., 2, 1, 4] = -h1
        out[..., 2, 1, 5] = h2
        out[..., 3, 0, 3] = 1.0
        out[..., 3, 1, 2] = u2
        out[..., 3, 1, 3] = u1
        out[..., 3, 1, 4] = -h2
        out[..., 3, 1, 5] = -h1
        out[..., 4, 0, 4] = 1.0
        out[..., 5, 0, 5] = 1.0
        out[..., 5, 1, 2] = h2
        out[..., 5, 1, 3] = -h1
        out[..., 5, 1, 4] = -u2
        out[..., 5, 1, 5] = u1
        return out

    def B(U):
        p = U[..., 0]
        u1, u2 = U[..., 2], U[..., 3]
        h1, h2 = U[..., 4], U[..., 5]
        return np.stack([p - 0.5 * (u1 * u1 + u2 * u2),
                         u1 * h1 + u2 * h2, u1, u2, h1, h2], axis=-1)

    def DB(U):
        u1, u2 = U[..., 2], U[..., 3]
        h1, h2 = U[..., 4], U[..., 5]
        out = np.zeros(U.shape[:-1] + (6, 6))
        out[..., 0, 0] = 1.0
        out[..., 0, 2] = -u1
        out[..., 0, 3] = -u2
        out[..., 1, 2] = h1
        out[..., 1, 3] = h2
        out[..., 1, 4] = u1
        out[..., 1, 5] = u2
        for i in range(2, 6):
            out[..., i, i] = 1.0
        return out

    def Q(U):
        p = U[..., 0]
        u1, u2 = U[..., 2], U[..., 3]
        h1, h2 = U[..., 4], U[..., 5]
        eu = 0.5 * (u1 * u1 + u2 * u2)
        eh = 0.5 * (h1 * h1 + h2 * h2)
        flux = (eu + p + 2.0 * eh) * u1 - (u1 * h1 + u2 * h2) * h1
        return np.stack([eu + eh, flux], axis=-1)

    def DQ(U):
        p = U[..., 0]
        u1, u2 = U[..., 2], U[..., 3]
        h1, h2 = U[..., 4], U[..., 5]
        eu = 0.5 * (u1 * u1 + u2 * u2)
        out = np.zeros(U.shape[:-1] + (2, 6))
        out[..., 0, 2] = u1
        out[..., 0, 3] = u2
        out[..., 0, 4] = h1
        out[..., 0, 5] = h2
        out[..., 1, 0] = u1
        out[..., 1, 2] = eu + p + h1 * h1 + h2 * h2 + u1 * u1 - h1 * h1
        out[..., 1, 3] = u2 * u1 - h2 * h1
        out[..., 1, 4] = -u2 * h2
        out[..., 1, 5] = 2.0 * h2 * u1 - u2 * h1
        return out

    return SystemSpec(name="mhd-incompressible-1d", n=6, k=1,
                      domain=StateDomain.all_space(), G=G, B=B, Q=Q,
                      DG=DG, DB=DB, DQ=DQ,
                      affine_columns=frozenset({0}),
                      affine_rows=frozenset({0, 1, 4}))


_BUILTIN_FACTORIES = {
    "burgers": _make_burgers,
    "euler-compressible-1d": _make_euler_velocity,
    "euler-compressible-m-form-1d": _make_euler_m_form,
    "elastodynamics-1d": _make_elastodynamics,
    "euler-incompressible-2d": _make_euler_incompressible_2d,
    "mhd-incompressible-1d": _make_mhd_incompressible_1d,
}


def make_builtin(name: str, params: Optional[dict] = None) -> SystemSpec:
    """Construct one of the built-in systems by name.

    params selects constitutive laws from fixed catalogues (pressure law
    for the Euler forms, stored energy for elastodynamics) plus optional
    range restrictions; see the individual factories for the accepted keys.
    """
    if name not in _BUILTIN_FACTORIES:
        raise ParameterError(
            f"unknown system {name!r}; available: {sorted(_BUILTIN_FACTORIES)}")
    return _BUILTIN_FACTORIES[name](dict(params or {}))


# ---------------------------------------------------------------------------
# compact-range extension


def extend_to_compact_range(system: SystemSpec, range_box, delta: float) -> SystemSpec:
    """Replace a system by a globally defined one that agrees near a range box.

    range_box = (lower, upper) must satisfy: the 2*delta enlargement (in
    the per-component sense) lies inside the state domain.  The returned
    system multiplies each evaluator by a C-infinity cutoff that equals 1
    on the delta enlargement and 0 outside the 2*delta enlargement;
    arguments are clamped to the 2*delta box before the original
    evaluators are applied, so every evaluation is legal.  The returned
    domain is all of state space (convex), and the affine annotations are
    dropped because the cutoff destroys global affinity.
    """
    lower, upper = (np.asarray(b, dtype=float) for b in range_box)
    if lower.shape != (system.n,) or upper.shape != (system.n,):
        raise ParameterError(
            f"range_box bounds must have shape ({system.n},)")
    if not np.all(lower < upper):
        raise ParameterError("range_box is empty")
    if delta <= 0:
        raise ParameterError(f"delta must be positive, got {delta}")

    lo2, hi2 = lower - 2.0 * delta, upper + 2.0 * delta
    _check_box_inside(system.domain, lo2, hi2, delta)

    def cutoff(U):
        """chi(U) in [0, 1] with per-component factors; also the gradient."""
        below = lower - U
        above = U - upper
        dist = np.maximum(np.maximum(below, above), 0.0)
        # s((d - delta)/delta): 0 until K^delta, 1 beyond K^{2 delta}
        t = (dist - delta) / delta
        factors = 1.0 - smoothstep(t)
        chi = np.prod(factors, axis=-1)
        sign = np.where(below > 0, -1.0, np.where(above > 0, 1.0, 0.0))
        dfactors = -smoothstep_deriv(t) / delta * sign
        # grad_m chi = dfactors_m * prod_{i != m} factors_i
        grad = np.empty_like(factors)
        for m in range(factors.shape[-1]):
            others = np.prod(np.delete(factors, m, axis=-1), axis=-1)
            grad[..., m] = dfactors[..., m] * others
        return chi, grad

    def clamp(U):
        return np.clip(U, lo2, hi2)

    def wrap_value(f, out_rank):
        def g(U):
            U = np.asarray(U, dtype=float)
            chi, _ = cutoff(U)
            val = f(clamp(U))
            return val * chi.reshape(chi.shape + (1,) * out_rank)
        return g

    def wrap_jacobian(f, df, out_rank):
        def g(U):
            U = np.asarray(U, dtype=float)
            chi, grad = cutoff(U)
            Uc = clamp(U)
            val = f(Uc)
            jac = df(Uc)
            inside = ((U >= lo2) & (U <= hi2)).astype(float)
            pad = (1,) * out_rank
            out = (val[..., None] * grad.reshape(grad.shape[:-1] + pad + (system.n,))
                   + chi.reshape(chi.shape + pad + (1,)) * jac
                   * inside.reshape(inside.shape[:-1] + pad + (system.n,)))
            return out
        return g

    ext = replace(
        system,
        name=system.name + "-compact",
        domain=StateDomain.all_space(),
        G=wrap_value(system.G, 2),
        B=wrap_value(system.B, 1),
        Q=wrap_value(system.Q, 1),
        DG=wrap_jacobian(system.G, system.DG, 2) if system.DG else None,
        DB=wrap_jacobian(system.B, system.DB, 1) if system.DB else None,
        DQ=wrap_jacobian(system.Q, system.DQ, 1) if system.DQ else None,
        affine_columns=frozenset(),
        affine_rows=frozenset(),
    )
    return ext


def _check_box_inside(domain: StateDomain, lo2, hi2, delta: float) -> None:
    n = lo2.size
    if domain.kind == "all-space":
        return
    if domain.kind == "box":
        dlo = np.asarray(domain.lower)
        dhi = np.asarray(domain.upper)
        for i in range(n):
            if lo2[i] <= dlo[i]:
                raise GeometryError(
                    f"2*delta enlargement exits the domain at the lower face of "
                    f"component {i}: {lo2[i]:g} <= {dlo[i]:g}")
            if hi2[i] >= dhi[i]:
                raise GeometryError(
                    f"2*delta enlargement exits the domain at the upper face of "
                    f"component {i}: {hi2[i]:g} >= {dhi[i]:g}")
        return
    if domain.kind == "half-space-positive-coordinate":
        c = domain.coordinate
        if lo2[c] <= 0.0:
            raise GeometryError(
                f"2*delta enlargement exits the domain at the lower face of "
                f"component {c}: {lo2[c]:g} <= 0")
        return
    # predicate domains admit no exact geometric test; check the corners
    # and the center of the enlarged box.
    corners = np.array(np.meshgrid(*zip(lo2, hi2), indexing="ij"),
                       dtype=float).reshape(n, -1).T
    probes = np.vstack([corners, 0.5 * (lo2 + hi2)])
    ok = domain.contains(probes)
    if not bool(np.all(ok)):
        bad = probes[~ok][0]
        raise GeometryError(
            f"2*delta enlargement exits the predicate domain near state "
            f"{np.array2string(bad, precision=6)}")
