"""Reference dynamical systems, their equilibria and stability predicates.

Two built-in models are provided: a 2D epidemic model with a strong Allee
effect in the host population, and a 3D three-species competition model.
Both admit several coexisting stable equilibria for suitable parameter
values, which is what makes their basin boundaries worth reconstructing.
User models plug in through :class:`DynSystem`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

EPS_EIG = 1e-8     # |Re lambda| below this counts as marginal
EPS_DEN = 1e-12    # relative threshold for degenerate quotient denominators

STABLE = "stable"
UNSTABLE = "unstable"
SADDLE = "saddle"
MARGINAL = "marginal"


class ModelError(ValueError):
    """Invalid model parameters or states."""


def _require_finite(x, what):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ModelError(f"{what} must be finite, got {x!r}")
    return arr


@dataclass(frozen=True)
class HilkerParams:
    """Parameters of the 2D host-disease model with Allee effect."""

    r: float
    u: float
    d: float
    alpha: float
    sigma: float

    def __post_init__(self):
        _require_finite([self.r, self.u, self.d, self.alpha, self.sigma],
                        "HilkerParams fields")
        if not 0.0 < self.u < 1.0:
            raise ModelError(f"Allee threshold u must lie in (0, 1), got {self.u}")

    def as_array(self):
        return np.array([self.r, self.u, self.d, self.alpha, self.sigma],
                        dtype=float)


@dataclass(frozen=True)
class CompetitionParams:
    """Parameters of the 3D three-species competition model.

    p, q, r are growth rates, a, b, c, e, f, g competition rates and
    u, v, w carrying capacities. All must be nonnegative, capacities
    strictly positive.
    """

    p: float
    q: float
    r: float
    a: float
    b: float
    c: float
    e: float
    f: float
    g: float
    u: float
    v: float
    w: float

    def __post_init__(self):
        vals = self.as_array()
        _require_finite(vals, "CompetitionParams fields")
        if np.any(vals < 0):
            raise ModelError("competition parameters must be nonnegative")
        if min(self.u, self.v, self.w) <= 0:
            raise ModelError("carrying capacities u, v, w must be positive")

    def as_array(self):
        return np.array([self.p, self.q, self.r, self.a, self.b, self.c,
                         self.e, self.f, self.g, self.u, self.v, self.w],
                        dtype=float)


@dataclass
class Equilibrium:
    """A candidate equilibrium with feasibility and stability metadata."""

    identity: str
    location: np.ndarray | None
    feasible: bool = False
    degenerate: bool = False
    stability: str | None = None
    eigenvalues: np.ndarray | None = None

    def __post_init__(self):
        if self.location is not None:
            self.location = np.asarray(self.location, dtype=float)
            if self.feasible and np.any(self.location < 0):
                raise ModelError(
                    f"{self.identity}: feasible equilibrium with negative coordinates")


@dataclass(frozen=True)
class DynSystem:
    """A dynamical system the pipeline can operate on.

    ``rhs`` maps a state vector to its time derivative. ``jacobian`` and
    ``equilibria`` are optional for user models; the built-in models supply
    both. ``kernel_id``/``kernel_params`` identify a compiled fast path for
    trajectory classification; user models fall back to the generic
    integrator. ``clamp_mask`` marks components whose nonnegativity is a
    true invariant of the flow (small integrator undershoot is clamped).
    """

    name: str
    dim: int
    rhs: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    equilibria: Callable[[], list[Equilibrium]] | None = None
    kernel_id: int | None = None
    kernel_params: np.ndarray | None = field(default=None, compare=False)
    clamp_mask: tuple[bool, ...] | None = None


def hilker_rhs(state, params: HilkerParams) -> np.ndarray:
    """Time derivative (dP/dt, dI/dt) of the 2D epidemic model."""
    s = _require_finite(state, "state")
    P, I = s
    dP = params.r * (1.0 - P) * (P - params.u) * P - params.alpha * I
    dI = (-params.alpha - params.d - params.r * params.u
          + (params.sigma - 1.0) * P - params.sigma * I) * I
    return np.array([dP, dI])


def hilker_jacobian(state, params: HilkerParams) -> np.ndarray:
    s = _require_finite(state, "state")
    P, I = s
    r, u, al, sg = params.r, params.u, params.alpha, params.sigma
    j11 = r * (-3.0 * P * P + 2.0 * (1.0 + u) * P - u)
    j12 = -al
    j21 = (sg - 1.0) * I
    j22 = -al - params.d - r * u + (sg - 1.0) * P - 2.0 * sg * I
    return np.array([[j11, j12], [j21, j22]])


def competition_rhs(state, params: CompetitionParams) -> np.ndarray:
    """Time derivative (dx/dt, dy/dt, dz/dt) of the competition model."""
    s = _require_finite(state, "state")
    x, y, z = s
    p = params
    dx = p.p * (1.0 - x / p.u) * x - p.a * x * y - p.b * x * z
    dy = p.q * (1.0 - y / p.v) * y - p.c * x * y - p.e * y * z
    dz = p.r * (1.0 - z / p.w) * z - p.f * x * z - p.g * y * z
    return np.array([dx, dy, dz])


def competition_jacobian(state, params: CompetitionParams) -> np.ndarray:
    s = _require_finite(state, "state")
    x, y, z = s
    p = params
    abar = p.p * (1.0 - 2.0 * x / p.u) - p.a * y - p.b * z
    bbar = p.q * (1.0 - 2.0 * y / p.v) - p.c * x - p.e * z
    cbar = p.r * (1.0 - 2.0 * z / p.w) - p.f * x - p.g * y
    return np.array([
        [abar, -p.a * x, -p.b * x],
        [-p.c * y, bbar, -p.e * y],
        [-p.f * z, -p.g * z, cbar],
    ])


def _quotient_equilibrium(identity, nums, den, scale) -> Equilibrium:
    """Build a two-population equilibrium from numerators over a shared
    denominator, flagging near-zero denominators as degenerate."""
    if abs(den) <= EPS_DEN * max(scale, 1.0):
        return Equilibrium(identity, None, feasible=False, degenerate=True)
    loc = np.array([n / den for n in nums])
    feasible = bool(np.all(np.isfinite(loc)) and np.all(loc >= 0))
    return Equilibrium(identity, loc, feasible=feasible)


def competition_equilibria(params: CompetitionParams) -> list[Equilibrium]:
    """All eight closed-form equilibrium candidates of the competition model.

    Infeasible candidates (negative coordinate) are returned flagged, not
    omitted. Quotient candidates whose denominator vanishes are flagged
    degenerate with no location.
    """
    p, q, r = params.p, params.q, params.r
    a, b, c = params.a, params.b, params.c
    e, f, g = params.e, params.f, params.g
    u, v, w = params.u, params.v, params.w

    out = [
        Equilibrium("E0", np.zeros(3), feasible=True),
        Equilibrium("E1", np.array([u, 0.0, 0.0]), feasible=True),
        Equilibrium("E2", np.array([0.0, v, 0.0]), feasible=True),
        Equilibrium("E3", np.array([0.0, 0.0, w]), feasible=True),
    ]

    d4 = c * u * v * a - p * q
    out.append(_quotient_equilibrium(
        "E4", [u * q * (a * v - p), p * v * (c * u - q), 0.0], d4,
        scale=abs(c * u * v * a) + abs(p * q)))
    d5 = f * u * w * b - r * p
    out.append(_quotient_equilibrium(
        "E5", [u * r * (b * w - p), 0.0, w * p * (f * u - r)], d5,
        scale=abs(f * u * w * b) + abs(r * p)))
    d6 = g * v * w * e - q * r
    out.append(_quotient_equilibrium(
        "E6", [0.0, v * r * (w * e - q), w * q * (v * g - r)], d6,
        scale=abs(g * v * w * e) + abs(q * r)))

    # Coexistence point: each coordinate has its own denominator.
    nx = u * (p * (g * v * w * e - q * r) - a * v * r * (w * e - q)
              - b * w * q * (v * g - r))
    dx = (p * (g * v * w * e - q * r) + u * v * a * (r * c - f * w * e)
          + u * w * b * (f * q - g * c * v))
    ny = v * (q * (f * u * w * b - p * r) - r * c * u * (w * b - p)
              - p * e * w * (f * u - r))
    dy = (q * (f * u * w * b - p * r) + c * u * v * (r * a - g * w * b)
          + e * v * w * (g * p - a * f * u))
    nz = w * (r * (c * u * v * a - p * q) - g * p * v * (c * u - q)
              - u * f * q * (v * a - p))
    dz = (r * (c * u * v * a - p * q) + b * w * u * (f * q - v * c * g)
          + e * v * w * (g * p - f * u * a))
    scale7 = max(abs(dx), abs(dy), abs(dz), 1.0)
    if min(abs(dx), abs(dy), abs(dz)) <= EPS_DEN * scale7:
        out.append(Equilibrium("E7", None, feasible=False, degenerate=True))
    else:
        loc = np.array([nx / dx, ny / dy, nz / dz])
        feasible = bool(np.all(np.isfinite(loc)) and np.all(loc >= 0))
        out.append(Equilibrium("E7", loc, feasible=feasible))
    return out


def hilker_equilibria(params: HilkerParams) -> list[Equilibrium]:
    """Boundary equilibria of the 2D model plus endemic roots.

    Endemic candidates come from substituting the infected nullcline
    I(P) = (-alpha - d - r u + (sigma-1) P) / sigma into the host equation
    and solving the resulting cubic in P. Roots with P in (0, 1] and I > 0
    are kept; an empty endemic set is a valid outcome.
    """
    r, u, d, al, sg = params.r, params.u, params.d, params.alpha, params.sigma
    out = [
        Equilibrium("E0", np.zeros(2), feasible=True),
        Equilibrium("E1", np.array([1.0, 0.0]), feasible=True),
        Equilibrium("E2", np.array([u, 0.0]), feasible=True),
    ]
    # r(1-P)(P-u)P - (alpha/sigma)(k0 + k1 P) = 0 with I = (k0 + k1 P)/sigma
    k0 = -al - d - r * u
    k1 = sg - 1.0
    # expand r(1-P)(P-u)P = r(-P^3 + (1+u)P^2 - uP)
    poly = np.array([
        -r,
        r * (1.0 + u),
        -r * u - al * k1 / sg,
        -al * k0 / sg,
    ])
    idx = 4
    for root in np.roots(poly):
        if abs(root.imag) > 1e-10:
            continue
        P = float(root.real)
        I = (k0 + k1 * P) / sg
        if 0.0 < P <= 1.0 and I > 0.0:
            out.append(Equilibrium(f"E{idx}", np.array([P, I]), feasible=True))
            idx += 1
    return out


def classify(eq: Equilibrium, system: DynSystem) -> Equilibrium:
    """Fill in eigenvalues and the stability tag of an equilibrium.

    Stability is decided from the real parts of the Jacobian spectrum with
    tolerance EPS_EIG; an eigen-solver failure downgrades to marginal.
    """
    if eq.location is None:
        raise ModelError(f"{eq.identity}: cannot classify without a location")
    if system.jacobian is None:
        jac = _fd_jacobian(system.rhs, eq.location)
    else:
        jac = system.jacobian(eq.location)
    try:
        eig = np.linalg.eigvals(jac)
    except np.linalg.LinAlgError:
        eq.eigenvalues = None
        eq.stability = MARGINAL
        return eq
    re = eig.real
    eq.eigenvalues = eig
    if np.any(np.abs(re) <= EPS_EIG):
        eq.stability = MARGINAL
    elif np.all(re < 0):
        eq.stability = STABLE
    elif np.all(re > 0):
        eq.stability = UNSTABLE
    else:
        eq.stability = SADDLE
    return eq


def _fd_jacobian(rhs, x0, h=1e-6):
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    jac = np.empty((n, n))
    for k in range(n):
        step = h * max(1.0, abs(x0[k]))
        xp, xm = x0.copy(), x0.copy()
        xp[k] += step
        xm[k] -= step
        jac[:, k] = (rhs(xp) - rhs(xm)) / (2.0 * step)
    return jac


@dataclass(frozen=True)
class StabilityReport:
    """Literal evaluation of the analytic stability table and the
    feasibility disjunctions of the two-population equilibria."""

    e0_stable: bool
    e1_stable: bool
    e2_stable: bool
    e3_stable: bool
    e4_stable: bool
    e5_stable: bool
    e6_stable: bool
    e4_feasible: bool
    e5_feasible: bool
    e6_feasible: bool

    def stable_set(self) -> set[str]:
        return {f"E{i}" for i, flag in enumerate([
            self.e0_stable, self.e1_stable, self.e2_stable, self.e3_stable,
            self.e4_stable, self.e5_stable, self.e6_stable]) if flag}


def stability_report(params: CompetitionParams) -> StabilityReport:
    p, q, r = params.p, params.q, params.r
    a, b, c = params.a, params.b, params.c
    e, f, g = params.e, params.f, params.g
    u, v, w = params.u, params.v, params.w
    return StabilityReport(
        e0_stable=False,
        e1_stable=(r < f * u) and (q < c * u),
        e2_stable=(r < v * g) and (p < a * v),
        e3_stable=(q < e * w) and (p < b * w),
        e4_stable=(q > c * u) and (p > a * v)
        and (r * (c * u * v * a - p * q)
             > p * v * g * (c * u - q) + u * f * q * (v * a - p)),
        e5_stable=(p > b * w) and (r > f * u)
        and (q * (f * u * w * b - p * r)
             > w * p * e * (f * u - r) + r * c * u * (w * b - p)),
        e6_stable=(q > w * e) and (r > v * g)
        and (p * (g * v * w * e - r * q)
             > b * w * q * (v * g - r) + a * v * r * (w * e - q)),
        e4_feasible=((q < c * u and p < a * v) or (q > c * u and p > a * v)),
        e5_feasible=((p < b * w and r < f * u) or (p > b * w and r > f * u)),
        e6_feasible=((q < w * e and r < v * g) or (q > w * e and r > v * g)),
    )


def hilker_system(params: HilkerParams) -> DynSystem:
    return DynSystem(
        name="hilker",
        dim=2,
        rhs=lambda s: hilker_rhs(s, params),
        jacobian=lambda s: hilker_jacobian(s, params),
        equilibria=lambda: hilker_equilibria(params),
        kernel_id=0,
        kernel_params=params.as_array(),
        # P genuinely leaves the nonnegative orthant from high-infection
        # states; only I = 0 is an invariant manifold.
        clamp_mask=(False, True),
    )


def competition_system(params: CompetitionParams) -> DynSystem:
    return DynSystem(
        name="competition",
        dim=3,
        rhs=lambda s: competition_rhs(s, params),
        jacobian=lambda s: competition_jacobian(s, params),
        equilibria=lambda: competition_equilibria(params),
        kernel_id=1,
        kernel_params=params.as_array(),
        clamp_mask=(True, True, True),
    )


PRESET_PARAMS = {
    "hilker-ref": HilkerParams(r=0.2, u=0.1, d=0.25, alpha=0.1, sigma=2.5),
    "competition-2eq": CompetitionParams(p=1, q=1, r=2, a=1, b=2, c=0.3,
                                         e=1, f=3, g=2, u=1, v=0.2, w=9.5),
    "competition-3eq": CompetitionParams(p=1, q=2, r=2, a=2, b=5, c=3,
                                         e=7, f=3, g=5, u=3, v=2, w=2),
}


def preset_system(name: str) -> DynSystem:
    try:
        params = PRESET_PARAMS[name]
    except KeyError:
        raise ModelError(
            f"unknown preset {name!r}; available: {sorted(PRESET_PARAMS)}") from None
    if isinstance(params, HilkerParams):
        return hilker_system(params)
    return competition_system(params)


def classified_equilibria(system: DynSystem) -> list[Equilibrium]:
    """Closed-form equilibria of a system with stability tags filled in."""
    if system.equilibria is None:
        raise ModelError(f"system {system.name!r} has no equilibrium list")
    out = []
    for eq in system.equilibria():
        if eq.location is not None:
            classify(eq, system)
        out.append(eq)
    return out


def stable_attractors(system: DynSystem) -> list[Equilibrium]:
    return [eq for eq in classified_equilibria(system)
            if eq.feasible and eq.stability == STABLE]
