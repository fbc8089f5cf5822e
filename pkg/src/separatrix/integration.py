"""Trajectory integration and attractor classification.

Built-in models route basin classification through the selected stepper
backend (compiled when available). Full trajectories and user-supplied
models go through a generic Dormand-Prince 5(4) loop with the same
step-size control and capture rules.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import backend
from .models import DynSystem, Equilibrium

DIVERGE_NORM = 1.0e6
MIN_STEP = 1.0e-14

# Dormand-Prince 5(4) tableau (stage weights for the 5th order solution
# and the embedded error estimate).
_A = (
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200,
               22 / 525, -1 / 40])


class IntegrationError(RuntimeError):
    """Step-size underflow or invalid state during integration."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = None if state is None else np.asarray(state)


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and termination settings for trajectory integration."""

    atol: float = 1e-10
    rtol: float = 1e-8
    t_max: float = 1000.0
    eps_attr: float = 1e-3
    dwell: int = 10
    max_steps: int = 1_000_000

    def __post_init__(self):
        if min(self.atol, self.rtol, self.t_max, self.eps_attr) <= 0:
            raise ValueError("tolerances, t_max and eps_attr must be positive")


@dataclass(frozen=True)
class BasinLabel:
    """Outcome of a basin classification.

    ``attractor`` is the identity tag of the capturing equilibrium, or
    None when the trajectory was still undecided at t_max, diverged, or
    the integrator failed (see ``diagnostic``).
    """

    attractor: str | None
    diagnostic: str = ""

    @property
    def converged(self) -> bool:
        return self.attractor is not None


_STATUS_DIAG = {
    backend.stepper.__dict__.get("UNDECIDED", -1): "t_max reached",
    -1: "t_max reached",
    -2: "trajectory diverged",
    -3: "step-size underflow",
    -4: "state left the nonnegative orthant beyond clamping tolerance",
}


def _attractor_array(attractors: Sequence[Equilibrium], dim):
    if not attractors:
        raise ValueError("need at least one attractor")
    arr = np.empty((len(attractors), dim))
    for j, eq in enumerate(attractors):
        if eq.stability != "stable":
            raise ValueError(f"attractor {eq.identity} is not tagged stable")
        arr[j] = eq.location
    return arr


def classify_basin(system: DynSystem, ic, attractors: Sequence[Equilibrium],
                   cfg: IntegratorConfig = IntegratorConfig()) -> BasinLabel:
    """Which stable attractor the trajectory from ``ic`` converges to.

    A trajectory is captured once it stays inside the eps_attr-ball of
    one attractor for ``cfg.dwell`` consecutive accepted steps. Anything
    else (time-out, divergence, integration failure) is Undecided.
    """
    ic = np.ascontiguousarray(ic, dtype=float)
    arr = np.ascontiguousarray(_attractor_array(attractors, system.dim))
    if system.kernel_id is not None:
        status = backend.classify_kernel(
            system.kernel_id, np.ascontiguousarray(system.kernel_params),
            ic, arr, cfg.atol, cfg.rtol, cfg.t_max, cfg.eps_attr,
            cfg.dwell, cfg.max_steps)
    else:
        status = _classify_generic(system, ic, arr, cfg)
    if status >= 0:
        return BasinLabel(attractors[status].identity)
    return BasinLabel(None, _STATUS_DIAG.get(status, f"status {status}"))


def integrate(system: DynSystem, ic, cfg: IntegratorConfig = IntegratorConfig(),
              attractors: Sequence[Equilibrium] | None = None):
    """Integrate a trajectory, returning a list of (t, state) samples.

    Terminates at t_max, on attractor capture (when ``attractors`` are
    given), or on divergence. Raises IntegrationError on step underflow.
    """
    ic = np.asarray(ic, dtype=float)
    if ic.shape != (system.dim,) or not np.all(np.isfinite(ic)):
        raise ValueError(f"initial condition must be a finite {system.dim}-vector")
    att = None if attractors is None else _attractor_array(attractors, system.dim)
    traj = []
    status = _step_loop(system, ic, att, cfg, record=traj)
    if status == -3:
        t, y = traj[-1]
        raise IntegrationError("step-size underflow", t=t, state=y)
    return traj


def _classify_generic(system, ic, att, cfg):
    return _step_loop(system, ic, att, cfg, record=None)


def _step_loop(system, ic, att, cfg, record):
    """Generic adaptive DP45 loop; mirrors the backend steppers."""
    rhs = system.rhs
    dim = ic.size
    mask = np.array(system.clamp_mask if system.clamp_mask is not None
                    else (False,) * dim)
    y = ic.copy()
    k = np.empty((7, dim))
    k[0] = rhs(y)
    h = min(1e-2 * (1.0 + np.linalg.norm(y)) / (1.0 + np.linalg.norm(k[0])),
            cfg.t_max)
    t = 0.0
    if record is not None:
        record.append((t, y.copy()))
    streak, last, steps = 0, -1, 0
    while steps < cfg.max_steps:
        if t >= cfg.t_max:
            return -1
        h = min(h, cfg.t_max - t)
        for s, row in enumerate(_A, start=1):
            k[s] = rhs(y + h * (np.asarray(row) @ k[:s]))
        ynew = y + h * (_B @ k[:7])
        k[6] = rhs(ynew)
        err = h * (_E @ k)
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(ynew))
        errnorm = np.sqrt(np.mean((err / scale) ** 2))

        if errnorm <= 1.0:
            t += h
            steps += 1
            neg = mask & (ynew < 0)
            if np.any(neg):
                if np.any(ynew[neg] < -10.0 * scale[neg]):
                    if record is not None:
                        record.append((t, ynew.copy()))
                    return -4
                ynew[neg] = 0.0
                k[0] = rhs(ynew)
            else:
                k[0] = k[6]
            y = ynew
            if record is not None:
                record.append((t, y.copy()))
            if np.linalg.norm(y) > DIVERGE_NORM:
                return -2
            if att is not None:
                d = np.linalg.norm(att - y, axis=1)
                hit = int(np.argmin(d)) if np.any(d <= cfg.eps_attr) else -1
                if hit >= 0 and d[hit] <= cfg.eps_attr:
                    streak = streak + 1 if hit == last else 1
                    last = hit
                    if streak >= cfg.dwell:
                        return hit
                else:
                    streak, last = 0, -1

        fac = 5.0 if errnorm == 0.0 else min(5.0, max(0.2, 0.9 * errnorm ** -0.2))
        h *= fac
        if h < MIN_STEP:
            return -3
    return -1


def trajectory_to_csv(traj, path):
    """Dump a trajectory as CSV rows of t followed by state components."""
    with open(path, "w", newline="") as fh:
        dim = traj[0][1].size
        fh.write("t," + ",".join(f"x{i}" for i in range(dim)) + "\n")
        for t, y in traj:
            fh.write(",".join(repr(float(v)) for v in (t, *y)) + "\n")
