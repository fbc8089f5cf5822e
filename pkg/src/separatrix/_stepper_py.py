"""Pure-Python basin-classification stepper.

Twin of the compiled module ``separatrix._speedups``: same Dormand-Prince
5(4) embedded pair, same step-size control, same attractor-capture and
clamping rules, so both backends produce the same labels. The compiled
module is preferred at import time (see ``separatrix.backend``); this one
is the fallback and the reference for the benchmark.
"""
from __future__ import annotations

import math

BACKEND = "python"

# Classification status codes shared by both backends.
CONVERGED = 0      # >= 0 is the attractor index
UNDECIDED = -1
DIVERGED = -2
STEP_UNDERFLOW = -3
NEGATIVE_STATE = -4

_DIVERGE_NORM = 1.0e6
_MIN_STEP = 1.0e-14

# Dormand-Prince 5(4) tableau.
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                           -2187.0 / 6784.0, 11.0 / 84.0)
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0,
                                71.0 / 1920.0, -17253.0 / 339200.0,
                                22.0 / 525.0, -1.0 / 40.0)


def _rhs(model, par, y, out):
    if model == 0:
        P, I = y[0], y[1]
        r, u, d, alpha, sigma = par[0], par[1], par[2], par[3], par[4]
        out[0] = r * (1.0 - P) * (P - u) * P - alpha * I
        out[1] = (-alpha - d - r * u + (sigma - 1.0) * P - sigma * I) * I
    else:
        x, y1, z = y[0], y[1], y[2]
        p, q, r = par[0], par[1], par[2]
        a, b, c = par[3], par[4], par[5]
        e, f, g = par[6], par[7], par[8]
        u, v, w = par[9], par[10], par[11]
        out[0] = p * (1.0 - x / u) * x - a * x * y1 - b * x * z
        out[1] = q * (1.0 - y1 / v) * y1 - c * x * y1 - e * y1 * z
        out[2] = r * (1.0 - z / w) * z - f * x * z - g * y1 * z


def _clamp_mask(model):
    # Components for which nonnegativity is an invariant of the flow.
    return (0, 1) if model == 0 else (1, 1, 1)


def classify_kernel(model, par, ic, attractors, atol, rtol, tmax,
                    eps_attr, dwell, max_steps):
    """Integrate from ``ic`` and report which attractor captures it.

    Returns the attractor index on capture, else one of the negative
    status codes above.
    """
    dim = 2 if model == 0 else 3
    n_att = len(attractors)
    y = [float(ic[i]) for i in range(dim)]
    mask = _clamp_mask(model)

    k1 = [0.0] * dim
    k2 = [0.0] * dim
    k3 = [0.0] * dim
    k4 = [0.0] * dim
    k5 = [0.0] * dim
    k6 = [0.0] * dim
    k7 = [0.0] * dim
    ytmp = [0.0] * dim
    ynew = [0.0] * dim

    _rhs(model, par, y, k1)
    d0 = math.sqrt(sum(c * c for c in y))
    d1 = math.sqrt(sum(c * c for c in k1))
    h = min(1.0e-2 * (1.0 + d0) / (1.0 + d1), tmax)

    t = 0.0
    streak = 0
    last = -1
    steps = 0
    while steps < max_steps:
        if t >= tmax:
            return UNDECIDED
        if h > tmax - t:
            h = tmax - t

        for i in range(dim):
            ytmp[i] = y[i] + h * _A21 * k1[i]
        _rhs(model, par, ytmp, k2)
        for i in range(dim):
            ytmp[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        _rhs(model, par, ytmp, k3)
        for i in range(dim):
            ytmp[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        _rhs(model, par, ytmp, k4)
        for i in range(dim):
            ytmp[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i]
                                  + _A53 * k3[i] + _A54 * k4[i])
        _rhs(model, par, ytmp, k5)
        for i in range(dim):
            ytmp[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i]
                                  + _A64 * k4[i] + _A65 * k5[i])
        _rhs(model, par, ytmp, k6)
        for i in range(dim):
            ynew[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i]
                                  + _B5 * k5[i] + _B6 * k6[i])
        _rhs(model, par, ynew, k7)

        errsq = 0.0
        for i in range(dim):
            e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i]
                     + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            errsq += (e / sc) * (e / sc)
        errnorm = math.sqrt(errsq / dim)

        if errnorm <= 1.0:
            t += h
            steps += 1
            clamped = False
            for i in range(dim):
                yi = ynew[i]
                if mask[i] and yi < 0.0:
                    if yi < -10.0 * (atol + rtol * abs(yi)):
                        return NEGATIVE_STATE
                    ynew[i] = 0.0
                    clamped = True
                y[i] = ynew[i]
            if clamped:
                _rhs(model, par, y, k1)
            else:
                for i in range(dim):
                    k1[i] = k7[i]

            norm = math.sqrt(sum(c * c for c in y))
            if norm > _DIVERGE_NORM:
                return DIVERGED

            hit = -1
            for j in range(n_att):
                dsq = 0.0
                for i in range(dim):
                    dv = y[i] - attractors[j][i]
                    dsq += dv * dv
                if dsq <= eps_attr * eps_attr:
                    hit = j
                    break
            if hit >= 0:
                streak = streak + 1 if hit == last else 1
                last = hit
                if streak >= dwell:
                    return hit
            else:
                streak = 0
                last = -1

        if errnorm == 0.0:
            fac = 5.0
        else:
            fac = 0.9 * errnorm ** -0.2
            if fac < 0.2:
                fac = 0.2
            elif fac > 5.0:
                fac = 5.0
        h *= fac
        if h < _MIN_STEP:
            return STEP_UNDERFLOW
    return UNDECIDED
