# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled basin-classification stepper.

Twin of ``separatrix._stepper_py`` (same tableau, same control logic);
kept in exact lockstep so that both backends yield identical labels.
The hot loop runs without the GIL so classification fans out across
threads during detection.
"""

from libc.math cimport sqrt, fabs, pow

BACKEND = "compiled"

cdef double DIVERGE_NORM = 1.0e6
cdef double MIN_STEP = 1.0e-14

cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0
cdef double A63 = 46732.0 / 5247.0, A64 = 49.0 / 176.0
cdef double A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0, B3 = 500.0 / 1113.0, B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0, B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0


cdef inline void c_rhs(int model, const double* par, const double* y,
                       double* out) nogil:
    cdef double P, I, x, y1, z
    if model == 0:
        P = y[0]; I = y[1]
        out[0] = par[0] * (1.0 - P) * (P - par[1]) * P - par[3] * I
        out[1] = (-par[3] - par[2] - par[0] * par[1]
                  + (par[4] - 1.0) * P - par[4] * I) * I
    else:
        x = y[0]; y1 = y[1]; z = y[2]
        out[0] = par[0] * (1.0 - x / par[9]) * x - par[3] * x * y1 - par[4] * x * z
        out[1] = par[1] * (1.0 - y1 / par[10]) * y1 - par[5] * x * y1 - par[6] * y1 * z
        out[2] = par[2] * (1.0 - z / par[11]) * z - par[7] * x * z - par[8] * y1 * z


cdef int c_classify(int model, const double* par, const double* ic,
                    const double* att, int n_att, double atol, double rtol,
                    double tmax, double eps_attr, int dwell,
                    long max_steps) nogil:
    cdef int dim = 2 if model == 0 else 3
    cdef double y[3]
    cdef double ynew[3]
    cdef double ytmp[3]
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef double k5[3]
    cdef double k6[3]
    cdef double k7[3]
    cdef int mask[3]
    cdef int i, j, hit, streak, last, clamped
    cdef long steps
    cdef double t, h, d0, d1, e, sc, errsq, errnorm, norm, dsq, dv, fac, yi

    if model == 0:
        mask[0] = 0; mask[1] = 1
    else:
        mask[0] = 1; mask[1] = 1; mask[2] = 1

    for i in range(dim):
        y[i] = ic[i]
    c_rhs(model, par, y, k1)
    d0 = 0.0; d1 = 0.0
    for i in range(dim):
        d0 += y[i] * y[i]
        d1 += k1[i] * k1[i]
    h = 1.0e-2 * (1.0 + sqrt(d0)) / (1.0 + sqrt(d1))
    if h > tmax:
        h = tmax

    t = 0.0
    streak = 0
    last = -1
    steps = 0
    while steps < max_steps:
        if t >= tmax:
            return -1
        if h > tmax - t:
            h = tmax - t

        for i in range(dim):
            ytmp[i] = y[i] + h * A21 * k1[i]
        c_rhs(model, par, ytmp, k2)
        for i in range(dim):
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
        c_rhs(model, par, ytmp, k3)
        for i in range(dim):
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        c_rhs(model, par, ytmp, k4)
        for i in range(dim):
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i]
                                  + A53 * k3[i] + A54 * k4[i])
        c_rhs(model, par, ytmp, k5)
        for i in range(dim):
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                  + A64 * k4[i] + A65 * k5[i])
        c_rhs(model, par, ytmp, k6)
        for i in range(dim):
            ynew[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                  + B5 * k5[i] + B6 * k6[i])
        c_rhs(model, par, ynew, k7)

        errsq = 0.0
        for i in range(dim):
            e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i]
                     + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            sc = atol + rtol * max(fabs(y[i]), fabs(ynew[i]))
            errsq += (e / sc) * (e / sc)
        errnorm = sqrt(errsq / dim)

        if errnorm <= 1.0:
            t += h
            steps += 1
            clamped = 0
            for i in range(dim):
                yi = ynew[i]
                if mask[i] and yi < 0.0:
                    if yi < -10.0 * (atol + rtol * fabs(yi)):
                        return -4
                    ynew[i] = 0.0
                    clamped = 1
                y[i] = ynew[i]
            if clamped:
                c_rhs(model, par, y, k1)
            else:
                for i in range(dim):
                    k1[i] = k7[i]

            norm = 0.0
            for i in range(dim):
                norm += y[i] * y[i]
            if sqrt(norm) > DIVERGE_NORM:
                return -2

            hit = -1
            for j in range(n_att):
                dsq = 0.0
                for i in range(dim):
                    dv = y[i] - att[j * dim + i]
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
            fac = 0.9 * pow(errnorm, -0.2)
            if fac < 0.2:
                fac = 0.2
            elif fac > 5.0:
                fac = 5.0
        h *= fac
        if h < MIN_STEP:
            return -3
    return -1


def classify_kernel(int model, double[::1] par, double[::1] ic,
                    double[:, ::1] attractors, double atol, double rtol,
                    double tmax, double eps_attr, int dwell, long max_steps):
    """Integrate from ``ic`` and report which attractor captures it."""
    cdef int n_att = attractors.shape[0]
    cdef int res
    with nogil:
        res = c_classify(model, &par[0], &ic[0], &attractors[0, 0], n_att,
                         atol, rtol, tmax, eps_attr, dwell, max_steps)
    return res
