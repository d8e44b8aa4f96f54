# cython: language_level=3
"""Compiled integration kernels (Dormand-Prince 5(4), stop-aligned steps).

Same algorithm and call signatures as :mod:`dynloc._pykernels`.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, fmod, sqrt, fabs, pow, NAN, M_PI

cnp.import_array()

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176
cdef double A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784
cdef double B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920
cdef double E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40

cdef double SAFETY = 0.9
cdef double FAC_MIN = 0.2
cdef double FAC_MAX = 10.0
cdef long MAX_STEPS = 50000000


cdef struct Drive:
    int code
    double f0
    double omega
    double period
    const double *samples
    const double *cumulative
    int k


cdef inline double _tau(Drive *d, double t) nogil:
    cdef double tau = fmod(t, d.period)
    if tau < 0.0:
        tau += d.period
    return tau


cdef double drive_force(Drive *d, double t) nogil:
    cdef double tau, x, s0, s1
    cdef int j
    if d.code == 2:
        return d.f0
    if d.code == 0:
        return d.f0 * cos(d.omega * t)
    tau = _tau(d, t)
    if d.code == 1:
        return d.f0 if tau < 0.5 * d.period else -d.f0
    x = tau / d.period * d.k
    j = <int>x
    if j > d.k - 1:
        j = d.k - 1
    s0 = d.samples[j]
    s1 = d.samples[(j + 1) % d.k]
    return d.f0 * (s0 + (s1 - s0) * (x - j))


cdef double drive_phase(Drive *d, double t) nogil:
    cdef double tau, dt, x, u, s0, s1
    cdef int j
    if d.code == 2:
        return d.f0 * t
    if d.code == 0:
        return d.f0 / d.omega * sin(d.omega * t)
    tau = _tau(d, t)
    if d.code == 1:
        return d.f0 * (tau if tau < 0.5 * d.period else d.period - tau)
    dt = d.period / d.k
    x = tau / dt
    j = <int>x
    if j > d.k - 1:
        j = d.k - 1
    u = x - j
    s0 = d.samples[j]
    s1 = d.samples[(j + 1) % d.k]
    return d.f0 * dt * (d.cumulative[j] + s0 * u + 0.5 * (s1 - s0) * u * u)


cdef Drive make_drive(int code, double f0, double omega,
                      const double[::1] samples, const double[::1] cumulative):
    cdef Drive d
    d.code = code
    d.f0 = f0
    d.omega = omega
    d.period = 2.0 * M_PI / omega if omega > 0 else 0.0
    d.samples = &samples[0]
    d.cumulative = &cumulative[0]
    d.k = samples.shape[0]
    return d


def force(int code, double f0, double omega, samples, double t):
    cdef const double[::1] s = np.ascontiguousarray(samples, dtype=np.float64)
    cdef const double[::1] c = np.zeros(s.shape[0] + 1)
    cdef Drive d = make_drive(code, f0, omega, s, c)
    return drive_force(&d, t)


def phase(int code, double f0, double omega, samples, cumulative, double t):
    cdef const double[::1] s = np.ascontiguousarray(samples, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(cumulative, dtype=np.float64)
    cdef Drive d = make_drive(code, f0, omega, s, c)
    return drive_phase(&d, t)


# ---------------------------------------------------------------- 2x2 system

cdef inline void rhs2(Drive *d, double sigma, double t, double complex *v,
                      double complex *out) nogil:
    cdef double h = 0.5 * drive_force(d, t)
    cdef double complex mi = -1j
    out[0] = mi * (h * v[0] - sigma * v[2])
    out[1] = mi * (h * v[1] - sigma * v[3])
    out[2] = mi * (sigma * v[0] - h * v[2])
    out[3] = mi * (sigma * v[1] - h * v[3])


cdef inline double cabs(double complex z) nogil:
    return sqrt(z.real * z.real + z.imag * z.imag)


def propagate_2x2(int code, double f0, double omega, samples, cumulative, double sigma,
                  double t0, double t1, double rtol, double atol, double max_step):
    """Propagator ``V(t1, t0)`` of ``i dV/dt = M(t) V``; see the fallback module."""
    cdef const double[::1] s = np.ascontiguousarray(samples, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(cumulative, dtype=np.float64)
    cdef Drive d = make_drive(code, f0, omega, s, c)
    cdef double complex y[4]
    cdef double complex yt[4]
    cdef double complex ynew[4]
    cdef double complex k1[4]
    cdef double complex k2[4]
    cdef double complex k3[4]
    cdef double complex k4[4]
    cdef double complex k5[4]
    cdef double complex k6[4]
    cdef double complex k7[4]
    cdef double complex e
    cdef double t = t0, span = t1 - t0, h, h0, h1, step, t_new, en, sc, fac
    cdef double d0, d1, d2, growth = 1.0, mag
    cdef long n_acc = 0, n_rej = 0
    cdef bint last, reject_last = False
    cdef int i

    if span <= 0.0:
        return np.eye(2, dtype=complex), 0, 0, 1.0
    y[0] = 1.0
    y[1] = 0.0
    y[2] = 0.0
    y[3] = 1.0

    with nogil:
        rhs2(&d, sigma, t, y, k1)
        d0 = 0.0
        d1 = 0.0
        for i in range(4):
            sc = atol + rtol * cabs(y[i])
            d0 += (cabs(y[i]) / sc) ** 2
            d1 += (cabs(k1[i]) / sc) ** 2
        d0 = sqrt(d0 / 4)
        d1 = sqrt(d1 / 4)
        if d0 < 1e-5 or d1 < 1e-5:
            h0 = 1e-6
        else:
            h0 = 0.01 * d0 / d1
        for i in range(4):
            yt[i] = y[i] + h0 * k1[i]
        rhs2(&d, sigma, t + h0, yt, k2)
        d2 = 0.0
        for i in range(4):
            sc = atol + rtol * cabs(y[i])
            d2 += (cabs(k2[i] - k1[i]) / sc) ** 2
        d2 = sqrt(d2 / 4) / h0
        if d1 < 1e-300 and d2 < 1e-300 or (d1 if d1 > d2 else d2) <= 1e-15:
            h1 = 1e-6 if 1e-6 > h0 * 1e-3 else h0 * 1e-3
        else:
            h1 = pow(0.01 / (d1 if d1 > d2 else d2), 0.2)
        h = 100 * h0
        if h1 < h:
            h = h1
        if span < h:
            h = span
        if max_step < h:
            h = max_step

        while t < t1:
            if n_acc + n_rej > MAX_STEPS:
                break
            last = False
            step = h
            if t + step >= t1 or t1 - (t + step) < 1e-12 * fabs(t1):
                step = t1 - t
                last = True
            for i in range(4):
                yt[i] = y[i] + step * (A21 * k1[i])
            rhs2(&d, sigma, t + C2 * step, yt, k2)
            for i in range(4):
                yt[i] = y[i] + step * (A31 * k1[i] + A32 * k2[i])
            rhs2(&d, sigma, t + C3 * step, yt, k3)
            for i in range(4):
                yt[i] = y[i] + step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            rhs2(&d, sigma, t + C4 * step, yt, k4)
            for i in range(4):
                yt[i] = y[i] + step * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            rhs2(&d, sigma, t + C5 * step, yt, k5)
            for i in range(4):
                yt[i] = y[i] + step * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i]
                                       + A65 * k5[i])
            rhs2(&d, sigma, t + step, yt, k6)
            for i in range(4):
                ynew[i] = y[i] + step * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i]
                                         + B6 * k6[i])
            t_new = t1 if last else t + step
            rhs2(&d, sigma, t_new, ynew, k7)
            en = 0.0
            for i in range(4):
                e = step * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                            + E7 * k7[i])
                mag = cabs(y[i])
                if cabs(ynew[i]) > mag:
                    mag = cabs(ynew[i])
                sc = atol + rtol * mag
                en += (cabs(e) / sc) ** 2
            en = sqrt(en / 4)
            if en <= 1.0:
                t = t_new
                for i in range(4):
                    y[i] = ynew[i]
                    k1[i] = k7[i]
                    mag = cabs(y[i])
                    if mag > growth:
                        growth = mag
                n_acc += 1
                if en == 0.0:
                    fac = FAC_MAX
                else:
                    fac = SAFETY * pow(en, -0.2)
                    if fac > FAC_MAX:
                        fac = FAC_MAX
                    if fac < FAC_MIN:
                        fac = FAC_MIN
                if reject_last and fac > 1.0:
                    fac = 1.0
                if last:
                    h = (h if h > step else step) * fac
                else:
                    h = step * fac
                if h > max_step:
                    h = max_step
                reject_last = False
            else:
                fac = SAFETY * pow(en, -0.2)
                if fac < FAC_MIN:
                    fac = FAC_MIN
                h = step * fac
                n_rej += 1
                reject_last = True

    if t < t1:
        raise RuntimeError("step budget exhausted")
    u = np.empty((2, 2), dtype=complex)
    u[0, 0] = y[0]
    u[0, 1] = y[1]
    u[1, 0] = y[2]
    u[1, 1] = y[3]
    return u, n_acc, n_rej, growth


# ------------------------------------------------------------ lattice system

cdef void lattice_rhs(Drive *d, const double *kappa, Py_ssize_t n, double t,
                      const double complex *y, double complex *out) nogil:
    cdef double ph = drive_phase(d, t)
    cdef double cr = cos(ph), si = sin(ph)
    # i e^{i phi} and i e^{-i phi}
    cdef double complex a = (-si) + 1j * cr
    cdef double complex b = si + 1j * cr
    cdef Py_ssize_t m
    if n == 1:
        out[0] = 0.0
        return
    out[0] = b * kappa[1] * y[1]
    for m in range(1, n - 1):
        out[m] = a * kappa[m] * y[m - 1] + b * kappa[m + 1] * y[m + 1]
    out[n - 1] = a * kappa[n - 1] * y[n - 2]


def evolve_lattice(kappa_in, int code, double f0, double omega, samples, cumulative, psi0,
                   t_stops_in, double rtol, double atol, double max_step, double edge_limit):
    """Integrate the driven lattice through every stop; see the fallback module."""
    cdef const double[::1] s = np.ascontiguousarray(samples, dtype=np.float64)
    cdef const double[::1] c = np.ascontiguousarray(cumulative, dtype=np.float64)
    cdef Drive d = make_drive(code, f0, omega, s, c)
    cdef const double[::1] kappa = np.ascontiguousarray(kappa_in, dtype=np.float64)
    cdef const double[::1] t_stops = np.ascontiguousarray(t_stops_in, dtype=np.float64)
    cdef Py_ssize_t n = kappa.shape[0], m, idx, nstops = t_stops.shape[0]
    cdef double complex[::1] y = np.array(psi0, dtype=complex)
    cdef double complex[:, ::1] work = np.zeros((9, n), dtype=complex)
    cdef double complex *k1 = &work[0, 0]
    cdef double complex *k2 = &work[1, 0]
    cdef double complex *k3 = &work[2, 0]
    cdef double complex *k4 = &work[3, 0]
    cdef double complex *k5 = &work[4, 0]
    cdef double complex *k6 = &work[5, 0]
    cdef double complex *k7 = &work[6, 0]
    cdef double complex *yt = &work[7, 0]
    cdef double complex *ynew = &work[8, 0]
    cdef double complex *yp = &y[0]
    cdef double complex *tmp
    cdef double complex e
    cdef const double *kp = &kappa[0]
    cdef double t, stop, h, h0, h1, step, t_new, en, sc, fac, mag, mag2, edge
    cdef double d0 = 0.0, d1 = 0.0, d2 = 0.0, max_edge, fail_time = NAN, fail_occ = 0.0
    cdef long n_acc = 0, n_rej = 0
    cdef bint last, reject_last = False, failed = False, exhausted = False

    states = np.full((nstops, n), np.nan + 0j, dtype=complex)
    sites = np.arange(n, dtype=np.float64)
    t = t_stops[0]
    states[0] = np.asarray(y) * np.exp(-1j * sites * drive_phase(&d, t))
    max_edge = y[n - 1].real ** 2 + y[n - 1].imag ** 2
    if max_edge > edge_limit:
        return states, 0, 0, max_edge, t, max_edge

    with nogil:
        lattice_rhs(&d, kp, n, t, yp, k1)
        for m in range(n):
            sc = atol + rtol * cabs(yp[m])
            d0 += (cabs(yp[m]) / sc) ** 2
            d1 += (cabs(k1[m]) / sc) ** 2
        d0 = sqrt(d0 / n)
        d1 = sqrt(d1 / n)
        if d0 < 1e-5 or d1 < 1e-5:
            h0 = 1e-6
        else:
            h0 = 0.01 * d0 / d1
        for m in range(n):
            yt[m] = yp[m] + h0 * k1[m]
        lattice_rhs(&d, kp, n, t + h0, yt, k2)
        for m in range(n):
            sc = atol + rtol * cabs(yp[m])
            d2 += (cabs(k2[m] - k1[m]) / sc) ** 2
        d2 = sqrt(d2 / n) / h0
        if (d1 if d1 > d2 else d2) <= 1e-15:
            h1 = 1e-6 if 1e-6 > h0 * 1e-3 else h0 * 1e-3
        else:
            h1 = pow(0.01 / (d1 if d1 > d2 else d2), 0.2)
        h = 100 * h0
        if h1 < h:
            h = h1
        if max_step < h:
            h = max_step

    for idx in range(1, nstops):
        stop = t_stops[idx]
        with nogil:
            while t < stop:
                if n_acc + n_rej > MAX_STEPS:
                    exhausted = True
                    break
                last = False
                step = h
                if t + step >= stop or stop - (t + step) < 1e-12 * fabs(stop):
                    step = stop - t
                    last = True
                for m in range(n):
                    yt[m] = yp[m] + step * (A21 * k1[m])
                lattice_rhs(&d, kp, n, t + C2 * step, yt, k2)
                for m in range(n):
                    yt[m] = yp[m] + step * (A31 * k1[m] + A32 * k2[m])
                lattice_rhs(&d, kp, n, t + C3 * step, yt, k3)
                for m in range(n):
                    yt[m] = yp[m] + step * (A41 * k1[m] + A42 * k2[m] + A43 * k3[m])
                lattice_rhs(&d, kp, n, t + C4 * step, yt, k4)
                for m in range(n):
                    yt[m] = yp[m] + step * (A51 * k1[m] + A52 * k2[m] + A53 * k3[m]
                                            + A54 * k4[m])
                lattice_rhs(&d, kp, n, t + C5 * step, yt, k5)
                for m in range(n):
                    yt[m] = yp[m] + step * (A61 * k1[m] + A62 * k2[m] + A63 * k3[m]
                                            + A64 * k4[m] + A65 * k5[m])
                lattice_rhs(&d, kp, n, t + step, yt, k6)
                for m in range(n):
                    ynew[m] = yp[m] + step * (B1 * k1[m] + B3 * k3[m] + B4 * k4[m]
                                              + B5 * k5[m] + B6 * k6[m])
                t_new = stop if last else t + step
                lattice_rhs(&d, kp, n, t_new, ynew, k7)
                en = 0.0
                for m in range(n):
                    e = step * (E1 * k1[m] + E3 * k3[m] + E4 * k4[m] + E5 * k5[m]
                                + E6 * k6[m] + E7 * k7[m])
                    mag = cabs(yp[m])
                    mag2 = cabs(ynew[m])
                    if mag2 > mag:
                        mag = mag2
                    sc = atol + rtol * mag
                    en += (cabs(e) / sc) ** 2
                en = sqrt(en / n)
                if en <= 1.0:
                    t = t_new
                    for m in range(n):
                        yp[m] = ynew[m]
                    tmp = k1
                    k1 = k7
                    k7 = tmp
                    n_acc += 1
                    if en == 0.0:
                        fac = FAC_MAX
                    else:
                        fac = SAFETY * pow(en, -0.2)
                        if fac > FAC_MAX:
                            fac = FAC_MAX
                        if fac < FAC_MIN:
                            fac = FAC_MIN
                    if reject_last and fac > 1.0:
                        fac = 1.0
                    if last:
                        h = (h if h > step else step) * fac
                    else:
                        h = step * fac
                    if h > max_step:
                        h = max_step
                    reject_last = False
                    edge = yp[n - 1].real ** 2 + yp[n - 1].imag ** 2
                    if edge > max_edge:
                        max_edge = edge
                    if edge > edge_limit:
                        failed = True
                        fail_time = t
                        fail_occ = edge
                        break
                else:
                    fac = SAFETY * pow(en, -0.2)
                    if fac < FAC_MIN:
                        fac = FAC_MIN
                    h = step * fac
                    n_rej += 1
                    reject_last = True
        if exhausted:
            raise RuntimeError("step budget exhausted")
        if failed:
            return states, n_acc, n_rej, max_edge, fail_time, fail_occ
        states[idx] = np.asarray(y) * np.exp(-1j * sites * drive_phase(&d, t))
    return states, n_acc, n_rej, max_edge, NAN, 0.0
