"""Pure-Python integration kernels.

Reference implementation of the two hot loops, used when the compiled
extension :mod:`dynloc._kernels` is unavailable.  Both kernels are an
adaptive Dormand-Prince 5(4) integrator whose step ends are clipped so
that every requested stop time is hit exactly.

Drive encoding (``code``): 0 sinusoidal, 1 square, 2 dc, 3 sampled profile.
"""
import math

import numpy as np

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0
MAX_STEPS = 50_000_000


def force(code, f0, omega, samples, t):
    if code == 2:
        return f0
    if code == 0:
        return f0 * math.cos(omega * t)
    period = 2.0 * math.pi / omega
    tau = math.fmod(t, period)
    if tau < 0.0:
        tau += period
    if code == 1:
        return f0 if tau < 0.5 * period else -f0
    k = len(samples)
    x = tau / period * k
    j = min(int(x), k - 1)
    s0 = samples[j]
    s1 = samples[(j + 1) % k]
    return f0 * (s0 + (s1 - s0) * (x - j))


def phase(code, f0, omega, samples, cumulative, t):
    if code == 2:
        return f0 * t
    if code == 0:
        return f0 / omega * math.sin(omega * t)
    period = 2.0 * math.pi / omega
    tau = math.fmod(t, period)
    if tau < 0.0:
        tau += period
    if code == 1:
        return f0 * (tau if tau < 0.5 * period else period - tau)
    k = len(samples)
    dt = period / k
    x = tau / dt
    j = min(int(x), k - 1)
    u = x - j
    s0 = samples[j]
    s1 = samples[(j + 1) % k]
    return f0 * dt * (cumulative[j] + s0 * u + 0.5 * (s1 - s0) * u * u)


# ---------------------------------------------------------------- 2x2 system


def _rhs2(code, f0, omega, samples, sigma, t, v):
    h = 0.5 * force(code, f0, omega, samples, t)
    v00, v01, v10, v11 = v
    # dV/dt = -i M V,  M = [[h, -sigma], [sigma, -h]]
    return (
        -1j * (h * v00 - sigma * v10),
        -1j * (h * v01 - sigma * v11),
        -1j * (sigma * v00 - h * v10),
        -1j * (sigma * v01 - h * v11),
    )


def _norm2(err, y0, y1, rtol, atol):
    acc = 0.0
    for e, a, b in zip(err, y0, y1):
        sc = atol + rtol * max(abs(a), abs(b))
        acc += (abs(e) / sc) ** 2
    return math.sqrt(acc / 4.0)


def propagate_2x2(code, f0, omega, samples, cumulative, sigma, t0, t1, rtol, atol, max_step):
    """Propagator ``V(t1, t0)`` of ``i dV/dt = M(t) V`` with ``V(t0) = 1``.

    Returns ``(u, n_accepted, n_rejected, growth)`` where ``u`` is a (2, 2)
    complex array and ``growth`` the largest entry magnitude seen en route.
    """
    samples = [float(x) for x in samples]
    span = t1 - t0
    if span <= 0.0:
        return np.eye(2, dtype=complex), 0, 0, 1.0
    y = (1 + 0j, 0j, 0j, 1 + 0j)
    t = t0
    rhs = _rhs2
    k1 = rhs(code, f0, omega, samples, sigma, t, y)
    h = min(max_step, span, _initial_step2(code, f0, omega, samples, sigma, t, y, k1, rtol, atol))
    n_acc = n_rej = 0
    growth = 1.0
    reject_last = False
    while t < t1:
        if n_acc + n_rej > MAX_STEPS:
            raise RuntimeError("step budget exhausted")
        last = False
        step = h
        if t + step >= t1 or t1 - (t + step) < 1e-12 * abs(t1):
            step = t1 - t
            last = True
        k2 = rhs(code, f0, omega, samples, sigma, t + C2 * step,
                 tuple(y[i] + step * A21 * k1[i] for i in range(4)))
        k3 = rhs(code, f0, omega, samples, sigma, t + C3 * step,
                 tuple(y[i] + step * (A31 * k1[i] + A32 * k2[i]) for i in range(4)))
        k4 = rhs(code, f0, omega, samples, sigma, t + C4 * step,
                 tuple(y[i] + step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]) for i in range(4)))
        k5 = rhs(code, f0, omega, samples, sigma, t + C5 * step,
                 tuple(y[i] + step * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
                       for i in range(4)))
        k6 = rhs(code, f0, omega, samples, sigma, t + step,
                 tuple(y[i] + step * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i]
                                      + A65 * k5[i]) for i in range(4)))
        ynew = tuple(y[i] + step * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
                     for i in range(4))
        t_new = t1 if last else t + step
        k7 = rhs(code, f0, omega, samples, sigma, t_new, ynew)
        err = tuple(step * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                            + E7 * k7[i]) for i in range(4))
        en = _norm2(err, y, ynew, rtol, atol)
        if en <= 1.0:
            t = t_new
            y = ynew
            k1 = k7
            n_acc += 1
            growth = max(growth, max(abs(v) for v in y))
            fac = FAC_MAX if en == 0.0 else min(FAC_MAX, max(FAC_MIN, SAFETY * en ** -0.2))
            if reject_last:
                fac = min(fac, 1.0)
            # a clipped landing step must not shrink the natural step size
            h = min(max_step, max(h, step) * fac if last else step * fac)
            reject_last = False
        else:
            h = step * max(FAC_MIN, SAFETY * en ** -0.2)
            n_rej += 1
            reject_last = True
    u = np.array([[y[0], y[1]], [y[2], y[3]]], dtype=complex)
    return u, n_acc, n_rej, growth


def _initial_step2(code, f0, omega, samples, sigma, t, y, k1, rtol, atol):
    sc = [atol + rtol * abs(v) for v in y]
    d0 = math.sqrt(sum((abs(v) / s) ** 2 for v, s in zip(y, sc)) / 4)
    d1 = math.sqrt(sum((abs(v) / s) ** 2 for v, s in zip(k1, sc)) / 4)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = tuple(y[i] + h0 * k1[i] for i in range(4))
    k2 = _rhs2(code, f0, omega, samples, sigma, t + h0, y1)
    d2 = math.sqrt(sum((abs(a - b) / s) ** 2 for a, b, s in zip(k2, k1, sc)) / 4) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


# ------------------------------------------------------------ lattice system


def _lattice_rhs(kappa_lo, kappa_hi, code, f0, omega, samples, cumulative, t, d, out):
    """Interaction-picture lattice equations.

    With ``c_n = exp(-i n phi(t)) d_n`` the on-site term ``n F(t)`` is
    absorbed and ``i d'_n = -kappa_n e^{i phi} d_{n-1} - kappa_{n+1} e^{-i phi} d_{n+1}``.
    """
    ph = phase(code, f0, omega, samples, cumulative, t)
    e = complex(math.cos(ph), math.sin(ph))
    out[:] = 0.0
    out[1:] = kappa_lo * e * d[:-1]
    out[:-1] += kappa_hi * e.conjugate() * d[1:]
    out *= 1j
    return out


def _norm_vec(err, y0, y1, rtol, atol):
    sc = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    r = np.abs(err) / sc
    return math.sqrt(float(np.dot(r, r)) / r.size)


def evolve_lattice(kappa, code, f0, omega, samples, cumulative, psi0, t_stops,
                   rtol, atol, max_step, edge_limit):
    """Integrate the driven lattice from ``t_stops[0]`` through every stop.

    Returns ``(states, n_accepted, n_rejected, max_edge, fail_time, fail_occ)``.
    ``states[k]`` is the lab-frame amplitude vector at ``t_stops[k]``; when the
    edge occupation exceeds ``edge_limit`` integration stops, ``fail_time`` is
    set and the remaining rows are left as NaN.
    """
    kappa = np.asarray(kappa, dtype=np.float64)
    samples = [float(x) for x in samples]
    cumulative = [float(x) for x in cumulative]
    t_stops = np.asarray(t_stops, dtype=np.float64)
    n = kappa.size
    sites = np.arange(n, dtype=np.float64)
    kappa_lo = kappa[1:]
    kappa_hi = kappa[1:]
    states = np.full((t_stops.size, n), np.nan + 0j, dtype=complex)
    y = np.array(psi0, dtype=complex)
    t = float(t_stops[0])
    states[0] = y * np.exp(-1j * sites * phase(code, f0, omega, samples, cumulative, t))
    max_edge = abs(y[-1]) ** 2
    if max_edge > edge_limit:
        return states, 0, 0, max_edge, t, max_edge

    args = (kappa_lo, kappa_hi, code, f0, omega, samples, cumulative)
    rhs = _lattice_rhs
    k1 = rhs(*args, t, y, np.empty(n, dtype=complex))
    k2 = np.empty(n, dtype=complex)
    k3 = np.empty(n, dtype=complex)
    k4 = np.empty(n, dtype=complex)
    k5 = np.empty(n, dtype=complex)
    k6 = np.empty(n, dtype=complex)
    k7 = np.empty(n, dtype=complex)

    # initial step (Hairer's heuristic)
    sc = atol + rtol * np.abs(y)
    d0 = math.sqrt(float(np.mean((np.abs(y) / sc) ** 2)))
    d1 = math.sqrt(float(np.mean((np.abs(k1) / sc) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    rhs(*args, t + h0, y + h0 * k1, k2)
    d2 = math.sqrt(float(np.mean((np.abs(k2 - k1) / sc) ** 2))) / h0
    h1 = max(1e-6, h0 * 1e-3) if max(d1, d2) <= 1e-15 else (0.01 / max(d1, d2)) ** 0.2
    h = min(100 * h0, h1, max_step)

    n_acc = n_rej = 0
    reject_last = False
    for idx in range(1, t_stops.size):
        stop = float(t_stops[idx])
        while t < stop:
            if n_acc + n_rej > MAX_STEPS:
                raise RuntimeError("step budget exhausted")
            last = False
            step = h
            if t + step >= stop or stop - (t + step) < 1e-12 * abs(stop):
                step = stop - t
                last = True
            rhs(*args, t + C2 * step, y + step * (A21 * k1), k2)
            rhs(*args, t + C3 * step, y + step * (A31 * k1 + A32 * k2), k3)
            rhs(*args, t + C4 * step, y + step * (A41 * k1 + A42 * k2 + A43 * k3), k4)
            rhs(*args, t + C5 * step,
                y + step * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4), k5)
            rhs(*args, t + step,
                y + step * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5), k6)
            ynew = y + step * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
            t_new = stop if last else t + step
            rhs(*args, t_new, ynew, k7)
            err = step * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            en = _norm_vec(err, y, ynew, rtol, atol)
            if en <= 1.0:
                t = t_new
                y = ynew
                k1, k7 = k7, k1
                n_acc += 1
                fac = FAC_MAX if en == 0.0 else min(FAC_MAX, max(FAC_MIN, SAFETY * en ** -0.2))
                if reject_last:
                    fac = min(fac, 1.0)
                h = min(max_step, max(h, step) * fac if last else step * fac)
                reject_last = False
                edge = abs(y[-1]) ** 2
                if edge > max_edge:
                    max_edge = edge
                if edge > edge_limit:
                    return states, n_acc, n_rej, max_edge, t, edge
            else:
                h = step * max(FAC_MIN, SAFETY * en ** -0.2)
                n_rej += 1
                reject_last = True
        states[idx] = y * np.exp(-1j * sites * phase(code, f0, omega, samples, cumulative, t))
    return states, n_acc, n_rej, max_edge, math.nan, 0.0
