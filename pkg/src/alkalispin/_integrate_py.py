"""Pure-Python integrator kernels for ``dx/dt = M x`` with 2x2 complex ``M``.

Mirrors ``_integrate.pyx`` line by line; used when the extension is absent
or when ``ALKALISPIN_PURE_PYTHON`` is set.
"""
import numpy as np

OK = 0
STEP_UNDERFLOW = 1
TOO_MANY_STEPS = 2

# Dormand-Prince 5(4)
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = 9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
EPS = 2.220446049250313e-16


def dp45(m, y0, t, rtol, atol, h0, max_steps):
    """Adaptive Dormand-Prince integration sampled at every time in `t`.

    Steps are clipped to land exactly on each sample time. Returns
    ``(states, status, t_last, n_steps)`` where ``states`` has shape
    ``(len(t), 2)``; on failure ``t_last`` is the last accepted time.
    """
    m00, m01, m10, m11 = complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1])
    n = len(t)
    out = np.zeros((n, 2), dtype=complex)
    f = complex(y0[0])
    s = complex(y0[1])
    out[0, 0] = f
    out[0, 1] = s
    tc = float(t[0])
    span = float(t[n - 1]) - tc
    h = h0
    if h <= 0.0:
        norm = max(abs(m00), abs(m01), abs(m10), abs(m11))
        h = 0.01 / norm if norm > 0.0 else span
        if h > span:
            h = span
    steps = 0
    k1f = m00 * f + m01 * s
    k1s = m10 * f + m11 * s
    for i in range(1, n):
        target = float(t[i])
        while tc < target:
            remaining = target - tc
            clipped = h >= remaining
            hs = remaining if clipped else h
            if hs <= 10.0 * EPS * max(abs(tc), abs(target)):
                if remaining <= 10.0 * EPS * max(abs(tc), abs(target)):
                    tc = target
                    break
                return out, STEP_UNDERFLOW, tc, steps
            if steps >= max_steps:
                return out, TOO_MANY_STEPS, tc, steps

            yf = f + hs * A21 * k1f
            ys = s + hs * A21 * k1s
            k2f = m00 * yf + m01 * ys
            k2s = m10 * yf + m11 * ys
            yf = f + hs * (A31 * k1f + A32 * k2f)
            ys = s + hs * (A31 * k1s + A32 * k2s)
            k3f = m00 * yf + m01 * ys
            k3s = m10 * yf + m11 * ys
            yf = f + hs * (A41 * k1f + A42 * k2f + A43 * k3f)
            ys = s + hs * (A41 * k1s + A42 * k2s + A43 * k3s)
            k4f = m00 * yf + m01 * ys
            k4s = m10 * yf + m11 * ys
            yf = f + hs * (A51 * k1f + A52 * k2f + A53 * k3f + A54 * k4f)
            ys = s + hs * (A51 * k1s + A52 * k2s + A53 * k3s + A54 * k4s)
            k5f = m00 * yf + m01 * ys
            k5s = m10 * yf + m11 * ys
            yf = f + hs * (A61 * k1f + A62 * k2f + A63 * k3f + A64 * k4f + A65 * k5f)
            ys = s + hs * (A61 * k1s + A62 * k2s + A63 * k3s + A64 * k4s + A65 * k5s)
            k6f = m00 * yf + m01 * ys
            k6s = m10 * yf + m11 * ys
            nf = f + hs * (B1 * k1f + B3 * k3f + B4 * k4f + B5 * k5f + B6 * k6f)
            ns = s + hs * (B1 * k1s + B3 * k3s + B4 * k4s + B5 * k5s + B6 * k6s)
            k7f = m00 * nf + m01 * ns
            k7s = m10 * nf + m11 * ns
            ef = hs * (E1 * k1f + E3 * k3f + E4 * k4f + E5 * k5f + E6 * k6f + E7 * k7f)
            es = hs * (E1 * k1s + E3 * k3s + E4 * k4s + E5 * k5s + E6 * k6s + E7 * k7s)
            err = max(abs(ef) / (atol + rtol * max(abs(f), abs(nf))),
                      abs(es) / (atol + rtol * max(abs(s), abs(ns))))
            steps += 1
            if err == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err ** -0.2))
            if err <= 1.0:
                tc = target if clipped else tc + hs
                f, s = nf, ns
                k1f, k1s = k7f, k7s
                # a clipped step says little about the natural step size
                if not clipped or factor < 1.0:
                    h = hs * factor
            else:
                h = hs * min(1.0, factor)
        out[i, 0] = f
        out[i, 1] = s
    return out, OK, tc, steps


def rk4_fixed(m, y0, t, h):
    """Classical RK4 with step at most `h`, subdivided evenly between samples."""
    m00, m01, m10, m11 = complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1])
    n = len(t)
    out = np.zeros((n, 2), dtype=complex)
    f = complex(y0[0])
    s = complex(y0[1])
    out[0, 0] = f
    out[0, 1] = s
    for i in range(1, n):
        dt = float(t[i]) - float(t[i - 1])
        nsub = max(1, int(np.ceil(dt / h - 1e-12)))
        hs = dt / nsub
        for _ in range(nsub):
            k1f = m00 * f + m01 * s
            k1s = m10 * f + m11 * s
            yf = f + 0.5 * hs * k1f
            ys = s + 0.5 * hs * k1s
            k2f = m00 * yf + m01 * ys
            k2s = m10 * yf + m11 * ys
            yf = f + 0.5 * hs * k2f
            ys = s + 0.5 * hs * k2s
            k3f = m00 * yf + m01 * ys
            k3s = m10 * yf + m11 * ys
            yf = f + hs * k3f
            ys = s + hs * k3s
            k4f = m00 * yf + m01 * ys
            k4s = m10 * yf + m11 * ys
            f = f + hs / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f)
            s = s + hs / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
        out[i, 0] = f
        out[i, 1] = s
    return out
