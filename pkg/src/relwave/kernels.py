"""Hot inner loops: leapfrog stepping and trajectory integration.

Each kernel has a numba ``@njit`` build and a pure-numpy fallback.  The
numba path is the default whenever numba imports; set
``RELWAVE_DISABLE_NUMBA=1`` in the environment (or pass
``use_numba=False`` at the call site) to force the numpy path.  Both
paths run the same arithmetic and agree to floating-point roundoff;
``benchmarks/bench_kernels.py`` times them against each other.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f
        if args and callable(args[0]):
            return args[0]
        return wrap


def numba_enabled(use_numba: bool | None = None) -> bool:
    if use_numba is not None:
        return use_numba and NUMBA_AVAILABLE
    if os.environ.get("RELWAVE_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes"):
        return False
    return NUMBA_AVAILABLE


# ---------------------------------------------------------------------------
# leapfrog stepping for the second-order-in-time amplitude equation
#
#   d_t^2 psi = d_x^2 psi + cphi d_t psi + a d_x psi + b psi
#
# discretized with centered differences; rows 0 and 1 of `hist` must be
# filled by the caller.  `gamma` = cphi*dt/2 per point, so the update is
#
#   psi+ = (dt^2 * (D2 psi + a D1 psi + b psi) + 2 psi - (1+gamma) psi-)
#          / (1 - gamma)
# ---------------------------------------------------------------------------


def _leapfrog_numpy(hist, a, b, gamma, dt, dx, periodic):
    nt, nx = hist.shape
    dt2 = dt * dt
    inv_dx2 = 1.0 / (dx * dx)
    inv_2dx = 0.5 / dx
    for n in range(1, nt - 1):
        cur = hist[n]
        if periodic:
            up = np.roll(cur, -1)
            dn = np.roll(cur, 1)
            lap = (up - 2.0 * cur + dn) * inv_dx2
            d1 = (up - dn) * inv_2dx
            rhs = dt2 * (lap + a * d1 + b * cur) + 2.0 * cur - (1.0 + gamma) * hist[n - 1]
            hist[n + 1] = rhs / (1.0 - gamma)
        else:
            lap = np.zeros_like(cur)
            d1 = np.zeros_like(cur)
            lap[1:-1] = (cur[2:] - 2.0 * cur[1:-1] + cur[:-2]) * inv_dx2
            d1[1:-1] = (cur[2:] - cur[:-2]) * inv_2dx
            rhs = dt2 * (lap + a * d1 + b * cur) + 2.0 * cur - (1.0 + gamma) * hist[n - 1]
            hist[n + 1] = rhs / (1.0 - gamma)
            hist[n + 1, 0] = 0.0
            hist[n + 1, -1] = 0.0
    return hist


@njit(cache=True)
def _leapfrog_jit(hist, a, b, gamma, dt, dx, periodic):  # pragma: no cover - jitted
    nt, nx = hist.shape
    dt2 = dt * dt
    inv_dx2 = 1.0 / (dx * dx)
    inv_2dx = 0.5 / dx
    for n in range(1, nt - 1):
        if periodic:
            for i in range(nx):
                ip = i + 1 if i + 1 < nx else 0
                im = i - 1 if i >= 1 else nx - 1
                lap = (hist[n, ip] - 2.0 * hist[n, i] + hist[n, im]) * inv_dx2
                d1 = (hist[n, ip] - hist[n, im]) * inv_2dx
                rhs = (dt2 * (lap + a[i] * d1 + b[i] * hist[n, i])
                       + 2.0 * hist[n, i] - (1.0 + gamma[i]) * hist[n - 1, i])
                hist[n + 1, i] = rhs / (1.0 - gamma[i])
        else:
            hist[n + 1, 0] = 0.0
            hist[n + 1, nx - 1] = 0.0
            for i in range(1, nx - 1):
                lap = (hist[n, i + 1] - 2.0 * hist[n, i] + hist[n, i - 1]) * inv_dx2
                d1 = (hist[n, i + 1] - hist[n, i - 1]) * inv_2dx
                rhs = (dt2 * (lap + a[i] * d1 + b[i] * hist[n, i])
                       + 2.0 * hist[n, i] - (1.0 + gamma[i]) * hist[n - 1, i])
                hist[n + 1, i] = rhs / (1.0 - gamma[i])
    return hist


def leapfrog_history(hist: np.ndarray, a: np.ndarray, b: np.ndarray,
                     gamma: np.ndarray, dt: float, dx: float, periodic: bool,
                     use_numba: bool | None = None) -> np.ndarray:
    """Fill rows 2..nt-1 of `hist` in place; rows 0 and 1 are the start data."""
    args = (hist, np.ascontiguousarray(a, dtype=complex),
            np.ascontiguousarray(b, dtype=complex),
            np.ascontiguousarray(gamma, dtype=complex),
            float(dt), float(dx), bool(periodic))
    if numba_enabled(use_numba):
        return _leapfrog_jit(*args)
    return _leapfrog_numpy(*args)


# ---------------------------------------------------------------------------
# fixed-step RK4 for dx^a/dtau = p^a/m, dp^a/dtau = acc^a(t, x) with the
# acceleration components bilinearly interpolated on a ("t", "x") grid.
# Status codes: 0 completed, 1 left the grid (path truncated).
# ---------------------------------------------------------------------------


def _bilinear(field, t0, dt, x0, dx, t, x):
    nt, nx = field.shape
    ft = (t - t0) / dt
    fx = (x - x0) / dx
    if ft < 0.0 or ft > nt - 1 or fx < 0.0 or fx > nx - 1:
        return 0.0, False
    it = min(int(ft), nt - 2)
    ix = min(int(fx), nx - 2)
    wt = ft - it
    wx = fx - ix
    val = ((1.0 - wt) * (1.0 - wx) * field[it, ix]
           + (1.0 - wt) * wx * field[it, ix + 1]
           + wt * (1.0 - wx) * field[it + 1, ix]
           + wt * wx * field[it + 1, ix + 1])
    return val, True


_bilinear_jit = njit(cache=True)(_bilinear)


def _make_rk4(bilinear):
    def rk4(ts, xs, p0s, p1s, acc0, acc1, rfield, t0, dtg, x0, dxg,
            dtau, mass, node_eps):
        nsteps = ts.shape[0] - 1
        exited = False
        crossed = False
        ndone = nsteps
        for n in range(nsteps):
            t, x = ts[n], xs[n]
            q0, q1 = p0s[n], p1s[n]
            ok = True
            # RK4 stages on the state (t, x, p0, p1)
            a0_1, in1 = bilinear(acc0, t0, dtg, x0, dxg, t, x)
            a1_1, in1b = bilinear(acc1, t0, dtg, x0, dxg, t, x)
            ok = ok and in1 and in1b
            k1 = (q0 / mass, q1 / mass, a0_1, a1_1)

            tm = t + 0.5 * dtau * k1[0]
            xm = x + 0.5 * dtau * k1[1]
            a0_2, in2 = bilinear(acc0, t0, dtg, x0, dxg, tm, xm)
            a1_2, in2b = bilinear(acc1, t0, dtg, x0, dxg, tm, xm)
            ok = ok and in2 and in2b
            k2 = ((q0 + 0.5 * dtau * k1[2]) / mass, (q1 + 0.5 * dtau * k1[3]) / mass,
                  a0_2, a1_2)

            tm2 = t + 0.5 * dtau * k2[0]
            xm2 = x + 0.5 * dtau * k2[1]
            a0_3, in3 = bilinear(acc0, t0, dtg, x0, dxg, tm2, xm2)
            a1_3, in3b = bilinear(acc1, t0, dtg, x0, dxg, tm2, xm2)
            ok = ok and in3 and in3b
            k3 = ((q0 + 0.5 * dtau * k2[2]) / mass, (q1 + 0.5 * dtau * k2[3]) / mass,
                  a0_3, a1_3)

            te = t + dtau * k3[0]
            xe = x + dtau * k3[1]
            a0_4, in4 = bilinear(acc0, t0, dtg, x0, dxg, te, xe)
            a1_4, in4b = bilinear(acc1, t0, dtg, x0, dxg, te, xe)
            ok = ok and in4 and in4b
            k4 = ((q0 + dtau * k3[2]) / mass, (q1 + dtau * k3[3]) / mass,
                  a0_4, a1_4)

            if not ok:
                exited = True
                ndone = n
                break

            ts[n + 1] = t + (dtau / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            xs[n + 1] = x + (dtau / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            p0s[n + 1] = q0 + (dtau / 6.0) * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
            p1s[n + 1] = q1 + (dtau / 6.0) * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])

            rval, rin = bilinear(rfield, t0, dtg, x0, dxg, ts[n + 1], xs[n + 1])
            if not rin:
                exited = True
                ndone = n + 1
                break
            if rval < node_eps:
                crossed = True
        return ndone, exited, crossed
    return rk4


_rk4_numpy = _make_rk4(_bilinear)
_rk4_jit = njit(cache=True)(_make_rk4(_bilinear_jit))


def integrate_rk4(state0, acc0, acc1, rfield, t0, dtg, x0, dxg,
                  dtau, nsteps, mass, node_eps,
                  use_numba: bool | None = None):
    """Integrate from state0 = (t, x, p0, p1); returns path arrays and flags."""
    ts = np.empty(nsteps + 1)
    xs = np.empty(nsteps + 1)
    p0s = np.empty(nsteps + 1)
    p1s = np.empty(nsteps + 1)
    ts[0], xs[0], p0s[0], p1s[0] = state0
    fn = _rk4_jit if numba_enabled(use_numba) else _rk4_numpy
    ndone, exited, crossed = fn(
        ts, xs, p0s, p1s,
        np.ascontiguousarray(acc0, dtype=float), np.ascontiguousarray(acc1, dtype=float),
        np.ascontiguousarray(rfield, dtype=float),
        float(t0), float(dtg), float(x0), float(dxg),
        float(dtau), float(mass), float(node_eps))
    n = ndone + 1
    return ts[:n], xs[:n], p0s[:n], p1s[:n], exited, crossed
