"""Numba-compiled hot kernels with pure-numpy fallbacks.

Two inner loops dominate runtime: the cost/gradient sweep over the
sector chain (called thousands of times by the optimizer) and the
right-hand side of the Lindblad master equation inside the adaptive
integrator.  Both are compiled with numba when available; setting the
environment variable ``PHOTONGATE_NUMBA=0`` (or running without numba
installed) selects the numpy implementations instead.  The two paths
are checked against each other in the test suite and compared in
``benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_ENV = os.environ.get("PHOTONGATE_NUMBA", "1") != "0"
try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

NUMBA_ENABLED = NUMBA_ENV and _HAVE_NUMBA

# Sector kind codes shared with circuit.py.
KIND_CODES = {"free": 0, "paral": 1, "inter": 2, "down": 3, "up": 4}


def _maybe_njit(func):
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(func)
    return func


# ---------------------------------------------------------------------------
# Closed-form 9x9 hopping-region propagator and its J-derivative.
# These mirror layers.u_hr / layers.d_u_hr_dj; the numpy originals remain
# the reference implementation (tested against the matrix-exponential
# oracle), and the kernel copies are tested against the originals.
# ---------------------------------------------------------------------------


def _hr_fill(out, omega, u, j, t):
    big = np.sqrt(4.0 * j * j + u * u)
    x = big * t
    if abs(x) < 1e-8:
        s = t * (1.0 - x * x / 6.0)
    else:
        s = np.sin(x) / big
    c = np.cos(x)
    ephi = np.exp(-1j * (u + 2.0 * omega) * t)
    eu = np.exp(-1j * u * t)
    ew = np.exp(-1j * omega * t)
    half = 0.5 * (c - 1j * u * s)
    A = (c + 1j * u * s) * ephi
    B = -1j * np.sqrt(2.0) * j * s * ephi
    C = (half + 0.5 * eu) * ephi
    D = (half - 0.5 * eu) * ephi
    E = np.cos(j * t) * ew
    F = -1j * np.sin(j * t) * ew
    e3 = np.exp(-1j * (3.0 * omega + 2.0 * u) * t)
    G = np.cos(2.0 * j * t) * e3
    H = -1j * np.sin(2.0 * j * t) * e3
    eye4 = np.exp(-4j * (omega + u) * t)
    out[:, :] = 0.0
    out[0, 0] = 1.0
    out[1, 1] = E
    out[3, 3] = E
    out[1, 3] = F
    out[3, 1] = F
    out[2, 2] = C
    out[6, 6] = C
    out[2, 6] = D
    out[6, 2] = D
    out[2, 4] = B
    out[4, 2] = B
    out[6, 4] = B
    out[4, 6] = B
    out[4, 4] = A
    out[5, 5] = G
    out[7, 7] = G
    out[5, 7] = H
    out[7, 5] = H
    out[8, 8] = eye4


def _dhr_fill(out, omega, u, j, t):
    big = np.sqrt(4.0 * j * j + u * u)
    x = big * t
    if abs(x) < 1e-8:
        s = t * (1.0 - x * x / 6.0)
    else:
        s = np.sin(x) / big
    c = np.cos(x)
    if abs(x) < 1e-4:
        h = t**3 * (-1.0 / 3.0 + x * x / 30.0)
    else:
        h = (x * c - np.sin(x)) / big**3
    ephi = np.exp(-1j * (u + 2.0 * omega) * t)
    ew = np.exp(-1j * omega * t)
    e3 = np.exp(-1j * (3.0 * omega + 2.0 * u) * t)
    ts = t * s
    dA = 4.0 * j * (-ts + 1j * u * h) * ephi
    dB = -1j * np.sqrt(2.0) * (s + 4.0 * j * j * h) * ephi
    dC = 2.0 * j * (-ts - 1j * u * h) * ephi
    dE = -t * np.sin(j * t) * ew
    dF = -1j * t * np.cos(j * t) * ew
    dG = -2.0 * t * np.sin(2.0 * j * t) * e3
    dH = -2j * t * np.cos(2.0 * j * t) * e3
    out[:, :] = 0.0
    out[1, 1] = dE
    out[3, 3] = dE
    out[1, 3] = dF
    out[3, 1] = dF
    out[2, 2] = dC
    out[6, 6] = dC
    out[2, 6] = dC
    out[6, 2] = dC
    out[2, 4] = dB
    out[4, 2] = dB
    out[6, 4] = dB
    out[4, 6] = dB
    out[4, 4] = dA
    out[5, 5] = dG
    out[7, 7] = dG
    out[5, 7] = dH
    out[7, 5] = dH


def _fp_diag(omega, u, t):
    out = np.empty(3, dtype=np.complex128)
    out[0] = 1.0
    out[1] = np.exp(-1j * omega * t)
    out[2] = np.exp(-2j * (u + omega) * t)
    return out


def _embed_sector(out, kind, hr1, hr2, f):
    """Write the 81x81 layer matrix for one sector into `out`."""
    out[:, :] = 0.0
    if kind == 0:  # free: diagonal
        for a in range(3):
            for b in range(3):
                for c in range(3):
                    for d in range(3):
                        i = a * 27 + b * 9 + c * 3 + d
                        out[i, i] = f[a] * f[b] * f[c] * f[d]
    elif kind == 1:  # paral: hr1 on (1,2), hr2 on (3,4)
        for i1 in range(9):
            for j1 in range(9):
                v = hr1[i1, j1]
                if v != 0.0:
                    for i2 in range(9):
                        for j2 in range(9):
                            out[i1 * 9 + i2, j1 * 9 + j2] = v * hr2[i2, j2]
    elif kind == 2:  # inter: fp on 1, hr on (2,3), fp on 4
        for a in range(3):
            for d in range(3):
                fa = f[a] * f[d]
                for m in range(9):
                    for jm in range(9):
                        out[a * 27 + m * 3 + d, a * 27 + jm * 3 + d] = fa * hr1[m, jm]
    elif kind == 3:  # down: fp on 1, fp on 2, hr on (3,4)
        for a in range(3):
            for b in range(3):
                fa = f[a] * f[b]
                base = a * 27 + b * 9
                for m in range(9):
                    for jm in range(9):
                        out[base + m, base + jm] = fa * hr1[m, jm]
    else:  # up: hr on (1,2), fp on 3, fp on 4
        for c in range(3):
            for d in range(3):
                fa = f[c] * f[d]
                off = c * 3 + d
                for m in range(9):
                    for jm in range(9):
                        out[m * 9 + off, jm * 9 + off] = fa * hr1[m, jm]


def _cost_grad_core(
    js, omega, u, kinds, times, block_of, target, logic_idx, param_sector, param_slot
):
    """Cost and gradient over the sector chain.

    js: (M, 5) hopping rates, block-major packing order.
    kinds/times/block_of: per-sector descriptors, time ordered.
    param_sector/param_slot: sector index and HR slot of each packed parameter.
    """
    n = kinds.shape[0]
    units = np.empty((n, 81, 81), dtype=np.complex128)
    hr1 = np.empty((9, 9), dtype=np.complex128)
    hr2 = np.empty((9, 9), dtype=np.complex128)
    for k in range(n):
        kind = kinds[k]
        t = times[k]
        b = block_of[k]
        f = _fp_diag(omega, u, t)
        if kind == 1:
            _hr_fill(hr1, omega, u, js[b, 0], t)
            _hr_fill(hr2, omega, u, js[b, 1], t)
        elif kind == 2:
            _hr_fill(hr1, omega, u, js[b, 2], t)
        elif kind == 3:
            _hr_fill(hr1, omega, u, js[b, 3], t)
        elif kind == 4:
            _hr_fill(hr1, omega, u, js[b, 4], t)
        _embed_sector(units[k], kind, hr1, hr2, f)

    # forward logic columns and backward logic rows
    fwd = np.zeros((n + 1, 81, 4), dtype=np.complex128)
    for col in range(4):
        fwd[0, logic_idx[col], col] = 1.0
    for k in range(n):
        fwd[k + 1] = np.dot(units[k], fwd[k])
    bwd = np.zeros((n + 1, 4, 81), dtype=np.complex128)
    for row in range(4):
        bwd[n, row, logic_idx[row]] = 1.0
    for k in range(n - 1, -1, -1):
        bwd[k] = np.dot(bwd[k + 1], units[k])

    diff = np.empty((4, 4), dtype=np.complex128)
    for r in range(4):
        for col in range(4):
            diff[r, col] = fwd[n, logic_idx[r], col] - target[r, col]
    cost = 0.0
    for r in range(4):
        for col in range(4):
            cost += abs(diff[r, col]) ** 2

    n_params = param_sector.shape[0]
    grad = np.zeros(n_params)
    du = np.empty((81, 81), dtype=np.complex128)
    for p in range(n_params):
        k = param_sector[p]
        slot = param_slot[p]
        kind = kinds[k]
        t = times[k]
        b = block_of[k]
        f = _fp_diag(omega, u, t)
        if kind == 1:
            if slot == 0:
                _dhr_fill(hr1, omega, u, js[b, 0], t)
                _hr_fill(hr2, omega, u, js[b, 1], t)
            else:
                _hr_fill(hr1, omega, u, js[b, 0], t)
                _dhr_fill(hr2, omega, u, js[b, 1], t)
        elif kind == 2:
            _dhr_fill(hr1, omega, u, js[b, 2], t)
        elif kind == 3:
            _dhr_fill(hr1, omega, u, js[b, 3], t)
        else:
            _dhr_fill(hr1, omega, u, js[b, 4], t)
        _embed_sector(du, kind, hr1, hr2, f)
        if kind == 1:
            du[0, 0] = 0.0  # vacuum entry has no J dependence
        sand = np.dot(bwd[k + 1], np.dot(du, fwd[k]))
        g = 0.0
        for r in range(4):
            for col in range(4):
                g += (diff[r, col].conjugate() * sand[r, col]).real
        grad[p] = 2.0 * g
    return cost, grad


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) integration of the Lindblad master equation with a
# piecewise-constant Hamiltonian.  State is the full 81x81 density matrix.
# ---------------------------------------------------------------------------

_DP_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    ]
)
_DP_B5 = np.array(
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0]
)
_DP_B4 = np.array(
    [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ]
)


def _lindblad_rhs(rho, h, offs, rows, cols, vals, rates, diag):
    """d(rho)/dt = -i[H, rho] + sum_k rate_k (C rho C^+ - 1/2 {C^+C, rho}).

    Collapse operators are passed in concatenated COO form (offs delimits
    operator k as rows/cols/vals[offs[k]:offs[k+1]]); all of them have
    diagonal C^+C, whose rate-weighted sum is precomputed in `diag`, so
    the anticommutator is elementwise and only C rho C^+ needs a scatter.
    """
    out = -1j * (np.dot(h, rho) - np.dot(rho, h))
    d = rho.shape[0]
    for r in range(d):
        for c in range(d):
            out[r, c] -= 0.5 * (diag[r] + diag[c]) * rho[r, c]
    for k in range(rates.shape[0]):
        rate = rates[k]
        if rate != 0.0:
            for p in range(offs[k], offs[k + 1]):
                rp = rows[p]
                cp = cols[p]
                vp = rate * vals[p]
                for q in range(offs[k], offs[k + 1]):
                    out[rp, rows[q]] += vp * np.conj(vals[q]) * rho[cp, cols[q]]
    return out


def _integrate_sector(
    rho, h, offs, rows, cols, vals, rates, diag, duration, rtol, atol, h0, hmax
):
    """Adaptive DP5(4) over one sector with constant H.

    Returns (rho_final, suggested_next_step, status); status 0 on success,
    1 on step-size underflow.
    """
    a = _DP_A
    b5 = _DP_B5
    b4 = _DP_B4
    t = 0.0
    step = min(h0, duration)
    kstages = np.empty((7, 81, 81), dtype=np.complex128)
    err_prev = 1.0
    kstages[0] = _lindblad_rhs(rho, h, offs, rows, cols, vals, rates, diag)  # FSAL
    while t < duration:
        if step > duration - t:
            step = duration - t
        if step < 1e-12 * duration:
            return rho, step, 1
        for i in range(1, 6):
            y = rho.copy()
            for j in range(i):
                if a[i, j] != 0.0:
                    y += (step * a[i, j]) * kstages[j]
            kstages[i] = _lindblad_rhs(y, h, offs, rows, cols, vals, rates, diag)
        y5 = rho.copy()
        for j in range(6):
            if b5[j] != 0.0:
                y5 += (step * b5[j]) * kstages[j]
        kstages[6] = _lindblad_rhs(y5, h, offs, rows, cols, vals, rates, diag)
        # embedded 4th-order error estimate
        errmat = np.zeros((81, 81), dtype=np.complex128)
        for j in range(7):
            db = b5[j] - b4[j]
            if db != 0.0:
                errmat += (step * db) * kstages[j]
        # weighted RMS norm over matrix entries
        num = 0.0
        for r in range(81):
            for c in range(81):
                scale = atol + rtol * max(abs(rho[r, c]), abs(y5[r, c]))
                e = abs(errmat[r, c]) / scale
                num += e * e
        err = np.sqrt(num / (81.0 * 81.0))
        if err <= 1.0:
            t += step
            rho = y5
            kstages[0] = kstages[6]
            err = max(err, 1e-10)
            # PI controller (Hairer): order-5 pair
            fac = 0.9 * err ** (-0.7 / 5.0) * err_prev ** (0.4 / 5.0)
            err_prev = err
            step = step * min(5.0, max(0.2, fac))
        else:
            step = step * min(1.0, max(0.2, 0.9 * err ** (-0.2)))
        if step > hmax:
            step = hmax
    return rho, step, 0


# The loop-style bodies above are written for numba; the numpy fallback
# paths live next to their callers (objective.py, lindblad.py) in
# vectorized form.  When numba is off, the exported kernels are None and
# callers dispatch to the fallbacks.
if NUMBA_ENABLED:
    _hr_fill = numba.njit(cache=True)(_hr_fill)
    _dhr_fill = numba.njit(cache=True)(_dhr_fill)
    _fp_diag = numba.njit(cache=True)(_fp_diag)
    _embed_sector = numba.njit(cache=True)(_embed_sector)
    _lindblad_rhs = numba.njit(cache=True)(_lindblad_rhs)
    cost_grad_core = numba.njit(cache=True)(_cost_grad_core)
    integrate_sector = numba.njit(cache=True)(_integrate_sector)
else:
    cost_grad_core = None
    integrate_sector = None
