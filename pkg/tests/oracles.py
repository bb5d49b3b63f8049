"""Slow, independent reference implementations used only by the tests.

They are written as plain loops from the defining formulas and share no
code with the package.
"""

import math

import numpy as np

PSI0 = 2.0 / (math.sqrt(3.0) * math.pi ** 0.25)


def psi(t):
    return PSI0 * (1.0 - t * t) * math.exp(-0.5 * t * t)


def cwt_direct(x, scales, dt, half_width=3.5):
    """coeffs[j, k] = sum_m x[(k + m) mod T] * h_j[m], with h_j the sampled,
    scale-normalised, zero-sum wavelet on |m| <= floor(half_width * sigma / dt)."""
    x = list(map(float, x))
    T = len(x)
    out = np.zeros((len(scales), T))
    for j, sigma in enumerate(scales):
        half = int(math.floor(half_width * sigma / dt))
        h = [psi(m * dt / sigma) * dt / math.sqrt(sigma) for m in range(-half, half + 1)]
        mean = sum(h) / len(h)
        h = [v - mean for v in h]
        for k in range(T):
            acc = 0.0
            for i, m in enumerate(range(-half, half + 1)):
                acc += x[(k + m) % T] * h[i]
            out[j, k] = acc
    return out


def kmeans_bruteforce(values):
    """Minimum within-cluster sum of squares over every sorted split.

    Returns ``(wcss, low_size)`` for the best split; among equal WCSS
    (relative 1e-9 of the total sum of squares) the largest low cluster.
    """
    v = sorted(float(x) for x in values)
    n = len(v)
    mean = sum(v) / n
    total = sum((x - mean) ** 2 for x in v)
    best = None
    for s in range(1, n):
        if v[s] == v[s - 1]:
            continue
        lo, hi = v[:s], v[s:]
        ml, mh = sum(lo) / len(lo), sum(hi) / len(hi)
        w = sum((x - ml) ** 2 for x in lo) + sum((x - mh) ** 2 for x in hi)
        if best is None or w < best[0] - 1e-9 * total:
            best = (w, s)
        elif abs(w - best[0]) <= 1e-9 * total:
            best = (min(w, best[0]), s)
    return best


def threshold_grid_scan(values, labels, step=0.001):
    """Best calibration accuracy of ``values >= t`` over a regular grid of t."""
    v = np.asarray(values, dtype=float)
    y = np.asarray(labels, dtype=bool)
    grid = np.arange(v.min() - step, v.max() + 2 * step, step)
    return max(float(np.mean((v >= t) == y)) for t in grid)


def natural_spline(xk, yk, x):
    """Natural cubic spline through (xk, yk), evaluated at x (inside the knots).

    Second derivatives from the tridiagonal system solved by the Thomas
    algorithm.
    """
    n = len(xk)
    h = [xk[i + 1] - xk[i] for i in range(n - 1)]
    # unknowns M_1..M_{n-2}; M_0 = M_{n-1} = 0
    m = n - 2
    M = [0.0] * n
    if m > 0:
        a = [h[i] for i in range(m)]            # sub-diagonal (M_i coefficient)
        b = [2 * (h[i] + h[i + 1]) for i in range(m)]
        c = [h[i + 1] for i in range(m)]
        d = [6 * ((yk[i + 2] - yk[i + 1]) / h[i + 1] - (yk[i + 1] - yk[i]) / h[i]) for i in range(m)]
        for i in range(1, m):
            w = a[i] / b[i - 1]
            b[i] -= w * c[i - 1]
            d[i] -= w * d[i - 1]
        sol = [0.0] * m
        sol[-1] = d[-1] / b[-1]
        for i in range(m - 2, -1, -1):
            sol[i] = (d[i] - c[i] * sol[i + 1]) / b[i]
        M[1:-1] = sol
    out = []
    for t in np.atleast_1d(x):
        i = min(max(int(np.searchsorted(xk, t, side="right")) - 1, 0), n - 2)
        hi = h[i]
        A = (xk[i + 1] - t) / hi
        B = (t - xk[i]) / hi
        out.append(
            A * yk[i] + B * yk[i + 1]
            + ((A ** 3 - A) * M[i] + (B ** 3 - B) * M[i + 1]) * hi * hi / 6.0
        )
    return np.array(out)


def link_invariant_violations(lines, frame_shift, max_distance=0.2):
    """Count violations of the line invariants over a set of lines.

    Checks: each maximum belongs to at most one line (so no shared
    parents or children), consecutive points are one scale apart and at
    most ``max_distance`` apart in time.
    """
    seen = set()
    bad = 0
    for line in lines:
        for p in line.points:
            key = (p.scale_index, p.frame)
            if key in seen:
                bad += 1
            seen.add(key)
        for a, b in zip(line.points, line.points[1:]):
            if b.scale_index != a.scale_index + 1:
                bad += 1
            if abs(b.frame - a.frame) * frame_shift > max_distance + 1e-9:
                bad += 1
    return bad


def band_limited_noise(rng, n, dt, f_lo, f_hi):
    """Unit-variance Gaussian noise with a flat spectrum on [f_lo, f_hi] Hz."""
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, dt)
    spec[(f < f_lo) | (f > f_hi)] = 0.0
    x = np.fft.irfft(spec, n)
    return x / np.std(x)


def center_frequency(sigma):
    """Peak of the Mexican hat spectrum at scale sigma, in Hz."""
    return math.sqrt(2.0) / (2.0 * math.pi * sigma)
