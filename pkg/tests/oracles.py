"""Independent reference computations used to pin expected test values.

Everything here is deliberately written the dumb, direct way (explicit
loops, textbook formulas, none of the package's own machinery) so it can
serve as an oracle for the library code.
"""

import numpy as np


def causal_autocorr(f):
    """Coefficients of F(z) F*(1/z) for causal F(z) = sum_l f_l z^{-l}.

    Returns an array of length 2n-1 holding the coefficient of z^{-k} at
    position k + n - 1 (k ascending from -(n-1) to n-1).
    """
    f = np.asarray(f, dtype=complex)
    n = len(f)
    r = np.zeros(2 * n - 1, dtype=complex)
    for k in range(-(n - 1), n):
        acc = 0.0 + 0.0j
        for l in range(n):
            if 0 <= l + k < n:
                acc += f[l + k] * np.conj(f[l])
        r[k + n - 1] = acc
    return r


def arc_gram_oracle(fvec, gvec, d0, d1):
    """Coefficients of F(z)F*(1/z) + D(z) G(z)G*(1/z) by direct convolution.

    ``fvec`` has length n, ``gvec`` length n-1; the result has length
    2n-1, coefficient of z^{-k} at position k + n - 1.
    """
    n = len(fvec)
    rf = causal_autocorr(fvec)
    out = rf.copy()
    if len(gvec):
        rg = causal_autocorr(gvec)  # k = -(n-2) .. n-2
        d = np.array([np.conj(d1), d0, d1], dtype=complex)  # k = -1, 0, 1
        prod = np.convolve(d, rg)  # k = -(n-1) .. n-1
        out += prod
    return out


def hermitian_from(rng, size):
    """Random dense Hermitian matrix."""
    a = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    return (a + a.conj().T) / 2.0


def _local_maxima_circular(v):
    return np.nonzero((v >= np.roll(v, 1)) & (v >= np.roll(v, -1)))[0]


def _small_weighted_bp(As, x_m, w_s, z, u, rho, gap_tol, iters=60000, alpha=1.7):
    """ADMM for min sum w|c| s.t. As c = x on a small explicit column set.

    Runs until its own duality gap on the working set drops below
    gap_tol relative. Returns (c feasible, z, u, rho, y) where y solves
    As^H y = rho u in the least squares sense (the dual vector implied by
    the multiplier).
    """
    import scipy.linalg

    gram = As @ As.conj().T
    # tiny ridge so degenerate working sets cannot break the projection
    gram_f = scipy.linalg.cho_factor(gram + 1e-12 * np.trace(gram).real * np.eye(len(x_m)))
    # affine projection as one dense matvec: v - pinv_part (As v - x)
    pinv_part = As.conj().T @ scipy.linalg.cho_solve(gram_f, As)
    offset = As.conj().T @ scipy.linalg.cho_solve(gram_f, x_m)

    def project(v):
        return v - pinv_part @ v + offset

    def dual_vector(u, rho):
        return scipy.linalg.cho_solve(gram_f, As @ (rho * u))

    for it in range(iters):
        c = project(z - u)
        ch = alpha * c + (1.0 - alpha) * z
        v = ch + u
        mag = np.abs(v)
        z_new = np.maximum(0.0, 1.0 - (w_s / rho) / np.maximum(mag, 1e-300)) * v
        u = u + ch - z_new
        if it % 250 == 249:
            r_cons = np.abs(c - z_new).max()
            r_dual = rho * np.abs(z_new - z).max()
            z = z_new
            cf = project(z)
            upper = float(np.sum(w_s * np.abs(cf)))
            y = dual_vector(u, rho)
            scale = max(float((np.abs(As.conj().T @ y) / w_s).max()), 1.0)
            lower = float(np.real(np.vdot(y, x_m))) / scale
            if upper - lower <= gap_tol * (1.0 + abs(upper)):
                break
            if r_cons > 10.0 * r_dual:
                rho *= 2.0
                u /= 2.0
            elif r_dual > 10.0 * r_cons:
                rho /= 2.0
                u *= 2.0
        else:
            z = z_new
    cf = project(z)
    return cf, z, u, rho, dual_vector(u, rho)


def grid_weighted_l1(x_m, indices, weight_grid, grid, tol=1e-5, max_rounds=40):
    """Weighted complex basis pursuit on a uniform frequency grid.

    Solves min sum_g w_g |c_g| s.t. sum_g c_g e^{i 2 pi (g/G) l} = x[l] on
    the observed indices, by column generation: a soft-threshold ADMM
    solves the problem restricted to a working set of grid columns, one
    FFT evaluates the implied dual polynomial on the whole grid, and the
    worst violators join the working set. Stops only when the feasible
    objective and a certified dual lower bound agree to tol relative, so
    the returned value is trustworthy to that accuracy. Returns
    (objective, c) with c on the full grid.

    Deliberately independent of the package solver: different splitting,
    different cone, different code path.
    """
    x_m = np.asarray(x_m, dtype=complex)
    indices = np.asarray(indices, dtype=int)
    w = np.asarray(weight_grid, dtype=float)
    G = int(grid)
    m = len(indices)
    assert len(w) == G
    if not np.any(x_m):
        return 0.0, np.zeros(G, dtype=complex)

    def dual_grid(y):
        y_ext = np.zeros(G, dtype=complex)
        y_ext[indices] = y
        return np.fft.fft(y_ext)  # sum_l y_l e^{-i 2 pi g l / G}

    # seed: matched-filter local maxima plus a uniform backstop
    mf = np.abs(dual_grid(x_m)) / w
    peaks = _local_maxima_circular(mf)
    top = peaks[np.argsort(mf[peaks])][-4 * m :]
    working = set(top.tolist()) | set(range(0, G, G // (4 * m)))

    warm_z = {}
    warm_u = {}
    rho = max(float(np.median(w)), 1e-3)
    for _ in range(max_rounds):
        s_arr = np.array(sorted(working))
        As = np.exp(2j * np.pi * np.outer(indices, s_arr / G))
        z = np.array([warm_z.get(g, 0.0j) for g in s_arr])
        u = np.array([warm_u.get(g, 0.0j) for g in s_arr])
        cf, z, u, rho, y = _small_weighted_bp(As, x_m, w[s_arr], z, u, rho, 0.2 * tol)
        warm_z = dict(zip(s_arr.tolist(), z))
        warm_u = dict(zip(s_arr.tolist(), u))
        assert np.abs(As @ cf - x_m).max() < 1e-8 * (1.0 + np.abs(x_m).max())
        upper = float(np.sum(w[s_arr] * np.abs(cf)))

        ratio = np.abs(dual_grid(y)) / w
        lower = float(np.real(np.vdot(y, x_m))) / max(float(ratio.max()), 1.0)
        if upper - lower <= tol * (1.0 + abs(upper)):
            c = np.zeros(G, dtype=complex)
            c[s_arr] = cf
            return upper, c
        viol = _local_maxima_circular(ratio)
        viol = viol[ratio[viol] > 1.0 + 1e-12]
        working |= set(viol[np.argsort(ratio[viol])][-2 * m :].tolist())
    raise RuntimeError("grid oracle failed to certify its optimum")
