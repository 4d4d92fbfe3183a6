"""Pure-numpy versions of the hot kernels.

Selected at import when the compiled ``_kernels`` extension is missing or
``CHEBAPS_PURE=1`` is set. Signatures and results match the extension.
"""

import numpy as np

BLOCK_ZERO = 0
BLOCK_NONNEG = 1
BLOCK_FREE = 2
BLOCK_PSD = 3
BLOCK_L1 = 4

_RESCALE = 1e250
_TINY = 1e-6
_UNDERFLOW = 1e-280


def _lgamma(v):
    from math import lgamma
    return np.array([lgamma(t) for t in np.ravel(v)]).reshape(np.shape(v))


def bessel_table(nmax, x):
    """J_0..J_nmax at every entry of ``x`` by Miller's backward recurrence.

    Returns an array of shape ``(len(x), nmax + 1)``.
    """
    x = np.ascontiguousarray(x, dtype=float)
    out = np.zeros((x.size, nmax + 1))
    ax = np.abs(x)
    live = ax >= _TINY
    small = ~live
    if small.any():
        # two-term power series; relative error below x**4
        h = ax[small, None] / 2.0
        n = np.arange(nmax + 1)
        lg = n * np.log(np.maximum(h, 1e-300)) - _lgamma(n + 1.0)
        with np.errstate(under="ignore"):
            ser = np.exp(lg) * (1.0 - h * h / (n + 1.0))
        ser[:, 0] = 1.0 - h[:, 0] ** 2
        ser[ax[small] == 0.0, 1:] = 0.0
        sgn = np.where(x[small] < 0, -1.0, 1.0)[:, None] ** n
        out[small] = ser * sgn
        out[np.abs(out) < _UNDERFLOW] = 0.0
    if not live.any():
        return out
    xs = ax[live]
    top = max(nmax, int(np.ceil(xs.max())))
    start = top + 20 + int(10 * np.sqrt(top))
    start += start % 2
    tab = np.zeros((xs.size, nmax + 1))
    jp1 = np.zeros_like(xs)
    j = np.full_like(xs, 1e-300)
    norm = np.zeros_like(xs)
    two_over_x = 2.0 / xs
    for k in range(start, 0, -1):
        jm1 = k * two_over_x * j - jp1
        jp1, j = j, jm1
        if k - 1 <= nmax:
            tab[:, k - 1] = j
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
        big = np.abs(j) > _RESCALE
        if big.any():
            j[big] /= _RESCALE
            jp1[big] /= _RESCALE
            norm[big] /= _RESCALE
            tab[big] /= _RESCALE
    norm += j
    tab /= norm[:, None]
    neg = x[live] < 0
    if neg.any():
        tab[neg, 1::2] *= -1.0
    out[live] = tab
    out[np.abs(out) < _UNDERFLOW] = 0.0
    return out


def clenshaw(data, x):
    """Chebyshev sum with the first stored coefficient divided by sqrt(2)."""
    data = np.asarray(data, dtype=float)
    x = np.asarray(x, dtype=float)
    b1 = np.zeros_like(x)
    b2 = np.zeros_like(x)
    for k in range(data.size - 1, 0, -1):
        b1, b2 = data[k] + 2.0 * x * b1 - b2, b1
    return data[0] / np.sqrt(2.0) + x * b1 - b2


def _proj_psd(v, k):
    iu = np.tril_indices(k)
    s = np.zeros((k, k))
    off = iu[0] != iu[1]
    vals = v.copy()
    vals[off] /= np.sqrt(2.0)
    s[iu] = vals
    s = s + np.tril(s, -1).T
    w, q = np.linalg.eigh(s)
    pos = w > 0
    sp = (q[:, pos] * w[pos]) @ q[:, pos].T
    out = sp[iu]
    out[off] *= np.sqrt(2.0)
    return out


def project(v, rho, kinds, starts, lens, dims, weights):
    z = v.copy()
    for kind, s, ln, d, wt in zip(kinds, starts, lens, dims, weights):
        seg = slice(s, s + ln)
        if kind == BLOCK_ZERO:
            z[seg] = 0.0
        elif kind == BLOCK_NONNEG:
            np.maximum(z[seg], 0.0, out=z[seg])
        elif kind == BLOCK_PSD:
            z[seg] = _proj_psd(v[seg], d)
        elif kind == BLOCK_L1:
            t = wt / rho
            z[seg] = np.sign(v[seg]) * np.maximum(np.abs(v[seg]) - t, 0.0)
    return z


def admm_run(kinv, a, q, b, x, z, u, rho, sigma, alpha, n_iter,
             kinds, starts, lens, dims, weights):
    """Run ``n_iter`` relaxed ADMM steps, updating ``x``, ``z``, ``u`` in place."""
    for _ in range(n_iter):
        rhs = sigma * x - q + rho * (a.T @ (z + b - u))
        x[:] = kinv @ rhs
        w = a @ x - b
        v = alpha * w + (1.0 - alpha) * z + u
        z[:] = project(v, rho, kinds, starts, lens, dims, weights)
        u[:] = v - z
