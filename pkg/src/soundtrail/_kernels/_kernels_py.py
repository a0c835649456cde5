"""Pure numpy implementations of the hot kernels.

Reference semantics for the compiled twin in _kernels_cy.pyx: both backends
consume the same precomputed filter tables, so outputs agree to float64
rounding. Inner loops here are vectorized and chunked to bound memory.
"""

import numpy as np

#: output samples processed per block in resample (64 taps * 8 B each)
_RESAMPLE_BLOCK = 65536


def resample_table(src_rate, dst_rate, taps=64, phases=1024, beta=8.6):
    """Kaiser-windowed sinc interpolation table.

    Rows are fractional phases 0..phases (inclusive, for linear
    interpolation), columns the `taps` filter coefficients. The sinc cutoff
    is scaled for downsampling so the filter also acts as the anti-alias
    lowpass.
    """
    half = taps // 2
    cutoff = min(1.0, dst_rate / src_rate)
    p = np.arange(phases + 1, dtype=np.float64) / phases
    j = np.arange(taps, dtype=np.float64)
    # tap offset relative to the interpolation point, in input samples
    u = (j[None, :] - (half - 1)) - p[:, None]
    core = cutoff * np.sinc(cutoff * u)
    x = u / half
    win = np.where(np.abs(x) <= 1.0, np.i0(beta * np.sqrt(np.clip(1.0 - x * x, 0.0, 1.0))) / np.i0(beta), 0.0)
    return np.ascontiguousarray(core * win)


def resample_sinc(x, src_rate, dst_rate, table):
    """Band-limited resampling of 1-D float64 `x` using `table`.

    Output length is round(len(x) * dst_rate / src_rate), half-up to match
    the compiled kernel. Samples outside the input are treated as zero; each
    output is normalized by its tap sum so DC gain is exactly 1.
    """
    x = np.asarray(x, dtype=np.float64)
    n_in = x.shape[0]
    n_out = int(np.floor(n_in * dst_rate / src_rate + 0.5))
    if n_out == 0:
        return np.zeros(0, dtype=np.float64)
    taps = table.shape[1]
    half = taps // 2
    phases = table.shape[0] - 1
    ratio = src_rate / dst_rate

    padded = np.concatenate([np.zeros(half), x, np.zeros(taps)])
    out = np.empty(n_out, dtype=np.float64)
    for start in range(0, n_out, _RESAMPLE_BLOCK):
        stop = min(start + _RESAMPLE_BLOCK, n_out)
        i = np.arange(start, stop, dtype=np.float64)
        t = i * ratio
        n0 = np.floor(t).astype(np.int64)
        frac = t - n0
        fp = frac * phases
        p0 = fp.astype(np.int64)
        w = (fp - p0)[:, None]
        coeff = table[p0] * (1.0 - w) + table[p0 + 1] * w
        # first tap reads x[n0 - (half-1)]; +half compensates the pad
        base = n0 - (half - 1) + half
        idx = base[:, None] + np.arange(taps)
        seg = padded[idx]
        out[start:stop] = np.einsum("ij,ij->i", seg, coeff) / coeff.sum(axis=1)
    return out


def lag_costs(a, b, max_lag, min_overlap):
    """Mean absolute difference between a[t] and b[t-lag] per integer lag.

    Returns an array of length 2*max_lag+1 for lags -max_lag..+max_lag;
    entries with overlap shorter than min_overlap are NaN.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = a.shape[0], b.shape[0]
    out = np.full(2 * max_lag + 1, np.nan, dtype=np.float64)
    for k, lag in enumerate(range(-max_lag, max_lag + 1)):
        t0 = max(0, lag)
        t1 = min(na, nb + lag)
        if t1 - t0 < min_overlap:
            continue
        out[k] = np.mean(np.abs(a[t0:t1] - b[t0 - lag:t1 - lag]))
    return out
