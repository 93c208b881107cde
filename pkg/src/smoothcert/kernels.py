"""Hot numeric kernels: counter-based seed mixing, uniform-to-normal transform,
and the inverse standard-normal CDF.

Two interchangeable backends are built from the same constants: numba
``@njit`` loops (default when numba imports) and vectorized numpy. Setting
``SMOOTHCERT_NO_NUMBA=1`` selects the numpy path. Both paths are required to
produce bitwise-identical output: cached noise seeds are replayed across
processes, so the transform avoids libm calls whose last bit varies between
scalar and SIMD code (``log`` is computed from ``frexp`` plus a fixed
rational polynomial; ``sqrt`` and arithmetic are correctly rounded by IEEE
754 and cannot diverge).
"""

from __future__ import annotations

import math
import os

import numpy as np

_FORCE_NUMPY = os.environ.get("SMOOTHCERT_NO_NUMBA", "") not in ("", "0")

try:
    if _FORCE_NUMPY:
        raise ImportError("numba disabled by SMOOTHCERT_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

MASK64 = (1 << 64) - 1

# SplitMix64 stream/finalizer constants (Steele, Lea & Flood).
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

# 2^-53; uniforms are ((v >> 11) + 0.5) * 2^-53, strictly inside (0, 1).
_U53 = 1.1102230246251565e-16

# Rational approximations for the inverse normal CDF and for log on
# [sqrt(1/2), sqrt(2)), both translated from the Cephes math library
# (Moshier, public domain).
_P0 = np.array([
    -5.99633501014107895267e1, 9.80010754185999661536e1,
    -5.66762857469070293439e1, 1.39312609387279679503e1,
    -1.23916583867381258016e0,
])
_Q0 = np.array([
    1.0, 1.95448858338141759834e0, 4.67627912898881538453e0,
    8.63602421390890590575e1, -2.25462687854119370527e2,
    2.00260212380060660359e2, -8.20372256168333339912e1,
    1.59056225126211695515e1, -1.18331621121330003142e0,
])
_P1 = np.array([
    4.05544892305962419923e0, 3.15251094599893866154e1,
    5.71628192246421288162e1, 4.40805073893200834700e1,
    1.46849561928858024014e1, 2.18663306850790267539e0,
    -1.40256079171354495875e-1, -3.50424626827848203418e-2,
    -8.57456785154685413611e-4,
])
_Q1 = np.array([
    1.0, 1.57799883256466749731e1, 4.53907635128879210584e1,
    4.13172038254672030440e1, 1.50425385692907503408e1,
    2.50464946208309415979e0, -1.42182922854787788574e-1,
    -3.80806407691578277194e-2, -9.33259480895457427372e-4,
])
_P2 = np.array([
    3.23774891776946035970e0, 6.91522889068984211695e0,
    3.93881025292474443415e0, 1.33303460815807542389e0,
    2.01485389549179081538e-1, 1.23716634817820021358e-2,
    3.01581553508235416007e-4, 2.65806974686737550832e-6,
    6.23974539184983651783e-9,
])
_Q2 = np.array([
    1.0, 6.02427039364742014255e0, 3.67983563856160859403e0,
    1.37702099489081330271e0, 2.16236993594496635890e-1,
    1.34204006088543189037e-2, 3.28014464682127739104e-4,
    2.89247864745380683936e-6, 6.79019408009981274425e-9,
])
_S2PI = 2.50662827463100050242e0
_EXP_M2 = 0.13533528323661269189

_LP = np.array([
    4.5270000862445199635215e-5, 4.9854102823193375972212e-1,
    6.5787325942061044846969e0, 2.9911919328553073277375e1,
    6.0949667980987787057556e1, 5.7112963590585538103336e1,
    2.0039553499201281259648e1,
])
_LQ = np.array([
    1.0, 1.5062909083469192043167e1, 8.3047565967967209469434e1,
    2.2176239823732856465394e2, 3.0909872225312059774938e2,
    2.1642788614495947685003e2, 6.0118660497603843919306e1,
])
_SQRTH = 7.07106781186547524401e-1
_LOG2_HI = 6.93145751953125e-1
_LOG2_LO = 1.42860682030941723212e-6


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer (pure-python, non-hot path)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _np_polevl(x, coef):
    ans = np.full_like(x, coef[0])
    for c in coef[1:]:
        ans = ans * x + c
    return ans


def _np_mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _np_log(u):
    m, e = np.frexp(u)
    low = m < _SQRTH
    m = np.where(low, m * 2.0, m)
    e = np.where(low, e - 1, e)
    x = m - 1.0
    z = x * x
    z = -0.5 * z + x * (z * _np_polevl(x, _LP) / _np_polevl(x, _LQ))
    fe = e.astype(np.float64)
    r = x + z
    r = r + fe * _LOG2_LO
    return r + fe * _LOG2_HI


def np_ndtri(p):
    """Vectorized inverse normal CDF; caller guarantees 0 < p < 1."""
    p = np.asarray(p, dtype=np.float64)
    negate = p > 1.0 - _EXP_M2
    y = np.where(negate, 1.0 - p, p)
    central = y > _EXP_M2
    yc = np.where(central, y - 0.5, 0.0)
    y2 = yc * yc
    xc = (yc + yc * (y2 * _np_polevl(y2, _P0) / _np_polevl(y2, _Q0))) * _S2PI
    yt = np.where(central, 0.5, y)  # dummy value in central lanes
    x = np.sqrt(-2.0 * _np_log(yt))
    x0 = x - _np_log(x) / x
    z = 1.0 / x
    x1 = np.where(
        x < 8.0,
        z * _np_polevl(z, _P1) / _np_polevl(z, _Q1),
        z * _np_polevl(z, _P2) / _np_polevl(z, _Q2),
    )
    xt = -(x0 - x1)
    out = np.where(central, xc, xt)
    return np.where(negate, -out, out)


def np_derive_seeds(master: int, count: int) -> np.ndarray:
    idx = np.arange(1, count + 1, dtype=np.uint64)
    return _np_mix64(np.uint64(master & MASK64) + idx * GOLDEN)


def np_normal_rows(seeds: np.ndarray, dim: int) -> np.ndarray:
    """Unit-normal matrix, one row per seed; entry (i, j) depends only on
    (seeds[i], j)."""
    ctr = np.arange(1, dim + 1, dtype=np.uint64) * GOLDEN
    v = _np_mix64(seeds[:, None] + ctr[None, :])
    u = ((v >> np.uint64(11)).astype(np.float64) + 0.5) * _U53
    return np_ndtri(u)


# ---------------------------------------------------------------------------
# numba backend
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _nb_polevl(x, coef):
        ans = coef[0]
        for i in range(1, coef.shape[0]):
            ans = ans * x + coef[i]
        return ans

    @njit(cache=True, nogil=True)
    def _nb_mix64(z):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))

    @njit(cache=True, nogil=True)
    def _nb_log(u):
        m, e = math.frexp(u)
        if m < _SQRTH:
            m = m * 2.0
            e = e - 1
        x = m - 1.0
        z = x * x
        z = -0.5 * z + x * (z * _nb_polevl(x, _LP) / _nb_polevl(x, _LQ))
        fe = float(e)
        r = x + z
        r = r + fe * _LOG2_LO
        return r + fe * _LOG2_HI

    @njit(cache=True, nogil=True)
    def _nb_ndtri(p):
        negate = p > 1.0 - _EXP_M2
        y = 1.0 - p if negate else p
        if y > _EXP_M2:
            y = y - 0.5
            y2 = y * y
            x = (y + y * (y2 * _nb_polevl(y2, _P0) / _nb_polevl(y2, _Q0))) * _S2PI
            return -x if negate else x
        x = math.sqrt(-2.0 * _nb_log(y))
        x0 = x - _nb_log(x) / x
        z = 1.0 / x
        if x < 8.0:
            x1 = z * _nb_polevl(z, _P1) / _nb_polevl(z, _Q1)
        else:
            x1 = z * _nb_polevl(z, _P2) / _nb_polevl(z, _Q2)
        xt = -(x0 - x1)
        return -xt if negate else xt

    @njit(cache=True, nogil=True)
    def nb_ndtri(p):
        out = np.empty_like(p)
        for i in range(p.shape[0]):
            out[i] = _nb_ndtri(p[i])
        return out

    @njit(cache=True, nogil=True)
    def nb_derive_seeds(master, count):
        out = np.empty(count, dtype=np.uint64)
        m = np.uint64(master)
        for i in range(count):
            out[i] = _nb_mix64(m + np.uint64(i + 1) * GOLDEN)
        return out

    @njit(cache=True, nogil=True)
    def nb_normal_rows(seeds, dim):
        n = seeds.shape[0]
        out = np.empty((n, dim), dtype=np.float64)
        for i in range(n):
            s = seeds[i]
            for j in range(dim):
                v = _nb_mix64(s + np.uint64(j + 1) * GOLDEN)
                u = (float(v >> np.uint64(11)) + 0.5) * _U53
                out[i, j] = _nb_ndtri(u)
        return out

else:
    nb_ndtri = None
    nb_derive_seeds = None
    nb_normal_rows = None


if HAVE_NUMBA:
    BACKEND = "numba"

    def derive_seeds(master: int, count: int) -> np.ndarray:
        return nb_derive_seeds(np.uint64(master & MASK64), count)

    def ndtri_array(p) -> np.ndarray:
        return nb_ndtri(np.ascontiguousarray(p, dtype=np.float64))

    normal_rows = nb_normal_rows
else:
    BACKEND = "numpy"
    derive_seeds = np_derive_seeds
    ndtri_array = np_ndtri
    normal_rows = np_normal_rows


def ndtri_scalar(p: float) -> float:
    return float(ndtri_array(np.array([p], dtype=np.float64))[0])
