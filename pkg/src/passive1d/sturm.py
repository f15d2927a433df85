"""Dirichlet eigenvalue machinery for -psi'' + q psi = E psi and -c^2 v'' = E v.

Both problems are treated in the canonical form

    psi'' = (q(x) - E w(x)) psi,   psi(0) = 0,  psi'(0) = 1,

with w = 1 for the Schroedinger form and (q, w) = (0, 1/c^2) for the
weighted wave form.  Eigenvalues are located by scaled Pruefer-angle
counting (which cannot skip modes), refined by bisection and polished by
Newton steps that use the variational ODE for d psi(L)/dE.  All searches
are vectorized across the mode index; integration is fixed-step RK4 with
the step count chosen from the oscillation rate and the requested
relative tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import RangeLimitError, ResolutionError, SpectralError
from .profiles import ModeSet, Profile

# exp(680) is still representable; beyond this the shot solution overflows.
_GROWTH_LIMIT = 680.0

_EIGEN_TOL = 1e-8


@dataclass(frozen=True)
class EndpointData:
    """Value and slope of a shot solution at the right endpoint."""

    value: float
    slope: float


@dataclass(frozen=True)
class EigenPair:
    """One normalized Dirichlet eigenpair.

    ``left_slope`` is positive by sign convention; ``index`` counts from 1
    and equals one plus the number of interior zeros.
    """

    index: int
    lam: float
    eigenfunction: Profile
    left_slope: float
    right_slope: float


# ---------------------------------------------------------------------------
# canonical problem plumbing


class _Canonical:
    """q, w sampled on half-step grids, cached per step count."""

    def __init__(self, q_fn, w_fn, L: float):
        self.q_fn = q_fn
        self.w_fn = w_fn
        self.L = float(L)
        self._cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def halfgrid(self, n: int) -> tuple[np.ndarray, np.ndarray, float]:
        if n not in self._cache:
            x = np.linspace(0.0, self.L, 2 * n + 1)
            self._cache[n] = (np.asarray(self.q_fn(x), dtype=float),
                              np.asarray(self.w_fn(x), dtype=float))
        qh, wh = self._cache[n]
        return qh, wh, self.L / n


def _schroedinger(q: Profile) -> _Canonical:
    off = q.left

    def q_fn(x):
        return q(x + off)

    return _Canonical(q_fn, lambda x: np.ones_like(x), q.right - q.left)


def _weighted(c: Profile) -> _Canonical:
    off = c.left

    def w_fn(x):
        return 1.0 / c(x + off) ** 2

    return _Canonical(lambda x: np.zeros_like(x), w_fn, c.right - c.left)


def _phase_steps(SL: float, rtol: float, n_min: int = 384,
                 n_max: int = 400_000) -> int:
    """RK4 step count keeping the relative phase error below rtol.

    The per-step phase error of RK4 on an oscillator of rate S is
    (hS)^5/120, so (hS)^4 <= 60 rtol keeps the accumulated angle error
    below rtol * S * L / 2, i.e. a relative eigenvalue error of rtol.
    """
    h_s = (60.0 * max(rtol, 1e-14)) ** 0.25
    n = int(math.ceil(SL / h_s)) if SL > 0 else 0
    return min(n_max, max(n_min, n))


# ---------------------------------------------------------------------------
# vectorized RK4 kernels (E may be an array; q, w are scalars per node)


def _theta_end(E, S, qh, wh, h, n):
    """Scaled Pruefer angle at x = L for the canonical problem."""
    theta = np.zeros_like(E)
    invS = 1.0 / S
    half = 0.5 * h
    sixth = h / 6.0
    for i in range(n):
        j = 2 * i
        q0, w0 = qh[j], wh[j]
        qm, wm = qh[j + 1], wh[j + 1]
        q1, w1 = qh[j + 2], wh[j + 2]
        s = np.sin(theta)
        c = np.cos(theta)
        k1 = S * c * c + (E * w0 - q0) * invS * s * s
        t = theta + half * k1
        s = np.sin(t)
        c = np.cos(t)
        k2 = S * c * c + (E * wm - qm) * invS * s * s
        t = theta + half * k2
        s = np.sin(t)
        c = np.cos(t)
        k3 = S * c * c + (E * wm - qm) * invS * s * s
        t = theta + h * k3
        s = np.sin(t)
        c = np.cos(t)
        k4 = S * c * c + (E * w1 - q1) * invS * s * s
        theta += sixth * (k1 + 2.0 * (k2 + k3) + k4)
    return theta


def _shoot_end(E, qh, wh, h, n, store_every: int = 0):
    """(psi(L), psi'(L)) for psi(0)=0, psi'(0)=1; optionally store nodes."""
    u = np.zeros_like(E)
    v = np.ones_like(E)
    half = 0.5 * h
    sixth = h / 6.0
    stored = None
    if store_every:
        stored = np.empty((n // store_every + 1,) + u.shape)
        stored[0] = u
    for i in range(n):
        j = 2 * i
        a0 = qh[j] - E * wh[j]
        am = qh[j + 1] - E * wh[j + 1]
        a1 = qh[j + 2] - E * wh[j + 2]
        ku1 = v
        kv1 = a0 * u
        u2 = u + half * ku1
        v2 = v + half * kv1
        kv2 = am * u2
        u3 = u + half * v2
        v3 = v + half * kv2
        kv3 = am * u3
        u4 = u + h * v3
        v4 = v + h * kv3
        kv4 = a1 * u4
        u = u + sixth * (ku1 + 2.0 * (v2 + v3) + v4)
        v = v + sixth * (kv1 + 2.0 * (kv2 + kv3) + kv4)
        if store_every and (i + 1) % store_every == 0:
            stored[(i + 1) // store_every] = u
    return u, v, stored


def _shoot_variational(E, qh, wh, h, n):
    """psi(L), psi'(L) and p(L) = d psi(L)/dE via the variational ODE."""
    u = np.zeros_like(E)
    v = np.ones_like(E)
    p = np.zeros_like(E)
    s = np.zeros_like(E)
    half = 0.5 * h
    sixth = h / 6.0
    for i in range(n):
        j = 2 * i
        a0 = qh[j] - E * wh[j]
        am = qh[j + 1] - E * wh[j + 1]
        a1 = qh[j + 2] - E * wh[j + 2]
        w0, wm, w1 = wh[j], wh[j + 1], wh[j + 2]

        kv1 = a0 * u
        ks1 = a0 * p - w0 * u
        u2 = u + half * v
        v2 = v + half * kv1
        p2 = p + half * s
        s2 = s + half * ks1

        kv2 = am * u2
        ks2 = am * p2 - wm * u2
        u3 = u + half * v2
        v3 = v + half * kv2
        p3 = p + half * s2
        s3 = s + half * ks2

        kv3 = am * u3
        ks3 = am * p3 - wm * u3
        u4 = u + h * v3
        v4 = v + h * kv3
        p4 = p + h * s3
        s4 = s + h * ks3

        kv4 = a1 * u4
        ks4 = a1 * p4 - w1 * u4
        u = u + sixth * (v + 2.0 * (v2 + v3) + v4)
        v = v + sixth * (kv1 + 2.0 * (kv2 + kv3) + kv4)
        p = p + sixth * (s + 2.0 * (s2 + s3) + s4)
        s = s + sixth * (ks1 + 2.0 * (ks2 + ks3) + ks4)
    return u, v, p


# ---------------------------------------------------------------------------
# eigenvalue search


def _eigen_solve(can: _Canonical, K: int, rtol: float,
                 grid_count: int) -> np.ndarray:
    L = can.L
    probe = np.linspace(0.0, L, 4 * grid_count + 1)
    w_probe = np.asarray(can.w_fn(probe), dtype=float)
    q_probe = np.asarray(can.q_fn(probe), dtype=float)
    ell = float(simpson(np.sqrt(w_probe), x=probe))
    wbar = float(np.mean(w_probe))
    qbar = float(np.mean(q_probe))
    q_osc = float(q_probe.max() - q_probe.min())

    k = np.arange(1, K + 1, dtype=float)
    centers = (k * math.pi / ell) ** 2 + qbar
    lo = ((k - 0.5) * math.pi / ell) ** 2 + qbar - q_osc - 1.0
    hi = ((k + 0.5) * math.pi / ell) ** 2 + qbar + q_osc + 1.0
    S = np.sqrt(np.maximum(1.0, centers * wbar - qbar))
    targets = k * math.pi

    SL = float(S.max() * L)
    n_min = max(384, grid_count - 1)
    n_b = _phase_steps(SL, 1e-4, n_min=n_min)
    n_m = _phase_steps(SL, max(rtol, 1e-6), n_min=n_min)
    n_f = _phase_steps(SL, rtol, n_min=n_min)

    qh, wh, h = can.halfgrid(n_b)

    # Expand brackets until the Pruefer counts certify them:
    # theta(L; lo) < k pi < theta(L; hi).
    step = np.maximum(1.0, hi - lo)
    for _ in range(60):
        theta = _theta_end(lo, S, qh, wh, h, n_b)
        bad = theta >= targets
        if not bad.any():
            break
        lo[bad] -= step[bad]
        step[bad] *= 2.0
    else:
        raise SpectralError("failed to bracket the requested eigenvalues")
    step = np.maximum(1.0, hi - lo)
    for _ in range(60):
        theta = _theta_end(hi, S, qh, wh, h, n_b)
        bad = theta <= targets
        if not bad.any():
            break
        hi[bad] += step[bad]
        step[bad] *= 2.0
    else:
        raise SpectralError("failed to bracket the requested eigenvalues")

    for _ in range(8):
        mid = 0.5 * (lo + hi)
        theta = _theta_end(mid, S, qh, wh, h, n_b)
        up = theta < targets
        lo[up] = mid[up]
        hi[~up] = mid[~up]

    lam = 0.5 * (lo + hi)
    qh, wh, h = can.halfgrid(n_m)
    p_end = None
    for _ in range(4):
        u, v, p_end = _shoot_variational(lam, qh, wh, h, n_m)
        step = -u / p_end
        step = np.where(np.isfinite(step), step, 0.0)
        step = np.clip(step, lo - lam, hi - lam)
        lam = lam + step
        if np.all(np.abs(step) * L / (2.0 * S) < 1e-12):
            break

    u_last, v_last = u, v
    if n_f > n_m:
        qh, wh, h = can.halfgrid(n_f)
        for _ in range(3):
            u_last, v_last, _ = _shoot_end(lam, qh, wh, h, n_f)
            step = np.where(np.abs(p_end) > 0, -u_last / p_end, 0.0)
            lam = lam + np.clip(step, lo - lam, hi - lam)

    bad = np.abs(u_last) > _EIGEN_TOL * (1.0 + np.abs(v_last))
    if bad.any():
        qh, wh, h = can.halfgrid(n_f)
        for idx in np.nonzero(bad)[0]:
            lam[idx] = _bisect_rescue(can, float(lo[idx]), float(hi[idx]),
                                      float(targets[idx]), float(S[idx]),
                                      qh, wh, h, n_f)
    if np.any(np.diff(lam) <= 0):
        raise SpectralError("eigenvalue ordering lost; refine the grid")
    return lam


def _bisect_rescue(can, lo, hi, target, S, qh, wh, h, n):
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        theta = _theta_end(np.array([mid]), np.array([S]), qh, wh, h, n)[0]
        if theta < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * (1.0 + abs(mid)):
            break
    return 0.5 * (lo + hi)


def _max_k(grid_count: int) -> int:
    # About four grid nodes per eigenfunction half-wave keeps zero counts
    # and quadratures trustworthy.
    return max(4, (grid_count - 1) // 4)


def _growth_guard(can: _Canonical, E_min: float, grid_count: int) -> None:
    x = np.linspace(0.0, can.L, 2 * grid_count + 1)
    g = np.max(np.asarray(can.q_fn(x)) - E_min * np.asarray(can.w_fn(x)))
    if g > 0 and can.L * math.sqrt(g) > _GROWTH_LIMIT:
        bound = (_GROWTH_LIMIT / can.L) ** 2
        raise RangeLimitError(
            f"spectral parameter below max(q) - {bound:.3g}: "
            "shot solution would overflow"
        )


# ---------------------------------------------------------------------------
# public operations


def shoot(q: Profile, lam: float, rtol: float = 1e-10) -> EndpointData:
    """Endpoint data of the solution with psi(0)=0, psi'(0)=1.

    Raises RangeLimitError for lam below max(q) - (680/L)^2, where the
    solution grows past floating-point range.
    """
    values, slopes = shoot_many(q, np.array([lam]), rtol)
    return EndpointData(float(values[0]), float(slopes[0]))


def shoot_many(q: Profile, lams: np.ndarray,
               rtol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized shoot over an array of spectral parameters."""
    can = _schroedinger(q)
    lams = np.asarray(lams, dtype=float)
    _growth_guard(can, float(lams.min()), q.count)
    q_hi = float(np.max(np.abs(q.samples)))
    S = math.sqrt(max(1.0, float(np.max(np.abs(lams))) + q_hi))
    n = _phase_steps(S * can.L, rtol, n_min=max(384, q.count - 1))
    qh, wh, h = can.halfgrid(n)
    u, v, _ = _shoot_end(lams, qh, wh, h, n)
    return u, v


def dirichlet_eigenvalues(q: Profile, K: int, rtol: float = 1e-10) -> ModeSet:
    """First K Dirichlet eigenvalues of -d2/dx2 + q on its interval.

    Pruefer-angle counting brackets every mode (none can be skipped),
    bisection narrows the bracket and Newton steps on the shot solution
    polish the root.  Each returned lam satisfies
    |psi(L; lam)| < 1e-8 (1 + |psi'(L; lam)|).
    """
    if K < 1:
        raise ResolutionError("K must be at least 1")
    kmax = _max_k(q.count)
    if K > kmax:
        raise ResolutionError(
            f"grid with {q.count} nodes supports at most K={kmax} eigenvalues"
        )
    lam = _eigen_solve(_schroedinger(q), K, rtol, q.count)
    return ModeSet.eigenvalues_only(lam, q.right - q.left)


def weighted_dirichlet_eigenvalues(c: Profile, K: int,
                                   rtol: float = 1e-10) -> ModeSet:
    """First K Dirichlet eigenvalues of -c^2 d2/dx2 via a weighted shoot in x."""
    if K < 1:
        raise ResolutionError("K must be at least 1")
    kmax = _max_k(c.count)
    if K > kmax:
        raise ResolutionError(
            f"grid with {c.count} nodes supports at most K={kmax} eigenvalues"
        )
    lam = _eigen_solve(_weighted(c), K, rtol, c.count)
    return ModeSet.eigenvalues_only(lam, c.right - c.left)


def dirichlet_eigenpairs(q: Profile, lams, rtol: float = 1e-10
                         ) -> list[EigenPair]:
    """Normalized eigenpairs for given eigenvalues (vectorized batch)."""
    can = _schroedinger(q)
    lams = np.atleast_1d(np.asarray(lams, dtype=float))
    L = can.L
    count = q.count
    q_hi = float(np.max(np.abs(q.samples)))
    S = math.sqrt(max(1.0, float(lams.max()) + q_hi))
    n_base = _phase_steps(S * L, rtol, n_min=max(384, count - 1))
    stride = max(1, int(math.ceil(n_base / (count - 1))))
    n = stride * (count - 1)
    qh, wh, h = can.halfgrid(n)
    u, v, stored = _shoot_end(lams, qh, wh, h, n, store_every=stride)

    bad = np.abs(u) > 1e-6 * (1.0 + np.abs(v))
    if bad.any():
        raise SpectralError(
            f"{int(bad.sum())} value(s) are not Dirichlet eigenvalues "
            "of this potential"
        )
    pairs = []
    grid = np.linspace(q.left, q.right, count)
    dx = grid[1] - grid[0]
    for m, lam in enumerate(lams):
        psi = stored[:, m].copy()
        psi[-1] = 0.0  # exact boundary value at a certified eigenvalue
        norm = math.sqrt(float(simpson(psi * psi, dx=dx)))
        if norm <= 0 or abs(v[m]) / norm < 1e-12:
            raise SpectralError("degenerate eigenfunction normalization")
        phi = psi / norm
        interior = phi[1:-1]
        zeros = int(np.sum(np.abs(np.diff(np.sign(interior))) > 1))
        pairs.append(EigenPair(
            index=zeros + 1,
            lam=float(lam),
            eigenfunction=Profile(q.left, q.right, phi, kind="generic"),
            left_slope=1.0 / norm,
            right_slope=float(v[m]) / norm,
        ))
    return pairs


def dirichlet_eigenfunction(q: Profile, lam: float,
                            rtol: float = 1e-10) -> EigenPair:
    """Normalized eigenfunction of a certified eigenvalue, with end slopes."""
    return dirichlet_eigenpairs(q, [lam], rtol)[0]


def eigenvalue_sensitivity(q: Profile, pair: EigenPair) -> Profile:
    """Functional derivative d lam / d q(x): the squared eigenfunction."""
    ef = pair.eigenfunction
    if abs(ef.left - q.left) > 1e-12 or abs(ef.right - q.right) > 1e-12:
        raise SpectralError("eigenpair does not belong to this potential grid")
    return Profile(q.left, q.right, ef.samples ** 2, kind="generic")


def frozen_wave_solution(c: Profile, xi: float,
                         rtol: float = 1e-10) -> EndpointData:
    """Endpoint data of -c^2 v'' = xi^2 v with v(0)=0, v'(0)=1.

    The ODE is integrated directly in this form, so xi = 0 is an ordinary
    point (v = x) rather than a removable singularity.
    """
    values, slopes = frozen_wave_endpoints(c, np.array([xi]), rtol)
    return EndpointData(float(values[0]), float(slopes[0]))


def frozen_wave_endpoints(c: Profile, xis: np.ndarray,
                          rtol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized frozen-wave endpoint data over an array of frequencies."""
    can = _weighted(c)
    xis = np.asarray(xis, dtype=float)
    E = xis * xis
    w_hi = float(np.max(1.0 / c.samples ** 2))
    S = math.sqrt(max(1.0, float(E.max()) * w_hi))
    n = _phase_steps(S * can.L, rtol, n_min=max(384, c.count - 1))
    qh, wh, h = can.halfgrid(n)
    u, v, _ = _shoot_end(E, qh, wh, h, n)
    return u, v
