"""Sampled-function containers shared by every stage of the pipelines.

A Profile stores a real function on an interval as uniform-grid samples and
evaluates through a piecewise-cubic interpolant, so a single smoothness
contract serves all roles (wave speed, convection term, potential, initial
data).  Boundary observations, extracted exponential modes and eigenvalue
counting tables get their own small containers with invariants enforced at
construction.  All containers are immutable; operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline, make_interp_spline
from scipy.integrate import simpson

from .errors import DomainError, ResolutionError, ValidationError

PROFILE_KINDS = ("speed", "convection", "potential", "initial_data", "generic")
TRACE_FLAVORS = ("dirichlet", "neumann")

# Endpoint/support conditions are validated to this absolute tolerance.
ENDPOINT_TOL = 1e-10

_FMT = "{:.17g}"


def _fmt(x: float) -> str:
    return _FMT.format(float(x))


def _require_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{what} contains non-finite values")


@dataclass(frozen=True)
class Profile:
    """A real-valued function on [left, right] sampled on a uniform grid.

    Parameters
    ----------
    left, right : float
        Interval endpoints, ``left < right``.
    samples : ndarray
        Ordered values on the uniform grid including both endpoints,
        at least 4 of them.
    kind : str
        One of ``speed``, ``convection``, ``potential``, ``initial_data``
        or ``generic``.  ``speed`` profiles must be strictly positive.
    background : float, optional
        Declared background level for ``speed`` profiles; when given, the
        samples must equal it at both endpoints (within ``ENDPOINT_TOL``)
        so the speed perturbation is supported strictly inside.
    """

    left: float
    right: float
    samples: np.ndarray
    kind: str = "generic"
    background: float | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float).copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "left", float(self.left))
        object.__setattr__(self, "right", float(self.right))
        if self.kind not in PROFILE_KINDS:
            raise ValidationError(f"unknown profile kind {self.kind!r}")
        if samples.ndim != 1 or samples.size < 4:
            raise ValidationError("profile needs at least 4 samples on one axis")
        if not self.right > self.left:
            raise ValidationError("profile interval must have positive length")
        _require_finite(samples, "profile")
        if self.kind == "speed":
            if np.any(samples <= 0.0):
                raise ValidationError("speed profile must be strictly positive")
            if self.background is not None:
                c0 = float(self.background)
                tol = ENDPOINT_TOL * max(1.0, abs(c0))
                if abs(samples[0] - c0) > tol or abs(samples[-1] - c0) > tol:
                    raise ValidationError(
                        "speed must equal the declared background at both endpoints"
                    )

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_callable(cls, fn, left: float, right: float, count: int,
                      kind: str = "generic", background: float | None = None
                      ) -> "Profile":
        x = np.linspace(left, right, count)
        return cls(left, right, np.asarray(fn(x), dtype=float), kind, background)

    @classmethod
    def constant(cls, value: float, left: float = 0.0, right: float = 1.0,
                 count: int = 33, kind: str = "generic",
                 background: float | None = None) -> "Profile":
        return cls(left, right, np.full(count, float(value)), kind, background)

    # -- geometry --------------------------------------------------------------

    @property
    def count(self) -> int:
        return self.samples.size

    @property
    def spacing(self) -> float:
        return (self.right - self.left) / (self.count - 1)

    @cached_property
    def grid(self) -> np.ndarray:
        g = np.linspace(self.left, self.right, self.count)
        g.setflags(write=False)
        return g

    @cached_property
    def _spline(self) -> CubicSpline:
        return CubicSpline(self.grid, self.samples, bc_type="not-a-knot")

    # -- evaluation ------------------------------------------------------------

    def __call__(self, x):
        """Piecewise-cubic interpolant value; exact at grid nodes."""
        xa = np.asarray(x, dtype=float)
        slack = 1e-12 * (self.right - self.left)
        if np.any(xa < self.left - slack) or np.any(xa > self.right + slack):
            raise DomainError(
                f"evaluation outside [{self.left}, {self.right}]"
            )
        out = self._spline(np.clip(xa, self.left, self.right))
        return float(out) if np.isscalar(x) else out

    def derivative(self, order: int = 1) -> "Profile":
        """Interpolant derivative sampled on the same grid.

        Uses a quintic interpolant of the same samples so that second
        derivatives keep O(h^4) accuracy; endpoint values come from the
        one-sided end polynomials.
        """
        if order not in (1, 2):
            raise ValidationError("derivative order must be 1 or 2")
        if self.count < 8:
            raise ResolutionError("need at least 8 samples to differentiate")
        spl = make_interp_spline(self.grid, self.samples, k=5)
        vals = spl.derivative(order)(self.grid)
        return Profile(self.left, self.right, vals, kind="generic")

    def resample(self, count: int) -> "Profile":
        """Same function re-sampled on a uniform grid with `count` nodes."""
        if count < 4:
            raise ResolutionError("resample target needs at least 4 nodes")
        x = np.linspace(self.left, self.right, count)
        return Profile(self.left, self.right, self._spline(x), self.kind,
                       self.background)

    def integral(self) -> float:
        """Composite-Simpson integral over the full interval."""
        return float(simpson(self.samples, dx=self.spacing))

    def restrict(self, left: float, right: float, count: int | None = None,
                 kind: str | None = None) -> "Profile":
        """Restriction to a sub-interval, re-sampled uniformly."""
        if left < self.left - 1e-12 or right > self.right + 1e-12:
            raise DomainError("restriction exceeds the profile interval")
        n = count or max(4, int(round((right - left) / self.spacing)) + 1)
        x = np.linspace(left, right, n)
        return Profile(left, right, self._spline(x), kind or self.kind)

    # -- serialization ---------------------------------------------------------

    def to_csv(self, path: str | Path) -> None:
        lines = [f"# {self.kind},{_fmt(self.left)},{_fmt(self.right)},{self.count}"]
        lines += [_fmt(v) for v in self.samples]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "Profile":
        raw = Path(path).read_text().strip().splitlines()
        if not raw or not raw[0].startswith("#"):
            raise ValidationError(f"{path}: missing profile header")
        kind, left, right, count = raw[0].lstrip("# ").split(",")
        values = np.array([float(v) for v in raw[1:]], dtype=float)
        if values.size != int(count):
            raise ValidationError(f"{path}: header count does not match rows")
        return cls(float(left), float(right), values, kind)


def support_bounds(p: Profile, rel_tol: float = 1e-10) -> tuple[float, float]:
    """Smallest grid interval containing all samples above rel_tol * max|p|."""
    mags = np.abs(p.samples)
    tol = rel_tol * max(mags.max(), 1e-300)
    idx = np.nonzero(mags > tol)[0]
    if idx.size == 0:
        return (p.left, p.left)
    return (p.grid[idx[0]], p.grid[idx[-1]])


def estimate_decay_rate(t: np.ndarray, values: np.ndarray) -> float | None:
    """Empirical exponential decay rate of a trace envelope.

    Log-linear fit of block maxima over the last quarter of the trace;
    returns None when the tail carries no signal or does not decay.
    """
    values = np.abs(np.asarray(values, dtype=float))
    n = values.size
    if n < 8:
        return None
    peak = values.max()
    if peak <= 0.0:
        return None
    start = 3 * n // 4
    tail = values[start:]
    t_tail = t[start:]
    nblocks = min(8, tail.size // 2)
    if nblocks < 2:
        return None
    edges = np.linspace(0, tail.size, nblocks + 1).astype(int)
    tops, centers = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        tops.append(max(tail[a:b].max(), peak * 1e-16))
        centers.append(0.5 * (t_tail[a] + t_tail[b - 1]))
    tops = np.log(np.asarray(tops))
    centers = np.asarray(centers)
    slope = np.polyfit(centers, tops, 1)[0]
    kappa = -slope
    if not np.isfinite(kappa) or kappa <= 0.0:
        return None
    # Keep the order-of-magnitude consistency invariant satisfied.
    i_max = int(np.argmax(values))
    span = t[-1] - t[i_max]
    if span > 0 and values[-1] > 0:
        bound = (math.log(10.0) + math.log(peak / values[-1])) / span
        kappa = min(kappa, bound)
    return float(kappa) if kappa > 0 else None


@dataclass(frozen=True)
class BoundaryTrace:
    """Uniformly time-sampled boundary observation at one spatial point.

    ``flavor`` says whether the values are the solution itself (dirichlet)
    or its spatial derivative (neumann).  ``decay_rate_estimate`` is the
    empirical exponential rate of the tail envelope, when one exists.
    """

    t0: float
    dt: float
    values: np.ndarray
    flavor: str = "dirichlet"
    decay_rate_estimate: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))
        if self.flavor not in TRACE_FLAVORS:
            raise ValidationError(f"unknown trace flavor {self.flavor!r}")
        if values.ndim != 1 or values.size < 2:
            raise ValidationError("trace needs at least 2 samples")
        if not self.dt > 0:
            raise ValidationError("trace time step must be positive")
        _require_finite(values, "trace")
        k = self.decay_rate_estimate
        if k is not None:
            if not k > 0:
                raise ValidationError("decay_rate_estimate must be positive")
            mags = np.abs(values)
            peak = mags.max()
            if peak > 0:
                span = self.dt * (values.size - 1 - int(np.argmax(mags)))
                if mags[-1] > peak * math.exp(-k * span) * 10.0:
                    raise ValidationError(
                        "decay_rate_estimate inconsistent with the trace tail"
                    )

    @classmethod
    def with_decay_estimate(cls, t0: float, dt: float, values: np.ndarray,
                            flavor: str = "dirichlet") -> "BoundaryTrace":
        t = t0 + dt * np.arange(len(values))
        kappa = estimate_decay_rate(t, np.asarray(values, dtype=float))
        return cls(t0, dt, values, flavor, kappa)

    @property
    def count(self) -> int:
        return self.values.size

    @cached_property
    def times(self) -> np.ndarray:
        t = self.t0 + self.dt * np.arange(self.count)
        t.setflags(write=False)
        return t

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.count - 1)

    def to_csv(self, path: str | Path) -> None:
        lines = [f"# {self.flavor},{_fmt(self.t0)},{_fmt(self.dt)},{self.count}"]
        lines += [_fmt(v) for v in self.values]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "BoundaryTrace":
        raw = Path(path).read_text().strip().splitlines()
        if not raw or not raw[0].startswith("#"):
            raise ValidationError(f"{path}: missing trace header")
        flavor, t0, dt, count = raw[0].lstrip("# ").split(",")
        values = np.array([float(v) for v in raw[1:]], dtype=float)
        if values.size != int(count):
            raise ValidationError(f"{path}: header count does not match rows")
        return cls.with_decay_estimate(float(t0), float(dt), values, flavor)


@dataclass(frozen=True)
class ModeSet:
    """Extracted exponential modes or a plain eigenvalue list.

    ``lambdas`` are strictly increasing eigenvalues, ``amplitudes`` the
    matching coefficients (zero when only eigenvalues are meant) and
    ``confidences`` per-mode quality scores in [0, 1].
    ``interval_length`` records the spectral interval the eigenvalues
    belong to.
    """

    lambdas: np.ndarray
    amplitudes: np.ndarray
    confidences: np.ndarray
    interval_length: float

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float).copy()
        amp = np.asarray(self.amplitudes, dtype=float).copy()
        conf = np.asarray(self.confidences, dtype=float).copy()
        for a in (lam, amp, conf):
            a.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "confidences", conf)
        object.__setattr__(self, "interval_length", float(self.interval_length))
        if not (lam.size == amp.size == conf.size):
            raise ValidationError("mode arrays must have equal length")
        _require_finite(lam, "eigenvalues")
        _require_finite(amp, "amplitudes")
        if lam.size > 1 and np.any(np.diff(lam) <= 0):
            raise ValidationError("eigenvalues must be strictly increasing")
        if np.any((conf < 0) | (conf > 1)):
            raise ValidationError("confidences must lie in [0, 1]")
        if not self.interval_length > 0:
            raise ValidationError("interval_length must be positive")

    @classmethod
    def eigenvalues_only(cls, lambdas, interval_length: float) -> "ModeSet":
        lam = np.asarray(lambdas, dtype=float)
        return cls(lam, np.zeros_like(lam), np.ones_like(lam), interval_length)

    def __len__(self) -> int:
        return self.lambdas.size

    def confident(self, threshold: float = 0.5) -> "ModeSet":
        keep = self.confidences >= threshold
        return ModeSet(self.lambdas[keep], self.amplitudes[keep],
                       self.confidences[keep], self.interval_length)

    def to_csv(self, path: str | Path) -> None:
        lines = [f"# {_fmt(self.interval_length)},{len(self)}"]
        for lam, amp, conf in zip(self.lambdas, self.amplitudes, self.confidences):
            lines.append(f"{_fmt(lam)},{_fmt(amp)},{_fmt(conf)}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "ModeSet":
        raw = Path(path).read_text().strip().splitlines()
        if not raw or not raw[0].startswith("#"):
            raise ValidationError(f"{path}: missing mode-set header")
        interval_length, count = raw[0].lstrip("# ").split(",")
        rows = [tuple(float(v) for v in line.split(",")) for line in raw[1:]]
        if len(rows) != int(count):
            raise ValidationError(f"{path}: header count does not match rows")
        arr = np.array(rows, dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], float(interval_length))


@dataclass(frozen=True)
class SpectrumCounts:
    """Eigenvalue counting functions at a set of thresholds.

    ``total`` counts all reference eigenvalues up to each threshold,
    ``observed`` the matched ones and ``vanishing`` those whose data
    coefficient vanished; all three are monotone non-decreasing with
    ``0 <= observed, vanishing <= total``.
    """

    thresholds: np.ndarray
    total: np.ndarray
    observed: np.ndarray
    vanishing: np.ndarray

    def __post_init__(self):
        thr = np.asarray(self.thresholds, dtype=float).copy()
        tot = np.asarray(self.total, dtype=int).copy()
        obs = np.asarray(self.observed, dtype=int).copy()
        van = np.asarray(self.vanishing, dtype=int).copy()
        for a in (thr, tot, obs, van):
            a.setflags(write=False)
        object.__setattr__(self, "thresholds", thr)
        object.__setattr__(self, "total", tot)
        object.__setattr__(self, "observed", obs)
        object.__setattr__(self, "vanishing", van)
        if not (thr.size == tot.size == obs.size == van.size):
            raise ValidationError("count arrays must have equal length")
        if thr.size > 1 and np.any(np.diff(thr) <= 0):
            raise ValidationError("thresholds must be strictly increasing")
        for name, a in (("total", tot), ("observed", obs), ("vanishing", van)):
            if np.any(a < 0) or (a.size > 1 and np.any(np.diff(a) < 0)):
                raise ValidationError(f"{name} counts must be monotone and >= 0")
        if np.any(obs > tot) or np.any(van > tot):
            raise ValidationError("observed/vanishing cannot exceed total")

    def vanishing_density(self) -> np.ndarray:
        """d(threshold) / sqrt(threshold), the density audited against eps/pi."""
        return self.vanishing / np.sqrt(np.maximum(self.thresholds, 1e-300))

    def observed_fraction(self) -> np.ndarray:
        return self.observed / np.maximum(self.total, 1)

    def to_csv(self, path: str | Path) -> None:
        lines = [f"# {self.thresholds.size}"]
        for t, n, s, d in zip(self.thresholds, self.total, self.observed,
                              self.vanishing):
            lines.append(f"{_fmt(t)},{n},{s},{d}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "SpectrumCounts":
        raw = Path(path).read_text().strip().splitlines()
        if not raw or not raw[0].startswith("#"):
            raise ValidationError(f"{path}: missing counts header")
        count = int(raw[0].lstrip("# "))
        rows = [line.split(",") for line in raw[1:]]
        if len(rows) != count:
            raise ValidationError(f"{path}: header count does not match rows")
        thr = np.array([float(r[0]) for r in rows])
        tot = np.array([int(r[1]) for r in rows])
        obs = np.array([int(r[2]) for r in rows])
        van = np.array([int(r[3]) for r in rows])
        return cls(thr, tot, obs, van)
