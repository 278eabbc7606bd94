"""Piecewise-deterministic Markov processes: local characteristics and simulation.

A model is described by its flow, jump rate, exit time and jump kernel.
All model methods are vectorised: they take an integer array of modes of
shape ``(n,)`` and a float array of coordinates of shape ``(n, dim)`` and
work row by row.  Scalar convenience wrappers (``flow_at``,
``sample_sojourn``, ``simulate_chain``...) accept a :class:`State`.

The exit time of a state may be unbounded (no boundary is ever reached
along the flow).  It is represented by the sentinel ``UNBOUNDED`` and code
paths branch on :func:`is_bounded` before doing any arithmetic with it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError
from .streams import make_rng

UNBOUNDED = math.inf

SIMPSON_PANELS = 64
SIMPSON_MAX_PANELS = 4096
SIMPSON_RTOL = 1e-8
BISECTION_RTOL = 1e-10
BISECTION_MAXITER = 200


def is_bounded(tstar):
    """True where an exit time is finite."""
    return np.isfinite(tstar)


@dataclass(frozen=True)
class State:
    """A point ``(mode, coords)`` of the state space."""

    mode: int
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "mode", int(self.mode))
        object.__setattr__(self, "coords", tuple(float(c) for c in np.atleast_1d(self.coords)))
        if self.mode < 0:
            raise DomainError(f"negative mode {self.mode}")

    def arrays(self):
        return np.array([self.mode]), np.array([self.coords], dtype=float)


@dataclass(frozen=True)
class LipschitzMeta:
    """Regularity constants of a model, used by the a-priori error bound.

    ``C_tstar`` is ``None`` when the exit time is unbounded; the horizon
    then stands in for it.  Any other field left to ``None`` counts as
    missing metadata.
    """

    C_lambda: float | None = None
    lip_lambda: float | None = None
    C_tstar: float | None = None
    lip_tstar: float | None = None
    lip_Q: float | None = None

    def __post_init__(self):
        for name in ("C_lambda", "lip_lambda", "C_tstar", "lip_tstar", "lip_Q"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {v}")


class PdmpModel:
    """Base class for a PDMP given by its local characteristics.

    Subclasses set ``model_id``, ``n_modes``, ``dim``, ``meta`` and
    implement ``flow``, ``jump_rate``, ``exit_time`` and ``kernel``.
    ``cumulative_hazard`` falls back to Simpson quadrature of the jump
    rate along the flow; ``hazard_inverse`` may return ``None`` in which
    case sojourn sampling uses bisection.
    """

    model_id = "pdmp"
    n_modes = 1
    dim = 1
    coord_names: tuple = ()
    meta = LipschitzMeta()

    def params_dict(self) -> dict:
        return {}

    # -- local characteristics -------------------------------------------
    def flow(self, mode, coords, t):
        raise NotImplementedError

    def jump_rate(self, mode, coords):
        raise NotImplementedError

    def exit_time(self, mode, coords):
        raise NotImplementedError

    def kernel(self, mode, coords, at_boundary, rng):
        """Draw post-jump states from pre-jump states.

        ``at_boundary`` tells which rows were forced jumps; it is a function
        of the pre-jump point and is passed along only to spare models a
        floating-point comparison against the boundary.
        """
        raise NotImplementedError

    def contains(self, mode, coords):
        return np.ones(len(mode), dtype=bool)

    def cumulative_hazard(self, mode, coords, t):
        return integrate_along_flow(self, self.jump_rate, mode, coords, t)

    def hazard_inverse(self, mode, coords, e):
        return None

    @property
    def tstar_bounded(self) -> bool:
        return self.meta.C_tstar is not None

    def __repr__(self):
        return f"{type(self).__name__}({self.model_id!r})"


# -- quadrature -------------------------------------------------------------

def _simpson(func, model, mode, coords, t, n):
    u = np.asarray(t)[:, None] * (np.arange(n + 1) / n)[None, :]
    rows = len(mode)
    m = np.repeat(mode, n + 1)
    c = np.repeat(coords, n + 1, axis=0)
    vals = np.asarray(func(m, model.flow(m, c, u.ravel())), dtype=float).reshape(rows, n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return vals @ w * (np.asarray(t) / (3.0 * n))


def integrate_along_flow(model, func, mode, coords, t, *, rtol=SIMPSON_RTOL,
                         n0=SIMPSON_PANELS, n_max=SIMPSON_MAX_PANELS):
    """Integrate ``func(mode, coords)`` along the flow from ``coords`` over ``[0, t]``.

    Composite Simpson with ``n0`` panels, doubled until two successive
    estimates agree to ``rtol`` (relative), at most ``n_max`` panels.
    """
    mode = np.asarray(mode)
    coords = np.asarray(coords, dtype=float).reshape(len(mode), -1)
    t = np.broadcast_to(np.asarray(t, dtype=float), mode.shape).copy()
    out = np.zeros(len(mode))
    todo = np.flatnonzero(t > 0)
    if todo.size == 0:
        return out
    chunk = max(1, 2_000_000 // (2 * n_max + 1))
    for lo in range(0, todo.size, chunk):
        idx = todo[lo:lo + chunk]
        n = n0
        prev = _simpson(func, model, mode[idx], coords[idx], t[idx], n)
        while True:
            n *= 2
            cur = _simpson(func, model, mode[idx], coords[idx], t[idx], n)
            err = np.abs(cur - prev)
            ok = err <= rtol * np.maximum(np.abs(cur), 1e-300)
            ok |= err == 0
            out[idx[ok]] = cur[ok]
            if ok.all():
                break
            if n >= n_max:
                raise NumericError(f"quadrature did not converge with {n} panels")
            idx, prev = idx[~ok], cur[~ok]
    return out


# -- sojourn sampling -------------------------------------------------------

def _bisect_hazard(model, mode, coords, e, hi):
    """Solve Lambda(x, s) = e for s in [0, hi] row-wise."""
    lo = np.zeros_like(e)
    hi = hi.copy()
    unb = ~is_bounded(hi)
    if unb.any():
        hi[unb] = 1.0
        grow = np.flatnonzero(unb)
        for _ in range(BISECTION_MAXITER):
            lam = model.cumulative_hazard(mode[grow], coords[grow], hi[grow])
            short = lam < e[grow]
            if not short.any():
                break
            lo[grow[short]] = hi[grow[short]]
            hi[grow[short]] *= 2.0
            grow = grow[short]
        else:
            raise NumericError("hazard never reaches the drawn level on an unbounded exit time")
    tol = BISECTION_RTOL * hi
    active = np.arange(len(e))
    for _ in range(BISECTION_MAXITER):
        mid = 0.5 * (lo[active] + hi[active])
        lam = model.cumulative_hazard(mode[active], coords[active], mid)
        below = lam < e[active]
        lo[active[below]] = mid[below]
        hi[active[~below]] = mid[~below]
        active = active[(hi[active] - lo[active]) > tol[active]]
        if active.size == 0:
            return 0.5 * (lo + hi)
    raise NumericError("hazard inversion did not converge")


def sample_sojourns(model, mode, coords, rng):
    """Draw inter-jump times from the states ``(mode, coords)``.

    Inverse transform: with ``E ~ Exp(1)``, the sojourn is the exit time if
    ``E`` reaches the cumulative hazard at the exit time (a forced boundary
    jump), otherwise the root of ``Lambda(x, s) = E``.

    Returns
    -------
    s : ndarray
        Sojourn times.
    hit : ndarray of bool
        True exactly for forced jumps at the boundary.
    """
    rng = make_rng(rng)
    mode = np.asarray(mode)
    coords = np.asarray(coords, dtype=float)
    n = len(mode)
    e = rng.standard_exponential(n)
    tstar = np.asarray(model.exit_time(mode, coords), dtype=float)
    bounded = is_bounded(tstar)
    hit = np.zeros(n, dtype=bool)
    s = np.empty(n)
    if bounded.any():
        b = np.flatnonzero(bounded)
        lam_star = model.cumulative_hazard(mode[b], coords[b], tstar[b])
        hit[b] = e[b] >= lam_star
    s[hit] = tstar[hit]
    rest = np.flatnonzero(~hit)
    if rest.size:
        inv = model.hazard_inverse(mode[rest], coords[rest], e[rest])
        if inv is None:
            inv = _bisect_hazard(model, mode[rest], coords[rest], e[rest], tstar[rest])
        else:
            inv = np.asarray(inv, dtype=float)
            fin = is_bounded(tstar[rest])
            inv[fin] = np.minimum(inv[fin], tstar[rest][fin])
        s[rest] = inv
    return s, hit


# -- path simulation --------------------------------------------------------

@dataclass
class Paths:
    """A batch of embedded-chain paths, indexed ``[path, step]``.

    ``boundary[:, k]`` flags that the ``k``-th jump was forced at the
    boundary; column 0 holds the starting state with ``S_0 = T_0 = 0``.
    """

    modes: np.ndarray
    coords: np.ndarray
    sojourns: np.ndarray
    times: np.ndarray
    boundary: np.ndarray

    @property
    def n_paths(self):
        return self.modes.shape[0]

    @property
    def n_jumps(self):
        return self.modes.shape[1] - 1


def simulate_paths(model, x0: State, n_jumps: int, n_paths: int, rng) -> Paths:
    """Simulate ``n_paths`` independent chains ``(Z_k, S_k)``, ``k = 0..n_jumps``."""
    if n_jumps < 0:
        raise ValueError("n_jumps must be non-negative")
    rng = make_rng(rng)
    d = model.dim
    modes = np.empty((n_paths, n_jumps + 1), dtype=np.int64)
    coords = np.empty((n_paths, n_jumps + 1, d))
    sojourns = np.zeros((n_paths, n_jumps + 1))
    times = np.zeros((n_paths, n_jumps + 1))
    boundary = np.zeros((n_paths, n_jumps + 1), dtype=bool)
    modes[:, 0] = x0.mode
    coords[:, 0] = x0.coords
    m, c = modes[:, 0], coords[:, 0]
    for k in range(1, n_jumps + 1):
        s, hit = sample_sojourns(model, m, c, rng)
        pre = model.flow(m, c, s)
        m, c = model.kernel(m, pre, hit, rng)
        modes[:, k], coords[:, k] = m, c
        sojourns[:, k] = s
        times[:, k] = times[:, k - 1] + s
        boundary[:, k] = hit
    return Paths(modes, coords, sojourns, times, boundary)


@dataclass
class EmbeddedSample:
    """One path ``(Z_k, S_k, T_k)``, ``k = 0..N``."""

    states: list
    sojourns: np.ndarray
    times: np.ndarray
    boundary: np.ndarray = field(default=None)

    @property
    def steps(self):
        return list(zip(self.states, self.sojourns, self.times))

    def __len__(self):
        return len(self.states)


def simulate_chain(model, x0: State, n_jumps: int, rng) -> EmbeddedSample:
    p = simulate_paths(model, x0, n_jumps, 1, rng)
    states = [State(p.modes[0, k], p.coords[0, k]) for k in range(n_jumps + 1)]
    return EmbeddedSample(states, p.sojourns[0], p.times[0], p.boundary[0])


# -- scalar conveniences ----------------------------------------------------

def exit_time(model, x: State) -> float:
    m, c = x.arrays()
    return float(model.exit_time(m, c)[0])


def _check_time(model, x, t):
    if t < 0:
        raise DomainError(f"negative time {t}")
    ts = exit_time(model, x)
    if is_bounded(ts) and t > ts * (1 + 1e-9) + 1e-12:
        raise DomainError(f"time {t} beyond exit time {ts}")


def flow_at(model, x: State, t: float) -> State:
    _check_time(model, x, t)
    m, c = x.arrays()
    return State(x.mode, model.flow(m, c, np.array([t]))[0])


def cumulative_hazard(model, x: State, t: float) -> float:
    _check_time(model, x, t)
    m, c = x.arrays()
    return float(model.cumulative_hazard(m, c, np.array([float(t)]))[0])


def sample_sojourn(model, x: State, rng) -> tuple[float, bool]:
    m, c = x.arrays()
    s, hit = sample_sojourns(model, m, c, rng)
    return float(s[0]), bool(hit[0])
