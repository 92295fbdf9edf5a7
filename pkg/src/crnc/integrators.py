"""Explicit Runge-Kutta integrators.

``dopri5`` is the Dormand-Prince 5(4) embedded pair with the Shampine
continuous extension for dense output.  ``rk4`` is the classical fixed-step
method, kept as an independent cross-check.  Both work on state arrays of
any shape; a leading batch axis integrates independent systems together.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SimulationError", "DopriStats", "dopri5", "dopri5_batch", "rk4"]


class SimulationError(RuntimeError):
    """Integration failed (non-finite state or step-size underflow)."""

    def __init__(self, message: str, t: float):
        self.t = float(t)
        super().__init__(f"{message} at t={self.t:.9g}")


# Dormand & Prince (1980) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# 5th-order minus embedded 4th-order weights (7 stages, FSAL)
_E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# dense output: y(t + th) = y + h * sum_s K_s * (P[s] . [th, th^2, th^3, th^4])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY, _MIN_FACTOR, _MAX_FACTOR = 0.9, 0.2, 5.0


@dataclass
class DopriStats:
    accepted: int = 0
    rejected: int = 0
    nfev: int = 0
    clamped: int = 0
    min_value: float = np.inf


def _initial_step(f, t0, y0, f0, rtol, atol, span):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = f(t0 + h0, y0 + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def dopri5(f, t0, t1, y0, t_out=(), *, rtol=1e-8, atol=1e-10, max_step=np.inf,
           h0=None, clamp_nonnegative=False, stats: DopriStats | None = None):
    """Integrate ``y' = f(t, y)`` from ``t0`` to ``t1``.

    Steps never pass ``t1``; callers integrate piecewise between
    breakpoints.  ``t_out`` (sorted, within ``[t0, t1]``) are sampled from
    the dense output.

    Returns ``(y_out, y1, h_last)`` with ``y_out`` of shape
    ``(len(t_out),) + y0.shape``.
    """
    stats = stats if stats is not None else DopriStats()
    y = np.array(y0, dtype=float)
    t_out = np.asarray(t_out, dtype=float)
    y_out = np.empty((len(t_out),) + y.shape)
    k_out = 0
    while k_out < len(t_out) and t_out[k_out] <= t0:
        y_out[k_out] = y
        k_out += 1
    span = t1 - t0
    if span <= 0:
        return y_out, y, h0
    fy = f(t0, y)
    stats.nfev += 1
    h = _initial_step(f, t0, y, fy, rtol, atol, span) if h0 is None else h0
    h = min(h, max_step, span)
    t = t0
    K = np.empty((7,) + y.shape)
    while t < t1:
        h_min = 16 * np.spacing(max(abs(t), 1.0))
        if h < h_min:
            raise SimulationError("step size underflow", t)
        last = t + h >= t1 - h_min
        if last:
            h = t1 - t
        K[0] = fy
        for s in range(1, 6):
            dy = sum(a * K[j] for j, a in enumerate(_A[s]) if a)
            K[s] = f(t + _C[s] * h, y + h * dy)
        y_new = y + h * np.tensordot(_B, K[:6], axes=1)
        t_new = t1 if last else t + h
        K[6] = f(t_new, y_new)
        stats.nfev += 6
        err = h * np.tensordot(_E, K, axes=1)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = np.max(np.abs(err) / scale)
        if not np.isfinite(err_norm) or not np.all(np.isfinite(y_new)):
            if h <= h_min:
                raise SimulationError("non-finite state", t)
            h *= 0.1
            stats.rejected += 1
            continue
        if err_norm > 1.0:
            h *= max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
            stats.rejected += 1
            continue
        # accepted: dense output for grid points in (t, t_new]
        if k_out < len(t_out) and t_out[k_out] <= t_new:
            j = k_out
            while j < len(t_out) and t_out[j] <= t_new:
                j += 1
            theta = (t_out[k_out:j] - t) / h
            powers = theta[:, None] ** np.arange(1, 5)[None, :]
            Q = np.tensordot(_P.T, K, axes=1)  # (4,) + shape
            yi = y + h * np.tensordot(powers, Q, axes=1)
            # grid points that coincide with the step end take the step value
            yi[t_out[k_out:j] == t_new] = y_new
            if clamp_nonnegative:
                # an interpolant dipping below -atol is inaccurate: retry with a shorter step
                if yi.min() < -atol and h > 2 * h_min:
                    h *= 0.5
                    stats.rejected += 1
                    continue
                np.maximum(yi, 0.0, out=yi)
            y_out[k_out:j] = yi
            k_out = j
        stats.accepted += 1
        stats.min_value = min(stats.min_value, float(y_new.min()))
        factor = _MAX_FACTOR if err_norm == 0 else min(_MAX_FACTOR, _SAFETY * err_norm ** -0.2)
        t, y, fy = t_new, y_new, K[6].copy()
        if clamp_nonnegative and np.any(y < 0):
            stats.clamped += 1
            y = np.maximum(y, 0.0)
            fy = f(t, y)
            stats.nfev += 1
        h = min(h * factor, max_step)
    return y_out, y, h


def rk4(f, t0, y0, dt, n_steps, record_every=1):
    """Classical fixed-step RK4; returns states every ``record_every`` steps.

    Output has shape ``(n_steps // record_every + 1,) + y0.shape`` and starts
    with ``y0``.
    """
    y = np.array(y0, dtype=float)
    out = np.empty((n_steps // record_every + 1,) + y.shape)
    out[0] = y
    half = 0.5 * dt
    for n in range(n_steps):
        t = t0 + n * dt
        k1 = f(t, y)
        k2 = f(t + half, y + half * k1)
        k3 = f(t + half, y + half * k2)
        k4 = f(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise SimulationError("non-finite state", t + dt)
        if (n + 1) % record_every == 0:
            out[(n + 1) // record_every] = y
    return out


def _initial_step_batch(f, t0, y0, f0, rtol, atol, span):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2, axis=1))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2, axis=1))
    small = (d0 < 1e-5) | (d1 < 1e-5)
    h0 = np.where(small, 1e-6, 0.01 * d0 / np.where(small, 1.0, d1))
    h0 = np.minimum(h0, span)
    f1 = f(t0 + h0, y0 + h0[:, None] * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2, axis=1)) / h0
    dmax = np.maximum(d1, d2)
    flat = dmax <= 1e-15
    h1 = np.where(flat, np.maximum(1e-6, h0 * 1e-3), (0.01 / np.where(flat, 1.0, dmax)) ** (1 / 5))
    return np.minimum(np.minimum(100 * h0, h1), span)


def dopri5_batch(f, t0, t1, y0, t_out=(), *, rtol=1e-8, atol=1e-10, max_step=np.inf,
                 clamp_nonnegative=False, stats: DopriStats | None = None):
    """Integrate ``B`` independent systems ``y_b' = f(t, y)_b`` from ``t0`` to ``t1``.

    ``y0`` has shape ``(B, n)``.  Every member keeps its own time and step
    size; ``f(t, y)`` receives the vector of member times ``t`` (shape
    ``(B,)``) and must return shape ``(B, n)``.  A member's step sequence
    does not depend on the other members; only the rounding of the
    vectorized reductions can change with the batch size.  Finished members
    take zero-length steps until all are done.

    Returns ``(y_out, y1)`` with ``y_out`` of shape ``(len(t_out), B, n)``.
    """
    stats = stats if stats is not None else DopriStats()
    y = np.array(y0, dtype=float)
    B = y.shape[0]
    t_out = np.asarray(t_out, dtype=float)
    y_out = np.empty((len(t_out),) + y.shape)
    n0 = int(np.searchsorted(t_out, t0, side="right"))
    y_out[:n0] = y
    span = t1 - t0
    if span <= 0:
        return y_out, y
    t = np.full(B, float(t0))
    fy = f(t, y)
    stats.nfev += 1
    h = np.minimum(np.minimum(_initial_step_batch(f, t, y, fy, rtol, atol, span), max_step), span)
    stats.nfev += 1
    K = np.empty((7,) + y.shape)
    members = np.arange(B)
    h_min = 16 * np.spacing(max(abs(t0), abs(t1), 1.0))
    while True:
        active = t < t1
        if not active.any():
            break
        if np.any(active & (h < h_min)):
            raise SimulationError("step size underflow", float(t[active & (h < h_min)].min()))
        last = active & (t + h >= t1 - h_min)
        hs = np.where(last, t1 - t, np.where(active, h, 0.0))
        hc = hs[:, None]
        K[0] = fy
        for s in range(1, 6):
            dy = sum(a * K[j] for j, a in enumerate(_A[s]) if a)
            K[s] = f(t + _C[s] * hs, y + hc * dy)
        y_new = y + hc * np.tensordot(_B, K[:6], axes=1)
        t_new = np.where(last, t1, t + hs)
        K[6] = f(t_new, y_new)
        stats.nfev += 6
        err = hc * np.tensordot(_E, K, axes=1)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        with np.errstate(invalid="ignore"):
            err_norm = np.max(np.abs(err) / scale, axis=1)
        finite = np.isfinite(err_norm) & np.all(np.isfinite(y_new), axis=1)
        accept = active & finite & (err_norm <= 1.0)
        if np.any(active & ~finite & (hs <= h_min)):
            raise SimulationError("non-finite state", float(t[active & ~finite].min()))

        dense = None
        dip = np.zeros(B, dtype=bool)
        if accept.any() and len(t_out):
            lo = np.searchsorted(t_out, t, side="right")
            hi = np.searchsorted(t_out, t_new, side="right")
            cnt = np.where(accept, hi - lo, 0)
            M = int(cnt.max())
            if M:
                j = np.arange(M)
                mask = j[None, :] < cnt[:, None]
                idx = np.minimum(lo[:, None] + j[None, :], len(t_out) - 1)
                with np.errstate(invalid="ignore", divide="ignore"):
                    theta = np.where(mask, (t_out[idx] - t[:, None]) / np.where(hs > 0, hs, 1.0)[:, None], 0.0)
                powers = theta[..., None] ** np.arange(1, 5)
                Q = np.tensordot(_P.T, K, axes=1)  # (4, B, n)
                yi = y[:, None, :] + hc[:, None] * np.einsum("bmj,jbn->bmn", powers, Q)
                hit = mask & (t_out[idx] == t_new[:, None])
                yi[hit] = np.broadcast_to(y_new[:, None, :], yi.shape)[hit]
                if clamp_nonnegative:
                    # an interpolant dipping below -atol is inaccurate: retry that member with a shorter step
                    dip = np.any(mask & np.any(yi < -atol, axis=2), axis=1) & (hs > 2 * h_min)
                    accept &= ~dip
                    mask &= accept[:, None]
                    np.maximum(yi, 0.0, out=yi)
                dense = (mask, idx, yi)
        reject = active & ~accept
        stats.accepted += int(accept.sum())
        stats.rejected += int(reject.sum())
        if dense is not None:
            mask, idx, yi = dense
            rows, cols = np.nonzero(mask)
            y_out[idx[rows, cols], members[rows]] = yi[rows, cols]

        if accept.any():
            stats.min_value = min(stats.min_value, float(y_new[accept].min()))
        acc = accept[:, None]
        y = np.where(acc, y_new, y)
        fy = np.where(acc, K[6], fy)
        t = np.where(accept, t_new, t)
        if clamp_nonnegative:
            neg = accept & np.any(y < 0, axis=1)
            if neg.any():
                stats.clamped += int(neg.sum())
                y = np.maximum(y, 0.0)
                fy = np.where(neg[:, None], f(t, y), fy)
                stats.nfev += 1
        with np.errstate(divide="ignore", invalid="ignore"):
            grow = np.where(err_norm == 0, _MAX_FACTOR, np.minimum(_MAX_FACTOR, _SAFETY * err_norm ** -0.2))
            shrink = np.where(finite, np.maximum(_MIN_FACTOR, _SAFETY * err_norm ** -0.2), 0.1)
            shrink = np.where(dip, np.minimum(shrink, 0.5), shrink)
            h = np.where(accept, np.minimum(hs * grow, max_step), np.where(reject, hs * shrink, h))
    return y_out, y
