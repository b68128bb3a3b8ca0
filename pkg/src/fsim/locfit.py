"""Local quadratic weighted least squares for the link function and its derivatives.

At an evaluation point ``u`` the responses are fit to a second-order Taylor
polynomial with kernel weights K((z_i - u)/h).  The minimizer of

    sum_i [y_i - a - b (z_i - u) - c (z_i - u)^2 / 2]^2 K((z_i - u)/h)

estimates (g(u), g'(u), g''(u)) = (a, b, c), and each estimate is a linear
functional of the responses: the rows of (X'WX)^{-1} X'W, exposed here as
smoother rows.  The leave-one-out Nadaraya-Watson estimator used inside the
coefficient-search objective also lives here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import readonly_array
from .kernel import smooth_kernel, transform_inplace

MIN_WINDOW_POINTS = 3
CONDITION_LIMIT = 1e12


class SingularFitError(RuntimeError):
    """The weighted design is unusable at an evaluation point."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class EmptyWindowError(RuntimeError):
    """No neighbour falls inside the kernel window."""


@dataclass(frozen=True)
class LocalQuadFit:
    """Level, slope and curvature estimates at one evaluation point.

    ``smoother_row_k . y`` reproduces the k-th estimate exactly; the rows are
    the data-dependent linear functionals behind (a_hat, b_hat, c_hat).
    """

    u: float
    a_hat: float
    b_hat: float
    c_hat: float
    effective_points: int
    smoother_row_0: np.ndarray
    smoother_row_1: np.ndarray
    smoother_row_2: np.ndarray


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def _smoother_rows(z: np.ndarray, u: float, h: float):
    """Rows M with (a, b, c) = M @ y, plus the in-window point count.

    The system is solved on the h-scaled design for conditioning; the
    condition guard applies to the raw normal matrix X'WX that defines the
    estimator.
    """
    d = z - u
    s = d / h
    w = smooth_kernel(s)
    inside = int(np.count_nonzero(w))
    if inside < MIN_WINDOW_POINTS:
        raise SingularFitError(
            f"only {inside} points inside the window at u={u:.6g} (h={h:.6g})"
        )
    ones = np.ones_like(d)
    raw_design = np.stack([ones, d, 0.5 * d * d])
    a_raw = (raw_design * w) @ raw_design.T
    cond = np.linalg.cond(a_raw)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularFitError(
            f"normal matrix condition {cond:.3g} exceeds {CONDITION_LIMIT:.0e} at u={u:.6g}"
        )
    scaled_design = np.stack([ones, s, 0.5 * s * s])
    weighted = scaled_design * w
    try:
        rows = np.linalg.solve(weighted @ scaled_design.T, weighted)
    except np.linalg.LinAlgError as exc:
        raise SingularFitError(f"singular normal matrix at u={u:.6g}") from exc
    rows[1] /= h
    rows[2] /= h * h
    return rows, inside


def local_quad_fit(index_values, responses, u: float, h: float) -> LocalQuadFit:
    """Fit the local quadratic at ``u`` with bandwidth ``h``.

    Requires at least three samples strictly inside the kernel window; raises
    :class:`SingularFitError` otherwise, or when the weighted normal matrix
    is too ill-conditioned to trust.
    """
    z = _as_vector(index_values, "index_values")
    y = _as_vector(responses, "responses")
    if z.size != y.size:
        raise ValueError(f"got {z.size} index values but {y.size} responses")
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    rows, inside = _smoother_rows(z, float(u), float(h))
    a, b, c = rows @ y
    return LocalQuadFit(
        u=float(u),
        a_hat=float(a),
        b_hat=float(b),
        c_hat=float(c),
        effective_points=inside,
        smoother_row_0=readonly_array(rows[0]),
        smoother_row_1=readonly_array(rows[1]),
        smoother_row_2=readonly_array(rows[2]),
    )


def nw_estimate_loo(index_values, responses, i: int, h: float) -> float:
    """Leave-one-out Nadaraya-Watson estimate at sample ``i``.

    Kernel-weighted average of every other response; raises
    :class:`EmptyWindowError` when no other sample falls within ``h`` of
    sample ``i``, leaving the exclusion policy to the caller.
    """
    z = _as_vector(index_values, "index_values")
    y = _as_vector(responses, "responses")
    if z.size != y.size:
        raise ValueError(f"got {z.size} index values but {y.size} responses")
    if not 0 <= i < z.size:
        raise ValueError(f"sample index {i} out of range for n={z.size}")
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    w = smooth_kernel((z[i] - z) / h)
    w[i] = 0.0
    den = w.sum()
    if den == 0.0:
        raise EmptyWindowError(f"no neighbour within h={h:.6g} of sample {i}")
    return float((w @ y) / den)


def nw_loo_all(index_values, responses, h: float):
    """Vectorized leave-one-out Nadaraya-Watson at every sample.

    Returns ``(estimates, excluded)`` where excluded marks samples with an
    empty window; their estimate entry is NaN.  Agrees with
    :func:`nw_estimate_loo` sample by sample up to accumulation order.
    """
    z = _as_vector(index_values, "index_values")
    y = _as_vector(responses, "responses")
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    scaled = z / h
    w = transform_inplace(scaled[:, None] - scaled[None, :])
    np.fill_diagonal(w, 0.0)
    den = w.sum(axis=1)
    excluded = den == 0.0
    estimates = np.full(z.size, np.nan)
    keep = ~excluded
    estimates[keep] = (w @ y)[keep] / den[keep]
    return estimates, excluded


def smoother_matrix(index_values, h: float) -> np.ndarray:
    """The n-by-n linear map from responses to fitted link values.

    Row j is the level smoother row of the local quadratic fit at u = z_j, so
    S @ y stacks the fitted values.  A singular row aborts the build with the
    row index attached.
    """
    z = _as_vector(index_values, "index_values")
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    n = z.size
    out = np.empty((n, n))
    for j in range(n):
        try:
            rows, _ = _smoother_rows(z, float(z[j]), float(h))
        except SingularFitError as exc:
            raise SingularFitError(f"row {j}: {exc}", row=j) from exc
        out[j] = rows[0]
    return out


def curve_estimates(index_values, responses, grid, h: float, derivative: int = 0) -> np.ndarray:
    """Link (or derivative) estimates over ``grid``, NaN where the fit is singular."""
    if derivative not in (0, 1, 2):
        raise ValueError(f"derivative order must be 0, 1 or 2, got {derivative}")
    z = _as_vector(index_values, "index_values")
    y = _as_vector(responses, "responses")
    points = np.atleast_1d(np.asarray(grid, dtype=float))
    values = np.full(points.size, np.nan)
    for k, u in enumerate(points):
        try:
            rows, _ = _smoother_rows(z, float(u), float(h))
        except SingularFitError:
            continue
        values[k] = rows[derivative] @ y
    return values


def relocated_fit(index_values, responses, u: float, h: float,
                  center: float | None = None, max_steps: int = 64):
    """Local quadratic fit at ``u``, stepping toward the data centre on failure.

    Sparse windows near the index extremes can make the fit singular; the
    evaluation point is then moved toward ``center`` (default: median index)
    in steps of h/4 until a fit succeeds.  Returns ``(fit, moved)``.
    """
    z = _as_vector(index_values, "index_values")
    if center is None:
        center = float(np.median(z))
    point = float(u)
    step = 0.25 * h * (1.0 if center >= point else -1.0)
    for k in range(max_steps + 1):
        try:
            return local_quad_fit(z, responses, point, h), k > 0
        except SingularFitError:
            if step == 0.0 or (step > 0 and point >= center) or (step < 0 and point <= center):
                break
            point = point + step
            if (step > 0 and point > center) or (step < 0 and point < center):
                point = center
    raise SingularFitError(f"no admissible evaluation point near u={u:.6g}")
