"""Index model specification, identifiability normalization, and the search objective.

The model is y = g(alpha * w + sum_b integral x_b beta_b) + noise with unknown
link g and unknown coefficient functions beta_b.  Scale is not identified (g
absorbs it), so the functional coefficients are constrained to joint unit norm;
during the coefficient search the constraint is imposed implicitly by scaling
the kernel bandwidth with the current coefficient norm, which makes the
objective invariant to rescaling the search vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisExpansion, FourierBasis, readonly_array
from .locfit import nw_loo_all


class NormalizationError(ValueError):
    """A zero functional coefficient vector cannot be normalized."""


class DegenerateObjectiveError(RuntimeError):
    """Every sample lost its leave-one-out window (bandwidth far too small)."""


@dataclass(frozen=True)
class FunctionalBlock:
    """Coefficient matrix of n covariate functions sharing one basis."""

    basis: FourierBasis
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = readonly_array(self.coeffs)
        if coeffs.ndim != 2 or coeffs.shape[1] != self.basis.dimension:
            raise ValueError(
                f"expected (n, {self.basis.dimension}) coefficients, got {coeffs.shape}"
            )
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]

    def nonconstant(self) -> np.ndarray:
        """Columns aligned with the coefficient-function basis (constant dropped)."""
        return self.coeffs[:, 1:] if self.basis.include_constant else self.coeffs

    def beta_basis(self) -> FourierBasis:
        return self.basis.drop_constant()

    def expansion(self, i: int) -> BasisExpansion:
        return BasisExpansion(self.basis, self.coeffs[i])


@dataclass(frozen=True)
class Dataset:
    """Samples of the index model: functional blocks, responses, optional scalar."""

    blocks: tuple[FunctionalBlock, ...]
    y: np.ndarray
    w: np.ndarray | None = None

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("dataset needs at least one functional block")
        object.__setattr__(self, "blocks", tuple(self.blocks))
        y = readonly_array(self.y)
        if y.ndim != 1:
            raise ValueError(f"responses must be one-dimensional, got {y.shape}")
        object.__setattr__(self, "y", y)
        n = y.size
        for k, block in enumerate(self.blocks):
            if block.n != n:
                raise ValueError(f"block {k} has {block.n} samples, responses have {n}")
        if self.w is not None:
            w = readonly_array(self.w)
            if w.shape != (n,):
                raise ValueError(f"scalar covariate must have shape ({n},), got {w.shape}")
            object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        return self.y.size

    def beta_dims(self) -> tuple[int, ...]:
        return tuple(block.nonconstant().shape[1] for block in self.blocks)

    def search_dimension(self) -> int:
        """Length of the raw search vector: functional coefficients plus alpha."""
        return sum(self.beta_dims()) + (1 if self.w is not None else 0)

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices)
        blocks = tuple(
            FunctionalBlock(block.basis, block.coeffs[idx]) for block in self.blocks
        )
        w = None if self.w is None else self.w[idx]
        return Dataset(blocks, self.y[idx], w)


@dataclass(frozen=True)
class IndexModelSpec:
    """Identifiability-normalized model coefficients plus a bandwidth record.

    ``bandwidth`` is the working bandwidth at the point the spec was built
    from (the search bandwidth times the raw coefficient norm); smoothing
    entry points take their bandwidth explicitly.
    """

    beta_blocks: tuple[BasisExpansion, ...]
    bandwidth: float
    alpha: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "beta_blocks", tuple(self.beta_blocks))
        if not self.beta_blocks:
            raise ValueError("spec needs at least one coefficient function")
        if self.bandwidth <= 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        for beta in self.beta_blocks:
            if beta.basis.include_constant:
                raise ValueError("coefficient functions must not carry a constant term")

    def coefficient_vector(self) -> np.ndarray:
        return np.concatenate([beta.coeffs for beta in self.beta_blocks])


@dataclass(frozen=True)
class ObjectiveReport:
    """Leave-one-out MSE value with its exclusion bookkeeping."""

    mse: float
    excluded_count: int
    index_values: np.ndarray


def split_raw(data: Dataset, raw) -> tuple[list[np.ndarray], float | None]:
    """Split a raw search vector into per-block coefficients and alpha."""
    raw = np.asarray(raw, dtype=float)
    expected = data.search_dimension()
    if raw.shape != (expected,):
        raise ValueError(f"expected a search vector of length {expected}, got {raw.shape}")
    parts = []
    start = 0
    for dim in data.beta_dims():
        parts.append(raw[start:start + dim])
        start += dim
    alpha = float(raw[start]) if data.w is not None else None
    return parts, alpha


def raw_index(data: Dataset, raw) -> tuple[np.ndarray, float]:
    """Index values at an unnormalized search vector, with the coefficient norm."""
    parts, alpha = split_raw(data, raw)
    norm = float(np.linalg.norm(np.concatenate(parts)))
    z = np.zeros(data.n)
    for block, part in zip(data.blocks, parts):
        z += block.nonconstant() @ part
    if alpha is not None:
        z += alpha * data.w
    return z, norm


def spec_from_raw(data: Dataset, raw, h: float) -> IndexModelSpec:
    """Normalized spec at a raw search point.

    The functional coefficients (and alpha with them, so the index only
    changes scale) are divided by the joint coefficient norm, and the
    bandwidth is multiplied by it, recording the working bandwidth.
    """
    parts, alpha = split_raw(data, raw)
    norm = float(np.linalg.norm(np.concatenate(parts)))
    if norm == 0.0:
        raise NormalizationError("zero functional coefficient vector")
    betas = tuple(
        BasisExpansion(block.beta_basis(), part / norm)
        for block, part in zip(data.blocks, parts)
    )
    return IndexModelSpec(
        beta_blocks=betas,
        bandwidth=h * norm,
        alpha=None if alpha is None else alpha / norm,
    )


def normalize_spec(raw_coeffs, h: float, basis: FourierBasis | None = None) -> IndexModelSpec:
    """Single-covariate convenience: unit-norm coefficients, bandwidth times the norm."""
    raw = np.asarray(raw_coeffs, dtype=float)
    norm = float(np.linalg.norm(raw))
    if norm == 0.0:
        raise NormalizationError("zero functional coefficient vector")
    if basis is None:
        basis = FourierBasis(raw.size, include_constant=False)
    return IndexModelSpec((BasisExpansion(basis, raw / norm),), bandwidth=h * norm)


def compute_index(data: Dataset, spec: IndexModelSpec) -> np.ndarray:
    """Single index alpha * w + sum_b <x_b, beta_b> for every sample."""
    if len(spec.beta_blocks) != len(data.blocks):
        raise ValueError(
            f"spec has {len(spec.beta_blocks)} coefficient functions for "
            f"{len(data.blocks)} functional blocks"
        )
    z = np.zeros(data.n)
    for k, (block, beta) in enumerate(zip(data.blocks, spec.beta_blocks)):
        xs = block.nonconstant()
        if beta.basis != block.beta_basis():
            raise ValueError(f"block {k}: coefficient basis does not match covariate basis")
        z += xs @ beta.coeffs
    if spec.alpha is not None:
        if data.w is None:
            raise ValueError("spec has a scalar coefficient but the dataset has no scalar")
        z += spec.alpha * data.w
    return z


def canonical_sign(spec: IndexModelSpec, reference=None) -> IndexModelSpec:
    """Deterministic sign for reporting; the link absorbs reflections.

    Flips the whole spec (coefficients and alpha together, so only the index
    orientation changes) when the functional coefficient vector points away
    from ``reference``, or, without one, when its first nonzero entry is
    negative.
    """
    c = spec.coefficient_vector()
    if reference is not None:
        ref = np.asarray(reference, dtype=float)
        if ref.shape != c.shape:
            raise ValueError(f"reference shape {ref.shape} does not match {c.shape}")
        flip = float(c @ ref) < 0.0
    else:
        nonzero = np.nonzero(c)[0]
        flip = bool(nonzero.size) and c[nonzero[0]] < 0.0
    if not flip:
        return spec
    betas = tuple(BasisExpansion(b.basis, -b.coeffs) for b in spec.beta_blocks)
    alpha = None if spec.alpha is None else -spec.alpha
    return IndexModelSpec(betas, spec.bandwidth, alpha)


def objective_loo_mse(data: Dataset, raw_coeffs, h: float) -> ObjectiveReport:
    """Leave-one-out Nadaraya-Watson mean squared error at a raw search point.

    The kernel bandwidth is ``h`` times the functional coefficient norm, which
    makes the value invariant to rescaling the search vector; equivalently the
    model is evaluated at unit norm with bandwidth ``h``.  Samples with an
    empty leave-one-out window are excluded from the average and counted, so
    the bandwidth selector can reject pathological bandwidths.
    """
    if data.n < 4:
        raise ValueError(f"objective needs at least 4 samples, got {data.n}")
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    z, norm = raw_index(data, raw_coeffs)
    if norm == 0.0:
        raise NormalizationError("zero functional coefficient vector")
    estimates, excluded = nw_loo_all(z, data.y, h * norm)
    kept = ~excluded
    n_kept = int(np.count_nonzero(kept))
    if n_kept == 0:
        raise DegenerateObjectiveError(
            f"every sample excluded at h={h:.6g}; bandwidth far too small"
        )
    residuals = data.y[kept] - estimates[kept]
    return ObjectiveReport(
        mse=float(np.mean(residuals * residuals)),
        excluded_count=data.n - n_kept,
        index_values=readonly_array(z / norm),
    )
