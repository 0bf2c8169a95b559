"""Diagonal Gaussian mixtures: exact densities, responsibilities, scores, sampling.

All density bookkeeping runs in log-space with a log-sum-exp reduction, so
responsibilities stay accurate even when modes are separated by many standard
deviations. Mixtures are immutable after construction; every method is a pure
function and safe to call concurrently. Random sampling takes a caller-owned
``numpy.random.Generator``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .spectra import SignedSpectrum, SpectrumSpec

_LOG_2PI = float(np.log(2.0 * np.pi))
VAR_FLOOR = 1e-300
WEIGHT_TOL = 1e-12


class MixtureError(ValueError):
    """Raised for invalid mixture parameters or perturbations."""


def _frozen_array(x, dtype=float) -> np.ndarray:
    arr = np.array(x, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DiagGaussian:
    """Single Gaussian with diagonal covariance."""

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mean = _frozen_array(np.atleast_1d(self.mean))
        var = _frozen_array(np.atleast_1d(self.var))
        if mean.ndim != 1 or var.ndim != 1 or mean.shape != var.shape:
            raise MixtureError(
                f"mean and var must be 1-d of equal length, got {mean.shape} and {var.shape}"
            )
        if np.any(var < VAR_FLOOR):
            j = int(np.argmax(var < VAR_FLOOR))
            raise MixtureError(f"variance at coordinate {j + 1} is below {VAR_FLOOR:g}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True)
class DiagGMM:
    """Mixture of diagonal Gaussians sharing one dimension.

    Stored as stacked arrays: ``weights (K,)``, ``means (K, d)``,
    ``variances (K, d)``.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        w = _frozen_array(np.atleast_1d(self.weights))
        m = _frozen_array(np.atleast_2d(self.means))
        v = _frozen_array(np.atleast_2d(self.variances))
        if w.ndim != 1 or w.size < 1:
            raise MixtureError("weights must be a non-empty vector")
        if m.shape != v.shape or m.shape[0] != w.size:
            raise MixtureError(
                f"shape mismatch: weights {w.shape}, means {m.shape}, variances {v.shape}"
            )
        if np.any(w <= 0):
            raise MixtureError("weights must be strictly positive")
        if abs(float(w.sum()) - 1.0) > WEIGHT_TOL:
            raise MixtureError(f"weights sum to {float(w.sum())!r}, expected 1 within {WEIGHT_TOL:g}")
        bad = v < VAR_FLOOR
        if np.any(bad):
            i, j = map(int, np.argwhere(bad)[0])
            raise MixtureError(
                f"variance of component {i + 1} at coordinate {j + 1} is below {VAR_FLOOR:g}"
            )
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)

    @staticmethod
    def from_components(components: Sequence[DiagGaussian], weights) -> "DiagGMM":
        comps = list(components)
        if not comps:
            raise MixtureError("need at least one component")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise MixtureError(f"components have mixed dimensions {sorted(dims)}")
        return DiagGMM(
            weights=np.asarray(weights, dtype=float),
            means=np.stack([c.mean for c in comps]),
            variances=np.stack([c.var for c in comps]),
        )

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def components(self) -> tuple[DiagGaussian, ...]:
        return tuple(
            DiagGaussian(self.means[i], self.variances[i]) for i in range(self.n_components)
        )

    # -- evaluation ----------------------------------------------------

    def _as_batch(self, x) -> tuple[np.ndarray, bool]:
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 1
        if single:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.dim:
            raise MixtureError(f"points must have dimension {self.dim}, got shape {arr.shape}")
        return arr, single

    def component_log_density(self, x) -> np.ndarray:
        """Per-component log densities, shape ``(n, K)`` (or ``(K,)`` for one point)."""
        X, single = self._as_batch(x)
        diff = X[:, None, :] - self.means[None, :, :]
        quad = np.sum(diff * diff / self.variances[None, :, :], axis=2)
        logdet = np.sum(np.log(self.variances), axis=1) + self.dim * _LOG_2PI
        out = -0.5 * (quad + logdet[None, :])
        return out[0] if single else out

    def log_density(self, x):
        """Mixture log density via log-sum-exp; finite for all finite points."""
        X, single = self._as_batch(x)
        a = np.log(self.weights)[None, :] + self.component_log_density(X)
        amax = a.max(axis=1, keepdims=True)
        out = (amax + np.log(np.sum(np.exp(a - amax), axis=1, keepdims=True)))[:, 0]
        return float(out[0]) if single else out

    def responsibilities(self, x) -> np.ndarray:
        """Posterior component probabilities, rows summing to 1."""
        X, single = self._as_batch(x)
        a = np.log(self.weights)[None, :] + self.component_log_density(X)
        a -= a.max(axis=1, keepdims=True)
        r = np.exp(a)
        r /= r.sum(axis=1, keepdims=True)
        return r[0] if single else r

    def score(self, x) -> np.ndarray:
        """Gradient of the mixture log density."""
        X, single = self._as_batch(x)
        r = self.responsibilities(X)
        comp = -(X[:, None, :] - self.means[None, :, :]) / self.variances[None, :, :]
        out = np.sum(r[:, :, None] * comp, axis=1)
        return out[0] if single else out

    def sample(self, n: int, rng: np.random.Generator, return_components: bool = False):
        """Draw ``n`` i.i.d. points; deterministic given the generator state.

        Draw order is fixed: one uniform per row for the component label,
        then an ``(n, d)`` block of standard normals.
        """
        if n < 1:
            raise MixtureError(f"sample size must be >= 1, got {n}")
        cum = np.cumsum(self.weights)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, rng.random(n), side="right")
        z = rng.standard_normal((n, self.dim))
        pts = self.means[idx] + np.sqrt(self.variances[idx]) * z
        if return_components:
            return pts, idx
        return pts


# -- construction -------------------------------------------------------


def mean_rule_to_vector(rule, d: int) -> np.ndarray:
    """Expand a mean rule to a length-``d`` vector.

    Accepts a scalar (constant mean), a dict ``{coordinate: value}`` with
    1-indexed coordinates (sparse rule), or an explicit vector of length
    at least ``d``.
    """
    if isinstance(rule, dict):
        out = np.zeros(d)
        for j, val in rule.items():
            j = int(j)
            if j < 1:
                raise MixtureError(f"mean rule coordinate must be >= 1, got {j}")
            if j <= d:
                out[j - 1] = float(val)
        return out
    if np.isscalar(rule):
        return np.full(d, float(rule))
    arr = np.asarray(rule, dtype=float)
    if arr.ndim != 1 or arr.size < d:
        raise MixtureError(f"explicit mean vector of length {arr.size} too short for d={d}")
    return arr[:d].copy()


def build_truncated_mixture(
    weights,
    mean_rules: Sequence,
    var_specs: Sequence[SpectrumSpec],
    d: int,
    var_scales: Sequence[float] | None = None,
) -> DiagGMM:
    """Build the d-coordinate truncation of a diagonal Gaussian mixture.

    Each component i has mean ``mean_rules[i]`` expanded to length d and
    variances ``var_scales[i] * var_specs[i].eigenvalues(d)``. Truncation is
    consistent: the first coordinates of a deeper truncation match exactly.
    """
    if d < 1:
        raise MixtureError(f"dimension must be >= 1, got {d}")
    w = np.asarray(weights, dtype=float)
    k = w.size
    if not (len(mean_rules) == len(var_specs) == k):
        raise MixtureError(
            f"got {k} weights, {len(mean_rules)} mean rules, {len(var_specs)} variance spectra"
        )
    scales = np.ones(k) if var_scales is None else np.asarray(var_scales, dtype=float)
    means = np.stack([mean_rule_to_vector(rule, d) for rule in mean_rules])
    variances = np.empty((k, d))
    for i, spec in enumerate(var_specs):
        v = scales[i] * spec.eigenvalues(d)
        if np.any(v < VAR_FLOOR):
            j = int(np.argmax(v < VAR_FLOOR))
            raise MixtureError(
                f"variance eigenvalue of component {i + 1} at coordinate {j + 1} "
                f"is below {VAR_FLOOR:g}"
            )
        variances[i] = v
    if not np.all(np.isfinite(means)):
        raise MixtureError("mean rule produced non-finite values")
    return DiagGMM(weights=w, means=means, variances=variances)


def smooth(gmm: DiagGMM, c_spec, level: float) -> DiagGMM:
    """Convolve with ``N(0, level * C)``: adds ``level * lambda_j`` to every variance."""
    if level < 0:
        raise MixtureError(f"smoothing level must be >= 0, got {level}")
    if level == 0:
        return gmm
    lam = c_spec.eigenvalues(gmm.dim) if isinstance(c_spec, SpectrumSpec) else np.asarray(c_spec, dtype=float)
    if lam.shape != (gmm.dim,):
        raise MixtureError(f"smoothing spectrum has shape {lam.shape}, expected ({gmm.dim},)")
    return DiagGMM(
        weights=gmm.weights,
        means=gmm.means,
        variances=gmm.variances + level * lam[None, :],
    )


# -- perturbations ------------------------------------------------------


def _shift_to_vector(entry, d: int) -> np.ndarray:
    """Expand one per-component perturbation entry to a signed length-d vector."""
    if entry is None:
        return np.zeros(d)
    if isinstance(entry, SignedSpectrum):
        return entry.eigenvalues(d)
    if isinstance(entry, SpectrumSpec):
        return entry.eigenvalues(d)
    arr = np.asarray(entry, dtype=float)
    if arr.ndim == 0:
        return np.full(d, float(arr))
    if arr.ndim != 1 or arr.size < d:
        raise MixtureError(f"perturbation vector of length {arr.size} too short for d={d}")
    return arr[:d].copy()


@dataclass(frozen=True)
class MixturePerturbation:
    """Additive perturbation (dweights, dmeans, dvars) of a mixture.

    ``dmeans`` and ``dvars`` hold one entry per component: ``None`` (zero),
    a signed vector, a :class:`SpectrumSpec`, or a :class:`SignedSpectrum`.
    An empty tuple means no perturbation of that kind.
    """

    dweights: tuple = field(default_factory=tuple)
    dmeans: tuple = field(default_factory=tuple)
    dvars: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "dweights", tuple(float(v) for v in self.dweights))
        object.__setattr__(self, "dmeans", tuple(self.dmeans))
        object.__setattr__(self, "dvars", tuple(self.dvars))

    def is_zero(self) -> bool:
        return (
            all(v == 0.0 for v in self.dweights)
            and all(e is None for e in self.dmeans)
            and all(e is None for e in self.dvars)
        )

    def mean_shifts(self, k: int, d: int) -> np.ndarray:
        if self.dmeans and len(self.dmeans) != k:
            raise MixtureError(f"perturbation has {len(self.dmeans)} mean entries for {k} components")
        rows = self.dmeans if self.dmeans else (None,) * k
        return np.stack([_shift_to_vector(e, d) for e in rows])

    def var_shifts(self, k: int, d: int) -> np.ndarray:
        if self.dvars and len(self.dvars) != k:
            raise MixtureError(f"perturbation has {len(self.dvars)} variance entries for {k} components")
        rows = self.dvars if self.dvars else (None,) * k
        return np.stack([_shift_to_vector(e, d) for e in rows])

    def weight_shifts(self, k: int) -> np.ndarray:
        if self.dweights and len(self.dweights) != k:
            raise MixtureError(f"perturbation has {len(self.dweights)} weight entries for {k} components")
        return np.asarray(self.dweights, dtype=float) if self.dweights else np.zeros(k)


def apply_perturbation(gmm: DiagGMM, pert: MixturePerturbation) -> DiagGMM:
    """Return the misspecified mixture (w + dw, m + dm, v + dv)."""
    k, d = gmm.n_components, gmm.dim
    dw = pert.weight_shifts(k)
    w = gmm.weights + dw
    if np.any(w <= 0):
        i = int(np.argmax(w <= 0))
        raise MixtureError(f"perturbed weight of component {i + 1} is not positive ({w[i]!r})")
    if abs(float(w.sum()) - 1.0) > WEIGHT_TOL:
        raise MixtureError(f"perturbed weights sum to {float(w.sum())!r}, expected 1")
    v = gmm.variances + pert.var_shifts(k, d)
    bad = v < VAR_FLOOR
    if np.any(bad):
        i, j = map(int, np.argwhere(bad)[0])
        raise MixtureError(
            f"perturbed variance of component {i + 1} at coordinate {j + 1} is not positive"
        )
    return DiagGMM(weights=w, means=gmm.means + pert.mean_shifts(k, d), variances=v)
