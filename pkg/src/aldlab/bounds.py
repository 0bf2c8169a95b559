"""Closed-form error bounds and moment formulas for perturbed diagonal mixtures.

Everything here is an exact formula evaluation: the horizon constant and its
induced time horizon, the initialization KL bound, the component-score and
responsibility bounds on the score-error energy, and the likelihood-ratio /
tilted-Gaussian moments they are built from. Diverging quantities come back
as ``float('inf')`` (an in-band result, not an error), so reports can
tabulate divergence. Products with many factors accumulate in log space.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

WEIGHT_TOL = 1e-12


class BoundsError(ValueError):
    """Raised for invalid bound inputs."""


@dataclass(frozen=True)
class BoundInputs:
    """Perturbed-mixture data at one annealing fraction ``kappa``.

    ``sigma`` holds the unperturbed per-component variance sequences,
    ``dsigma``/``dmeans`` the diagonal perturbations, ``lambdas`` the
    *effective* smoothing eigenvalues (full initial smoothing, i.e. the
    schedule's ``theta_0`` times the base spectrum), and ``gammas`` the
    preconditioner eigenvalues. ``means`` carries the unperturbed component
    means; cross-component mean differences enter the weight-perturbation
    bound, so the gaps alone are not enough.
    """

    weights: np.ndarray
    weights_tilde: np.ndarray
    sigma: np.ndarray
    dsigma: np.ndarray
    dmeans: np.ndarray
    lambdas: np.ndarray
    gammas: np.ndarray
    kappa: float = 1.0
    means: np.ndarray | None = None

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        wt = np.atleast_1d(np.asarray(self.weights_tilde, dtype=float))
        sig = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        dsig = np.atleast_2d(np.asarray(self.dsigma, dtype=float))
        dm = np.atleast_2d(np.asarray(self.dmeans, dtype=float))
        lam = np.atleast_1d(np.asarray(self.lambdas, dtype=float))
        gam = np.atleast_1d(np.asarray(self.gammas, dtype=float))
        k, d = sig.shape
        if w.shape != (k,) or wt.shape != (k,):
            raise BoundsError(f"weights must have shape ({k},)")
        if dsig.shape != (k, d) or dm.shape != (k, d):
            raise BoundsError(f"dsigma and dmeans must have shape ({k}, {d})")
        if lam.shape != (d,) or gam.shape != (d,):
            raise BoundsError(f"lambdas and gammas must have shape ({d},)")
        for name, vec in (("weights", w), ("weights_tilde", wt)):
            if np.any(vec <= 0):
                raise BoundsError(f"{name} must be strictly positive")
            if abs(float(vec.sum()) - 1.0) > WEIGHT_TOL:
                raise BoundsError(f"{name} must sum to 1 within {WEIGHT_TOL:g}")
        if np.any(sig <= 0):
            raise BoundsError("sigma entries must be positive")
        if np.any(sig + dsig <= 0):
            i, j = map(int, np.argwhere(sig + dsig <= 0)[0])
            raise BoundsError(f"perturbed variance of component {i + 1}, coordinate {j + 1} is not positive")
        if np.any(lam <= 0) or np.any(gam <= 0):
            raise BoundsError("lambdas and gammas must be positive")
        if not 0.0 <= self.kappa <= 1.0:
            raise BoundsError(f"kappa must lie in [0, 1], got {self.kappa}")
        m = np.zeros((k, d)) if self.means is None else np.atleast_2d(np.asarray(self.means, dtype=float))
        if m.shape != (k, d):
            raise BoundsError(f"means must have shape ({k}, {d})")
        for name, arr in (
            ("weights", w), ("weights_tilde", wt), ("sigma", sig), ("dsigma", dsig),
            ("dmeans", dm), ("lambdas", lam), ("gammas", gam), ("means", m),
        ):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_components(self) -> int:
        return self.sigma.shape[0]

    @property
    def dim(self) -> int:
        return self.sigma.shape[1]

    @property
    def v(self) -> np.ndarray:
        """Annealed variances sigma + kappa * lambda, shape (K, d)."""
        return self.sigma + self.kappa * self.lambdas[None, :]

    @property
    def v_tilde(self) -> np.ndarray:
        """Perturbed annealed variances, shape (K, d)."""
        return self.sigma + self.dsigma + self.kappa * self.lambdas[None, :]

    @property
    def variance_ratio(self) -> np.ndarray:
        """v_tilde / v, shape (K, d)."""
        return self.v_tilde / self.v

    def with_kappa(self, kappa: float) -> "BoundInputs":
        return dataclasses.replace(self, kappa=float(kappa))

    def is_zero_perturbation(self) -> bool:
        return (
            np.array_equal(self.weights, self.weights_tilde)
            and not np.any(self.dsigma)
            and not np.any(self.dmeans)
        )


# -- horizon ---------------------------------------------------------------


def kd_constant(inputs: BoundInputs) -> float:
    """Horizon constant: (1/16) sum_i w_i sum_j (lambda_j/gamma_j) log(1 + lambda_j/sigma_ij)."""
    lam = inputs.lambdas[None, :]
    terms = (lam / inputs.gammas[None, :]) * np.log1p(lam / inputs.sigma)
    return float(np.sum(inputs.weights[:, None] * terms)) / 16.0


def horizon(kd: float, epsilon: float) -> float:
    """Time horizon guaranteeing annealing bias at most epsilon."""
    if not epsilon > 0:
        raise BoundsError(f"epsilon must be positive, got {epsilon}")
    return kd / epsilon


# -- initialization KL -----------------------------------------------------


def weight_kl(w, w_tilde) -> float:
    """Discrete KL divergence between two weight vectors."""
    w = np.asarray(w, dtype=float)
    wt = np.asarray(w_tilde, dtype=float)
    if w.shape != wt.shape:
        raise BoundsError("weight vectors must have equal length")
    if np.any(wt <= 0):
        raise BoundsError("perturbed weights must be strictly positive")
    return float(np.sum(w * np.log(w / wt)))


def component_init_kl(inputs: BoundInputs, i: int) -> float:
    """KL between component i's smoothed law and its perturbed counterpart.

    Requires kappa = 1: the initialization sits at the fully smoothed level.
    """
    if inputs.kappa != 1.0:
        raise BoundsError("component_init_kl is defined at kappa = 1")
    sig = inputs.sigma[i]
    dsig = inputs.dsigma[i]
    dm = inputs.dmeans[i]
    lam = inputs.lambdas
    vt = sig + dsig + lam
    if np.any(vt <= 0):
        raise BoundsError(f"component {i + 1} has non-positive perturbed smoothed variance")
    terms = dm * dm / vt + np.log1p(dsig / (sig + lam)) - dsig / vt
    return 0.5 * float(np.sum(terms))


def init_kl_bound(inputs: BoundInputs) -> float:
    """Upper bound on the initialization KL: weight term + weighted Gaussian terms."""
    total = weight_kl(inputs.weights, inputs.weights_tilde)
    for i in range(inputs.n_components):
        total += float(inputs.weights[i]) * component_init_kl(inputs, i)
    return total


# -- component-score bound -------------------------------------------------


def bcomp_bound(inputs: BoundInputs) -> float:
    """Bound on the component-score mismatch energy at one annealing fraction."""
    v = inputs.v
    vt = inputs.v_tilde
    num = inputs.dmeans**2 + inputs.dsigma**2 / v
    terms = inputs.gammas[None, :] * num / vt**2
    return 2.0 * float(np.sum(inputs.weights[:, None] * terms.sum(axis=1)))


# -- likelihood-ratio moments ----------------------------------------------


def _log_ratio_p_moment(p: float, v, vt, dm):
    """Elementwise log E[(phi/phi_tilde)^p] under phi_tilde; +inf where divergent."""
    v = np.asarray(v, dtype=float)
    vt = np.asarray(vt, dtype=float)
    dm = np.asarray(dm, dtype=float)
    kap = vt / v
    disc = p * kap - (p - 1.0)
    out = np.full(np.broadcast(v, vt, dm).shape, np.inf)
    ok = disc > 0
    if np.any(ok):
        kap_ok = np.broadcast_to(kap, out.shape)[ok]
        disc_ok = np.broadcast_to(disc, out.shape)[ok]
        v_ok = np.broadcast_to(v, out.shape)[ok]
        dm_ok = np.broadcast_to(dm, out.shape)[ok]
        out[ok] = (
            0.5 * p * np.log(kap_ok)
            - 0.5 * np.log(disc_ok)
            + p * (p - 1.0) * dm_ok**2 / (2.0 * v_ok * disc_ok)
        )
    return out


def ratio_p_moment(p: float, v: float, vt: float, dm: float) -> float:
    """p-th moment of the one-dimensional Gaussian likelihood ratio.

    With ``kappa = vt / v`` this is
    ``kappa^{p/2} / sqrt(p*kappa - (p-1)) * exp(p(p-1) dm^2 / (2 v (p*kappa - (p-1))))``,
    finite iff ``p*kappa - (p-1) > 0``; returns ``inf`` otherwise.
    """
    if not (v > 0 and vt > 0):
        raise BoundsError("variances must be positive")
    log_m = float(_log_ratio_p_moment(p, v, vt, dm))
    return math.inf if math.isinf(log_m) else _exp_or_inf(log_m)


def tilted_params(p: float, m: float, mt: float, v: float, vt: float) -> tuple[float, float]:
    """Mean and variance of the r^p-tilted Gaussian.

    The tilt of N(mt, vt) by the p-th power of the ratio against N(m, v) is
    Gaussian with variance ``vt / D`` and mean ``mt - (p*kappa/D) * (mt - m)``
    where ``D = p*kappa - (p-1)``; requires D > 0.
    """
    if not (v > 0 and vt > 0):
        raise BoundsError("variances must be positive")
    kap = vt / v
    disc = p * kap - (p - 1.0)
    if not disc > 0:
        raise BoundsError(f"tilt is not normalizable: p*kappa - (p-1) = {disc!r} <= 0")
    dm = mt - m
    return mt - (p * kap / disc) * dm, vt / disc


def score_fourth_moment(gammas, vts, d: int | None = None) -> float:
    """Exact fourth moment of the preconditioned diagonal-Gaussian score.

    Equals ``(sum_j gamma_j/vt_j)^2 + 2 sum_j gamma_j^2/vt_j^2`` for a
    Gaussian whose per-coordinate variances are ``vts``.
    """
    gam = np.asarray(gammas, dtype=float)
    vt = np.asarray(vts, dtype=float)
    if d is not None:
        gam, vt = gam[:d], vt[:d]
    if np.any(gam <= 0) or np.any(vt <= 0):
        raise BoundsError("inputs must be positive")
    first = float(np.sum(gam / vt))
    return first * first + 2.0 * float(np.sum((gam / vt) ** 2))


def tilted_score_fourth_bound(p: float, inputs: BoundInputs, i: int) -> float:
    """Upper bound on the tilted fourth moment of the perturbed score of component i.

    Expands the tilted-Gaussian parameters coordinate by coordinate; returns
    ``inf`` when the tilt is not normalizable at some coordinate.
    """
    v = inputs.v[i]
    vt = inputs.v_tilde[i]
    dm = inputs.dmeans[i]
    gam = inputs.gammas
    kap = vt / v
    disc = p * kap - (p - 1.0)
    if np.any(disc <= 0):
        return math.inf
    lin = gam * (1.0 / (disc * vt) + (p * kap / disc) ** 2 * dm**2 / vt**2)
    quad = gam**2 * (
        3.0 / (disc**2 * vt**2)
        + 6.0 * p**2 * kap**2 * dm**2 / (disc**3 * vt**3)
        + p**4 * kap**4 * dm**4 / (disc**4 * vt**4)
    )
    total_lin = float(np.sum(lin))
    return total_lin * total_lin + float(np.sum(quad))


# -- responsibility bound ----------------------------------------------------


def delta1_bound(inputs: BoundInputs, p: float = 3.0) -> float:
    """Bound on the weight-perturbation part of the responsibility mismatch.

    Product of the weight-mismatch factor ``sum_i (dw_i)^2 / wt_i^p`` and the
    preconditioner-weighted score second-moment factor, which involves the
    cross-component mean differences.
    """
    w = inputs.weights
    wt = inputs.weights_tilde
    dw = wt - w
    factor = float(np.sum(dw**2 / wt**p))
    if factor == 0.0:
        return 0.0
    v = inputs.v
    vt = inputs.v_tilde
    means_tilde = inputs.means + inputs.dmeans
    # gap2[l, i, h] = (m_{lh} - mt_{ih})^2
    gap2 = (inputs.means[:, None, :] - means_tilde[None, :, :]) ** 2
    num = v[:, None, :] + gap2
    terms = inputs.gammas[None, None, :] * num / vt[None, :, :] ** 2
    c1 = float(np.einsum("l,i,lih->", w, wt ** (p - 2.0), terms))
    return factor * c1


def r2_mixture_bound(inputs: BoundInputs) -> float:
    """Bound on the second moment of the mixture density ratio under the perturbed law.

    ``sum_k wt_k c_k^2 prod_j a_kj`` with per-coordinate second-moment factors
    ``a_kj``; the product is accumulated in log space and any divergent factor
    makes the whole bound ``inf``.
    """
    log_a = _log_ratio_p_moment(2.0, inputs.v, inputs.v_tilde, inputs.dmeans)
    log_prod = log_a.sum(axis=1)
    c = inputs.weights / inputs.weights_tilde
    total = 0.0
    for k in range(inputs.n_components):
        if math.isinf(log_prod[k]):
            return math.inf
        total += float(inputs.weights_tilde[k]) * float(c[k]) ** 2 * _exp_or_inf(float(log_prod[k]))
    return total


@dataclass(frozen=True)
class BrespBound:
    """Responsibility-mismatch bound with its pieces.

    ``value`` is the number to use: the envelope in general, exactly 0 when
    the perturbation is identically zero (the relaxed 48-constant envelope is
    not tight there, so the exact-zero shortcut is reported alongside it).
    """

    value: float
    envelope: float
    weight_term: float
    phi_term: float
    band_ok: bool
    exact_zero: bool


LOG_POINTWISE_CONSTANT = 48.0  # |log r|^4 (r^4 + r^-4) <= 48 (1 + r^8 + r^-8)


def _exp_or_inf(log_value: float) -> float:
    try:
        return math.exp(log_value)
    except OverflowError:
        return math.inf


def bresp_upper(inputs: BoundInputs) -> BrespBound:
    """Bound on the responsibility-mismatch energy at one annealing fraction.

    Collects three pieces: the weight term, the component-density term (via
    the density-ratio second moment, the pointwise 48-constant envelope, and
    tilted fourth moments at powers +-8), and a mixed term fixed to their
    sum. Finite only when every variance ratio stays inside (7/8, 9/8).
    """
    ratio = inputs.variance_ratio
    band_ok = bool(np.all(ratio > 7.0 / 8.0) and np.all(ratio < 9.0 / 8.0))
    b_w = delta1_bound(inputs, p=3.0)

    r2 = r2_mixture_bound(inputs)
    if math.isinf(r2) or not band_ok:
        main = math.inf
    else:
        c = inputs.weights / inputs.weights_tilde
        main = 0.0
        for i in range(inputs.n_components):
            t0 = score_fourth_moment(inputs.gammas, inputs.v_tilde[i])
            m_plus = _log_ratio_p_moment(8.0, inputs.v[i], inputs.v_tilde[i], inputs.dmeans[i]).sum()
            m_minus = _log_ratio_p_moment(-8.0, inputs.v[i], inputs.v_tilde[i], inputs.dmeans[i]).sum()
            t_plus = tilted_score_fourth_bound(8.0, inputs, i)
            t_minus = tilted_score_fourth_bound(-8.0, inputs, i)
            part = t0 + _exp_or_inf(float(m_plus)) * t_plus + _exp_or_inf(float(m_minus)) * t_minus
            main += float(inputs.weights_tilde[i]) * float(c[i]) ** 4 * part
        main *= LOG_POINTWISE_CONSTANT
    b_phi = math.sqrt(r2 * main) if not (math.isinf(r2) or math.isinf(main)) else math.inf
    envelope = 6.0 * (b_w + b_phi)  # 3 (B_w + B_phi + B_mix) with B_mix = B_w + B_phi
    exact_zero = inputs.is_zero_perturbation()
    return BrespBound(
        value=0.0 if exact_zero else envelope,
        envelope=envelope,
        weight_term=b_w,
        phi_term=b_phi,
        band_ok=band_ok,
        exact_zero=exact_zero,
    )


# -- budget ------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorBudget:
    """Per-line bookkeeping of the final-time KL upper bound."""

    e_init: float
    e_score_comp: float
    e_score_resp: float
    e_score_resp_envelope: float
    e_bias: float
    kd: float

    def total(self) -> float:
        return self.e_init + self.e_score_comp + self.e_score_resp + self.e_bias


def error_budget(
    inputs: BoundInputs,
    t_horizon: float,
    grid_size: int = 512,
    init_inputs: BoundInputs | None = None,
) -> ErrorBudget:
    """Evaluate every budget line over the annealing interval.

    Time integrals use a composite trapezoid rule on a uniform grid in the
    annealing fraction, mapped to time by ``t = T (1 - kappa)``. The
    initialization side may differ from the score side (e.g. a weight-only
    initialization mismatch next to a covariance-only score error); pass it
    via ``init_inputs``, which defaults to ``inputs`` at fraction 1.
    """
    if not t_horizon > 0:
        raise BoundsError(f"t_horizon must be positive, got {t_horizon}")
    if grid_size < 2:
        raise BoundsError(f"grid_size must be >= 2, got {grid_size}")
    base_init = (init_inputs if init_inputs is not None else inputs).with_kappa(1.0)
    e_init = init_kl_bound(base_init)

    kappas = np.linspace(0.0, 1.0, grid_size)
    comp_vals = np.empty(grid_size)
    resp_vals = np.empty(grid_size)
    resp_env = np.empty(grid_size)
    for idx, kap in enumerate(kappas):
        at = inputs.with_kappa(float(kap))
        comp_vals[idx] = bcomp_bound(at)
        b = bresp_upper(at)
        resp_vals[idx] = b.value
        resp_env[idx] = b.envelope
    # dt = T dkappa under the linear schedule
    e_comp = t_horizon * float(np.trapezoid(comp_vals, kappas))
    e_resp = t_horizon * float(np.trapezoid(resp_vals, kappas))
    e_resp_env = t_horizon * float(np.trapezoid(resp_env, kappas))
    kd = kd_constant(inputs)
    return ErrorBudget(
        e_init=e_init,
        e_score_comp=e_comp,
        e_score_resp=e_resp,
        e_score_resp_envelope=e_resp_env,
        e_bias=2.0 * kd / t_horizon,
        kd=kd,
    )
