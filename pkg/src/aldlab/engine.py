"""Time-inhomogeneous preconditioned Langevin simulation.

The sampler follows the Euler--Maruyama iteration

    X_{k+1} = X_k + dt * G_k(X_k) + sqrt(2 dt gamma) xi_k,    xi_k ~ N(0, I),

for k = 0 .. N-2, where ``G_k = gamma * s_k`` is the preconditioned score of
the target smoothed at level ``theta_k`` (or the corrected drift in
``ideal_corrected`` mode, which already includes the preconditioner). The
smoothing levels follow the linear schedule ``theta_k = 2S (1 - k/(N-1))``,
so the run starts at level ``2S`` and the final state sits at level 0.

Chains are deterministic given ``(seed, chain index, config)``: chains are
grouped into fixed-size blocks and block ``b`` draws from a generator seeded
by ``(seed, b)``, with a fixed draw order and full-block draw shapes even
when the last block is partially filled. Results are therefore independent
of worker count, execution order, and the total number of chains requested.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .mixture import DiagGMM, MixturePerturbation, apply_perturbation, smooth
from .spectra import SpectrumSpec

BLOCK_SIZE = 512


class EngineError(RuntimeError):
    """Raised for invalid simulation parameters."""


class ChainDivergenceError(EngineError):
    """Raised when a chain state becomes non-finite."""

    def __init__(self, chain: int, step: int):
        self.chain = chain
        self.step = step
        super().__init__(
            f"chain {chain} diverged (non-finite state) at step {step}; "
            "consider a smaller dt"
        )


@dataclass(frozen=True)
class AnnealSchedule:
    """Linear smoothing schedule theta_k = 2S (1 - k/(N-1)), k = 0..N-1."""

    n_steps: int
    dt: float
    s_half: float

    def __post_init__(self):
        if self.n_steps < 2:
            raise EngineError(f"n_steps must be >= 2, got {self.n_steps}")
        if not self.dt > 0:
            raise EngineError(f"dt must be positive, got {self.dt}")
        if not self.s_half > 0:
            raise EngineError(f"s_half must be positive, got {self.s_half}")

    @cached_property
    def levels(self) -> np.ndarray:
        """All smoothing levels theta_0 .. theta_{N-1} (theta_{N-1} = 0)."""
        k = np.arange(self.n_steps, dtype=float)
        out = 2.0 * self.s_half * (1.0 - k / (self.n_steps - 1))
        out[-1] = 0.0
        out.setflags(write=False)
        return out

    def theta(self, k: int) -> float:
        return float(self.levels[k])

    def kappa(self, k: int) -> float:
        """Annealing fraction (N-1-k)/(N-1) = theta_k / theta_0."""
        return float(self.n_steps - 1 - k) / float(self.n_steps - 1)

    @property
    def theta0(self) -> float:
        return 2.0 * self.s_half

    @property
    def t_horizon(self) -> float:
        return (self.n_steps - 1) * self.dt


def make_schedule(n_steps: int, dt: float, s_half: float) -> AnnealSchedule:
    return AnnealSchedule(n_steps=int(n_steps), dt=float(dt), s_half=float(s_half))


@dataclass(frozen=True)
class ALDConfig:
    """Everything that defines one annealed Langevin run except the target.

    ``drift_mode`` is "exact", "misspecified" (requires ``perturbation``) or
    "ideal_corrected"; ``init_mode`` is "exact_smoothed" or "custom_mixture"
    (requires ``init_mixture``, sampled as given, without smoothing).
    """

    dim: int
    schedule: AnnealSchedule
    gamma: SpectrumSpec
    c_base: SpectrumSpec
    drift_mode: str = "exact"
    perturbation: MixturePerturbation | None = None
    init_mode: str = "exact_smoothed"
    init_mixture: DiagGMM | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise EngineError(f"dim must be >= 1, got {self.dim}")
        if self.drift_mode not in ("exact", "misspecified", "ideal_corrected"):
            raise EngineError(f"unknown drift mode {self.drift_mode!r}")
        if self.drift_mode == "misspecified" and self.perturbation is None:
            raise EngineError("misspecified drift mode needs a perturbation")
        if self.init_mode not in ("exact_smoothed", "custom_mixture"):
            raise EngineError(f"unknown init mode {self.init_mode!r}")
        if self.init_mode == "custom_mixture" and self.init_mixture is None:
            raise EngineError("custom_mixture init mode needs an init mixture")
        if np.any(self.gamma.eigenvalues(self.dim) <= 0) or np.any(
            self.c_base.eigenvalues(self.dim) <= 0
        ):
            raise EngineError("preconditioner and smoothing eigenvalues must be positive")


@dataclass(frozen=True)
class ChainBatch:
    """Final chain states plus the provenance needed to reproduce them."""

    samples: np.ndarray
    seed: int
    config_digest: str
    steps_run: int
    checkpoints: dict = field(default_factory=dict)

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)


def config_digest(config: ALDConfig, target: DiagGMM) -> str:
    """Stable hash of the run configuration and target parameters."""
    h = hashlib.sha256()
    parts = [
        f"dim={config.dim}",
        f"n_steps={config.schedule.n_steps}",
        f"dt={config.schedule.dt!r}",
        f"s_half={config.schedule.s_half!r}",
        f"gamma={config.gamma!r}",
        f"c_base={config.c_base!r}",
        f"drift={config.drift_mode}",
        f"pert={config.perturbation!r}",
        f"init={config.init_mode}",
        f"block={BLOCK_SIZE}",
        f"w={target.weights.tolist()!r}",
        f"m={target.means.tolist()!r}",
        f"v={target.variances.tolist()!r}",
    ]
    if config.init_mixture is not None:
        parts += [
            f"iw={config.init_mixture.weights.tolist()!r}",
            f"im={config.init_mixture.means.tolist()!r}",
            f"iv={config.init_mixture.variances.tolist()!r}",
        ]
    h.update("|".join(parts).encode())
    return h.hexdigest()[:16]


# -- drift providers -----------------------------------------------------


def _smoothed_score(
    means: np.ndarray,
    base_vars: np.ndarray,
    log_weights: np.ndarray,
    lam: np.ndarray,
    theta: float,
    x: np.ndarray,
) -> np.ndarray:
    """Score of the mixture smoothed at level theta, vectorized over rows of x."""
    v = base_vars + theta * lam[None, :]
    diff = x[:, None, :] - means[None, :, :]
    q = diff / v[None, :, :]
    a = log_weights[None, :] - 0.5 * (
        np.einsum("nkd,nkd->nk", diff, q) + np.sum(np.log(v), axis=1)[None, :]
    )
    a -= a.max(axis=1, keepdims=True)
    r = np.exp(a)
    r /= r.sum(axis=1, keepdims=True)
    return -np.einsum("nk,nkd->nd", r, q)


def drift_exact(target: DiagGMM, c_base: SpectrumSpec, theta: float, x) -> np.ndarray:
    """Score of the target smoothed at level theta."""
    if theta < 0:
        raise EngineError(f"smoothing level must be >= 0, got {theta}")
    return smooth(target, c_base, theta).score(x)


def drift_misspecified(
    target: DiagGMM,
    pert: MixturePerturbation,
    c_base: SpectrumSpec,
    theta: float,
    x,
) -> np.ndarray:
    """Exact score of the perturbed mixture smoothed at level theta."""
    return drift_exact(apply_perturbation(target, pert), c_base, theta, x)


def drift_ideal(
    target: DiagGMM,
    c_base: SpectrumSpec,
    theta: float,
    theta0: float,
    t_horizon: float,
    gamma: SpectrumSpec,
    x,
) -> np.ndarray:
    """Corrected pre-noise drift whose flow tracks the annealing path exactly.

    Per coordinate this is ``(gamma_j + theta0*lambda_j / (2T)) * s_j`` with
    ``s`` the smoothed score: the preconditioned score plus the correction
    that compensates the shrinking smoothing covariance (whose full-size
    eigenvalues are ``theta0 * lambda_j``).
    """
    if t_horizon <= 0:
        raise EngineError(f"t_horizon must be positive, got {t_horizon}")
    s = drift_exact(target, c_base, theta, x)
    gam = gamma.eigenvalues(target.dim) if isinstance(gamma, SpectrumSpec) else np.asarray(gamma, dtype=float)
    lam_eff = theta0 * c_base.eigenvalues(target.dim)
    return (gam + lam_eff / (2.0 * t_horizon)) * s


def em_step(x, drift_preconditioned, gamma, dt: float, noise, step_index: int | None = None):
    """One Euler--Maruyama update ``x + dt*drift + sqrt(2 dt gamma) * noise``.

    ``drift_preconditioned`` must already include the preconditioner (and,
    in corrected mode, the path-matching term); the noise is scaled by
    ``sqrt(2 dt gamma)`` regardless of drift mode.
    """
    if not dt > 0:
        raise EngineError(f"dt must be positive, got {dt}")
    x = np.asarray(x, dtype=float)
    drift = np.asarray(drift_preconditioned, dtype=float)
    xi = np.asarray(noise, dtype=float)
    gam = gamma.eigenvalues(x.shape[-1]) if isinstance(gamma, SpectrumSpec) else np.asarray(gamma, dtype=float)
    if not (np.all(np.isfinite(drift)) and np.all(np.isfinite(xi))):
        where = f" at step {step_index}" if step_index is not None else ""
        raise EngineError(f"non-finite drift or noise{where}")
    return x + dt * drift + np.sqrt(2.0 * dt * gam) * xi


def init_exact_smoothed(
    target: DiagGMM, c_base: SpectrumSpec, theta0: float, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Sample the smoothed initialization law of the annealing path."""
    return smooth(target, c_base, theta0).sample(n, rng)


# -- chain execution ------------------------------------------------------


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), int(block))))


def _run_block(
    config: ALDConfig,
    target: DiagGMM,
    seed: int,
    block: int,
    n_rows: int,
    checkpoints: tuple,
    noise_scale: float,
) -> tuple[np.ndarray, dict]:
    d = config.dim
    sched = config.schedule
    rng = _block_rng(seed, block)

    if config.init_mode == "exact_smoothed":
        init_gmm = smooth(target, config.c_base, sched.theta0)
    else:
        init_gmm = config.init_mixture
        if init_gmm.dim != d:
            raise EngineError(f"init mixture has dim {init_gmm.dim}, config dim {d}")
    x = init_gmm.sample(BLOCK_SIZE, rng)

    drift_gmm = target
    if config.drift_mode == "misspecified":
        drift_gmm = apply_perturbation(target, config.perturbation)
    means = drift_gmm.means
    base_vars = drift_gmm.variances
    log_w = np.log(drift_gmm.weights)
    lam = config.c_base.eigenvalues(d)
    gam = config.gamma.eigenvalues(d)
    if config.drift_mode == "ideal_corrected":
        pre = gam + sched.theta0 * lam / (2.0 * sched.t_horizon)
    else:
        pre = gam
    noise_std = np.sqrt(2.0 * sched.dt * gam) * noise_scale
    levels = sched.levels
    dt = sched.dt

    saved = {}
    if 0 in checkpoints:
        saved[0] = x[:n_rows].copy()
    # overflow of a diverging state is detected right after the step
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(sched.n_steps - 1):
            s = _smoothed_score(means, base_vars, log_w, lam, float(levels[k]), x)
            x = x + dt * (pre * s) + noise_std * rng.standard_normal((BLOCK_SIZE, d))
            if not np.all(np.isfinite(x)):
                row = int(np.argwhere(~np.isfinite(x))[0][0])
                raise ChainDivergenceError(chain=block * BLOCK_SIZE + row, step=k)
            if (k + 1) in checkpoints:
                saved[k + 1] = x[:n_rows].copy()
    return x[:n_rows], saved


def run_chains(
    config: ALDConfig,
    target: DiagGMM,
    n_chains: int,
    seed: int,
    checkpoints: tuple = (),
    noise_scale: float = 1.0,
) -> ChainBatch:
    """Run ``n_chains`` annealed Langevin chains to the end of the schedule.

    ``checkpoints`` lists state indices to record along the way (state s is
    the state after s steps; state 0 is the initialization). ``noise_scale``
    rescales the injected noise and exists for diagnostics: 0 gives the
    deterministic Euler flow of the drift.
    """
    if n_chains < 1:
        raise EngineError(f"n_chains must be >= 1, got {n_chains}")
    if target.dim != config.dim:
        raise EngineError(f"target has dim {target.dim}, config dim {config.dim}")
    cps = tuple(sorted(set(int(c) for c in checkpoints)))
    if any(c < 0 or c >= config.schedule.n_steps for c in cps):
        raise EngineError(f"checkpoints must lie in [0, {config.schedule.n_steps - 1}]")

    out = np.empty((n_chains, config.dim))
    saved = {c: np.empty((n_chains, config.dim)) for c in cps}
    n_blocks = (n_chains + BLOCK_SIZE - 1) // BLOCK_SIZE
    for b in range(n_blocks):
        lo = b * BLOCK_SIZE
        hi = min(n_chains, lo + BLOCK_SIZE)
        rows, block_saved = _run_block(
            config, target, seed, b, hi - lo, cps, noise_scale
        )
        out[lo:hi] = rows
        for c, states in block_saved.items():
            saved[c][lo:hi] = states
    return ChainBatch(
        samples=out,
        seed=int(seed),
        config_digest=config_digest(config, target),
        steps_run=config.schedule.n_steps - 1,
        checkpoints={c: _frozen(saved[c]) for c in cps},
    )


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr
