"""Langevin MCMC targeting the N-particle Gibbs measure.

MALA is the default (exact stationary law via the Metropolis correction);
ULA is opt-in with the usual O(step_size) bias.  RNG is numpy's Philox
counter-based generator so seeds are portable and streams splittable.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erf

from .errors import DivergentChain, NonConvergent, NonFinite
from .model import GeneralKernel, ModelSpec, QuarticConfinement

__all__ = [
    "ChainConfig",
    "SampleBatch",
    "run_chain",
    "tune_step_size",
    "regularized_coulomb_kernel",
    "save_batch",
    "load_batch",
]

_MAGIC = b"CHAOSLAB"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ChainConfig:
    n_particles: int
    step_size: float
    n_steps: int
    burn_in: int = 0
    thinning: int = 1
    seed: int = 0
    algorithm: str = "mala"
    energy_ceiling: float = 1e10

    def __post_init__(self) -> None:
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if not 0 <= self.burn_in < self.n_steps:
            raise ValueError("need 0 <= burn_in < n_steps")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.algorithm not in ("mala", "ula"):
            raise ValueError("algorithm must be 'mala' or 'ula'")
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")

    @property
    def n_kept(self) -> int:
        return (self.n_steps - self.burn_in) // self.thinning


@dataclass(frozen=True)
class SampleBatch:
    draws: np.ndarray = field(repr=False)
    acceptance_rate: float | None
    seed: int
    model_fingerprint: str


def _log_target_and_grad(model: ModelSpec, x: np.ndarray):
    """Gibbs exponent -sum V - (1/2N) sum W and its gradient, vectorized."""
    n = x.size
    v = model.potential(x)
    gv = model.grad_potential(x)
    if model.is_rank_one:
        s = x.sum()
        logp = -v.sum() + model.coupling * s * s / (2.0 * n)
        grad = -gv + model.coupling * s / n
    else:
        wmat = model.kernel(x[:, None], x[None, :])
        logp = -v.sum() - wmat.sum() / (2.0 * n)
        grad = -gv - model.kernel_force(x[:, None], x[None, :]).sum(axis=1) / n
    return logp, grad


def run_chain(model: ModelSpec, cfg: ChainConfig) -> SampleBatch:
    """Sample m^N_* with MALA (exact) or ULA (biased, documented)."""
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    n = cfg.n_particles
    eps = cfg.step_size
    x = rng.normal(size=n) * 0.1

    logp, grad = _log_target_and_grad(model, x)
    if not np.isfinite(logp) or not np.all(np.isfinite(grad)):
        raise NonFinite("non-finite target at the initial state")

    draws = np.empty((cfg.n_kept, n))
    kept = 0
    accepted = 0
    proposed = 0
    mala = cfg.algorithm == "mala"
    sqrt2e = np.sqrt(2.0 * eps)

    for step in range(cfg.n_steps):
        xi = rng.normal(size=n)
        y = x + eps * grad + sqrt2e * xi
        logp_y, grad_y = _log_target_and_grad(model, y)
        if mala:
            proposed += 1
            if np.isfinite(logp_y) and np.all(np.isfinite(grad_y)):
                # log q(x | y) - log q(y | x) for the Langevin proposal.
                fwd = y - x - eps * grad
                bwd = x - y - eps * grad_y
                log_alpha = (logp_y - logp
                             + (fwd @ fwd - bwd @ bwd) / (4.0 * eps))
                if np.log(rng.random()) < log_alpha:
                    x, logp, grad = y, logp_y, grad_y
                    accepted += 1
        else:
            if not np.isfinite(logp_y) or not np.all(np.isfinite(grad_y)):
                raise NonFinite(f"ULA left the finite-energy region at step {step}")
            x, logp, grad = y, logp_y, grad_y
        if -logp > cfg.energy_ceiling:
            raise DivergentChain(f"energy {-logp:.3e} exceeded ceiling at step {step}")
        if step >= cfg.burn_in and (step - cfg.burn_in) % cfg.thinning == 0:
            draws[kept] = x
            kept += 1

    rate = accepted / proposed if mala else None
    return SampleBatch(draws=draws[:kept], acceptance_rate=rate,
                       seed=cfg.seed, model_fingerprint=model.fingerprint())


def tune_step_size(model: ModelSpec, cfg: ChainConfig,
                   target_acceptance: float = 0.574,
                   pilot_steps: int = 2000, rounds: int = 30) -> float:
    """Dual-averaging step-size search for a MALA acceptance target."""
    if cfg.algorithm == "ula":
        return cfg.step_size
    if not 0.3 < target_acceptance < 0.8:
        raise ValueError("target_acceptance must lie in (0.3, 0.8)")

    log_eps = np.log(cfg.step_size)
    mu = log_eps + np.log(10.0)
    log_eps_bar = log_eps
    h_bar = 0.0
    gamma, t0, kappa = 0.05, 10.0, 0.75
    for t in range(1, rounds + 1):
        pilot = ChainConfig(cfg.n_particles, float(np.exp(log_eps)), pilot_steps,
                            burn_in=pilot_steps // 4, thinning=1,
                            seed=cfg.seed + t, algorithm="mala",
                            energy_ceiling=cfg.energy_ceiling)
        rate = run_chain(model, pilot).acceptance_rate
        h_bar = (1 - 1 / (t + t0)) * h_bar + (target_acceptance - rate) / (t + t0)
        log_eps = mu - np.sqrt(t) / gamma * h_bar
        eta = t ** (-kappa)
        log_eps_bar = eta * log_eps + (1 - eta) * log_eps_bar

    step = float(np.exp(log_eps_bar))
    check = ChainConfig(cfg.n_particles, step, 4 * pilot_steps,
                        burn_in=pilot_steps, thinning=1,
                        seed=cfg.seed + rounds + 1, algorithm="mala",
                        energy_ceiling=cfg.energy_ceiling)
    rate = run_chain(model, check).acceptance_rate
    if abs(rate - target_acceptance) > 0.05:
        raise NonConvergent(
            f"tuned step {step:.3e} achieves acceptance {rate:.3f}, "
            f"target {target_acceptance:.3f} +- 0.05")
    return step


def regularized_coulomb_kernel(epsilon: float) -> GeneralKernel:
    """Smoothed attractive 1D Coulomb kernel W_eps(x, y) ~ -|x - y|.

    |r| is mollified by a centered Gaussian of variance 2*eps, giving
    w(r) = -(r erf(r/(2 sqrt(eps))) + 2 sqrt(eps/pi) exp(-r^2/(4 eps)))
    whose r-derivative is -erf(r / (2 sqrt(eps))).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    c = 2.0 * np.sqrt(epsilon)

    def w(x, y):
        r = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return -(r * erf(r / c) + (c / np.sqrt(np.pi)) * np.exp(-(r / c) ** 2))

    def grad1_w(x, y):
        r = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        return -erf(r / c)

    return GeneralKernel(w=w, grad1_w=grad1_w, symmetric=True)


def save_batch(batch: SampleBatch, cfg: ChainConfig, path) -> None:
    """Binary dump: 16-byte header, row-major float64 LE, JSON sidecar."""
    path = Path(path)
    n_kept, n = batch.draws.shape
    header = _MAGIC + np.array([_FORMAT_VERSION, n], dtype="<u4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(batch.draws, dtype="<f8").tobytes())
    sidecar = {
        "n_particles": cfg.n_particles,
        "step_size": cfg.step_size,
        "n_steps": cfg.n_steps,
        "burn_in": cfg.burn_in,
        "thinning": cfg.thinning,
        "seed": cfg.seed,
        "algorithm": cfg.algorithm,
        "n_kept": n_kept,
        "acceptance_rate": batch.acceptance_rate,
        "model_fingerprint": batch.model_fingerprint,
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def load_batch(path) -> SampleBatch:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:8] != _MAGIC:
        raise ValueError("bad magic; not a chaoslab sample file")
    version, n = np.frombuffer(raw[8:16], dtype="<u4")
    if version != _FORMAT_VERSION:
        raise ValueError(f"unsupported format version {version}")
    draws = np.frombuffer(raw[16:], dtype="<f8").reshape(-1, int(n)).copy()
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    return SampleBatch(draws=draws,
                       acceptance_rate=meta.get("acceptance_rate"),
                       seed=meta["seed"],
                       model_fingerprint=meta["model_fingerprint"])
