"""Simultaneous-perturbation stochastic approximation (SPSA) updates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = ["SPSASettings", "SPSAStep", "propose_params", "minimize"]


@dataclass(frozen=True)
class SPSASettings:
    """Gain-sequence constants: a_k = a/(k+1+A)^alpha, c_k = c/(k+1)^gamma."""

    a: float = 0.05
    c: float = 0.1
    A: float = 10.0
    alpha: float = 0.602
    gamma: float = 0.101

    def gains(self, k: int) -> tuple[float, float]:
        return (
            self.a / (k + 1 + self.A) ** self.alpha,
            self.c / (k + 1) ** self.gamma,
        )


@dataclass(frozen=True)
class SPSAStep:
    theta_next: np.ndarray
    gradient: np.ndarray
    delta: np.ndarray
    cost_plus: float
    cost_minus: float


def perturbation(n: int, seed, k: int) -> np.ndarray:
    rng = np.random.default_rng([*np.atleast_1d(seed).tolist(), k, 0x5B5A])
    return rng.choice(np.array([-1.0, 1.0]), size=n)


def propose_params(
    history: Sequence[tuple[np.ndarray, float]],
    settings: SPSASettings,
    seed,
    cost: Callable[[np.ndarray, int], float],
) -> SPSAStep:
    """One SPSA step from the last entry of `history`.

    ``cost(theta, sign)`` evaluates the objective at a perturbed point; `sign`
    is +1 or -1 so the caller can derive independent sampling seeds. The
    iteration index k is ``len(history) - 1``.
    """
    if not history:
        raise ValueError("history must not be empty")
    k = len(history) - 1
    theta = np.asarray(history[-1][0], dtype=float)
    a_k, c_k = settings.gains(k)
    delta = perturbation(theta.size, seed, k)
    y_plus = float(cost(theta + c_k * delta, +1))
    y_minus = float(cost(theta - c_k * delta, -1))
    grad = (y_plus - y_minus) / (2.0 * c_k) * delta  # 1/delta_i == delta_i for +-1
    return SPSAStep(theta - a_k * grad, grad, delta, y_plus, y_minus)


def minimize(
    f: Callable[[np.ndarray], float],
    theta0,
    steps: int,
    settings: SPSASettings = SPSASettings(),
    seed: int = 0,
) -> list[np.ndarray]:
    """Plain SPSA loop over a deterministic objective; returns the trajectory."""
    theta = np.asarray(theta0, dtype=float)
    history = [(theta, f(theta))]
    path = [theta]
    for _ in range(steps):
        step = propose_params(history, settings, seed, lambda x, _s: f(x))
        theta = step.theta_next
        history.append((theta, f(theta)))
        path.append(theta)
    return path
