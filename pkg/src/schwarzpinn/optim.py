"""Adam with per-epoch exponential learning-rate decay.

One :class:`AdamState` per network, owned by whichever task trains that
network.  Parameters are updated in place on the flat vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr0: float = 1e-2
    lr_decay: float = 0.95

    def reset(self) -> None:
        self.m[:] = 0.0
        self.v[:] = 0.0
        self.step = 0

    def to_dict(self) -> dict:
        return {"m": self.m.tolist(), "v": self.v.tolist(), "step": self.step,
                "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
                "lr0": self.lr0, "lr_decay": self.lr_decay}

    @classmethod
    def from_dict(cls, doc: dict) -> "AdamState":
        return cls(m=np.asarray(doc["m"], dtype=np.float64),
                   v=np.asarray(doc["v"], dtype=np.float64),
                   step=int(doc["step"]), beta1=doc["beta1"],
                   beta2=doc["beta2"], eps=doc["eps"], lr0=doc["lr0"],
                   lr_decay=doc["lr_decay"])


def adam_init(n_params: int, lr0: float = 1e-2, lr_decay: float = 0.95,
              beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    if not 0.0 < lr_decay <= 1.0:
        raise ValueError("lr_decay must be in (0, 1]")
    return AdamState(m=np.zeros(n_params), v=np.zeros(n_params), beta1=beta1,
                     beta2=beta2, eps=eps, lr0=lr0, lr_decay=lr_decay)


def lr_schedule(lr0: float, decay: float, epoch: int) -> float:
    """Learning rate after ``epoch`` whole epochs: lr0 * decay**epoch."""
    return lr0 * decay ** epoch


def adam_step(state: AdamState, params: np.ndarray, grad: np.ndarray,
              epoch: int = 0) -> np.ndarray:
    """One bias-corrected Adam update in place; lr decays with ``epoch``."""
    if grad.shape != params.shape:
        raise ValueError("gradient length does not match parameter count")
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient entries")
    lr = lr_schedule(state.lr0, state.lr_decay, epoch)
    state.step += 1
    t = state.step
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * grad
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1 ** t)
    v_hat = state.v / (1.0 - state.beta2 ** t)
    params -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params
