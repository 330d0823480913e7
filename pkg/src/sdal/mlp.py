"""Optional feed-forward regressor for the reduced coefficients (needs torch)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray


def _torch():
    try:
        import torch
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise ImportError("the mlp regressor needs torch: pip install 'sdal[torch]'") from exc
    return torch


@dataclass(frozen=True, eq=False)
class MlpModel:
    """Dense tanh network stored as plain arrays; evaluation uses numpy only."""

    weights: tuple[NDArray[np.float64], ...]
    biases: tuple[NDArray[np.float64], ...]

    def predict(self, x: ArrayLike) -> NDArray[np.float64]:
        h = np.asarray(x, dtype=np.float64)
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k < last:
                h = np.tanh(h)
        return h


def fit_mlp(inputs: ArrayLike, targets: ArrayLike, settings) -> MlpModel:
    """Full-batch Adam on the mean squared error; step size halves every ``mlp_halve_every`` epochs."""
    torch = _torch()
    torch.manual_seed(settings.seed)
    x = torch.as_tensor(np.asarray(inputs, dtype=np.float64))
    y = torch.as_tensor(np.asarray(targets, dtype=np.float64))
    sizes = [x.shape[1], *settings.mlp_hidden, y.shape[1]]
    layers = []
    for k in range(len(sizes) - 1):
        layers.append(torch.nn.Linear(sizes[k], sizes[k + 1], dtype=torch.float64))
        if k < len(sizes) - 2:
            layers.append(torch.nn.Tanh())
    net = torch.nn.Sequential(*layers)
    opt = torch.optim.Adam(net.parameters(), lr=settings.mlp_lr)
    sched = torch.optim.lr_scheduler.StepLR(opt, step_size=settings.mlp_halve_every, gamma=0.5)
    for _ in range(settings.mlp_epochs):
        opt.zero_grad()
        loss = torch.mean((net(x) - y) ** 2)
        loss.backward()
        opt.step()
        sched.step()
    linear = [m for m in net if isinstance(m, torch.nn.Linear)]
    return MlpModel(
        tuple(m.weight.detach().numpy().T.copy() for m in linear),
        tuple(m.bias.detach().numpy().copy() for m in linear),
    )
