# clustering/optim.py
"""Optimiseurs : SGD avec moment et Adam, état par paramètre."""
import numpy as np
from django.db import models

from waveforms.exceptions import InvalidInputError


class OptimizerKind(models.TextChoices):
    SGD = "sgd", "SGD avec moment"
    ADAM = "adam", "Adam"


def sgd_step(param, slots, lr, momentum=0.0, weight_decay=0.0):
    if param.grad is None:
        return
    grad = param.grad + weight_decay * param.data if weight_decay else param.grad
    if momentum:
        velocity = slots.setdefault("momentum", np.zeros_like(param.data))
        velocity *= momentum
        velocity += grad
        grad = velocity
    param.data -= (lr * grad).astype(param.dtype)


def adam_step(param, slots, lr, step, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
    """Pas Adam avec correction de biais ; `step` commence à 1."""
    if param.grad is None:
        return
    grad = param.grad + weight_decay * param.data if weight_decay else param.grad
    m = slots.setdefault("m", np.zeros_like(param.data))
    v = slots.setdefault("v", np.zeros_like(param.data))
    m *= beta1
    m += (1 - beta1) * grad
    v *= beta2
    v += (1 - beta2) * grad * grad
    m_hat = m / (1 - beta1 ** step)
    v_hat = v / (1 - beta2 ** step)
    param.data -= (lr * m_hat / (np.sqrt(v_hat) + eps)).astype(param.dtype)


class Optimizer:

    def __init__(self, params, lr):
        if lr < 0:
            raise InvalidInputError(f"Taux d'apprentissage négatif : {lr}")
        self.params = list(params)
        self.lr = lr
        # Emplacements indexés par position du paramètre
        self.state = [{} for _ in self.params]
        self.steps = 0

    def zero_grad(self):
        for param in self.params:
            param.zero_grad()

    def step(self):
        raise NotImplementedError


class SGD(Optimizer):

    def __init__(self, params, lr, momentum=0.0, weight_decay=0.0):
        super().__init__(params, lr)
        self.momentum = momentum
        self.weight_decay = weight_decay

    def step(self):
        self.steps += 1
        for param, slots in zip(self.params, self.state):
            sgd_step(param, slots, self.lr, self.momentum, self.weight_decay)


class Adam(Optimizer):

    def __init__(self, params, lr, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.0):
        super().__init__(params, lr)
        self.betas = betas
        self.eps = eps
        self.weight_decay = weight_decay

    def step(self):
        self.steps += 1
        beta1, beta2 = self.betas
        for param, slots in zip(self.params, self.state):
            adam_step(param, slots, self.lr, self.steps, beta1, beta2, self.eps, self.weight_decay)


def build_optimizer(kind, params, lr, momentum=0.9):
    if kind == OptimizerKind.SGD:
        return SGD(params, lr, momentum=momentum)
    if kind == OptimizerKind.ADAM:
        return Adam(params, lr)
    raise InvalidInputError(f"Optimiseur inconnu : {kind}")
