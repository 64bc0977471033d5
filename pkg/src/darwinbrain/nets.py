"""Flat-parameter single-hidden-layer networks used inside atoms."""

from __future__ import annotations

import numpy as np


def mlp_size(n_in: int, n_out: int, hidden: int) -> int:
    if hidden == 0:
        return n_out * n_in + n_out
    return hidden * n_in + hidden + n_out * hidden + n_out


def mlp_unpack(params, n_in: int, n_out: int, hidden: int):
    p = np.asarray(params, dtype=float)
    if hidden == 0:
        W = p[: n_out * n_in].reshape(n_out, n_in)
        b = p[n_out * n_in: n_out * n_in + n_out]
        return W, b
    i = 0
    W1 = p[i: i + hidden * n_in].reshape(hidden, n_in); i += hidden * n_in
    b1 = p[i: i + hidden]; i += hidden
    W2 = p[i: i + n_out * hidden].reshape(n_out, hidden); i += n_out * hidden
    b2 = p[i: i + n_out]
    return W1, b1, W2, b2


def mlp_forward(weights, x, hidden: int):
    x = np.asarray(x, dtype=float)
    if hidden == 0:
        W, b = weights
        return W @ x + b
    W1, b1, W2, b2 = weights
    return W2 @ np.tanh(W1 @ x + b1) + b2


def mlp_pack(weights) -> list:
    return [float(v) for w in weights for v in np.ravel(w)]


def fit_random_features(X, Y, hidden: int, rng, scale: float = 1.5, ridge: float = 1e-6):
    """Fit a tanh network by drawing the hidden layer at random and solving
    the output layer by ridge least squares. Returns packed weights."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n_in = X.shape[1]
    W1 = rng.normal(0.0, scale, size=(hidden, n_in))
    b1 = rng.uniform(-np.pi, np.pi, size=hidden)
    H = np.tanh(X @ W1.T + b1)
    Ha = np.hstack([H, np.ones((len(H), 1))])
    A = Ha.T @ Ha + ridge * np.eye(hidden + 1)
    sol = np.linalg.solve(A, Ha.T @ Y)
    W2 = sol[:hidden].T
    b2 = sol[hidden]
    return mlp_pack((W1, b1, W2, b2))


class ResidualModel:
    """One-step predictor ``y = x0 + scale * (W2 tanh(W1 x + b1) + b2)`` trained online.

    The network predicts the change in units of ``scale`` and is trained on
    the error in those units, so its targets are of order one. With
    ``W2 = 0, b2 = 0`` the model predicts persistence of ``x0``.
    """

    def __init__(self, n_in: int, hidden: int, flat, lr: float, scale: float = 1.0):
        self.n_in, self.hidden, self.lr, self.scale = n_in, hidden, lr, scale
        p = np.asarray(flat, dtype=float)
        i = 0
        self.W1 = p[i: i + hidden * n_in].reshape(hidden, n_in).copy(); i += hidden * n_in
        self.b1 = p[i: i + hidden].copy(); i += hidden
        self.W2 = p[i: i + hidden].copy(); i += hidden
        self.b2 = float(p[i])

    @staticmethod
    def size(n_in: int, hidden: int) -> int:
        return hidden * n_in + 2 * hidden + 1

    def predict(self, x) -> float:
        x = np.asarray(x, dtype=float)
        h = np.tanh(self.W1 @ x + self.b1)
        return float(x[0] + self.scale * (self.W2 @ h + self.b2))

    def train(self, x, target: float) -> float:
        """SGD step on one example; returns the prediction made before it."""
        x = np.asarray(x, dtype=float)
        h = np.tanh(self.W1 @ x + self.b1)
        pred = float(x[0] + self.scale * (self.W2 @ h + self.b2))
        e = (pred - target) / self.scale
        dh = e * self.W2 * (1.0 - h * h)
        self.W2 -= self.lr * e * h
        self.b2 -= self.lr * e
        self.W1 -= self.lr * np.outer(dh, x)
        self.b1 -= self.lr * dh
        return pred

    def copy(self) -> "ResidualModel":
        m = ResidualModel.__new__(ResidualModel)
        m.n_in, m.hidden, m.lr, m.scale = self.n_in, self.hidden, self.lr, self.scale
        m.W1, m.b1, m.W2, m.b2 = self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2
        return m
