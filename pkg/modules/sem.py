"""Generalized structural equation model over binary trial data.

Each node j has a one-hidden-layer sigmoid network g_j that sees every column except
its own. Input sensitivities of the first layer define the weighted adjacency W, and
h(W) = tr(exp(W∘W)) - n measures how far W is from a DAG.
"""
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as slin
from scipy.special import expit as sigmoid

from modules.exceptions import NumericError
from modules.models import ContextTrial, MachineState

EPS = 1e-7


@dataclass(frozen=True)
class DataMatrix:
    X: np.ndarray = field(compare=False)
    object_ids: Tuple[int, ...]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def machine(self) -> int:
        return self.n - 1


def build_data_matrix(context: Sequence[ContextTrial], object_ids: Optional[Sequence[int]] = None) -> DataMatrix:
    """Presence bits per trial, columns in ascending object id, machine state last"""
    ids = tuple(sorted(object_ids if object_ids is not None else {o for t in context for o in t.object_ids}))
    column = {o: k for k, o in enumerate(ids)}
    X = np.zeros((len(context), len(ids) + 1))
    for r, trial in enumerate(context):
        X[r, [column[o] for o in trial.object_ids]] = 1.0
        X[r, -1] = 1.0 if trial.machine_state == MachineState.ON else 0.0
    return DataMatrix(X=X, object_ids=ids)


def acyclicity(W: np.ndarray) -> Tuple[float, np.ndarray]:
    """h(W) = tr(exp(W∘W)) - n and its gradient (exp(W∘W))ᵀ ∘ 2W"""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise NumericError(f"acyclicity needs a square matrix, got shape {W.shape}")
    if not np.isfinite(W).all():
        raise NumericError("acyclicity received non-finite entries")
    E = slin.expm(W * W)
    h = float(np.trace(E) - W.shape[0])
    return h, E.T * W * 2


@dataclass
class AlState:
    alpha: float = 0.0
    rho: float = 1.0
    h: float = float("inf")
    outer_iterations: int = 0


@dataclass
class GeneralizedSEM:
    first_pos: np.ndarray  # (n, H, n): node, hidden unit, input
    first_neg: np.ndarray
    bias1: np.ndarray  # (n, H)
    second: np.ndarray  # (n, H)
    bias2: np.ndarray  # (n,)
    object_ids: Tuple[int, ...] = ()
    state: AlState = field(default_factory=AlState)
    loss: float = float("nan")
    h_unconverged: bool = False

    @property
    def n(self) -> int:
        return self.bias2.shape[0]

    @property
    def hidden(self) -> int:
        return self.bias1.shape[1]

    @property
    def first(self) -> np.ndarray:
        return self.first_pos - self.first_neg

    @property
    def machine(self) -> int:
        return self.n - 1

    def weighted_adjacency(self) -> np.ndarray:
        """W[k, j] = L2 norm of node j's first-layer weights from input k"""
        return np.sqrt((self.first**2).sum(axis=1)).T

    def squared_adjacency(self) -> np.ndarray:
        return (self.first**2).sum(axis=1).T

    def predict(self, X: np.ndarray) -> np.ndarray:
        """g_j applied row-wise; (m, n) probabilities"""
        return _forward(self, np.atleast_2d(X))[2]

    # flat parameter vector used by the optimizers
    def pack(self) -> np.ndarray:
        return np.concatenate(
            [self.first_pos.ravel(), self.first_neg.ravel(), self.bias1.ravel(), self.second.ravel(), self.bias2]
        )

    def unpack(self, theta: np.ndarray) -> "GeneralizedSEM":
        n, H = self.n, self.hidden
        sizes = [n * H * n, n * H * n, n * H, n * H, n]
        parts = np.split(np.asarray(theta, dtype=float), np.cumsum(sizes)[:-1])
        return GeneralizedSEM(
            first_pos=parts[0].reshape(n, H, n),
            first_neg=parts[1].reshape(n, H, n),
            bias1=parts[2].reshape(n, H),
            second=parts[3].reshape(n, H),
            bias2=parts[4].copy(),
            object_ids=self.object_ids,
            state=self.state,
            loss=self.loss,
            h_unconverged=self.h_unconverged,
        )

    def bounds(self, weight_bound: Optional[float] = None, machine_sink: bool = False):
        """Box for L-BFGS-B over the flat vector.

        Split first-layer weights lie in [0, weight_bound]; self-inputs are pinned to zero,
        and so is the machine input of every object node when machine_sink is set.
        """
        n, H = self.n, self.hidden
        first = [
            (0.0, 0.0) if _masked(j, k, n, machine_sink) else (0.0, weight_bound)
            for j in range(n)
            for _ in range(H)
            for k in range(n)
        ]
        return first + first + [(None, None)] * (n * H * 2 + n)


def _masked(node: int, source: int, n: int, machine_sink: bool) -> bool:
    if node == source:
        return True
    return machine_sink and source == n - 1


def init_sem(
    n: int,
    hidden: int,
    rng: np.random.Generator,
    scale: float = 0.1,
    object_ids: Sequence[int] = (),
    second_scale: Optional[float] = None,
    machine_sink: bool = False,
) -> GeneralizedSEM:
    """Uniform first layer in [-scale, scale] with masked inputs zeroed; second layer in
    [-second_scale, second_scale] (defaults to scale)"""
    second_scale = scale if second_scale is None else second_scale
    first = rng.uniform(-scale, scale, size=(n, hidden, n))
    for j in range(n):
        for k in range(n):
            if _masked(j, k, n, machine_sink):
                first[j, :, k] = 0.0
    return GeneralizedSEM(
        first_pos=np.maximum(first, 0.0),
        first_neg=np.maximum(-first, 0.0),
        bias1=np.zeros((n, hidden)),
        second=rng.uniform(-second_scale, second_scale, size=(n, hidden)),
        bias2=np.zeros(n),
        object_ids=tuple(object_ids),
    )


def _forward(sem: GeneralizedSEM, X: np.ndarray):
    A = sem.first
    Z1 = np.einsum("mk,jhk->mjh", X, A) + sem.bias1[None]
    Hh = sigmoid(Z1)
    Z2 = np.einsum("mjh,jh->mj", Hh, sem.second) + sem.bias2[None]
    return Z1, Hh, sigmoid(Z2)


def _bce(X: np.ndarray, P: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Elementwise BCE on clamped probabilities and the mask where the clamp is inactive"""
    Pc = np.clip(P, EPS, 1.0 - EPS)
    loss = -(X * np.log(Pc) + (1.0 - X) * np.log(1.0 - Pc))
    return loss, (P > EPS) & (P < 1.0 - EPS)


def reconstruction_loss(sem: GeneralizedSEM, X: np.ndarray) -> float:
    """(1/n) Σ_j mean over rows of BCE(X_j, g_j(X))"""
    loss, _ = _bce(X, sem.predict(X))
    return float(loss.mean())


def loss_and_grad(sem: GeneralizedSEM, X: np.ndarray) -> Tuple[float, Dict[str, np.ndarray]]:
    """Reconstruction loss with exact backpropagated gradients for every parameter block"""
    m, n = X.shape
    Z1, Hh, P = _forward(sem, X)
    loss, active = _bce(X, P)
    G2 = (P - X) * active / (m * n)
    G1 = G2[:, :, None] * sem.second[None] * Hh * (1.0 - Hh)
    dA = np.einsum("mjh,mk->jhk", G1, X)
    grads = {
        "first_pos": dA,
        "first_neg": -dA,
        "bias1": G1.sum(axis=0),
        "second": np.einsum("mj,mjh->jh", G2, Hh),
        "bias2": G2.sum(axis=0),
    }
    return float(loss.mean()), grads


def sem_acyclicity(sem: GeneralizedSEM) -> Tuple[float, np.ndarray]:
    """h of the SEM and its gradient with respect to the signed first-layer weights"""
    S = sem.squared_adjacency()
    if not np.isfinite(S).all():
        raise NumericError("SEM weights became non-finite")
    E = slin.expm(S)
    h = float(np.trace(E) - sem.n)
    return h, 2.0 * E[:, None, :] * sem.first


def row_objectives(sem: GeneralizedSEM, X: np.ndarray) -> np.ndarray:
    """Per-row (1/n) Σ_j BCE(x_j, g_j(x)) for candidate completions"""
    loss, _ = _bce(X, sem.predict(X))
    return loss.mean(axis=1)


def row_objective_grad(sem: GeneralizedSEM, x: np.ndarray) -> Tuple[float, np.ndarray]:
    """Objective of one completed row and its gradient with respect to every entry of x"""
    X = np.atleast_2d(x)
    n = sem.n
    _, Hh, P = _forward(sem, X)
    loss, active = _bce(X, P)
    Hh, P, active, x = Hh[0], P[0], active[0], X[0]
    # d z2_j / d x_k through the hidden layer
    J = np.einsum("jh,jhk->jk", sem.second * Hh * (1.0 - Hh), sem.first)
    through_network = ((P - x) * active) @ J
    Pc = np.clip(P, EPS, 1.0 - EPS)
    as_target = -(np.log(Pc) - np.log(1.0 - Pc))
    return float(loss[0].mean()), (through_network + as_target) / n
