"""Online learning of solution predictions.

Projected online gradient descent on the max-coordinate-error loss over the
box [-C, +C]^V, plus online-to-batch averaging. With the fixed-horizon step
size the cumulative loss beats any fixed point of the box up to an additive
C * sqrt(2nT).
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError

MAGNITUDE_CAP = 2 ** 40


def linf_loss_subgradient(p_star, p):
    """Loss max_i |p_i - p*_i| and one subgradient, +-e_k at the lowest
    index attaining the max (zero vector at zero loss)."""
    p_star = np.asarray(p_star, dtype=float)
    p = np.asarray(p, dtype=float)
    if p_star.shape != p.shape:
        raise ContractError("dimension mismatch")
    diff = p - p_star
    k = int(np.argmax(np.abs(diff)))
    loss = abs(diff[k])
    sub = np.zeros_like(p)
    if loss > 0:
        sub[k] = math.copysign(1.0, diff[k])
    return loss, sub


def linf_pm_loss_subgradient(p_star, p):
    """Signed variant: largest positive error plus largest negative error.
    Convex and sqrt(2)-Lipschitz; not used by the acceptance suite."""
    p_star = np.asarray(p_star, dtype=float)
    p = np.asarray(p, dtype=float)
    if p_star.shape != p.shape:
        raise ContractError("dimension mismatch")
    diff = p - p_star
    sub = np.zeros_like(p)
    plus = float(np.max(np.maximum(diff, 0.0), initial=0.0))
    minus = float(np.max(np.maximum(-diff, 0.0), initial=0.0))
    if plus > 0:
        sub[int(np.argmax(diff))] += 1.0
    if minus > 0:
        sub[int(np.argmin(diff))] -= 1.0
    return plus + minus, sub


@dataclass
class LearnerState:
    C: float
    n: int
    eta: float
    p_hat: np.ndarray
    t: int = 0
    anytime: bool = False
    loss_fn: callable = linf_loss_subgradient
    history: list = field(default_factory=list)  # (p_hat_t, p_star_t, loss_t)


def make_learner(n, C, horizon, anytime=False, loss_fn=linf_loss_subgradient):
    """Fixed-horizon learner with eta = C*sqrt(n)/sqrt(T), started at the
    box center."""
    if horizon < 1 or C <= 0 or n < 1:
        raise ContractError("need horizon >= 1, C > 0, n >= 1")
    eta = C * math.sqrt(n) / math.sqrt(horizon)
    return LearnerState(C=float(C), n=n, eta=eta, p_hat=np.zeros(n),
                        anytime=anytime, loss_fn=loss_fn)


def ogd_step(state, p_star):
    """Observe one target, record the loss of the current prediction, and
    take a projected subgradient step."""
    p_star = np.asarray(p_star, dtype=float)
    if np.any(np.abs(p_star) > MAGNITUDE_CAP):
        raise OverflowError("target exceeds magnitude cap")
    loss, sub = state.loss_fn(p_star, state.p_hat)
    state.history.append((state.p_hat.copy(), p_star.copy(), loss))
    state.t += 1
    eta = state.eta
    if state.anytime:
        eta = state.C * math.sqrt(state.n) / math.sqrt(state.t)
    state.p_hat = np.clip(state.p_hat - eta * sub, -state.C, state.C)
    return state


def learn_batch(samples, C, anytime=False):
    """Feed a sample sequence through the learner and return the average of
    the iterates (online-to-batch conversion). The average stays in the box."""
    samples = [np.asarray(s, dtype=float) for s in samples]
    if not samples:
        raise ContractError("need at least one sample")
    state = make_learner(len(samples[0]), C, len(samples), anytime=anytime)
    for s in samples:
        ogd_step(state, s)
    iterates = np.array([h[0] for h in state.history])
    return iterates.mean(axis=0)


def regret_eval(history, comparators, C=None):
    """Exact regret of the recorded run against each fixed comparator;
    returns (max_regret, {comparator_index: regret})."""
    if not history:
        raise ContractError("empty history")
    if C is not None:
        comparator_box_check(C, comparators)
    per = {}
    learner_loss = sum(h[2] for h in history)
    for idx, comp in enumerate(comparators):
        comp = np.asarray(comp, dtype=float)
        comp_loss = 0.0
        for _, p_star, _ in history:
            comp_loss += float(np.max(np.abs(comp - p_star)))
        per[idx] = learner_loss - comp_loss
    return max(per.values()), per


def regret_bound(C, n, horizon):
    return C * math.sqrt(2 * n * horizon)


def comparator_box_check(C, comparators):
    for comp in comparators:
        if np.any(np.abs(np.asarray(comp, dtype=float)) > C + 1e-12):
            raise ContractError("comparator outside the box")


def save_checkpoint(state, path):
    with open(path, "w") as f:
        json.dump({"C": state.C, "n": state.n, "p_hat": state.p_hat.tolist(),
                   "t": state.t, "eta": state.eta}, f)


def load_checkpoint(path):
    with open(path) as f:
        obj = json.load(f)
    state = LearnerState(C=obj["C"], n=obj["n"], eta=obj["eta"],
                         p_hat=np.array(obj["p_hat"], dtype=float), t=obj["t"])
    return state
