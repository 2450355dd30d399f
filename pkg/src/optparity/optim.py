"""Update rules and the composite routing optimizer.

Five rules: classical heavy-ball momentum, Nesterov momentum, Adam (with
the bias-correction toggle), LARS, and LAMB. Weight decay comes in two
modes: ``l2_into_gradient`` folds lambda*theta into the gradient before
the rule's mechanics; ``decoupled`` subtracts eta*lambda*theta directly
in the parameter update. Groups whose tag is in ``exclude_tags`` receive
neither decay nor layer-wise normalization.

Every update op is a pure function: it validates inputs, copies, and
returns new arrays. The composite optimizer routes each parameter group
to a rule by tag (first matching rule wins) and advances the global step
counter once per composite step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import LengthMismatch, NonFiniteInput, DivisionHazard, UncoveredTag
from .param_store import ParamStore, TAGS

KINDS = ("heavy_ball", "nesterov", "adam", "lars", "lamb")


@dataclass
class OptimizerConfig:
    kind: str = "heavy_ball"
    momentum: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    bias_correction: bool = True
    trust_coefficient: float = 0.001
    decay_mode: str | None = None  # resolved per kind when None
    decay: float = 0.0
    exclude_tags: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ValueError("beta1/beta2 must be in [0, 1)")
        if self.kind in ("adam", "lamb") and self.epsilon <= 0.0:
            # epsilon=0 tolerated only for analytical tests; flagged at use time
            pass
        if self.trust_coefficient <= 0.0:
            raise ValueError("trust_coefficient must be > 0")
        if self.decay < 0.0:
            raise ValueError("decay must be >= 0")
        if self.decay_mode is None:
            # L2 for the momentum family, decoupled for the Adam family
            self.decay_mode = (
                "decoupled" if self.kind in ("adam", "lamb") else "l2_into_gradient"
            )
        if self.decay_mode not in ("l2_into_gradient", "decoupled"):
            raise ValueError(f"unknown decay_mode {self.decay_mode!r}")
        self.exclude_tags = frozenset(self.exclude_tags)


@dataclass
class GroupState:
    """Slot buffers for one parameter group plus the step count in effect."""

    v: np.ndarray
    m: np.ndarray
    s: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int, t: int = 0) -> "GroupState":
        return cls(np.zeros(n), np.zeros(n), np.zeros(n), t)


@dataclass
class OptimizerState:
    slots: dict[str, GroupState]
    t: int = 0

    @classmethod
    def for_store(cls, store: ParamStore) -> "OptimizerState":
        return cls({g.name: GroupState.zeros(g.values.size) for g in store}, 0)


@dataclass
class RoutingRule:
    """Ordered (tag set -> config) routes; first match wins."""

    routes: list[tuple[frozenset[str], OptimizerConfig]]

    def config_for(self, tag: str) -> OptimizerConfig:
        for tags, cfg in self.routes:
            if tag in tags:
                return cfg
        raise UncoveredTag(tag)

    def covers_all(self) -> bool:
        covered = set()
        for tags, _ in self.routes:
            covered |= tags
        return covered >= set(TAGS)


def _check(g: np.ndarray, theta: np.ndarray):
    if g.shape != theta.shape:
        raise LengthMismatch(f"{g.shape} vs {theta.shape}")
    if not np.all(np.isfinite(g)):
        raise NonFiniteInput("gradient contains NaN/Inf")


def _decays(config: OptimizerConfig, group_tag: str) -> tuple[float, float]:
    """(l2 lambda, decoupled lambda) effective for this group."""
    if group_tag in config.exclude_tags or config.decay == 0.0:
        return 0.0, 0.0
    if config.decay_mode == "l2_into_gradient":
        return config.decay, 0.0
    return 0.0, config.decay


def effective_gradient(
    g: np.ndarray, theta: np.ndarray, config: OptimizerConfig, group_tag: str
) -> np.ndarray:
    """g + lambda*theta under l2_into_gradient (unless the tag is excluded)."""
    if g.shape != theta.shape:
        raise LengthMismatch(f"{g.shape} vs {theta.shape}")
    l2, _ = _decays(config, group_tag)
    if l2 == 0.0:
        return g
    return g + l2 * theta


def heavy_ball_update(theta, g, state: GroupState, eta: float, config: OptimizerConfig,
                      group_tag: str = "weight"):
    _check(g, theta)
    l2, wd = _decays(config, group_tag)
    theta = np.array(theta, dtype=np.float64)
    v = state.v.copy()
    g_eff = np.asarray(g, dtype=np.float64) + l2 * theta if l2 else np.asarray(g, dtype=np.float64)
    kernels.heavy_ball_step(theta, g_eff, v, eta, config.momentum, wd)
    return theta, GroupState(v, state.m.copy(), state.s.copy(), state.t + 1)


def nesterov_update(theta, g, state: GroupState, eta: float, config: OptimizerConfig,
                    group_tag: str = "weight"):
    _check(g, theta)
    l2, wd = _decays(config, group_tag)
    theta = np.array(theta, dtype=np.float64)
    v = state.v.copy()
    g_eff = np.asarray(g, dtype=np.float64) + l2 * theta if l2 else np.asarray(g, dtype=np.float64)
    kernels.nesterov_step(theta, g_eff, v, eta, config.momentum, wd)
    return theta, GroupState(v, state.m.copy(), state.s.copy(), state.t + 1)


def _adam_direction(g_eff, state: GroupState, config: OptimizerConfig):
    """Updated (m, s) and the m_hat/(sqrt(s_hat)+eps) direction at step t+1."""
    t_next = state.t + 1
    m = state.m.copy()
    s = state.s.copy()
    kernels.adam_moments(m, s, g_eff, config.beta1, config.beta2)
    if config.bias_correction:
        c1 = 1.0 - config.beta1 ** t_next
        c2 = 1.0 - config.beta2 ** t_next
    else:
        c1 = c2 = 1.0
    if config.epsilon == 0.0 and np.any(s == 0.0):
        raise DivisionHazard("epsilon=0 with a zero second-moment entry")
    base = np.empty_like(m)
    kernels.adam_direction(base, m, s, config.epsilon, c1, c2)
    return m, s, base


def adam_update(theta, g, state: GroupState, eta: float, config: OptimizerConfig,
                group_tag: str = "weight"):
    _check(g, theta)
    l2, wd = _decays(config, group_tag)
    theta = np.asarray(theta, dtype=np.float64)
    g_eff = np.asarray(g, dtype=np.float64) + l2 * theta if l2 else np.asarray(g, dtype=np.float64)
    m, s, base = _adam_direction(g_eff, state, config)
    theta_new = theta - eta * (base + wd * theta)
    return theta_new, GroupState(state.v.copy(), m, s, state.t + 1)


def lars_update(theta, g, state: GroupState, eta: float, config: OptimizerConfig,
                group_tag: str = "weight"):
    _check(g, theta)
    theta = np.array(theta, dtype=np.float64)
    l2, wd = _decays(config, group_tag)
    g_eff = np.asarray(g, dtype=np.float64) + l2 * theta if l2 else np.asarray(g, dtype=np.float64)
    theta_norm = float(np.linalg.norm(theta))
    g_norm = float(np.linalg.norm(g_eff))
    if group_tag in config.exclude_tags or theta_norm == 0.0 or g_norm == 0.0:
        ratio = 1.0
    else:
        ratio = config.trust_coefficient * theta_norm / g_norm
    v = state.v.copy()
    kernels.trust_momentum_step(theta, g_eff, v, ratio * eta, config.momentum)
    if wd:
        theta -= eta * wd * theta
    return theta, GroupState(v, state.m.copy(), state.s.copy(), state.t + 1)


def lamb_update(theta, g, state: GroupState, eta: float, config: OptimizerConfig,
                group_tag: str = "weight"):
    _check(g, theta)
    l2, wd = _decays(config, group_tag)
    theta = np.asarray(theta, dtype=np.float64)
    g_eff = np.asarray(g, dtype=np.float64) + l2 * theta if l2 else np.asarray(g, dtype=np.float64)
    m, s, base = _adam_direction(g_eff, state, config)
    u = base + wd * theta if wd else base
    theta_norm = float(np.linalg.norm(theta))
    u_norm = float(np.linalg.norm(u))
    if group_tag in config.exclude_tags or theta_norm == 0.0 or u_norm == 0.0:
        ratio = 1.0
    else:
        ratio = theta_norm / u_norm
    theta_new = theta - eta * ratio * u
    return theta_new, GroupState(state.v.copy(), m, s, state.t + 1)


_UPDATE_FNS = {
    "heavy_ball": heavy_ball_update,
    "nesterov": nesterov_update,
    "adam": adam_update,
    "lars": lars_update,
    "lamb": lamb_update,
}


def composite_step(
    store: ParamStore,
    grads: dict[str, np.ndarray],
    routing: RoutingRule,
    eta: float,
    state: OptimizerState,
) -> tuple[ParamStore, OptimizerState]:
    """Update every group via its routed rule with a shared learning rate.

    The global step counter advances exactly once; each group's update
    sees the pre-step count so Adam bias correction stays aligned.
    """
    new_store = store.copy()
    new_slots = {}
    for grp in new_store:
        cfg = routing.config_for(grp.tag)
        g = grads[grp.name]
        slot = state.slots[grp.name]
        gstate = GroupState(slot.v, slot.m, slot.s, state.t)
        fn = _UPDATE_FNS[cfg.kind]
        theta_new, slot_new = fn(grp.values, g, gstate, eta, cfg, grp.tag)
        grp.values[:] = theta_new
        new_slots[grp.name] = slot_new
    return new_store, OptimizerState(new_slots, state.t + 1)
