"""Trust coefficient: representativeness times generalisation.

Inter-transmission times and packet lengths are modelled as exponential, so
each traffic set is summarised by its mean. Representativeness compares the
learned set with the benign traffic observed since, through the KL
divergence of the two exponentials. Generalisation averages data adequacy
(samples learned versus parameter count) and knowledge (a halving moving
average of learning errors).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# floor for running means so a set made of zero gaps still has a finite rate
MEAN_FLOOR = 1e-9


class UndefinedStatistics(ValueError):
    pass


def _kl_exponential(rate_o: float, rate_l: float) -> float:
    if rate_o <= 0 or rate_l <= 0:
        raise UndefinedStatistics("rates must be positive")
    return math.log(rate_o / rate_l) - (rate_o - rate_l) / rate_o


def kl_tt(lam_o: float, lam_l: float) -> float:
    """KL divergence of observed from learned inter-transmission times."""
    return _kl_exponential(lam_o, lam_l)


def kl_pl(mu_o: float, mu_l: float) -> float:
    """KL divergence of observed from learned packet lengths."""
    return _kl_exponential(mu_o, mu_l)


def _norm_factor(rate_o: float, rate_l: float) -> float:
    """``exp(-KL)`` written directly in the rates."""
    ratio = rate_l / rate_o
    return ratio * math.exp(-(rate_l - rate_o) / rate_o)


@dataclass
class RunningMean:
    total: float = 0.0
    count: int = 0

    def add(self, total: float, count: int = 1) -> None:
        self.total += total
        self.count += count

    @property
    def mean(self) -> float:
        if self.count == 0:
            raise UndefinedStatistics("empty set")
        return max(self.total / self.count, MEAN_FLOOR)

    @property
    def rate(self) -> float:
        return 1.0 / self.mean


@dataclass
class TrafficStats:
    """Running TT/PL means of the learned set and of observed benign traffic."""

    learned_tt: RunningMean = field(default_factory=RunningMean)
    learned_pl: RunningMean = field(default_factory=RunningMean)
    observed_tt: RunningMean = field(default_factory=RunningMean)
    observed_pl: RunningMean = field(default_factory=RunningMean)

    def learn(self, tt_sum: float, pl_sum: float, n: int = 1) -> None:
        self.learned_tt.add(tt_sum, n)
        self.learned_pl.add(pl_sum, n)

    def observe(self, tt_sum: float, pl_sum: float, n: int = 1) -> None:
        self.observed_tt.add(tt_sum, n)
        self.observed_pl.add(pl_sum, n)

    @property
    def defined(self) -> bool:
        return self.learned_tt.count > 0 and self.observed_tt.count > 0


def representativeness(stats: TrafficStats) -> float:
    """Average of ``exp(-KL)`` over TT and PL; 0 while either set is empty."""
    if not stats.defined:
        return 0.0
    d_tt = kl_tt(stats.observed_tt.rate, stats.learned_tt.rate)
    d_pl = kl_pl(stats.observed_pl.rate, stats.learned_pl.rate)
    return 0.5 * (math.exp(-d_tt) + math.exp(-d_pl))


def representativeness_closed_form(lam_o, lam_l, mu_o, mu_l) -> float:
    return 0.5 * (_norm_factor(lam_o, lam_l) + _norm_factor(mu_o, mu_l))


def data_adequacy(total_learned: int, n_params: int) -> float:
    if total_learned <= 0:
        return 0.0
    return 1.0 - min(n_params / total_learned, 1.0)


def knowledge_update(kappa: float, error: float) -> float:
    return 0.5 - 0.5 * (error - kappa)


def knowledge_closed_form(errors) -> float:
    """Knowledge after phases with the given learning errors (oldest first)."""
    n = len(errors)
    return 1.0 - sum(0.5 ** (n - k) * e for k, e in enumerate(errors))


def generalization(delta: float, kappa: float) -> float:
    return 0.5 * delta + 0.5 * kappa


def trust(c_rep: float, c_gen: float) -> float:
    return c_rep * c_gen


@dataclass
class TrustState:
    """Everything needed to produce the trust coefficient at any time.

    ``kappa`` starts at 1, the value for which the one-step update reproduces
    the closed-form moving average. ``kappa_committed`` holds the value at the
    end of the last finished phase, so repeated refits inside one phase do
    not compound.
    """

    n_params: int
    stats: TrafficStats = field(default_factory=TrafficStats)
    kappa: float = 1.0
    kappa_committed: float = 1.0
    total_learned: int = 0
    delta: float = 0.0
    c_gen: float = 0.0
    c_rep: float = 0.0
    gamma: float = 0.0

    def refresh_generalization(self, error: float) -> None:
        self.kappa = knowledge_update(self.kappa_committed, error)
        self.delta = data_adequacy(self.total_learned, self.n_params)
        self.c_gen = generalization(self.delta, self.kappa)

    def commit_phase(self) -> None:
        self.kappa_committed = self.kappa

    def refresh(self) -> float:
        self.c_rep = representativeness(self.stats)
        self.gamma = trust(self.c_rep, self.c_gen)
        return self.gamma

    def snapshot(self) -> dict:
        return {
            "gamma": self.gamma,
            "c_rep": self.c_rep,
            "c_gen": self.c_gen,
            "delta": self.delta,
            "kappa": self.kappa,
        }
