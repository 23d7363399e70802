"""Numerical checks tying softmax-policy KL divergence to value-change variance.

For a softmax policy p(a) ~ exp(q_a / alpha), perturbing the values by dq moves
the policy; the KL divergence between the new and old policies is approximately
Var_{a~p}(dq) / (2 alpha^2) when the perturbation is small. This module
computes both sides exactly, verifies the partition-function ratio identity
that the approximation rests on, and produces a Monte-Carlo error report.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SoftPolicyInstance:
    """Finite action set with values q and temperature alpha > 0."""

    q_values: np.ndarray
    temperature: float

    def __post_init__(self) -> None:
        q = np.asarray(self.q_values, dtype=np.float64)
        object.__setattr__(self, "q_values", q)
        if q.ndim != 1 or q.size < 2:
            raise ValueError("need a vector of >= 2 action values")
        if not np.all(np.isfinite(q)):
            raise ValueError("action values must be finite")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be > 0")


@dataclass(frozen=True)
class PerturbationScenario:
    """A base soft policy plus a finite value perturbation of typical size scale."""

    base: SoftPolicyInstance
    delta_q: np.ndarray
    scale: float = 0.0

    def __post_init__(self) -> None:
        d = np.asarray(self.delta_q, dtype=np.float64)
        object.__setattr__(self, "delta_q", d)
        if d.shape != self.base.q_values.shape:
            raise ValueError("perturbation shape must match the value vector")
        if not np.all(np.isfinite(d)):
            raise ValueError("perturbation must be finite")


def _logsumexp(x: np.ndarray) -> float:
    m = float(np.max(x))
    return m + float(np.log(np.sum(np.exp(x - m))))


def softmax_policy(q: np.ndarray, alpha: float) -> np.ndarray:
    """p_a = exp(q_a / alpha) / sum_b exp(q_b / alpha), overflow-safe."""
    if alpha <= 0.0:
        raise ValueError("temperature must be > 0")
    z = np.asarray(q, dtype=np.float64) / alpha
    z = z - np.max(z)
    e = np.exp(z)
    return e / e.sum()


def exact_kl(p: np.ndarray, q: np.ndarray) -> float:
    """Discrete KL(p || q) with the 0*log(0) = 0 convention."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError("distributions must have equal length")
    for name, dist in (("p", p), ("q", q)):
        if np.any(dist < 0) or abs(float(dist.sum()) - 1.0) > 1e-9:
            raise ValueError(f"{name} is not a probability distribution")
    support = p > 0.0
    if np.any(q[support] == 0.0):
        raise ValueError("KL undefined: q vanishes where p has mass")
    ps = p[support]
    return float(np.sum(ps * (np.log(ps) - np.log(q[support]))))


def partition_ratio_check(scenario: PerturbationScenario) -> tuple[float, float]:
    """Both sides of the normalizer-ratio identity.

    lhs: sum_a exp((q_a + dq_a)/alpha) / sum_a exp(q_a/alpha)
    rhs: E_{a ~ softmax(q/alpha)}[exp(dq_a/alpha)]
    These are algebraically equal; any gap is floating-point noise.
    """
    q = scenario.base.q_values
    dq = scenario.delta_q
    alpha = scenario.base.temperature
    lhs = float(np.exp(_logsumexp((q + dq) / alpha) - _logsumexp(q / alpha)))
    p = softmax_policy(q, alpha)
    rhs = float(np.sum(p * np.exp(dq / alpha)))
    return lhs, rhs


def variance_kl_approx(scenario: PerturbationScenario) -> float:
    """Second-order KL estimate: Var_{a ~ p_old}(dq) / (2 alpha^2)."""
    p = softmax_policy(scenario.base.q_values, scenario.base.temperature)
    dq = scenario.delta_q
    mean = float(np.sum(p * dq))
    var = float(np.sum(p * (dq - mean) ** 2))
    return var / (2.0 * scenario.base.temperature**2)


def shift_identity_error(scenario: PerturbationScenario) -> float:
    """Gap in the first-order expectation shift between old and new policies.

    Checks how far E_{a~p_new}[dq] sits from E_{a~p_old}[dq] +
    Var_{a~p_old}(dq)/alpha; exact for infinitesimal perturbations.
    """
    q = scenario.base.q_values
    dq = scenario.delta_q
    alpha = scenario.base.temperature
    p_old = softmax_policy(q, alpha)
    p_new = softmax_policy(q + dq, alpha)
    lhs = float(np.sum(p_new * dq))
    mean = float(np.sum(p_old * dq))
    var = float(np.sum(p_old * (dq - mean) ** 2))
    return abs(lhs - (mean + var / alpha))


@dataclass(frozen=True)
class ReportRow:
    scale: float
    mean_exact_kl: float
    mean_approx_kl: float
    mean_rel_error: float
    mean_shift_error: float


def _relative_error(approx: float, exact: float) -> float:
    if exact <= 1e-15:
        return 0.0 if approx <= 1e-15 else float("inf")
    return abs(approx - exact) / exact


def approximation_report(
    n_actions: int,
    alpha: float,
    scales: list[float],
    trials: int,
    rng: np.random.Generator,
) -> list[ReportRow]:
    """Monte-Carlo accuracy table for the variance-based KL estimate.

    For each perturbation scale, draws base values q ~ N(0, 1)^A and
    perturbations dq ~ N(0, scale^2)^A, then compares the exact discrete KL of
    the perturbed softmax policy against the variance estimate.
    """
    if n_actions < 2:
        raise ValueError("need >= 2 actions")
    if trials < 100:
        raise ValueError("need >= 100 trials per scale")
    if any(a <= b for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly descending")
    rows = []
    for scale in scales:
        exact_sum = approx_sum = rel_sum = shift_sum = 0.0
        for _ in range(trials):
            q = rng.standard_normal(n_actions)
            dq = rng.normal(0.0, scale, n_actions) if scale > 0 else np.zeros(n_actions)
            scenario = PerturbationScenario(SoftPolicyInstance(q, alpha), dq, scale)
            kl = exact_kl(softmax_policy(q + dq, alpha), softmax_policy(q, alpha))
            approx = variance_kl_approx(scenario)
            exact_sum += kl
            approx_sum += approx
            rel_sum += _relative_error(approx, kl)
            shift_sum += shift_identity_error(scenario)
        rows.append(
            ReportRow(
                scale=scale,
                mean_exact_kl=exact_sum / trials,
                mean_approx_kl=approx_sum / trials,
                mean_rel_error=rel_sum / trials,
                mean_shift_error=shift_sum / trials,
            )
        )
    return rows


def format_report(rows: list[ReportRow]) -> str:
    """Tab-separated table, one row per perturbation scale."""
    lines = ["sigma\tmean_exact_kl\tmean_approx_kl\tmean_rel_error\tmean_shift_error"]
    for r in rows:
        lines.append(
            f"{r.scale:g}\t{r.mean_exact_kl:.9e}\t{r.mean_approx_kl:.9e}"
            f"\t{r.mean_rel_error:.6f}\t{r.mean_shift_error:.9e}"
        )
    return "\n".join(lines)
