"""
Distances, divergences and goodness-of-fit statistics over bitstring distributions.

Distributions are plain mappings bitstring -> probability; missing keys have
probability zero.
"""
import math
from typing import Dict, List, Mapping, Tuple

from scipy.special import gammaincc


def _support(p: Mapping[str, float], q: Mapping[str, float]) -> List[str]:
    return sorted(set(p) | set(q))


def total_variation(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    return 0.5 * math.fsum(abs(p.get(x, 0.0) - q.get(x, 0.0)) for x in _support(p, q))


def hellinger(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    squared = math.fsum((math.sqrt(p.get(x, 0.0)) - math.sqrt(q.get(x, 0.0))) ** 2 for x in _support(p, q))
    return min(math.sqrt(squared) / math.sqrt(2), 1.0)


def kl_divergence(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    """Natural-log KL(P||Q); +inf when P puts mass where Q has none"""
    terms = []
    for x, px in p.items():
        if px <= 0:
            continue
        qx = q.get(x, 0.0)
        if qx <= 0:
            return math.inf
        terms.append(px * math.log(px / qx))
    return max(math.fsum(terms), 0.0)


def classical_fidelity(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    """Squared Bhattacharyya coefficient"""
    coefficient = math.fsum(math.sqrt(p.get(x, 0.0) * q.get(x, 0.0)) for x in _support(p, q))
    return min(coefficient ** 2, 1.0)


def shannon_entropy(p: Mapping[str, float]) -> float:
    """Entropy in bits"""
    return max(-math.fsum(px * math.log2(px) for px in p.values() if px > 0), 0.0)


def chi2_survival(statistic: float, df: int) -> float:
    """P[X >= statistic] for X ~ chi-squared(df), via the regularized upper incomplete gamma"""
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    if statistic <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, statistic / 2.0))


def chi2_goodness_of_fit(
    observed: Mapping[str, int], expected: Mapping[str, float], shots: int
) -> Tuple[float, float, Dict[str, int]]:
    """
    Pearson goodness-of-fit of observed counts against reference probabilities.

    Returns (statistic, p_value, unexpected) where `unexpected` holds observed
    outcomes with no reference probability; any such outcome forces p = 0.
    With a single reference outcome (df = 0) p is 1 if every shot landed on it,
    else 0.
    """
    support = {x: qx for x, qx in expected.items() if qx > 0}
    unexpected = {x: n for x, n in observed.items() if x not in support and n > 0}
    statistic = 0.0
    for x, qx in support.items():
        e = shots * qx
        statistic += (observed.get(x, 0) - e) ** 2 / e
    df = len(support) - 1
    if unexpected:
        return statistic, 0.0, unexpected
    if df == 0:
        only = next(iter(support))
        return statistic, 1.0 if observed.get(only, 0) == shots else 0.0, unexpected
    return statistic, chi2_survival(statistic, df), unexpected
