"""Joint count distribution: evaluation, enumeration, sampling, validation.

The probability of detecting atom counts N_1..N_Ma and photon counts
q_1..q_Mph is

    rho(N, q) = haf(C_ext) / (sqrt(det(1 + G)) * prod N_l! * prod q_nu!),

with C_ext the base matrix replicated per counts.  This module evaluates
single outcomes, enumerates the truncated lattice of all outcomes up to a
per-mode cutoff, marginalizes, draws reproducible inverse-CDF samples,
and checks samples against the enumerated distribution.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2

from .gaussian import CountsVector, extend_matrix
from .hafnian import POWERTRACE_MAX_DIM, hafnian, resolve_workers

__all__ = [
    "ImaginaryResidualError",
    "TruncationError",
    "OutcomeDistribution",
    "ChiSquareResult",
    "outcome_probability",
    "enumerate_distribution",
    "marginalize",
    "sample",
    "chi_square",
    "recommend_cutoff",
]

ENUMERATION_MAX_OUTCOMES = 10 ** 6

_CLAMP_FLOOR = -1e-12
_MASS_SLACK = 1e-9


class TruncationError(RuntimeError):
    """The enumerated distribution misses too much probability mass."""


class ImaginaryResidualError(RuntimeError):
    """A probability came out with a non-negligible imaginary part."""


@dataclass
class OutcomeDistribution:
    """Exhaustive outcome probabilities up to a per-mode cutoff.

    Attributes:
        cutoff: largest count per mode included in the lattice
        probabilities: ordered map CountsVector -> probability, outcomes
            in lexicographic count order
        captured_mass: sum of all included probabilities
        fingerprint: hex digest of the generating state
        m_a: atom modes in each outcome
        m_ph: photon modes in each outcome
        clamped: number of tiny negative probabilities snapped to zero
    """

    cutoff: int
    probabilities: dict
    captured_mass: float
    fingerprint: str
    m_a: int
    m_ph: int
    clamped: int = 0

    @property
    def m(self):
        return self.m_a + self.m_ph

    def outcomes(self):
        return list(self.probabilities.keys())

    def probability(self, counts):
        counts = _as_counts(counts, self.m_a, self.m_ph)
        return self.probabilities.get(counts, 0.0)


@dataclass
class ChiSquareResult:
    """Pearson goodness-of-fit verdict for a sample batch."""

    statistic: float
    dof: int
    p_value: float
    n_buckets: int
    significance: float = 0.01

    @property
    def passed(self):
        return self.p_value > self.significance

    @property
    def p_bucket(self):
        return "pass" if self.passed else "fail"


def _as_counts(counts, m_a, m_ph):
    if isinstance(counts, CountsVector):
        vec = counts
    else:
        flat = tuple(int(c) for c in counts)
        if len(flat) != m_a + m_ph:
            raise ValueError(
                "counts vector has %d entries, state has %d modes"
                % (len(flat), m_a + m_ph)
            )
        vec = CountsVector(atoms=flat[:m_a], photons=flat[m_a:])
    if len(vec.atoms) != m_a or len(vec.photons) != m_ph:
        raise ValueError(
            "counts partition (%d, %d) does not match state partition (%d, %d)"
            % (len(vec.atoms), len(vec.photons), m_a, m_ph)
        )
    if any(c < 0 for c in vec.key()):
        raise ValueError("counts must be nonnegative")
    return vec


def outcome_probability(state, counts, *, workers=None, tol_imaginary=1e-9):
    """Probability of one joint count outcome.

    Args:
        state (GaussianState): state built by the gaussian module
        counts: CountsVector or flat count sequence (atoms then photons)
        workers: thread cap for the hafnian evaluation
        tol_imaginary (float): relative bound on the imaginary residual

    Returns:
        float

    Raises:
        ImaginaryResidualError: imaginary part above tolerance, which
            signals an invalid base matrix.
        HafnianSizeError: total counts exceed the hafnian size budget.
    """
    counts = _as_counts(counts, state.m_a, state.m_ph)
    ext = extend_matrix(state.c, counts)
    value = hafnian(ext, workers=workers)
    log_fact = sum(math.lgamma(c + 1) for c in counts.key())
    weight = complex(value) * math.exp(-state.log_norm - log_fact)
    limit = max(tol_imaginary * abs(weight), 1e-12)
    if abs(weight.imag) > limit:
        raise ImaginaryResidualError(
            "outcome %s has imaginary residual %.3e (limit %.3e); the "
            "base matrix is not a valid state kernel"
            % (counts, abs(weight.imag), limit)
        )
    return weight.real


def enumerate_distribution(state, cutoff, *, workers=None, tol_imaginary=1e-9):
    """Evaluate every outcome with all counts <= cutoff.

    Outcomes are evaluated independently (optionally across threads) and
    assembled in lexicographic order, so the result is deterministic for
    any worker count.

    Args:
        state (GaussianState): state built by the gaussian module
        cutoff (int): largest per-mode count, >= 0
        workers: thread cap; resolved against HYBRID_SAMPLER_THREADS
        tol_imaginary (float): per-outcome imaginary residual bound

    Returns:
        OutcomeDistribution

    Raises:
        ValueError: the outcome lattice or the largest extended matrix
            exceeds the enumeration budget; the message names the limit.
    """
    cutoff = int(cutoff)
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    m = state.m
    n_outcomes = (cutoff + 1) ** m
    if n_outcomes > ENUMERATION_MAX_OUTCOMES:
        raise ValueError(
            "enumeration budget exceeded: (cutoff+1)^M = %d outcomes is "
            "above the limit %d; lower the cutoff or the mode count"
            % (n_outcomes, ENUMERATION_MAX_OUTCOMES)
        )
    max_dim = 2 * m * cutoff
    if max_dim > POWERTRACE_MAX_DIM:
        raise ValueError(
            "hafnian budget exceeded: the largest extended matrix is "
            "%d x %d but sizes above %d are not supported; lower the cutoff"
            % (max_dim, max_dim, POWERTRACE_MAX_DIM)
        )

    keys = list(itertools.product(range(cutoff + 1), repeat=m))
    workers = resolve_workers(workers)

    def evaluate(key):
        counts = CountsVector(atoms=key[: state.m_a], photons=key[state.m_a :])
        # Inner hafnians stay single-threaded; parallelism lives at the
        # outcome level where results are order-stable.
        return outcome_probability(
            state, counts, workers=1, tol_imaginary=tol_imaginary
        )

    if workers > 1 and len(keys) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(evaluate, keys))
    else:
        raw = [evaluate(key) for key in keys]

    probabilities = {}
    clamped = 0
    for key, value in zip(keys, raw):
        if value < 0:
            if value < _CLAMP_FLOOR:
                raise ValueError(
                    "outcome %s has probability %.3e below the roundoff "
                    "floor %.1e; the state is invalid"
                    % (key, value, _CLAMP_FLOOR)
                )
            value = 0.0
            clamped += 1
        counts = CountsVector(atoms=key[: state.m_a], photons=key[state.m_a :])
        probabilities[counts] = value

    captured = math.fsum(probabilities.values())
    if captured > 1.0 + _MASS_SLACK:
        raise ValueError(
            "captured mass %.12f exceeds 1 by more than %.1e; the state "
            "is invalid" % (captured, _MASS_SLACK)
        )
    return OutcomeDistribution(
        cutoff=cutoff,
        probabilities=probabilities,
        captured_mass=captured,
        fingerprint=state.fingerprint(),
        m_a=state.m_a,
        m_ph=state.m_ph,
        clamped=clamped,
    )


def marginalize(dist, keep):
    """Sum the distribution over every mode not in ``keep``.

    Args:
        dist (OutcomeDistribution): joint distribution
        keep: nonempty collection of mode indices (0-based, atoms first)

    Returns:
        OutcomeDistribution over the kept modes, same captured mass.
    """
    kept = sorted(set(int(i) for i in keep))
    if not kept:
        raise ValueError("keep set must be nonempty")
    if kept[0] < 0 or kept[-1] >= dist.m:
        raise ValueError(
            "keep indices must lie in [0, %d)" % dist.m
        )
    new_m_a = sum(1 for i in kept if i < dist.m_a)
    new_m_ph = len(kept) - new_m_a

    accum = {}
    for counts, value in dist.probabilities.items():
        key = counts.key()
        sub = tuple(key[i] for i in kept)
        accum[sub] = accum.get(sub, 0.0) + value
    probabilities = {}
    for sub in sorted(accum):
        counts = CountsVector(atoms=sub[:new_m_a], photons=sub[new_m_a:])
        probabilities[counts] = accum[sub]
    return OutcomeDistribution(
        cutoff=dist.cutoff,
        probabilities=probabilities,
        captured_mass=dist.captured_mass,
        fingerprint=dist.fingerprint,
        m_a=new_m_a,
        m_ph=new_m_ph,
        clamped=dist.clamped,
    )


def sample(dist, n_samples, seed):
    """Draw reproducible outcomes by inverse CDF over the lattice.

    The generator is counter-based (Philox, 64-bit key), so a fixed
    (seed, dist) pair yields the same samples on every platform and
    worker configuration.

    Args:
        dist (OutcomeDistribution): enumerated distribution
        n_samples (int): number of draws
        seed (int): 64-bit PRNG key

    Returns:
        list[CountsVector]

    Raises:
        TruncationError: captured mass <= 0.99, too lossy to renormalize.
    """
    n_samples = int(n_samples)
    if n_samples < 0:
        raise ValueError("n_samples must be >= 0")
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    if dist.captured_mass <= 0.99:
        raise TruncationError(
            "captured mass %.6f is <= 0.99; raise the cutoff before "
            "sampling" % dist.captured_mass
        )
    outcomes = dist.outcomes()
    probs = np.fromiter(
        dist.probabilities.values(), dtype=float, count=len(outcomes)
    )
    cdf = np.cumsum(probs / dist.captured_mass)
    cdf[-1] = 1.0
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    draws = rng.random(n_samples)
    indices = np.searchsorted(cdf, draws, side="right")
    return [outcomes[int(i)] for i in indices]


def chi_square(dist, samples, *, min_expected=20.0, significance=0.01):
    """Pearson goodness-of-fit of samples against the distribution.

    Outcomes whose expected count falls below ``min_expected`` are pooled
    into a tail bucket (merged into the last retained bucket when the
    tail itself stays below the minimum).

    Args:
        dist (OutcomeDistribution): reference distribution
        samples: list of CountsVector draws
        min_expected (float): smallest expected count per retained bucket
        significance (float): pass threshold on the p-value

    Returns:
        ChiSquareResult

    Raises:
        ValueError: no samples, or too few to form two buckets.
    """
    if not samples:
        raise ValueError("no samples given")
    n = len(samples)
    observed = Counter(samples)

    retained = []
    tail_expected = 0.0
    tail_observed = 0
    for counts, value in dist.probabilities.items():
        expected = value / dist.captured_mass * n
        if expected >= min_expected:
            retained.append([float(observed.get(counts, 0)), expected])
        else:
            tail_expected += expected
            tail_observed += observed.get(counts, 0)
    known = set(dist.probabilities)
    for counts, count in observed.items():
        if counts not in known:
            tail_observed += count

    if tail_expected > 0 or tail_observed > 0:
        if tail_expected >= min_expected:
            retained.append([float(tail_observed), tail_expected])
        elif retained:
            retained[-1][0] += tail_observed
            retained[-1][1] += tail_expected
        else:
            raise ValueError(
                "insufficient samples after pooling: no bucket reaches "
                "the minimum expected count %.1f" % min_expected
            )
    if len(retained) < 2:
        raise ValueError(
            "insufficient samples after pooling: need at least two "
            "buckets, got %d" % len(retained)
        )

    statistic = math.fsum(
        (obs - exp) ** 2 / exp for obs, exp in retained
    )
    dof = len(retained) - 1
    p_value = float(chi2.sf(statistic, dof))
    return ChiSquareResult(
        statistic=statistic,
        dof=dof,
        p_value=p_value,
        n_buckets=len(retained),
        significance=significance,
    )


def recommend_cutoff(state, *, factor=10.0):
    """Cutoff suggestion from mean occupations (at least factor * max n)."""
    means = state.mean_occupations()
    top = float(np.max(means)) if means.size else 0.0
    return max(1, int(math.ceil(factor * top)))
