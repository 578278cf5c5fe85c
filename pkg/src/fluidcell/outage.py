"""Closed-form outage probability of the two-stage port selection.

The receiver trains a strided subset of ports per antenna, pre-selects
the strongest estimate on each antenna, and rides the best candidate.
Outage happens when every candidate's SINR misses the rate-derived
threshold. The expressions here condition on serving distance and
interference, then average both out; an interference-limited closed-form
bracket avoids quadrature entirely.

Two printed-form switches reproduce algebraic variants kept for
comparison: an alternative rate exponent and an alternative threshold
substitution in the conditional outage. Defaults use the forms that are
dimensionally consistent with the SINR definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sf

from .channel import (
    correlation_profile,
    error_variance_at,
    joint_magnitude_cdf,
)
from .field import gamma_interference_model
from .geometry import link_distance, trained_port_indices
from .numerics import QuadratureSpec, integrate_finite

__all__ = [
    "RateTarget",
    "sinr_threshold",
    "outage_thresholds",
    "joint_outage_given_thresholds",
    "conditional_outage",
    "conditional_outage_bounds",
    "outage_probability",
]

# Serving-distance mass ignored by the truncated outer integral; the
# integrand is a probability, so this is also the absolute error bound.
DISTANCE_TAIL = 1e-12


@dataclass(frozen=True)
class RateTarget:
    """Rate requirement and the SINR threshold it implies."""

    rate: float           # data bits per channel use
    threshold: float      # SINR level below which the rate is missed
    data_fraction: float  # share of the frame carrying payload

    def __post_init__(self):
        if self.rate < 0.0:
            raise ValueError("rate must be nonnegative")
        if not 0.0 < self.data_fraction < 1.0:
            raise ValueError("data_fraction must lie strictly in (0, 1)")
        if self.threshold < 0.0:
            raise ValueError("threshold must be nonnegative")
        if (self.threshold == 0.0) != (self.rate == 0.0):
            raise ValueError("threshold vanishes exactly at zero rate")


def sinr_threshold(rate, budget, printed_exponent=False):
    """SINR threshold equivalent to the target rate over the data share.

    The default scales the rate by the fraction of the frame that
    carries data. ``printed_exponent`` instead scales by one minus that
    fraction (the training share), kept for comparison runs.
    """
    if rate < 0.0:
        raise ValueError("rate must be nonnegative")
    data_fraction = budget.data_uses / budget.total_uses
    scale = (1.0 - data_fraction) if printed_exponent else data_fraction
    threshold = 2.0 ** (rate / scale) - 1.0
    return RateTarget(
        rate=float(rate),
        threshold=float(threshold),
        data_fraction=float(data_fraction),
    )


def outage_thresholds(rho, interference, cfg, net, budget, target):
    """Per-trained-port estimated-gain-power levels that mark outage.

    A candidate port is in outage exactly when its squared estimated
    magnitude falls below its entry here. ``interference`` is a scalar
    shared by every port or a per-port sequence.
    """
    if rho <= 0.0:
        raise ValueError("serving distance must be positive")
    ports = trained_port_indices(cfg)
    r = np.array([link_distance(p, rho, cfg) for p in ports])
    inter = np.broadcast_to(
        np.asarray(interference, dtype=float), r.shape
    )
    if np.any(inter < 0.0):
        raise ValueError("interference must be nonnegative")
    err = error_variance_at(r, budget.pilot_length, net)
    a = net.path_loss_exponent
    return target.threshold * r**a * (
        inter + err / r**a + 1.0 / net.transmit_snr
    )


def joint_outage_given_thresholds(thetas, profile, spec=None,
                                  printed_form=False):
    """Probability that every trained port misses its power threshold.

    The default substitutes each threshold's square root into the joint
    magnitude law. ``printed_form`` substitutes the thresholds directly
    (squared integration limit, unsquared Rician arguments), matching
    the algebra the closed-form bracket is derived from.
    """
    thetas = np.asarray(thetas, dtype=float)
    if np.any(thetas < 0.0):
        raise ValueError("thresholds must be nonnegative")
    taus = thetas if printed_form else np.sqrt(thetas)
    return joint_magnitude_cdf(taus, profile, spec)


def conditional_outage(rho, interference, cfg, net, budget, target,
                       spec=None, printed_form=False, profile=None):
    """Outage probability of one antenna given distance and interference.

    ``profile`` may carry a precomputed correlation profile for this
    distance; callers looping over interference values avoid rebuilding
    it.
    """
    if profile is None:
        profile = correlation_profile(cfg, net, budget, rho)
    thetas = outage_thresholds(rho, interference, cfg, net, budget, target)
    return joint_outage_given_thresholds(
        thetas, profile, spec, printed_form=printed_form
    )


# ---------------------------------------------------------------------------
# Interference-limited closed-form bracket
# ---------------------------------------------------------------------------

def conditional_outage_bounds(rho, interference, mu_common, cfg, net,
                              budget, target, printed_extra_term=False):
    """Closed-form (lower, upper) outage bracket, no quadrature.

    Valid in the interference-limited regime with one common
    correlation across trained ports and a common link distance. The
    estimation error variance collapses to its interference-only form
    with the per-port training share read off the data-use count.

    ``printed_extra_term`` subtracts an additional series from the
    upper bound; it is kept only for comparison because it pushes the
    upper bound below the lower one at high correlation.
    """
    if rho <= 0.0:
        raise ValueError("serving distance must be positive")
    if not 0.0 <= abs(mu_common) < 1.0:
        raise ValueError("common correlation must satisfy |mu| < 1")
    ports = trained_port_indices(cfg)
    count = len(ports)
    inter = np.broadcast_to(
        np.asarray(interference, dtype=float), (count,)
    )
    if np.any(inter < 0.0):
        raise ValueError("interference must be nonnegative")

    a = net.path_loss_exponent
    sigma_sq = net.channel_variance
    mu = abs(mu_common)
    err = (
        2.0 * math.pi * net.bs_density
        * cfg.ports_per_fa / budget.data_uses
        * rho**2 / (a - 2.0)
    )
    spread = sigma_sq * (1.0 - mu**2) + err
    thetas = target.threshold * (rho**a * inter + err)
    xi = thetas**2 / spread

    decay = np.exp(-xi)
    base = 1.0 - decay[0]
    upsilon_up = -math.expm1(-xi[0] * (1.0 - mu) ** 2) / (1.0 + mu**2)
    upsilon_low = -math.expm1(-xi[0] * (1.0 + mu) ** 2) / (1.0 + mu**2)
    tail = float(np.sum(decay))

    upper = base - upsilon_up * tail
    lower = base - upsilon_low * tail
    if printed_extra_term:
        extra = (
            2.0 * math.pi * mu**2 / (1.0 + mu**2) ** 1.5
            * float(np.sum(
                np.sqrt(xi) * np.exp(-xi * (2.0 + mu**2) / (1.0 + mu**2))
            ))
        )
        upper -= extra

    lower = min(1.0, max(0.0, lower))
    upper = min(1.0, max(0.0, upper))
    return lower, upper


# ---------------------------------------------------------------------------
# Unconditional outage
# ---------------------------------------------------------------------------

def _gamma_quantile(model, v):
    """Interference quantile of the Gamma surrogate, robust to tiny shapes."""
    with np.errstate(all="ignore"):
        x = _sf.gammaincinv(model.shape, v)
    x = np.where(np.isfinite(x), x, 0.0)
    return model.scale * x


def _averaged_over_interference(outage_at, model, spec):
    """E[outage(gamma)] under the Gamma surrogate via its quantile map.

    Integrating in probability space handles the near-degenerate shapes
    (essentially all mass at zero, a vanishing far tail) that defeat a
    direct gamma-space quadrature.
    """
    cache = {}

    def cached(gamma):
        if gamma not in cache:
            cache[gamma] = outage_at(gamma)
        return cache[gamma]

    def integrand(v):
        gammas = _gamma_quantile(model, v)
        return np.array([cached(float(g)) for g in gammas])

    return integrate_finite(integrand, 0.0, 1.0, spec)


def outage_probability(cfg, net, budget, target, spec=None,
                       mode="common-gamma", printed_form=False):
    """Network outage probability averaged over distance and interference.

    ``common-gamma`` shares one Gamma interference draw across the
    trained ports, averages the conditional outage over it and the
    serving distance, and raises the result to the antenna count.
    ``per-port-gamma`` instead averages one full double integral per
    trained port (each port's Gamma surrogate anchored at its own link
    distance) and multiplies them all, which breaks the coupling of the
    shared interference draw; it is kept for comparison.
    """
    if spec is None:
        spec = QuadratureSpec()
    if mode not in ("common-gamma", "per-port-gamma"):
        raise ValueError(f"unknown mode {mode!r}")

    lam = net.bs_density
    rho_cut = math.sqrt(math.log(1.0 / DISTANCE_TAIL) / (math.pi * lam))

    def distance_density(rho):
        return 2.0 * math.pi * lam * rho * math.exp(-math.pi * lam * rho**2)

    def averaged(anchor_distance_of, rho):
        profile = correlation_profile(cfg, net, budget, rho)
        model = gamma_interference_model(anchor_distance_of(rho), net)

        def outage_at(gamma):
            thetas = outage_thresholds(
                rho, gamma, cfg, net, budget, target
            )
            return joint_outage_given_thresholds(
                thetas, profile, spec, printed_form=printed_form
            )

        return _averaged_over_interference(outage_at, model, spec)

    def outer(anchor_distance_of):
        def integrand(rhos):
            return np.array([
                averaged(anchor_distance_of, float(r)) * distance_density(float(r))
                for r in rhos
            ])

        return integrate_finite(integrand, 0.0, rho_cut, spec)

    if mode == "common-gamma":
        single = outer(lambda rho: rho)
        return min(1.0, single) ** cfg.num_fas

    product = 1.0
    for port in trained_port_indices(cfg):
        product *= min(
            1.0, outer(lambda rho, p=port: link_distance(p, rho, cfg))
        )
    return product ** cfg.num_fas


def averaged_outage_bounds(mu_common, cfg, net, budget, target, spec=None):
    """Closed-form outage bracket averaged over distance and interference.

    Averaging the conditional bracket over the shared interference draw
    and the serving distance keeps the ordering, and raising to the
    antenna count keeps it again, so the pair brackets the common-gamma
    network outage in the interference-limited regime (up to the
    product-to-sum step the conditional bracket itself rests on).
    """
    if spec is None:
        spec = QuadratureSpec()
    lam = net.bs_density
    rho_cut = math.sqrt(math.log(1.0 / DISTANCE_TAIL) / (math.pi * lam))

    def distance_density(rho):
        return 2.0 * math.pi * lam * rho * math.exp(-math.pi * lam * rho**2)

    def one_side(side):
        def averaged(rho):
            model = gamma_interference_model(rho, net)

            def outage_at(gamma):
                pair = conditional_outage_bounds(
                    rho, gamma, mu_common, cfg, net, budget, target
                )
                return pair[side]

            return _averaged_over_interference(outage_at, model, spec)

        def integrand(rhos):
            return np.array([
                averaged(float(r)) * distance_density(float(r))
                for r in rhos
            ])

        return min(1.0, integrate_finite(integrand, 0.0, rho_cut, spec))

    return one_side(0) ** cfg.num_fas, one_side(1) ** cfg.num_fas
