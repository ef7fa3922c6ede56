"""Secure-connection probability analytics against hidden eavesdroppers.

Eavesdroppers form a homogeneous Poisson point process of density
lambda (per km^2) on the plane of the transmitter's layer.  A link of
length d is securely connected when the legitimate receiver's SNR
exceeds the best eavesdropper's SINR; cooperative jamming with power
spectral density sigma degrades only the eavesdroppers, because
legitimate receivers know the jamming waveform and cancel it.

Three evaluators of the strictly-positive-secure-connection (SPSC)
probability are provided:

* ``spsc_closed_form`` -- an exponential-of-mean expression obtained by
  pushing the expectation over fading into the exponent.  It is a lower
  bound on the true probability (Jensen) and diverges for pathloss
  exponents alpha <= 2, where the planar eavesdropper integral does not
  converge.
* ``spsc_calibrated`` -- the same expression with the density-dependent
  factor kappa replaced by the fitted power law a * kappa^p, one (a, p)
  pair per distance band.
* ``spsc_monte_carlo`` -- a direct simulation of the defining event
  with selectable fading, used as the ground-truth oracle.

The closed form inverts in closed form to the minimum jamming PSD that
meets a target SPSC level, and bisects to the maximum secure link
distance under a given jamming budget.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from .channel import GeoPosition, LayerKind, NodeSpec, db_to_linear, geodetic_to_cartesian, noise_psd as channel_noise_psd
from .errors import (
    DegenerateFit,
    FreeSpaceDivergence,
    InsufficientTrials,
    InvalidRegion,
    MissingCalibration,
)

#: Default cap for the maximum-distance bisection, km.
DISTANCE_SEARCH_MAX_KM = 5000.0


# ---------------------------------------------------------------------------
# Fading models


class FadingModel:
    """Small-scale fading distribution with unit mean power."""

    def sample_power(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Rayleigh(FadingModel):
    """No line of sight; |h|^2 is exponential with unit mean."""

    def sample_power(self, rng, size):
        return rng.exponential(size=size)


@dataclass(frozen=True)
class Rician(FadingModel):
    """Line-of-sight component with K-factor k_db (dB)."""

    k_db: float

    def sample_power(self, rng, size):
        k = db_to_linear(self.k_db)
        los = math.sqrt(k / (k + 1.0))
        s = math.sqrt(1.0 / (2.0 * (k + 1.0)))
        re = los + rng.normal(0.0, s, size)
        im = rng.normal(0.0, s, size)
        return re ** 2 + im ** 2


@dataclass(frozen=True)
class ShadowedRician(FadingModel):
    """Rician fading whose line-of-sight power is Gamma-shadowed.

    The shadowing is Gamma(m, 1/m) with unit mean, so the total channel
    power keeps unit mean; m -> infinity recovers plain Rician.
    """

    k_db: float
    m: float

    def __post_init__(self):
        if self.m < 0.5:
            raise ValueError(f"shadowing shape m must be >= 0.5, got {self.m}")

    def sample_power(self, rng, size):
        k = db_to_linear(self.k_db)
        shadow = rng.gamma(self.m, 1.0 / self.m, size)
        los = np.sqrt(k / (k + 1.0) * shadow)
        s = math.sqrt(1.0 / (2.0 * (k + 1.0)))
        re = los + rng.normal(0.0, s, size)
        im = rng.normal(0.0, s, size)
        return re ** 2 + im ** 2


# ---------------------------------------------------------------------------
# Calibration table


@dataclass(frozen=True)
class CalibrationTable:
    """Per-distance-band (a, p) correction factors for the closed form.

    ``bands`` is a sequence of (band_km, a, p) triples sorted by band
    distance.  Lookups inside the covered range interpolate linearly in
    distance; outside the range the nearest band is used when
    extrapolation is allowed, otherwise MissingCalibration is raised.
    """

    bands: Tuple[Tuple[float, float, float], ...]

    def __post_init__(self):
        ordered = tuple(sorted((float(b), float(a), float(p)) for b, a, p in self.bands))
        object.__setattr__(self, "bands", ordered)
        for b, a, p in ordered:
            if a <= 0.0 or not (0.0 < p < 2.0):
                raise ValueError(f"invalid calibration entry ({b}, {a}, {p})")

    def lookup(self, distance_km: float, extrapolate: bool = True) -> Tuple[float, float]:
        if not self.bands:
            raise MissingCalibration("empty calibration table")
        ds = [b for b, _, _ in self.bands]
        if distance_km <= ds[0]:
            if distance_km < ds[0] and not extrapolate:
                raise MissingCalibration(f"no band covers {distance_km} km")
            _, a, p = self.bands[0]
            return a, p
        if distance_km >= ds[-1]:
            if distance_km > ds[-1] and not extrapolate:
                raise MissingCalibration(f"no band covers {distance_km} km")
            _, a, p = self.bands[-1]
            return a, p
        hi = next(i for i, d in enumerate(ds) if d >= distance_km)
        lo = hi - 1
        t = (distance_km - ds[lo]) / (ds[hi] - ds[lo])
        a = self.bands[lo][1] * (1 - t) + self.bands[hi][1] * t
        p = self.bands[lo][2] * (1 - t) + self.bands[hi][2] * t
        return a, p

    def to_json(self) -> str:
        doc = {
            "version": 1,
            "bands": [{"band_km": b, "a": a, "p": p} for b, a, p in self.bands],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CalibrationTable":
        doc = json.loads(text)
        return cls(tuple((e["band_km"], e["a"], e["p"]) for e in doc["bands"]))


#: Calibration constants reported for the reference 50-400 km experiments.
REFERENCE_CALIBRATION = CalibrationTable(
    (
        (50.0, 0.224, 0.806),
        (100.0, 0.170, 0.805),
        (200.0, 0.133, 0.807),
        (400.0, 0.102, 0.807),
    )
)


# ---------------------------------------------------------------------------
# Eavesdropper field


@dataclass(frozen=True)
class Hotspot:
    center: GeoPosition
    radius_km: float
    density_multiplier: float

    def __post_init__(self):
        if self.density_multiplier < 1.0:
            raise ValueError("hotspot multiplier must be >= 1")
        if self.radius_km <= 0.0:
            raise ValueError("hotspot radius must be positive")


@dataclass(frozen=True)
class EveField:
    """Per-layer eavesdropper densities with optional hotspots."""

    density_per_layer: Mapping[LayerKind, float]
    hotspots: Tuple[Hotspot, ...] = ()
    calibration: Optional[CalibrationTable] = None

    def __post_init__(self):
        for layer, lam in self.density_per_layer.items():
            if lam <= 0.0:
                raise ValueError(f"density for {layer} must be positive")

    def effective_density(
        self, layer: LayerKind, center: GeoPosition, reach_km: float
    ) -> float:
        """Density seen by a transmitter at ``center`` over radius ``reach_km``.

        Any hotspot whose disk intersects the transmitter-centered disk
        scales the base density by its multiplier; overlapping hotspots
        contribute only the largest multiplier.
        """
        lam = self.density_per_layer[layer]
        if not self.hotspots:
            return lam
        c = geodetic_to_cartesian(center)
        mult = 1.0
        for h in self.hotspots:
            sep = float(np.linalg.norm(c - geodetic_to_cartesian(h.center)))
            if sep <= reach_km + h.radius_km:
                mult = max(mult, h.density_multiplier)
        return lam * mult

    def with_calibration(self, table: CalibrationTable) -> "EveField":
        return EveField(self.density_per_layer, self.hotspots, table)


@dataclass(frozen=True)
class SpscQuery:
    """Arguments of one SPSC evaluation."""

    distance_km: float
    alpha: float
    lambda_eve: float
    sigma: float
    gain_linear: float
    noise_psd: float

    def __post_init__(self):
        if self.distance_km <= 0.0:
            raise ValueError("distance must be positive")
        if self.lambda_eve <= 0.0:
            raise ValueError("eavesdropper density must be positive")
        if self.sigma < 0.0:
            raise ValueError("jamming PSD must be non-negative")


# ---------------------------------------------------------------------------
# Closed forms


def _kappa(lambda_eve: float, alpha: float) -> float:
    return lambda_eve * (2.0 * math.pi / alpha) * math.gamma(2.0 / alpha)


def _exponent_bracket(q: SpscQuery) -> float:
    """The fading-averaged pathloss factor multiplying kappa * d^2."""
    a = q.alpha
    base = math.gamma(1.0 - 2.0 / a)
    jam = (
        2.0
        * q.sigma
        * q.gain_linear
        / (a * q.distance_km ** a * q.noise_psd)
        * math.gamma(2.0 - 2.0 / a)
    )
    return base - jam


def _check_alpha(alpha: float):
    if alpha <= 2.0:
        raise FreeSpaceDivergence(
            f"eavesdropper integral diverges for alpha={alpha} <= 2"
        )


def spsc_closed_form(q: SpscQuery) -> float:
    """Exponential-of-mean SPSC probability, clamped to [0, 1]."""
    _check_alpha(q.alpha)
    kappa = _kappa(q.lambda_eve, q.alpha)
    exponent = -kappa * _exponent_bracket(q) * q.distance_km ** 2
    if exponent >= 0.0:
        return 1.0
    return math.exp(exponent)


def spsc_calibrated(q: SpscQuery, field: EveField, extrapolate: bool = True) -> float:
    """Closed form with kappa replaced by the fitted a * kappa^p."""
    _check_alpha(q.alpha)
    if field.calibration is None:
        raise MissingCalibration("EveField has no calibration table")
    a_d, p_d = field.calibration.lookup(q.distance_km, extrapolate=extrapolate)
    kappa = _kappa(q.lambda_eve, q.alpha)
    exponent = -a_d * kappa ** p_d * _exponent_bracket(q) * q.distance_km ** 2
    if exponent >= 0.0:
        return 1.0
    return math.exp(exponent)


# ---------------------------------------------------------------------------
# Monte-Carlo oracle


def spsc_monte_carlo(
    q: SpscQuery,
    fading: FadingModel = Rayleigh(),
    trials: int = 20_000,
    region_radius_km: Optional[float] = None,
    seed: int = 0,
) -> Tuple[float, float]:
    """Simulate the SPSC event directly.

    Per trial: draw the legitimate fading, a Poisson number of
    eavesdroppers uniform in the disk of radius R around the
    transmitter, and their fadings; the trial succeeds when the
    legitimate SNR beats every eavesdropper SINR (vacuously with no
    eavesdroppers).  Returns (probability, binomial standard error).
    The transmit PSD cancels from both sides of the comparison and is
    not a parameter.
    """
    _check_alpha(q.alpha)
    if trials < 1_000:
        raise InsufficientTrials(f"need >= 1e3 trials, got {trials}")
    if region_radius_km is None:
        region_radius_km = max(10.0 * q.distance_km, 2000.0)
    if region_radius_km < 10.0 * q.distance_km:
        raise InvalidRegion(
            f"region radius {region_radius_km} km < 10 x link distance"
        )
    rng = np.random.default_rng(seed)
    R = region_radius_km
    counts = rng.poisson(q.lambda_eve * math.pi * R * R, size=trials)
    h_s = fading.sample_power(rng, trials)
    snr_s = q.gain_linear * h_s / (q.noise_psd * q.distance_km ** q.alpha)

    total = int(counts.sum())
    worst = np.zeros(trials)
    if total > 0:
        radius = R * np.sqrt(rng.random(total))
        h_e = fading.sample_power(rng, total)
        x = q.gain_linear * h_e * radius ** (-q.alpha)
        sinr = x / (q.sigma * x + q.noise_psd)
        owner = np.repeat(np.arange(trials), counts)
        np.maximum.at(worst, owner, sinr)
    prob = float(np.mean(snr_s > worst))
    std_err = math.sqrt(max(prob * (1.0 - prob), 1e-12) / trials)
    return prob, std_err


# ---------------------------------------------------------------------------
# Inversions


def min_jamming_closed_form(
    distance_km: float,
    alpha: float,
    lambda_eve: float,
    gain_linear: float,
    noise_psd: float,
    tau: float,
) -> float:
    """Minimum jamming PSD so the closed-form SPSC reaches tau.

    Inverts the closed form exactly: the reflection identity
    Gamma(2/a) Gamma(1-2/a) = pi / sin(2 pi / a) turns the exponent
    equation into the bracketed expression below.  Returns 0 when the
    target is already met without jamming.
    """
    _check_alpha(alpha)
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    lead = alpha * distance_km ** alpha * noise_psd / (
        2.0 * gain_linear * (1.0 - 2.0 / alpha)
    )
    bracket = 1.0 + (
        alpha
        * math.sin(2.0 * math.pi / alpha)
        / (2.0 * math.pi ** 2 * lambda_eve * distance_km ** 2)
    ) * math.log(tau)
    return max(0.0, lead * bracket)


def max_link_distance(
    node: NodeSpec,
    field: EveField,
    tau: float,
    tol_km: float = 0.1,
    *,
    gain_linear: Optional[float] = None,
    noise_psd: Optional[float] = None,
    search_max_km: float = DISTANCE_SEARCH_MAX_KM,
) -> float:
    """Farthest link distance node can secure with its full jamming budget.

    A distance d is feasible when, with the jamming PSD fixed to the
    node's budget p_max - p_min, the calibrated SPSC meets tau and the
    closed-form minimum jamming requirement stays within the budget.
    Both conditions shrink with distance, so plain bisection applies.
    Gain and noise default to the node's figures toward a same-layer
    peer; pass overrides for normalized-unit studies.  Returns +inf when
    the farthest searched distance is still feasible.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    if gain_linear is None:
        gain_linear = db_to_linear(
            node.tx_gain_dbi[node.layer] + node.rx_gain_dbi[node.layer]
        )
    if noise_psd is None:
        noise_psd = channel_noise_psd(node, node.layer)
    budget = node.p_max_w - node.p_min_w

    def feasible(d: float) -> bool:
        lam = field.effective_density(node.layer, node.position, d)
        q = SpscQuery(d, node.alpha, lam, budget, gain_linear, noise_psd)
        if spsc_calibrated(q, field) < tau:
            return False
        need = min_jamming_closed_form(
            d, node.alpha, lam, gain_linear, noise_psd, tau
        )
        return need <= budget

    if feasible(search_max_km):
        return math.inf
    lo, hi = 0.0, search_max_km
    # The d -> 0 limit is always feasible (probability -> 1), so lo stays
    # the largest known-feasible distance.
    while hi - lo > tol_km:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def jensen_gap_bound(q: SpscQuery, region_radius_km: Optional[float] = None) -> float:
    """Upper bound on the gap between the exact SPSC and the closed form.

    For alpha > 4 the second moment of the eavesdropper functional is
    finite and the bound is (lambda^2 / 2) times it.  For alpha <= 4 the
    moment diverges and the integration domain is truncated at the
    region radius R, giving a bound that grows logarithmically in R.
    """
    _check_alpha(q.alpha)
    if region_radius_km is None:
        region_radius_km = max(10.0 * q.distance_km, 2000.0)
    a, d, lam = q.alpha, q.distance_km, q.lambda_eve
    if a > 4.0:
        moment = (2.0 * math.pi * math.gamma(2.0 / a) * d * d / a) ** 2 * (
            math.gamma(1.0 - 4.0 / a)
            - 4.0
            * q.sigma
            * q.gain_linear
            / (a * d ** a * q.noise_psd)
            * math.gamma(2.0 - 4.0 / a)
        )
        return 0.5 * lam * lam * moment
    trunc = d ** a * q.noise_psd - q.sigma * q.gain_linear
    return 0.5 * lam * lam * trunc * (
        math.pi ** 3 * math.log(region_radius_km) - math.pi ** 4 / 4.0
    )


# ---------------------------------------------------------------------------
# Calibration fitting


def calibrate(
    distance_bands_km: Sequence[float],
    lambda_grid: Sequence[float],
    trials: int = 20_000,
    alpha: float = 2.8,
    seed: int = 0,
    fading: FadingModel = Rayleigh(),
) -> CalibrationTable:
    """Fit per-band (a, p) corrections from Monte-Carlo SPSC estimates.

    The no-jamming closed form predicts ln(-ln P) = ln kappa +
    ln(Gamma(1 - 2/alpha) d^2); the correction replaces kappa by
    a * kappa^p, so (ln a, p) is an ordinary least-squares line in the
    double-log domain over the density grid.  Cells whose estimate is
    degenerate (0, or within 1e-6 of 1) are dropped; a band with fewer
    than three usable cells raises DegenerateFit.
    """
    if trials < 10_000:
        raise InsufficientTrials(f"need >= 1e4 trials per cell, got {trials}")
    bands = []
    geom = math.log(math.gamma(1.0 - 2.0 / alpha))
    for bi, d in enumerate(distance_bands_km):
        xs, ys = [], []
        for li, lam in enumerate(lambda_grid):
            q = SpscQuery(d, alpha, lam, 0.0, 1.0, 1.0)
            p_hat, _ = spsc_monte_carlo(
                q, fading=fading, trials=trials, seed=seed + 1000 * bi + li
            )
            if p_hat <= 0.0 or p_hat >= 1.0 - 1e-6:
                continue
            xs.append(math.log(_kappa(lam, alpha)))
            ys.append(math.log(-math.log(p_hat)) - geom - 2.0 * math.log(d))
        if len(xs) < 3:
            raise DegenerateFit(
                f"band {d} km: only {len(xs)} usable cells after dropping "
                "degenerate estimates"
            )
        p_fit, log_a = np.polyfit(np.asarray(xs), np.asarray(ys), 1)
        bands.append((d, math.exp(float(log_a)), float(p_fit)))
    return CalibrationTable(tuple(bands))
