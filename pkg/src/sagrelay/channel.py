"""Geometry and propagation primitives.

Positions are geodetic (latitude, longitude, altitude) on a spherical
Earth of radius 6371 km and are converted to Earth-centered Cartesian
coordinates for distance computations.  Link distances are straight-line
chords in kilometers.

Propagation follows a free-space power-law model: a link carries SNR
rho * G * |h|^2 / (n0 * d^alpha) where rho is the transmit power
spectral density, G the combined antenna gain, n0 the receiver noise
PSD, and |h|^2 the (unit-mean) small-scale fading power.  All dB-valued
inputs are converted to linear units at this module's boundary; every
other module works in linear units only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

import numpy as np

from .errors import InsufficientTrials, ZeroDistance

EARTH_RADIUS_KM = 6371.0
BOLTZMANN_J_PER_K = 1.380649e-23


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


def dbm_to_watt(value_dbm: float) -> float:
    """Convert a dBm power (spectral) density to watts (per Hz)."""
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


def watt_to_dbm(value_w: float) -> float:
    return 10.0 * math.log10(value_w) + 30.0


class LayerKind(Enum):
    """Network layer a node belongs to."""

    SPACE = "space"
    AIR = "air"
    GROUND = "ground"
    SEA = "sea"


@dataclass(frozen=True)
class GeoPosition:
    """Geodetic position: degrees latitude/longitude, altitude in km."""

    latitude_deg: float
    longitude_deg: float
    altitude_km: float = 0.0

    def __post_init__(self):
        if not -90.0 <= self.latitude_deg <= 90.0:
            raise ValueError(f"latitude out of range: {self.latitude_deg}")
        if not -180.0 <= self.longitude_deg <= 180.0:
            raise ValueError(f"longitude out of range: {self.longitude_deg}")
        if self.altitude_km < -0.5:
            raise ValueError(f"altitude below -0.5 km: {self.altitude_km}")


@dataclass(frozen=True)
class NodeSpec:
    """A network node with its radio parameters.

    Antenna gains and the gain-to-noise-temperature figure are maps keyed
    by the layer of the far end of the link, because hardware typically
    uses different apertures toward satellites than toward terrestrial
    peers.  Power densities are bounds on the combined transmit plus
    jamming PSD.
    """

    id: int
    layer: LayerKind
    position: GeoPosition
    p_max_dbm: float
    p_min_dbm: float
    tx_gain_dbi: Mapping[LayerKind, float]
    rx_gain_dbi: Mapping[LayerKind, float]
    gain_to_noise_temp_dbk: Mapping[LayerKind, float]
    alpha: float
    bandwidth_hz: float = 250e6

    def __post_init__(self):
        if self.p_min_dbm > self.p_max_dbm:
            raise ValueError(
                f"node {self.id}: p_min {self.p_min_dbm} > p_max {self.p_max_dbm}"
            )
        if self.alpha <= 2.0:
            raise ValueError(f"node {self.id}: alpha must exceed 2, got {self.alpha}")

    @property
    def p_max_w(self) -> float:
        return dbm_to_watt(self.p_max_dbm)

    @property
    def p_min_w(self) -> float:
        return dbm_to_watt(self.p_min_dbm)


@dataclass(frozen=True)
class LinkBudget:
    """Static (fading-free) parameters of one directed link."""

    distance_km: float
    gain_linear: float
    noise_psd: float
    alpha: float

    def __post_init__(self):
        if self.distance_km <= 0.0:
            raise ValueError("distance must be positive")
        if self.noise_psd <= 0.0:
            raise ValueError("noise PSD must be positive")


def geodetic_to_cartesian(p: GeoPosition) -> np.ndarray:
    """Earth-centered Cartesian coordinates (km) on a spherical Earth."""
    r = EARTH_RADIUS_KM + p.altitude_km
    lat = math.radians(p.latitude_deg)
    lon = math.radians(p.longitude_deg)
    return np.array(
        [
            r * math.cos(lat) * math.cos(lon),
            r * math.cos(lat) * math.sin(lon),
            r * math.sin(lat),
        ]
    )


def link_distance(a: NodeSpec, b: NodeSpec) -> float:
    """Straight-line chord distance between two nodes in km."""
    d = float(np.linalg.norm(geodetic_to_cartesian(a.position) - geodetic_to_cartesian(b.position)))
    if d <= 1e-9:
        raise ZeroDistance(f"nodes {a.id} and {b.id} coincide")
    return d


def link_gain(a: NodeSpec, b: NodeSpec) -> float:
    """Combined linear antenna gain of the directed link a -> b."""
    tx = a.tx_gain_dbi[b.layer]
    rx = b.rx_gain_dbi[a.layer]
    return db_to_linear(tx + rx)


def noise_psd(receiver: NodeSpec, from_layer: LayerKind) -> float:
    """Receiver noise PSD in W/Hz derived from its G/T figure.

    The system noise temperature is recovered from the receive gain and
    the gain-to-noise-temperature ratio toward the transmitting layer:
    T = G_rx / (G/T), then n0 = k_B * T.
    """
    g_rx = db_to_linear(receiver.rx_gain_dbi[from_layer])
    g_over_t = db_to_linear(receiver.gain_to_noise_temp_dbk[from_layer])
    return BOLTZMANN_J_PER_K * g_rx / g_over_t


def make_link_budget(
    a: NodeSpec, b: NodeSpec, noise_psd_override: Optional[float] = None
) -> LinkBudget:
    """Assemble the static budget of the directed link a -> b."""
    n0 = noise_psd_override if noise_psd_override is not None else noise_psd(b, a.layer)
    return LinkBudget(
        distance_km=link_distance(a, b),
        gain_linear=link_gain(a, b),
        noise_psd=n0,
        alpha=a.alpha,
    )


def snr_legitimate(rho: float, budget: LinkBudget, fading_power: float = 1.0) -> float:
    """Received SNR of the legitimate link for transmit PSD rho (W/Hz)."""
    if rho < 0.0 or fading_power < 0.0:
        raise ValueError("rho and fading_power must be non-negative")
    return rho * budget.gain_linear * fading_power / (
        budget.noise_psd * budget.distance_km ** budget.alpha
    )


def snr_wiretap(
    rho: float,
    sigma: float,
    gain_linear: float,
    eve_distance_km: float,
    alpha: float,
    noise_psd: float,
    eve_fading_power: float = 1.0,
) -> float:
    """Eavesdropper SINR under cooperative jamming.

    The jamming waveform is transmitted on the same link, so the
    eavesdropper sees it through the same gain and pathloss as the data
    signal; legitimate receivers cancel it, eavesdroppers cannot.
    """
    if rho < 0.0 or sigma < 0.0:
        raise ValueError("rho and sigma must be non-negative")
    x = gain_linear * eve_fading_power * eve_distance_km ** (-alpha)
    return rho * x / (sigma * x + noise_psd)


def spectral_efficiency(rho: float, budget: LinkBudget) -> float:
    """Ergodic spectral efficiency approximation log2(1 + mean SNR)."""
    return math.log2(1.0 + snr_legitimate(rho, budget))


def ergodic_se_fit(snr_grid_db, trials: int, seed: int = 0):
    """Fit a scalar correction to the log2(1 + SNR) approximation.

    For each mean SNR on the grid, estimates E[log2(1 + SNR * |h|^2)]
    with |h|^2 ~ Exp(1) by Monte Carlo, then finds the least-squares
    scale c minimizing sum over the grid of
    (E_hat - c * log2(1 + SNR))^2.

    Returns (scale, mse) where mse is the mean squared residual of the
    fit over the grid.
    """
    if trials < 10_000:
        raise InsufficientTrials(f"need >= 1e4 trials, got {trials}")
    rng = np.random.default_rng(seed)
    snr = np.asarray([db_to_linear(v) for v in snr_grid_db])
    h = rng.exponential(size=trials)
    # E over fading for every grid point at once; memory is trials x grid.
    emp = np.log2(1.0 + snr[None, :] * h[:, None]).mean(axis=0)
    approx = np.log2(1.0 + snr)
    scale = float(np.dot(emp, approx) / np.dot(approx, approx))
    mse = float(np.mean((emp - scale * approx) ** 2))
    return scale, mse
