"""Node datasets and scenario synthesis.

Nodes come either from snapshot files (CSV or JSON exports of public
base-station / vessel / platform / constellation datasets) or from the
random scenario generator.  Either way, per-layer radio defaults fill
in everything a snapshot does not carry: pathloss exponents, power
limits, antenna gains toward each layer class, gain-to-noise-temperature
figures, and bandwidth pools.

Two unit regimes are supported.  The physical regime derives receiver
noise from the G/T figures; there the eavesdropper constraint is loose
at typical power budgets.  The desk regime (``desk_config``) uses
normalized gain and noise constants chosen so that secure-distance
limits actually shape the topology at the scale of a few hundred km,
which is what the routing experiments exercise.
"""

from __future__ import annotations

import csv
import importlib.resources
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .channel import GeoPosition, LayerKind, NodeSpec, dbm_to_watt, watt_to_dbm
from .errors import EmptyDataset, ParseError
from .secrecy import CalibrationTable, EveField, Hotspot


#: Per-layer radio defaults.  Gain and G/T maps are keyed by the layer
#: of the far end of the link; HAPs share the surface-node aperture
#: class, so only links to and from space differ.
_SURFACE_TX = {
    LayerKind.SPACE: 43.2,
    LayerKind.AIR: 25.0,
    LayerKind.GROUND: 25.0,
    LayerKind.SEA: 25.0,
}
_SURFACE_RX = {
    LayerKind.SPACE: 39.7,
    LayerKind.AIR: 25.0,
    LayerKind.GROUND: 25.0,
    LayerKind.SEA: 25.0,
}
_LEO_GAIN = {k: 38.5 for k in LayerKind}


def _gt(space_db: float, other_db: float) -> Dict[LayerKind, float]:
    return {
        k: (space_db if k is LayerKind.SPACE else other_db) for k in LayerKind
    }


@dataclass(frozen=True)
class LayerDefaults:
    alpha: float
    p_max_dbm: float
    bandwidth_hz: float
    altitude_km: float
    tx_gain_dbi: Mapping[LayerKind, float]
    rx_gain_dbi: Mapping[LayerKind, float]
    gain_to_noise_temp_dbk: Mapping[LayerKind, float]


LAYER_DEFAULTS: Dict[LayerKind, LayerDefaults] = {
    LayerKind.GROUND: LayerDefaults(
        alpha=2.8,
        p_max_dbm=30.0,
        bandwidth_hz=250e6,
        altitude_km=0.0,
        tx_gain_dbi=_SURFACE_TX,
        rx_gain_dbi=_SURFACE_RX,
        gain_to_noise_temp_dbk=_gt(1.2, 15.9),
    ),
    LayerKind.SEA: LayerDefaults(
        alpha=2.7,
        p_max_dbm=30.0,
        bandwidth_hz=250e6,
        altitude_km=0.0,
        tx_gain_dbi=_SURFACE_TX,
        rx_gain_dbi=_SURFACE_RX,
        gain_to_noise_temp_dbk=_gt(1.2, 15.9),
    ),
    LayerKind.AIR: LayerDefaults(
        alpha=2.6,
        p_max_dbm=30.0,
        bandwidth_hz=250e6,
        altitude_km=20.0,
        tx_gain_dbi=_SURFACE_TX,
        rx_gain_dbi=_SURFACE_RX,
        gain_to_noise_temp_dbk=_gt(1.5, 16.2),
    ),
    LayerKind.SPACE: LayerDefaults(
        alpha=2.4,
        p_max_dbm=21.5,
        bandwidth_hz=400e6,
        altitude_km=550.0,
        tx_gain_dbi=_LEO_GAIN,
        rx_gain_dbi=_LEO_GAIN,
        gain_to_noise_temp_dbk={k: 13.0 for k in LayerKind},
    ),
}

_LAYER_TAGS = {
    "ground": LayerKind.GROUND,
    "maritime": LayerKind.SEA,
    "sea": LayerKind.SEA,
    "hap": LayerKind.AIR,
    "air": LayerKind.AIR,
    "leo": LayerKind.SPACE,
    "space": LayerKind.SPACE,
}

_TAG_FOR_LAYER = {
    LayerKind.GROUND: "ground",
    LayerKind.SEA: "maritime",
    LayerKind.AIR: "hap",
    LayerKind.SPACE: "leo",
}


def _p_min_dbm(p_max_dbm: float, p_min_ratio: float) -> float:
    """dBm floor corresponding to a linear fraction of p_max."""
    if p_min_ratio <= 0.0:
        return p_max_dbm - 300.0  # effectively zero in linear units
    return watt_to_dbm(p_min_ratio * dbm_to_watt(p_max_dbm))


def make_node(
    node_id: int,
    layer: LayerKind,
    latitude_deg: float,
    longitude_deg: float,
    altitude_km: Optional[float] = None,
    p_min_ratio: float = 0.1,
    **overrides,
) -> NodeSpec:
    """NodeSpec from position plus the layer's default radio parameters."""
    d = LAYER_DEFAULTS[layer]
    alt = d.altitude_km if altitude_km is None else altitude_km
    params = dict(
        id=node_id,
        layer=layer,
        position=GeoPosition(latitude_deg, longitude_deg, alt),
        p_max_dbm=d.p_max_dbm,
        p_min_dbm=_p_min_dbm(d.p_max_dbm, p_min_ratio),
        tx_gain_dbi=d.tx_gain_dbi,
        rx_gain_dbi=d.rx_gain_dbi,
        gain_to_noise_temp_dbk=d.gain_to_noise_temp_dbk,
        alpha=d.alpha,
        bandwidth_hz=d.bandwidth_hz,
    )
    params.update(overrides)
    return NodeSpec(**params)


# ---------------------------------------------------------------------------
# Snapshot ingestion


_SCALAR_OVERRIDES = ("p_max_dbm", "p_min_dbm", "alpha", "bandwidth_hz")


def _record_to_node(rec: dict, p_min_ratio: float) -> NodeSpec:
    tag = str(rec["layer"]).strip().lower()
    if tag not in _LAYER_TAGS:
        raise ValueError(f"unknown layer tag {tag!r}")
    overrides = {k: float(rec[k]) for k in _SCALAR_OVERRIDES if rec.get(k) not in (None, "")}
    alt = rec.get("alt_km", rec.get("altitude_km"))
    return make_node(
        int(rec["id"]),
        _LAYER_TAGS[tag],
        float(rec.get("lat", rec.get("latitude_deg"))),
        float(rec.get("lon", rec.get("longitude_deg"))),
        None if alt in (None, "") else float(alt),
        p_min_ratio=p_min_ratio,
        **overrides,
    )


def load_nodes(path, p_min_ratio: float = 0.1) -> List[NodeSpec]:
    """Read a node snapshot (CSV with header, or a JSON array).

    Rows merge with the per-layer defaults; any malformed row aborts the
    load with a ParseError naming the offending row numbers, and a file
    with no valid rows raises EmptyDataset.
    """
    path = Path(path)
    text = path.read_text()
    records: List[Tuple[int, dict]] = []
    if path.suffix.lower() == ".json" or text.lstrip().startswith("["):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON in {path}: {exc}") from exc
        records = list(enumerate(data, start=1))
    else:
        reader = csv.DictReader(text.splitlines())
        records = list(enumerate(reader, start=2))  # row 1 is the header
    nodes: List[NodeSpec] = []
    bad: List[int] = []
    for row_no, rec in records:
        try:
            nodes.append(_record_to_node(rec, p_min_ratio))
        except (KeyError, TypeError, ValueError):
            bad.append(row_no)
    if bad:
        raise ParseError(f"{path}: malformed rows {bad}", rows=bad)
    if not nodes:
        raise EmptyDataset(f"{path}: no node records")
    return nodes


def save_nodes(nodes: Sequence[NodeSpec], path) -> None:
    """Write the snapshot CSV schema (id, layer, lat, lon, alt_km)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "layer", "lat", "lon", "alt_km"])
        for n in nodes:
            writer.writerow(
                [
                    n.id,
                    _TAG_FOR_LAYER[n.layer],
                    repr(n.position.latitude_deg),
                    repr(n.position.longitude_deg),
                    repr(n.position.altitude_km),
                ]
            )


# ---------------------------------------------------------------------------
# Eavesdropper defaults


def default_calibration() -> CalibrationTable:
    """Bundled calibration fitted by this package's own Monte Carlo."""
    text = (
        importlib.resources.files("sagrelay")
        .joinpath("data/default_calibration.json")
        .read_text()
    )
    return CalibrationTable.from_json(text)


#: Default eavesdropper densities per km^2: (space, air, ground, sea).
DEFAULT_EVE_DENSITIES: Dict[LayerKind, float] = {
    LayerKind.SPACE: 1e-3,
    LayerKind.AIR: 2e-3,
    LayerKind.GROUND: 3e-4,
    LayerKind.SEA: 1e-4,
}


def default_eve_field(
    density_scale: float = 1.0, hotspots: Tuple[Hotspot, ...] = ()
) -> EveField:
    return EveField(
        density_per_layer={
            k: v * density_scale for k, v in DEFAULT_EVE_DENSITIES.items()
        },
        hotspots=hotspots,
        calibration=default_calibration(),
    )


# ---------------------------------------------------------------------------
# Scenario synthesis


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to synthesize and solve one random scenario."""

    n_ground: int = 150
    n_maritime: int = 150
    n_haps: int = 12
    n_leo: int = 10
    n_users: int = 60
    lat_min: float = -25.0
    lat_max: float = -5.0
    lon_min: float = 30.0
    lon_max: float = 60.0
    eve_field: Optional[EveField] = None
    tau: float = 0.95
    p_min_ratio: float = 0.1
    bandwidth_per_layer: Optional[Mapping[LayerKind, float]] = None
    seed: int = 0
    # Normalized-unit noise model: when set, these override the G/T-derived
    # noise PSD and antenna gains on every link.
    noise_psd: Optional[float] = None
    gain_linear: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau must lie in (0, 1)")
        if not 0.0 <= self.p_min_ratio <= 1.0:
            raise ValueError("p_min_ratio must lie in [0, 1]")
        for name in ("n_ground", "n_maritime", "n_haps", "n_leo", "n_users"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        path = Path(path)
        if path.suffix.lower() == ".toml":
            import tomllib

            doc = tomllib.loads(path.read_text())
        else:
            doc = json.loads(path.read_text())
        return cls.from_dict(doc)

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        doc = dict(doc)
        eve = doc.pop("eve_field", None)
        if eve is not None:
            densities = {
                _LAYER_TAGS[tag]: lam for tag, lam in eve["density_per_layer"].items()
            }
            hotspots = tuple(
                Hotspot(
                    GeoPosition(h["lat"], h["lon"], h.get("alt_km", 0.0)),
                    h["radius_km"],
                    h["density_multiplier"],
                )
                for h in eve.get("hotspots", [])
            )
            calib = eve.get("calibration")
            table = (
                CalibrationTable(tuple((c["band_km"], c["a"], c["p"]) for c in calib))
                if calib
                else default_calibration()
            )
            doc["eve_field"] = EveField(densities, hotspots, table)
        bpl = doc.pop("bandwidth_per_layer", None)
        if bpl is not None:
            doc["bandwidth_per_layer"] = {
                _LAYER_TAGS[tag]: hz for tag, hz in bpl.items()
            }
        return cls(**doc)


def random_scenario(
    cfg: ScenarioConfig,
) -> Tuple[Dict[int, NodeSpec], List[int], int]:
    """Synthesize one scenario: (nodes by id, user ids, root id).

    Relay nodes of each layer land uniformly in the bounding box at
    their layer's typical altitude; users sit on the surface.  The
    ground node nearest the box center becomes the root and takes id 0;
    users take the highest ids.  Deterministic given cfg.seed.
    """
    rng = np.random.default_rng(cfg.seed)
    placements: List[Tuple[LayerKind, float, float]] = []
    for layer, count in (
        (LayerKind.GROUND, cfg.n_ground),
        (LayerKind.SEA, cfg.n_maritime),
        (LayerKind.AIR, cfg.n_haps),
        (LayerKind.SPACE, cfg.n_leo),
    ):
        lats = rng.uniform(cfg.lat_min, cfg.lat_max, count)
        lons = rng.uniform(cfg.lon_min, cfg.lon_max, count)
        placements.extend((layer, float(la), float(lo)) for la, lo in zip(lats, lons))
    user_lats = rng.uniform(cfg.lat_min, cfg.lat_max, cfg.n_users)
    user_lons = rng.uniform(cfg.lon_min, cfg.lon_max, cfg.n_users)

    center = (0.5 * (cfg.lat_min + cfg.lat_max), 0.5 * (cfg.lon_min + cfg.lon_max))
    ground_idx = [i for i, p in enumerate(placements) if p[0] is LayerKind.GROUND]
    if ground_idx:
        root_idx = min(
            ground_idx,
            key=lambda i: (placements[i][1] - center[0]) ** 2
            + (placements[i][2] - center[1]) ** 2,
        )
    else:
        root_idx = 0 if placements else None

    def build(node_id: int, layer: LayerKind, lat: float, lon: float) -> NodeSpec:
        overrides = {}
        if cfg.bandwidth_per_layer is not None:
            overrides["bandwidth_hz"] = cfg.bandwidth_per_layer[layer]
        return make_node(
            node_id, layer, lat, lon, p_min_ratio=cfg.p_min_ratio, **overrides
        )

    nodes: Dict[int, NodeSpec] = {}
    if root_idx is not None:
        layer, lat, lon = placements[root_idx]
        nodes[0] = build(0, layer, lat, lon)
    next_id = 1
    for i, (layer, lat, lon) in enumerate(placements):
        if i == root_idx:
            continue
        nodes[next_id] = build(next_id, layer, lat, lon)
        next_id += 1
    users: List[int] = []
    for lat, lon in zip(user_lats, user_lons):
        nodes[next_id] = make_node(
            next_id, LayerKind.GROUND, float(lat), float(lon),
            p_min_ratio=cfg.p_min_ratio,
        )
        users.append(next_id)
        next_id += 1
    return nodes, users, 0


# ---------------------------------------------------------------------------
# Desk regime

#: Normalized propagation constants for desk-scale experiments: with
#: these, the jamming-limited secure distance sits near 100 km, so the
#: SPSC constraint genuinely limits which links exist.
DESK_NOISE_PSD = 0.02
DESK_GAIN_LINEAR = 1e5
DESK_EVE_DENSITY = 3e-8


def desk_eve_field(density_scale: float = 1.0) -> EveField:
    return EveField(
        density_per_layer={k: DESK_EVE_DENSITY * density_scale for k in LayerKind},
        calibration=default_calibration(),
    )


def desk_config(seed: int = 0, **overrides) -> ScenarioConfig:
    """Desk-scale scenario: 30 relays + 10 users in a regional box."""
    params = dict(
        n_ground=18,
        n_maritime=6,
        n_haps=4,
        n_leo=2,
        n_users=10,
        lat_min=-14.0,
        lat_max=-6.0,
        lon_min=34.0,
        lon_max=44.0,
        eve_field=desk_eve_field(),
        tau=0.95,
        p_min_ratio=0.1,
        seed=seed,
        noise_psd=DESK_NOISE_PSD,
        gain_linear=DESK_GAIN_LINEAR,
    )
    params.update(overrides)
    return ScenarioConfig(**params)
