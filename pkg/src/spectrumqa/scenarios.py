"""Frequency bands, deployment scenarios, and seeded transmitter sampling.

Coordinate convention used throughout the package: positions are ``(x, y)``
in km inside the square service area, with ``x`` increasing eastward from
the west edge and ``y`` increasing southward from the north edge. This is
image orientation, so grid row 0 is the north edge and column 0 the west
edge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .rng import substream

BAND_ORDER = ("L", "S", "C", "Ku", "Ka")
SATELLITE_CLASSES = ("LEO", "GEO", "mixed")


class UnknownScenarioError(KeyError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BandSpec:
    """One of the five carrier bands with its zenith atmospheric loss."""

    id: str
    frequency_mhz: float
    zenith_attenuation_db: float

    def __post_init__(self) -> None:
        if self.zenith_attenuation_db < 0:
            raise ValueError("zenith attenuation must be >= 0 dB")


# Zenith attenuation grows with carrier frequency; values are clear-sky
# one-way losses and are deliberately small at L/S band.
BANDS: dict[str, BandSpec] = {
    "L": BandSpec("L", 1500.0, 0.03),
    "S": BandSpec("S", 2500.0, 0.05),
    "C": BandSpec("C", 5000.0, 0.10),
    "Ku": BandSpec("Ku", 14000.0, 0.30),
    "Ka": BandSpec("Ka", 28000.0, 1.00),
}

# EIRP-style transmit powers. Absolute calibration mostly cancels under the
# per-sample min-max normalization, so these set relative magnitudes only.
SATELLITE_TX_POWER_DBM = {"LEO": 60.0, "GEO": 75.0, "mixed": 60.0}
BASE_STATION_TX_POWER_DBM = 46.0


@dataclass(frozen=True)
class Scenario:
    """Deployment geometry for one simulated environment."""

    id: str
    n_satellites: int
    n_base_stations: int
    n_users: int  # bookkeeping only; users do not enter the interference math
    area_km: float
    satellite_altitude_km: float
    satellite_class: str

    def __post_init__(self) -> None:
        if min(self.n_satellites, self.n_base_stations, self.n_users) < 1:
            raise ValueError(f"scenario {self.id}: all counts must be >= 1")
        if self.area_km <= 0:
            raise ValueError(f"scenario {self.id}: area_km must be > 0")
        if self.satellite_altitude_km <= 0:
            raise ValueError(f"scenario {self.id}: altitude must be > 0")
        if self.satellite_class not in SATELLITE_CLASSES:
            raise ValueError(f"scenario {self.id}: unknown class {self.satellite_class!r}")

    @property
    def n_transmitters(self) -> int:
        return self.n_satellites + self.n_base_stations


BUILTIN_SCENARIOS: dict[str, Scenario] = {
    # A: dense urban, LEO overlay. B: rural GEO. C: mixed mid-size deployment.
    "A": Scenario("A", 10, 20, 500, 50.0, 550.0, "LEO"),
    "B": Scenario("B", 3, 5, 100, 200.0, 35786.0, "GEO"),
    "C": Scenario("C", 5, 10, 200, 100.0, 550.0, "LEO"),
}


def builtin_scenario(scenario_id: str) -> Scenario:
    try:
        return BUILTIN_SCENARIOS[scenario_id]
    except KeyError:
        raise UnknownScenarioError(
            f"unknown scenario {scenario_id!r}; built-ins are {sorted(BUILTIN_SCENARIOS)}"
        ) from None


@dataclass(frozen=True)
class Transmitter:
    id: str
    kind: str  # "satellite" | "base_station"
    position_km: tuple[float, float]
    altitude_km: float
    band: str
    tx_power_dbm: float

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "position_km": list(self.position_km),
            "altitude_km": self.altitude_km,
            "band": self.band,
            "tx_power_dbm": self.tx_power_dbm,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Transmitter":
        return cls(
            id=d["id"],
            kind=d["kind"],
            position_km=tuple(d["position_km"]),
            altitude_km=float(d["altitude_km"]),
            band=d["band"],
            tx_power_dbm=float(d["tx_power_dbm"]),
        )


@dataclass(frozen=True)
class TransmitterSet:
    """One sampled deployment, regenerable from (scenario, seed, index)."""

    scenario_id: str
    sample_index: int
    master_seed: int
    area_km: float
    transmitters: tuple[Transmitter, ...] = field(repr=False)

    def by_band(self) -> dict[str, list[Transmitter]]:
        grouped: dict[str, list[Transmitter]] = {b: [] for b in BAND_ORDER}
        for tx in self.transmitters:
            grouped[tx.band].append(tx)
        return grouped

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "sample_index": self.sample_index,
            "master_seed": self.master_seed,
            "area_km": self.area_km,
            "transmitters": [tx.to_dict() for tx in self.transmitters],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TransmitterSet":
        return cls(
            scenario_id=d["scenario_id"],
            sample_index=int(d["sample_index"]),
            master_seed=int(d["master_seed"]),
            area_km=float(d["area_km"]),
            transmitters=tuple(Transmitter.from_dict(t) for t in d["transmitters"]),
        )

    def canonical_json(self) -> bytes:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()


def sample_transmitters(
    scenario: Scenario, master_seed: int, sample_index: int
) -> TransmitterSet:
    """Draw one deployment: uniform positions, uniform i.i.d. band assignment.

    The substream is keyed by (master_seed, scenario id, sample_index), so a
    given sample is reproducible regardless of how many other samples exist
    or in which order they are generated. Draw order is pinned: all
    positions first, then all band indices; satellites occupy the first
    ``n_satellites`` slots.
    """
    if sample_index < 0:
        raise ValueError("sample_index must be >= 0")
    rng = substream(master_seed, scenario.id, sample_index)
    n = scenario.n_transmitters
    positions = rng.uniform(0.0, scenario.area_km, size=(n, 2))
    band_idx = rng.integers(0, len(BAND_ORDER), size=n)

    sat_power = SATELLITE_TX_POWER_DBM[scenario.satellite_class]
    transmitters = []
    for i in range(n):
        is_sat = i < scenario.n_satellites
        transmitters.append(
            Transmitter(
                id=f"sat-{i:02d}" if is_sat else f"bs-{i - scenario.n_satellites:02d}",
                kind="satellite" if is_sat else "base_station",
                position_km=(float(positions[i, 0]), float(positions[i, 1])),
                altitude_km=scenario.satellite_altitude_km if is_sat else 0.0,
                band=BAND_ORDER[int(band_idx[i])],
                tx_power_dbm=sat_power if is_sat else BASE_STATION_TX_POWER_DBM,
            )
        )
    return TransmitterSet(
        scenario_id=scenario.id,
        sample_index=sample_index,
        master_seed=master_seed,
        area_km=scenario.area_km,
        transmitters=tuple(transmitters),
    )


_SCENARIO_KEYS = {
    "n_satellites",
    "n_base_stations",
    "n_users",
    "area_km",
    "satellite_altitude_km",
    "satellite_class",
}


def load_scenario_registry(config_path: str | Path | None = None) -> dict[str, Scenario]:
    """Built-in scenarios, optionally merged with overrides from a JSON file.

    Schema: ``{"scenarios": {"<id>": {<field>: <value>, ...}, ...}}`` where
    fields are any of n_satellites, n_base_stations, n_users, area_km,
    satellite_altitude_km, satellite_class. Known ids are patched; new ids
    must supply every field.
    """
    registry = dict(BUILTIN_SCENARIOS)
    if config_path is None:
        return registry
    try:
        raw = json.loads(Path(config_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario config {config_path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("scenario config must be a JSON object")
    unknown_top = set(raw) - {"scenarios"}
    if unknown_top:
        raise ConfigError(f"unknown config keys: {sorted(unknown_top)}")
    for sid, fields in raw.get("scenarios", {}).items():
        if not isinstance(fields, dict):
            raise ConfigError(f"scenario {sid!r}: override must be an object")
        bad = set(fields) - _SCENARIO_KEYS
        if bad:
            raise ConfigError(f"scenario {sid!r}: unknown fields {sorted(bad)}")
        if sid in registry:
            base = registry[sid]
            merged = {k: fields.get(k, getattr(base, k)) for k in _SCENARIO_KEYS}
        elif set(fields) == _SCENARIO_KEYS:
            merged = dict(fields)
        else:
            missing = _SCENARIO_KEYS - set(fields)
            raise ConfigError(f"new scenario {sid!r} missing fields {sorted(missing)}")
        try:
            registry[sid] = Scenario(id=sid, **merged)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return registry
