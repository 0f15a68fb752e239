"""Cell sites, propagation, and measurement-report generation.

Propagation is a log-distance path loss model anchored at a free-space
reference distance of 1 m, with block-constant log-normal shadowing per
(site, UE) pair that is redrawn every 50 m of UE travel.  RSRP is the
wideband received power scaled down to one resource element (120 kHz
subcarrier spacing).  Ambient RF noise at each UE follows a bounded
random walk and degrades measured RSRP additively in dB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT = 299_792_458.0
REFERENCE_DISTANCE_M = 1.0
SUBCARRIER_SPACING_HZ = 120e3
SUBCARRIERS_PER_RB = 12
MAX_NEIGHBORS = 8
DETECTION_THRESHOLD_DBM = -125.0
SHADOWING_DECORRELATION_M = 50.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class CellSite:
    """A gNB site with its transmit configuration."""

    id: int
    position: tuple[float, float]
    tx_power_dbm: float = 46.0
    carrier_freq_hz: float = 26e9
    bandwidth_hz: float = 400e6
    noise_figure_db: float = 5.0

    def __post_init__(self):
        if not math.isfinite(self.tx_power_dbm):
            raise ValueError("tx_power_dbm must be finite")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")


@dataclass(frozen=True)
class ChannelParams:
    """Propagation and noise parameters shared by every link."""

    path_loss_exponent: float = 3.0
    shadowing_sigma_db: float = 4.0
    thermal_noise_density_dbm_hz: float = -174.0
    meas_noise_sigma_db: float = 2.0
    env_noise_mean_dbm: float = -100.0
    env_noise_sigma_db: float = 2.0

    def __post_init__(self):
        if self.path_loss_exponent <= 0:
            raise ValueError("path_loss_exponent must be positive")
        for name in ("shadowing_sigma_db", "meas_noise_sigma_db", "env_noise_sigma_db"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class MeasurementEntry:
    cell: int
    rsrp_dbm: float
    rsrq_db: float

    def __post_init__(self):
        if not (math.isfinite(self.rsrp_dbm) and math.isfinite(self.rsrq_db)):
            raise ValueError("measurement entries must be finite")


@dataclass(frozen=True)
class MeasurementReport:
    """Per-UE snapshot of serving and neighbor cell measurements."""

    ue: int
    timestamp: float
    serving: MeasurementEntry
    neighbors: tuple[MeasurementEntry, ...]

    def __post_init__(self):
        if any(n.cell == self.serving.cell for n in self.neighbors):
            raise ValueError("serving cell must not appear in neighbor list")

    def entry(self, cell: int) -> MeasurementEntry | None:
        if cell == self.serving.cell:
            return self.serving
        for n in self.neighbors:
            if n.cell == cell:
                return n
        return None


def free_space_reference_db(carrier_freq_hz: float) -> float:
    """Free-space path loss at the 1 m reference distance."""
    return 20.0 * math.log10(4.0 * math.pi * REFERENCE_DISTANCE_M * carrier_freq_hz / SPEED_OF_LIGHT)


def path_loss(distance_m: float, params: ChannelParams, carrier_freq_hz: float) -> float:
    """Log-distance path loss in dB; distances below 1 m clamp to 1 m."""
    if not (math.isfinite(distance_m) and math.isfinite(carrier_freq_hz)):
        raise ValueError("path_loss inputs must be finite")
    d = max(distance_m, REFERENCE_DISTANCE_M)
    return free_space_reference_db(carrier_freq_hz) + 10.0 * params.path_loss_exponent * math.log10(
        d / REFERENCE_DISTANCE_M
    )


def n_resource_blocks(bandwidth_hz: float) -> int:
    return int(bandwidth_hz // (SUBCARRIERS_PER_RB * SUBCARRIER_SPACING_HZ))


def n_subcarriers(bandwidth_hz: float) -> int:
    return SUBCARRIERS_PER_RB * n_resource_blocks(bandwidth_hz)


def re_scaling_db(bandwidth_hz: float) -> float:
    """Wideband-power to per-resource-element scaling in dB."""
    return linear_to_db(n_subcarriers(bandwidth_hz))


def received_power_dbm(site: CellSite, ue_position, params: ChannelParams, shadowing_db: float = 0.0) -> float:
    """Wideband received power (before resource-element scaling)."""
    dx = site.position[0] - ue_position[0]
    dy = site.position[1] - ue_position[1]
    distance = math.hypot(dx, dy)
    return site.tx_power_dbm - path_loss(distance, params, site.carrier_freq_hz) - shadowing_db


def true_rsrp(site: CellSite, ue_position, shadowing_db: float, params: ChannelParams) -> float:
    """Ground-truth RSRP in dBm at a UE position for a given shadowing draw."""
    return received_power_dbm(site, ue_position, params, shadowing_db) - re_scaling_db(site.bandwidth_hz)


def measure_rsrp(true_rsrp_dbm: float, env_noise_dbm: float, params: ChannelParams, rng) -> float:
    """Degrade the true RSRP by the ambient-noise excursion plus measurement noise.

    The degradation is the ambient noise level's excursion above its
    configured mean, applied additively in dB, so a noisier environment
    reads a weaker signal.
    """
    degradation = env_noise_dbm - params.env_noise_mean_dbm
    noise = rng.normal(0.0, params.meas_noise_sigma_db)
    return true_rsrp_dbm - degradation + noise


def rsrq(rsrp_dbm: float, rssi_dbm: float, n_rb: int) -> float:
    """RSRQ in dB: 10*log10(N_RB) + RSRP - RSSI."""
    if n_rb < 1:
        raise ValueError("n_rb must be at least 1")
    return linear_to_db(n_rb) + rsrp_dbm - rssi_dbm


def noise_power_dbm(site: CellSite, params: ChannelParams) -> float:
    """Thermal noise power over the site bandwidth including the noise figure."""
    return params.thermal_noise_density_dbm_hz + linear_to_db(site.bandwidth_hz) + site.noise_figure_db


def sinr(
    serving: CellSite,
    interferers: list[CellSite],
    ue_position,
    params: ChannelParams,
    shadowing: dict[int, float] | None = None,
) -> float:
    """Serving power over interference plus thermal noise, in dB."""
    if any(s.id == serving.id for s in interferers):
        raise ValueError("serving site must not be listed as an interferer")
    shadowing = shadowing or {}
    signal_mw = db_to_linear(received_power_dbm(serving, ue_position, params, shadowing.get(serving.id, 0.0)))
    interference_mw = sum(
        db_to_linear(received_power_dbm(s, ue_position, params, shadowing.get(s.id, 0.0))) for s in interferers
    )
    noise_mw = db_to_linear(noise_power_dbm(serving, params))
    return linear_to_db(signal_mw / (interference_mw + noise_mw))


@dataclass
class _ShadowState:
    value: float
    position: tuple[float, float]


class RadioEnvironment:
    """Stateful channel view for one simulation run.

    Owns the per-(site, UE) shadowing cache and the per-UE ambient-noise
    random walks.  Confined to a single simulation instance; a run is
    single-threaded.
    """

    def __init__(self, sites: list[CellSite], params: ChannelParams, rng, shadow_rng=None):
        ids = [s.id for s in sites]
        if len(set(ids)) != len(ids):
            raise ValueError("site ids must be unique")
        self.sites = {s.id: s for s in sorted(sites, key=lambda s: s.id)}
        self.params = params
        self.rng = rng
        # Shadowing draws on their own stream so redraw timing (which can
        # shift with the step size) never perturbs measurement noise.
        self.shadow_rng = shadow_rng if shadow_rng is not None else rng
        self._shadow: dict[tuple[int, int], _ShadowState] = {}
        self._env_noise: dict[int, float] = {}

    def shadowing_db(self, cell: int, ue: int, position) -> float:
        """Block-constant shadowing, redrawn after 50 m of UE travel."""
        key = (cell, ue)
        state = self._shadow.get(key)
        pos = (float(position[0]), float(position[1]))
        if state is not None and math.dist(state.position, pos) < SHADOWING_DECORRELATION_M:
            return state.value
        value = float(self.shadow_rng.normal(0.0, self.params.shadowing_sigma_db))
        self._shadow[key] = _ShadowState(value, pos)
        return value

    def env_noise_dbm(self, ue: int) -> float:
        return self._env_noise.get(ue, self.params.env_noise_mean_dbm)

    def advance_env_noise(self, ue: int) -> float:
        """One bounded random-walk step of the UE's ambient noise level."""
        p = self.params
        value = self.env_noise_dbm(ue) + float(self.rng.normal(0.0, p.env_noise_sigma_db))
        bound = 3.0 * p.env_noise_sigma_db
        value = min(max(value, p.env_noise_mean_dbm - bound), p.env_noise_mean_dbm + bound)
        self._env_noise[ue] = value
        return value

    def measure_env_noise(self, ue: int) -> float:
        """Noisy observation of the current ambient noise level."""
        return self.env_noise_dbm(ue) + float(self.rng.normal(0.0, self.params.meas_noise_sigma_db))

    def true_rsrp_of(self, cell: int, ue: int, position) -> float:
        site = self.sites[cell]
        return true_rsrp(site, position, self.shadowing_db(cell, ue, position), self.params)

    def sinr_of(self, serving_cell: int, ue: int, position) -> float:
        shadow = {cid: self.shadowing_db(cid, ue, position) for cid in self.sites}
        serving = self.sites[serving_cell]
        interferers = [s for cid, s in self.sites.items() if cid != serving_cell]
        return sinr(serving, interferers, position, self.params, shadow)

    def nearest_cell(self, position) -> int:
        return min(
            self.sites,
            key=lambda cid: (
                math.dist(self.sites[cid].position, (position[0], position[1])),
                cid,
            ),
        )

    def generate_report(self, ue: int, position, serving_cell: int, timestamp: float) -> MeasurementReport:
        """Build a measurement report: serving entry plus up to 8 neighbors.

        Neighbors are sorted by measured RSRP descending (ties by cell id)
        and filtered by the detection threshold.  All entries carry
        measured RSRP and the derived RSRQ.
        """
        env_noise = self.env_noise_dbm(ue)
        # Total received wideband power plus the noise floor forms the RSSI.
        rssi_mw = 0.0
        wideband: dict[int, float] = {}
        for cid, site in self.sites.items():
            p = received_power_dbm(site, position, self.params, self.shadowing_db(cid, ue, position))
            wideband[cid] = p
            rssi_mw += db_to_linear(p)
        serving_site = self.sites[serving_cell]
        rssi_mw += db_to_linear(noise_power_dbm(serving_site, self.params))
        rssi_dbm = linear_to_db(rssi_mw)
        n_rb = n_resource_blocks(serving_site.bandwidth_hz)

        entries: dict[int, MeasurementEntry] = {}
        for cid in self.sites:
            true_value = wideband[cid] - re_scaling_db(self.sites[cid].bandwidth_hz)
            measured = measure_rsrp(true_value, env_noise, self.params, self.rng)
            entries[cid] = MeasurementEntry(cid, measured, rsrq(measured, rssi_dbm, n_rb))

        neighbors = sorted(
            (e for cid, e in entries.items() if cid != serving_cell and e.rsrp_dbm >= DETECTION_THRESHOLD_DBM),
            key=lambda e: (-e.rsrp_dbm, e.cell),
        )
        return MeasurementReport(ue, timestamp, entries[serving_cell], tuple(neighbors[:MAX_NEIGHBORS]))
