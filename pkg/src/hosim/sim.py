"""Scenario construction, UE mobility, and the deterministic time-stepped
loop that drives reports, policies, the handover engine, and metrics.

Determinism: every random quantity derives from the scenario seed via
dedicated sub-streams (placement, channel noise, shadowing, and one
stream per learning agent), so a (scenario, seed) pair fixes every
output byte and per-cell agents stay independent of each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import engine
from .engine import EXECUTING, HandoverContext, HandoverOutcome
from .metrics import KpiRecord, MetricsAccumulator
from .policies import Lim2Policy, make_policy
from .radio import CellSite, ChannelParams, RadioEnvironment
from .rl import LearningParams

POLICIES = ("lim2", "fixed_a3", "greedy_rsrp")
SPEED_SET_KMH = (50, 100, 150, 200, 250, 300, 350)

_SETUP_STREAM = 0
_CHANNEL_STREAM = 1
_SHADOW_STREAM = 3


class ConfigError(ValueError):
    """Scenario validation failure; carries the offending field name."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


@dataclass(frozen=True)
class Scenario:
    """Full description of one simulation run."""

    layout: str = "hex"
    n_sites: int = 50
    cell_radius_m: float = 150.0
    site_spacing_m: float = 180.0  # corridor layouts only
    corridor_lane_m: float = 0.0  # lateral offset of the UE lane from the site axis
    boundary_margin_m: float | None = None
    n_ues_per_cell: int = 10
    ue_speed_kmh: float = 200.0
    sim_duration_s: float = 2.0
    step_s: float = 0.001
    report_period_s: float = 0.040
    seed: int = 1
    policy: str = "lim2"
    fixed_ttt_ms: int = 256
    fixed_hyst_db: int = 3
    tx_power_dbm: float = 46.0
    carrier_freq_hz: float = 26e9
    bandwidth_hz: float = 400e6
    noise_figure_db: float = 5.0
    channel: ChannelParams = field(default_factory=ChannelParams)
    learning: LearningParams = field(default_factory=LearningParams)

    def validate(self) -> None:
        if self.layout not in ("hex", "corridor"):
            raise ConfigError("layout", f"unknown layout {self.layout!r}")
        if self.n_sites < 1:
            raise ConfigError("n_sites", "need at least one site")
        if self.layout == "corridor" and self.n_sites < 2:
            raise ConfigError("n_sites", "corridor layout needs at least two sites")
        if self.sim_duration_s <= 0:
            raise ConfigError("sim_duration_s", "must be positive")
        if self.step_s <= 0:
            raise ConfigError("step_s", "must be positive")
        if self.report_period_s < self.step_s:
            raise ConfigError("report_period_s", "must be at least step_s")
        ratio = self.report_period_s / self.step_s
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError("report_period_s", "must be an integer multiple of step_s")
        if self.n_ues_per_cell < 0:
            raise ConfigError("n_ues_per_cell", "must be non-negative")
        if self.ue_speed_kmh < 0:
            raise ConfigError("ue_speed_kmh", "must be non-negative")
        if self.policy not in POLICIES:
            raise ConfigError("policy", f"must be one of {POLICIES}")
        if self.cell_radius_m <= 0:
            raise ConfigError("cell_radius_m", "must be positive")
        if self.layout == "corridor" and self.site_spacing_m <= 0:
            raise ConfigError("site_spacing_m", "must be positive")


def corridor_scenario(**overrides) -> Scenario:
    """Two-cell crossing corridor used for end-to-end comparisons.

    Mid-band carrier and zero shadowing keep the corridor fully covered,
    so policy differences come from decision timing rather than from
    coverage holes; the 2 dB measurement noise still perturbs what the
    policies see.  The UE lane runs 280 m off the site axis, which caps
    the serving-to-interferer distance ratio: even a very late handover
    sags to about -4 dB SINR, degrading throughput without tripping the
    loss threshold or the outage-based failure checks.
    """
    base = dict(
        layout="corridor",
        n_sites=2,
        site_spacing_m=180.0,
        corridor_lane_m=280.0,
        boundary_margin_m=300.0,
        cell_radius_m=150.0,
        n_ues_per_cell=1,
        ue_speed_kmh=200.0,
        sim_duration_s=40.0,
        step_s=0.04,
        report_period_s=0.04,
        carrier_freq_hz=3.5e9,
        bandwidth_hz=100e6,
        channel=ChannelParams(shadowing_sigma_db=0.0),
    )
    base.update(overrides)
    return Scenario(**base)


def build_sites(scenario: Scenario) -> list[CellSite]:
    """Site layout: hexagonal grid for 'hex', a row for 'corridor'."""
    make = lambda cid, pos: CellSite(
        id=cid,
        position=pos,
        tx_power_dbm=scenario.tx_power_dbm,
        carrier_freq_hz=scenario.carrier_freq_hz,
        bandwidth_hz=scenario.bandwidth_hz,
        noise_figure_db=scenario.noise_figure_db,
    )
    if scenario.layout == "corridor":
        return [make(i, (i * scenario.site_spacing_m, 0.0)) for i in range(scenario.n_sites)]
    positions = _hex_positions(scenario.n_sites, math.sqrt(3.0) * scenario.cell_radius_m)
    return [make(i, pos) for i, pos in enumerate(positions)]


def _hex_positions(n: int, pitch: float) -> list[tuple[float, float]]:
    """First n points of a hexagonal lattice spiral around the origin."""
    positions = [(0.0, 0.0)]
    ring = 1
    while len(positions) < n:
        # Walk the six edges of the ring starting from its east corner.
        q, r = ring, 0
        directions = ((-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0), (0, 1))
        for dq, dr in directions:
            for _ in range(ring):
                if len(positions) >= n:
                    break
                x = pitch * (q + r / 2.0)
                y = pitch * (math.sqrt(3.0) / 2.0) * r
                positions.append((x, y))
                q, r = q + dq, r + dr
        ring += 1
    return positions[:n]


@dataclass
class UeTrajectory:
    """Constant-velocity UE: position advances, speed never changes."""

    ue: int
    position: np.ndarray
    velocity: np.ndarray


def place_ues(scenario: Scenario, sites: list[CellSite], rng) -> list[UeTrajectory]:
    """Scatter UEs around their sites.

    Hex layouts draw a radially decaying scatter (exponential radius
    with mean radius/2, clamped to the cell radius, uniform angle) and
    uniform headings.  Corridor layouts start each site's UEs just
    beside it heading toward the far end of the row, so every UE crosses
    the cell boundary.
    """
    speed = scenario.ue_speed_kmh / 3.6
    ues: list[UeTrajectory] = []
    for site in sites:
        for _ in range(scenario.n_ues_per_cell):
            uid = len(ues)
            if scenario.layout == "corridor":
                direction = 1.0 if site.position[0] <= sites[len(sites) // 2].position[0] else -1.0
                if scenario.n_sites == 2:
                    direction = 1.0 if site.id == 0 else -1.0
                offset = float(rng.uniform(10.0, 30.0))
                y = scenario.corridor_lane_m + float(rng.uniform(-10.0, 10.0))
                position = np.array([site.position[0] + direction * offset, y])
                velocity = np.array([direction * speed, 0.0])
            else:
                radius = min(float(rng.exponential(scenario.cell_radius_m / 2.0)), scenario.cell_radius_m)
                angle = float(rng.uniform(0.0, 2.0 * math.pi))
                heading = float(rng.uniform(0.0, 2.0 * math.pi))
                position = np.array(
                    [site.position[0] + radius * math.cos(angle), site.position[1] + radius * math.sin(angle)]
                )
                velocity = speed * np.array([math.cos(heading), math.sin(heading)])
            ues.append(UeTrajectory(uid, position, velocity))
    return ues


@dataclass
class RunResult:
    scenario: Scenario
    kpis: KpiRecord
    outcomes: list[HandoverOutcome]
    qtables: dict


class Simulation:
    """One seeded, single-threaded run of a scenario."""

    def __init__(self, scenario: Scenario):
        scenario.validate()
        self.scenario = scenario
        sites = build_sites(scenario)
        self.sites = {s.id: s for s in sites}
        setup_rng = np.random.default_rng([scenario.seed, _SETUP_STREAM])
        channel_rng = np.random.default_rng([scenario.seed, _CHANNEL_STREAM])
        shadow_rng = np.random.default_rng([scenario.seed, _SHADOW_STREAM])
        self.env = RadioEnvironment(sites, scenario.channel, channel_rng, shadow_rng)
        self.ues = place_ues(scenario, sites, setup_rng)
        self.policy = make_policy(
            scenario.policy,
            seed=scenario.seed,
            learning=scenario.learning,
            fixed_ttt_ms=scenario.fixed_ttt_ms,
            fixed_hyst_db=scenario.fixed_hyst_db,
        )
        self.serving = {ue.ue: self.env.nearest_cell(ue.position) for ue in self.ues}
        self.contexts = {ue.ue: HandoverContext(ue.ue) for ue in self.ues}
        self._nearest = {ue.ue: self.env.nearest_cell(ue.position) for ue in self.ues}
        self.metrics = MetricsAccumulator(n_ues=len(self.ues), duration_s=scenario.sim_duration_s)
        self.outcomes: list[HandoverOutcome] = []
        self.report_every = round(scenario.report_period_s / scenario.step_s)
        self.n_steps = round(scenario.sim_duration_s / scenario.step_s)
        self._bounds = self._deployment_bounds(sites)
        self._step_index = 0

    def _deployment_bounds(self, sites) -> tuple[float, float, float, float]:
        margin = self.scenario.boundary_margin_m
        if margin is None:
            margin = self.scenario.cell_radius_m
        xs = [s.position[0] for s in sites]
        ys = [s.position[1] for s in sites]
        return (min(xs) - margin, max(xs) + margin, min(ys) - margin, max(ys) + margin)

    @property
    def time_s(self) -> float:
        return self._step_index * self.scenario.step_s

    def run(self) -> RunResult:
        for _ in range(self.n_steps):
            self.step()
        qtables = self.policy.qtables() if isinstance(self.policy, Lim2Policy) else {}
        return RunResult(self.scenario, self.metrics.finalize(), self.outcomes, qtables)

    def step(self) -> None:
        """One tick: complete due handovers, emit reports, sample metrics,
        track execution-window SINR, then advance positions."""
        now = self.time_s
        self._complete_due_handovers(now)
        if self._step_index % self.report_every == 0:
            self._report_tick(now)
        self._track_execution_sinr()
        self._advance_positions()
        self._step_index += 1

    def _complete_due_handovers(self, now: float) -> None:
        for ue in self.ues:
            ctx = self.contexts[ue.ue]
            if ctx.phase == EXECUTING and now >= ctx.exec_deadline - 1e-9:
                source = self.serving[ue.ue]
                target_rsrp = self.env.true_rsrp_of(ctx.target, ue.ue, ue.position)
                outcome = engine.complete_handover(ctx, now, source, target_rsrp)
                if outcome.result == "success":
                    self.serving[ue.ue] = outcome.target
                self.outcomes.append(outcome)
                self.metrics.add_outcome(outcome)
                self.policy.notify_outcome(outcome)

    def _report_tick(self, now: float) -> None:
        for ue in self.ues:
            ctx = self.contexts[ue.ue]
            serving = self.serving[ue.ue]
            self.env.advance_env_noise(ue.ue)
            report = self.env.generate_report(ue.ue, ue.position, serving, now)
            env_noise_meas = self.env.measure_env_noise(ue.ue)
            self.policy.observe(report, env_noise_meas)
            if ctx.phase != EXECUTING:
                engine.on_measurement_report(ctx, report, self.policy, now, self.scenario.report_period_s)
            sinr_db = self.env.sinr_of(serving, ue.ue, ue.position)
            attached = ctx.phase != EXECUTING
            self.metrics.add_sample(now, sinr_db, self.sites[serving].bandwidth_hz, attached)
            nearest = self.env.nearest_cell(ue.position)
            if nearest != self._nearest[ue.ue]:
                self._nearest[ue.ue] = nearest
                self.metrics.add_crossing()

    def _track_execution_sinr(self) -> None:
        for ue in self.ues:
            ctx = self.contexts[ue.ue]
            if ctx.phase == EXECUTING:
                engine.note_execution_sinr(ctx, self.env.sinr_of(self.serving[ue.ue], ue.ue, ue.position))

    def _advance_positions(self) -> None:
        xmin, xmax, ymin, ymax = self._bounds
        dt = self.scenario.step_s
        for ue in self.ues:
            ue.position += ue.velocity * dt
            if ue.position[0] < xmin:
                ue.position[0] = 2 * xmin - ue.position[0]
                ue.velocity[0] = -ue.velocity[0]
            elif ue.position[0] > xmax:
                ue.position[0] = 2 * xmax - ue.position[0]
                ue.velocity[0] = -ue.velocity[0]
            if ue.position[1] < ymin:
                ue.position[1] = 2 * ymin - ue.position[1]
                ue.velocity[1] = -ue.velocity[1]
            elif ue.position[1] > ymax:
                ue.position[1] = 2 * ymax - ue.position[1]
                ue.velocity[1] = -ue.velocity[1]


def run(scenario: Scenario) -> RunResult:
    """Validate and execute one scenario."""
    return Simulation(scenario).run()
