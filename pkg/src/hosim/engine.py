"""Per-UE handover state machine: trigger evaluation, TTT timing,
decision, and execution with latency / failure / ping-pong accounting.

The comparison driving the A3 condition happens on dBm-scale levels
supplied by the active policy (raw measurements for fixed policies,
filtered posterior estimates for the learning policy), with the
hysteresis applied in dB.  A decision fires at the first report where
the condition has held continuously for the chosen TTT; any violating
report resets the timer.  Execution detaches the UE for a fixed
signaling window plus one report period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .radio import MeasurementReport
from .rl import ParamPair

EXEC_LATENCY_S = 0.050
PING_PONG_WINDOW_S = 1.0
QOUT_SINR_DB = -8.0
MIN_ACCESS_RSRP_DBM = -110.0

IDLE = "idle"
TIMING = "timing"
EXECUTING = "executing"


@dataclass(frozen=True)
class TriggerEvent:
    """One of the standard measurement-event predicates A1..A5."""

    kind: str
    thresholds: tuple[float, ...]

    def __post_init__(self):
        expected = {"A1": 1, "A2": 1, "A3": 1, "A4": 1, "A5": 2}
        if self.kind not in expected:
            raise ValueError(f"unknown trigger kind {self.kind!r}")
        if len(self.thresholds) != expected[self.kind]:
            raise ValueError(f"{self.kind} takes {expected[self.kind]} threshold(s)")
        if not all(math.isfinite(t) for t in self.thresholds):
            raise ValueError("thresholds must be finite")


def evaluate_trigger(event: TriggerEvent, r_s: float, r_n: float) -> bool:
    """Evaluate a trigger predicate on serving level r_s and neighbor level r_n."""
    if not (math.isfinite(r_s) and math.isfinite(r_n)):
        raise ValueError("levels must be finite")
    t = event.thresholds
    if event.kind == "A1":
        return r_s > t[0]
    if event.kind == "A2":
        return r_s < t[0]
    if event.kind == "A3":
        return r_n > r_s + t[0]
    if event.kind == "A4":
        return r_n > t[0]
    return r_s < t[0] and r_n > t[1]


@dataclass
class PolicyDecision:
    """A policy's per-report proposal: target, parameter pair, and the
    dBm-scale levels the A3 condition should compare."""

    target: int
    pair: ParamPair
    srv_level: float
    tgt_level: float
    explored: bool = False


class Policy:
    """Interface the engine drives; implementations live in policies.py."""

    name = "policy"

    def observe(self, report: MeasurementReport, env_noise_dbm: float) -> None:
        """Ingest a report before any decision is requested (optional)."""

    def decide(self, report: MeasurementReport, now: float) -> PolicyDecision | None:
        raise NotImplementedError

    def level(self, report: MeasurementReport, cell: int) -> float | None:
        """Comparison level for a cell in this report, None if unavailable."""
        raise NotImplementedError

    def notify_outcome(self, outcome: "HandoverOutcome") -> None:
        """Called after a handover completes (optional)."""


@dataclass
class HandoverOutcome:
    ue: int
    source: int
    target: int
    decision_time: float
    complete_time: float
    latency: float
    result: str  # "success" | "failure"
    ping_pong: bool
    ttt_ms: int = 0
    hyst_db: int = 0


@dataclass
class HandoverContext:
    """Trigger/decision/execution state for one UE."""

    ue: int
    phase: str = IDLE
    target: int | None = None
    pair: ParamPair | None = None
    episode_start: float | None = None
    ttt_elapsed_ms: float = 0.0
    decision_time: float | None = None
    exec_deadline: float | None = None
    exec_min_sinr_db: float = math.inf
    last_serving: int | None = None
    last_ho_time: float = -math.inf

    def reset_timing(self) -> None:
        self.phase = IDLE
        self.target = None
        self.pair = None
        self.episode_start = None
        self.ttt_elapsed_ms = 0.0


def _begin_execution(ctx: HandoverContext, now: float, report_period_s: float) -> None:
    ctx.phase = EXECUTING
    ctx.decision_time = now
    # One report period of decision signaling plus the interruption window.
    ctx.exec_deadline = now + report_period_s + EXEC_LATENCY_S
    ctx.exec_min_sinr_db = math.inf


def on_measurement_report(
    ctx: HandoverContext,
    report: MeasurementReport,
    policy: Policy,
    now: float,
    report_period_s: float,
) -> bool:
    """Advance the per-UE state machine by one report.

    Returns True when a handover decision fires at this report.  While a
    timing episode runs, the (target, pair) chosen at its start stay
    pinned and only the condition is re-evaluated; a violation (or the
    target dropping out of the report) resets to idle, and the next
    satisfying report starts a fresh episode with a fresh policy choice.
    """
    if ctx.ue != report.ue:
        raise ValueError("report routed to the wrong context")
    if ctx.phase == EXECUTING:
        return False

    if ctx.phase == TIMING:
        srv_level = policy.level(report, report.serving.cell)
        tgt_level = policy.level(report, ctx.target)
        condition = TriggerEvent("A3", (float(ctx.pair.hyst_db),))
        if tgt_level is None or srv_level is None or not evaluate_trigger(condition, srv_level, tgt_level):
            ctx.reset_timing()
            return False
        ctx.ttt_elapsed_ms = (now - ctx.episode_start) * 1e3
        # Nanosecond-scale slack absorbs float rounding in report times so
        # the decision fires exactly at the first report past the window.
        if ctx.ttt_elapsed_ms >= ctx.pair.ttt_ms - 1e-6:
            _begin_execution(ctx, now, report_period_s)
            return True
        return False

    # idle: consult the policy afresh
    if not report.neighbors:
        return False
    decision = policy.decide(report, now)
    if decision is None:
        return False
    if report.entry(decision.target) is None:
        raise ValueError(f"policy chose target {decision.target} absent from the report")
    condition = TriggerEvent("A3", (float(decision.pair.hyst_db),))
    if not evaluate_trigger(condition, decision.srv_level, decision.tgt_level):
        return False
    ctx.phase = TIMING
    ctx.target = decision.target
    ctx.pair = decision.pair
    ctx.episode_start = now
    ctx.ttt_elapsed_ms = 0.0
    if decision.pair.ttt_ms == 0:
        _begin_execution(ctx, now, report_period_s)
        return True
    return False


def note_execution_sinr(ctx: HandoverContext, sinr_db: float) -> None:
    """Track the worst serving SINR seen during the execution window."""
    if ctx.phase == EXECUTING and sinr_db < ctx.exec_min_sinr_db:
        ctx.exec_min_sinr_db = sinr_db


def complete_handover(
    ctx: HandoverContext,
    now: float,
    source: int,
    target_rsrp_dbm: float,
) -> HandoverOutcome:
    """Finish an execution window and classify the outcome.

    Failure when the serving SINR dipped below the outage threshold at
    any point of the window (too-late handover) or the target's true
    RSRP at completion is below the access floor (wrong cell).  A
    success back to the immediately previous cell within 1 s is a
    ping-pong.
    """
    if ctx.phase != EXECUTING:
        raise ValueError("no handover execution in progress")
    if now < ctx.exec_deadline - 1e-9:
        raise ValueError("execution window has not elapsed")
    target = ctx.target
    pair = ctx.pair
    complete_time = ctx.exec_deadline
    latency = complete_time - ctx.decision_time
    failed = ctx.exec_min_sinr_db < QOUT_SINR_DB or target_rsrp_dbm < MIN_ACCESS_RSRP_DBM
    ping_pong = (
        not failed
        and target == ctx.last_serving
        and (complete_time - ctx.last_ho_time) < PING_PONG_WINDOW_S
    )
    if not failed:
        ctx.last_serving = source
        ctx.last_ho_time = complete_time
    outcome = HandoverOutcome(
        ue=ctx.ue,
        source=source,
        target=target,
        decision_time=ctx.decision_time,
        complete_time=complete_time,
        latency=latency,
        result="failure" if failed else "success",
        ping_pong=ping_pong,
        ttt_ms=pair.ttt_ms,
        hyst_db=pair.hyst_db,
    )
    ctx.reset_timing()
    ctx.decision_time = None
    ctx.exec_deadline = None
    ctx.exec_min_sinr_db = math.inf
    return outcome
