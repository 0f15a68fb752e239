"""Deterministic cellular handover simulator.

Kalman-filtered signal prediction, SARSA target-cell ranking, and
epsilon-greedy adaptation of the time-to-trigger and hysteresis margin,
alongside fixed-policy baselines, over a seedable desk-scale radio model.
"""

from .engine import HandoverContext, HandoverOutcome, TriggerEvent, evaluate_trigger
from .kalman import KalmanParams, KalmanState, combine_state
from .metrics import CdfSeries, KpiRecord, cdf
from .policies import FixedA3Policy, GreedyRsrpPolicy, Lim2Policy, make_policy
from .radio import CellSite, ChannelParams, MeasurementEntry, MeasurementReport, RadioEnvironment
from .rl import LearningParams, ParamPair, QTable, epsilon, q_final, sigmoid
from .sim import RunResult, Scenario, Simulation, corridor_scenario, run

__version__ = "0.1.0"

__all__ = [
    "CdfSeries",
    "CellSite",
    "ChannelParams",
    "FixedA3Policy",
    "GreedyRsrpPolicy",
    "HandoverContext",
    "HandoverOutcome",
    "KalmanParams",
    "KalmanState",
    "KpiRecord",
    "LearningParams",
    "Lim2Policy",
    "MeasurementEntry",
    "MeasurementReport",
    "ParamPair",
    "QTable",
    "RadioEnvironment",
    "RunResult",
    "Scenario",
    "Simulation",
    "TriggerEvent",
    "cdf",
    "combine_state",
    "corridor_scenario",
    "epsilon",
    "evaluate_trigger",
    "make_policy",
    "q_final",
    "run",
    "sigmoid",
]
