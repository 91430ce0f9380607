"""Intraday jump detection and news-to-jump waiting-time tests."""

__version__ = "0.1.0"

from .align import Announcement, TradingClock, backward_distance, filter_confounded, forward_distance, waiting_times
from .calendar import SessionCalendar, load_calendar
from .ingest import TickFormat, clean_ticks, log_returns, parse_ticks, resample
from .jumps import DetectionConfig, JumpSet, detect_jumps, detection_threshold, signature_curves
from .reference import fit_intraday_distribution, generate_reference_sample
from .stats import bootstrap_pvalue, welch_u, welch_u_test
from .synth import JumpDiffusionParams, evaluate_detector, simulate_path

__all__ = [
    "Announcement",
    "DetectionConfig",
    "JumpDiffusionParams",
    "JumpSet",
    "SessionCalendar",
    "TickFormat",
    "TradingClock",
    "backward_distance",
    "bootstrap_pvalue",
    "clean_ticks",
    "detect_jumps",
    "detection_threshold",
    "evaluate_detector",
    "filter_confounded",
    "fit_intraday_distribution",
    "forward_distance",
    "generate_reference_sample",
    "load_calendar",
    "log_returns",
    "parse_ticks",
    "resample",
    "signature_curves",
    "simulate_path",
    "waiting_times",
    "welch_u",
    "welch_u_test",
]
