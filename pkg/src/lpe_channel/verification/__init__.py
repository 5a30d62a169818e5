"""Dense-operator oracles, manufactured solutions, energy audits and suites."""

from .suites import SUITES, Check, VerifyReport, run_verify

__all__ = ["SUITES", "Check", "VerifyReport", "run_verify"]
