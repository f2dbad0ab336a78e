"""Session-level evaluation: cumulative success rate, average turns, reports.

Success rate at turn t is the fraction of episodes that succeeded by t.
Average turns counts a failed session as the full turn budget.  The relative
success rate subtracts a reference policy's curve, matching the way
competing policies are usually compared turn by turn.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .engine import EpisodeLog


def success_rate_at(logs: Sequence[EpisodeLog], t: int) -> float:
    """Fraction of episodes succeeding at or before turn ``t``."""
    if not logs:
        raise ValueError("no episode logs")
    if t < 1:
        raise ValueError("turn index starts at 1")
    hits = sum(1 for log in logs if log.success and log.success_turn <= t)
    return hits / len(logs)


def average_turns(logs: Sequence[EpisodeLog]) -> float:
    """Mean turns to success, counting a failed session as its full budget."""
    if not logs:
        raise ValueError("no episode logs")
    return sum(log.turns_taken for log in logs) / len(logs)


def relative_sr(logs_a: Sequence[EpisodeLog], logs_ref: Sequence[EpisodeLog], t: int) -> float:
    """Success-rate difference against a reference policy at the same turn."""
    return success_rate_at(logs_a, t) - success_rate_at(logs_ref, t)


def sr_curve(logs: Sequence[EpisodeLog], max_turns: int) -> list[float]:
    return [success_rate_at(logs, t) for t in range(1, max_turns + 1)]


@dataclass
class MetricReport:
    """Per-policy curves plus optional per-seed breakdown and a reference."""

    max_turns: int
    policies: dict[str, dict] = field(default_factory=dict)
    reference: str | None = None

    def add(self, name: str, seed_logs: Sequence[Sequence[EpisodeLog]]) -> None:
        """Register one policy's logs, one list per seed."""
        curves = [sr_curve(logs, self.max_turns) for logs in seed_logs]
        ats = [average_turns(logs) for logs in seed_logs]
        n_seeds = len(curves)
        mean_curve = [sum(c[t] for c in curves) / n_seeds for t in range(self.max_turns)]
        mean_at = sum(ats) / n_seeds
        entry = {
            "sr": mean_curve,
            "at": mean_at,
            "episodes": sum(len(logs) for logs in seed_logs),
            "seeds": n_seeds,
            "per_seed": {"sr_final": [c[-1] for c in curves], "at": ats},
        }
        if n_seeds > 1:
            entry["sr_final_std"] = _sample_std([c[-1] for c in curves])
            entry["at_std"] = _sample_std(ats)
        self.policies[name] = entry

    def finalize(self) -> None:
        if self.reference and self.reference in self.policies:
            ref = self.policies[self.reference]["sr"]
            for entry in self.policies.values():
                entry["sr_star"] = [a - b for a, b in zip(entry["sr"], ref)]


def _sample_std(xs: Sequence[float]) -> float:
    n = len(xs)
    mean = sum(xs) / n
    return math.sqrt(sum((x - mean) ** 2 for x in xs) / (n - 1))


def build_report(
    policy_logs: Mapping[str, Sequence[EpisodeLog]],
    max_turns: int,
    reference: str | None = None,
) -> MetricReport:
    """Single-seed convenience wrapper around :class:`MetricReport`."""
    report = MetricReport(max_turns=max_turns, reference=reference)
    for name, logs in policy_logs.items():
        report.add(name, [logs])
    report.finalize()
    return report


def write_report_csv(report: MetricReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["policy", "metric", "turn", "value"])
        for name in sorted(report.policies):
            entry = report.policies[name]
            for t, v in enumerate(entry["sr"], start=1):
                writer.writerow([name, "sr", t, f"{v:.6f}"])
            writer.writerow([name, "at", "", f"{entry['at']:.6f}"])
            if "sr_star" in entry:
                for t, v in enumerate(entry["sr_star"], start=1):
                    writer.writerow([name, "sr_star", t, f"{v:.6f}"])


def write_report_json(report: MetricReport, path) -> None:
    payload = {
        "max_turns": report.max_turns,
        "reference": report.reference,
        "policies": report.policies,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
