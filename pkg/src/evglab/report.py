"""Structured check reports with lossless CSV/JSON round-trips.

Every numerical experiment produces an ExperimentReport: a flat list of
CheckRecords, each carrying the observed value, the criterion it was
held to, a pass flag, and whether the check is hard (theorem-level,
fails the run) or soft (fitted-constant, annotation only).  Reports
serialize deterministically: keys are sorted, floats use shortest
round-trip formatting, and no wall-clock data is embedded unless the
EVGLAB_STAMP environment variable is set.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from dataclasses import dataclass, field

__all__ = ["CheckRecord", "ExperimentReport", "CHECK_TAGS", "module_for_tag"]

# Registry of check tags -> owning module.  Report validation requires
# every record tag to resolve to exactly one module here.
CHECK_TAGS: dict[str, str] = {
    "geometry.volume_sandwich": "geometry",
    "geometry.monotone_ratios": "geometry",
    "geometry.txsx_upper": "geometry",
    "geometry.txsx_ratio": "geometry",
    "geometry.isoperimetric": "geometry",
    "geometry.lambda_positive": "geometry",
    "tilde.sandwich": "tilde",
    "tilde.monotone": "tilde",
    "tilde.rate_fit": "tilde",
    "tilde.lambda_bound": "tilde",
    "tilde.unimodal": "tilde",
    "heat.mass": "heat",
    "heat.positivity": "heat",
    "heat.radial_monotone": "heat",
    "heat.bulk_gaussian": "heat",
    "heat.liyau_upper": "heat",
    "heat.liyau_lower": "heat",
    "heat.time_derivative": "heat",
    "heat.smalltime": "heat",
    "heat.smalltime_refine": "heat",
    "heat.smalltime_limit": "heat",
    "heat.largedist": "heat",
    "heat.largedist_refine": "heat",
    "heat.largedist_nested": "heat",
    "heat.asymptote_sweep": "heat",
    "heat.annular_gradient": "heat",
    "heat.annular_eta": "heat",
    "heat.semigroup": "heat",
    "heat.self_convergence": "heat",
    "green.constants": "green",
    "green.mellin": "green",
    "green.mellin_gradient": "green",
    "green.mellin_homogeneity": "green",
    "green.flux": "green",
    "green.small": "green",
    "green.small_gradient": "green",
    "green.large": "green",
    "green.large_gradient": "green",
    "green.global_sandwich": "green",
    "green.b_bound": "green",
    "green.b_gradient": "green",
    "green.b_deviation": "green",
    "green.kernel_consistency": "green",
    "rearrange.equimeasurable": "rearrange",
    "rearrange.talenti_value": "rearrange",
    "rearrange.talenti_gradient": "rearrange",
    "rearrange.k1k2": "rearrange",
    "rearrange.k1k2_necessity": "rearrange",
    "rearrange.k3": "rearrange",
    "rearrange.k4_euclidean": "rearrange",
    "rearrange.polya_szego": "rearrange",
    "mt.calibration": "mt",
    "mt.calibration_monotone": "mt",
    "mt.norm_slope": "mt",
    "mt.peak_lower": "mt",
    "mt.lnorm_bound": "mt",
    "mt.bounded": "mt",
    "mt.sharp_exponential": "mt",
    "mt.sharp_denominator": "mt",
    "mt.moser_norm_fit": "mt",
    "mt.moser_dichotomy": "mt",
    "cli.config": "cli",
    "cli.determinism": "cli",
}


def module_for_tag(tag: str) -> str:
    return CHECK_TAGS[tag]


def _fmt_float(x: float) -> str:
    return repr(float(x))


@dataclass
class CheckRecord:
    name: str
    tag: str
    observed: float
    criterion: str
    passed: bool
    hard: bool = False
    details: dict = field(default_factory=dict)

    def to_row(self) -> dict:
        return {
            "name": self.name,
            "tag": self.tag,
            "observed": _fmt_float(self.observed),
            "criterion": self.criterion,
            "passed": str(self.passed),
            "hard": str(self.hard),
            "details": json.dumps(self.details, sort_keys=True,
                                  separators=(",", ":")),
        }

    @classmethod
    def from_row(cls, row: dict) -> "CheckRecord":
        return cls(name=row["name"], tag=row["tag"],
                   observed=float(row["observed"]),
                   criterion=row["criterion"],
                   passed=row["passed"] == "True",
                   hard=row["hard"] == "True",
                   details=json.loads(row["details"]))


@dataclass
class ExperimentReport:
    experiment: str
    manifold: str = ""
    records: list[CheckRecord] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def add(self, name: str, tag: str, observed: float, criterion: str,
            passed: bool, hard: bool = False,
            details: dict | None = None) -> CheckRecord:
        if tag not in CHECK_TAGS:
            raise KeyError(f"unregistered check tag {tag!r}")
        rec = CheckRecord(name=name, tag=tag, observed=float(observed),
                          criterion=criterion, passed=bool(passed),
                          hard=bool(hard), details=details or {})
        self.records.append(rec)
        return rec

    def extend(self, other: "ExperimentReport") -> None:
        self.records.extend(other.records)
        for k, v in other.provenance.items():
            self.provenance.setdefault(k, v)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def hard_passed(self) -> bool:
        return all(r.passed for r in self.records if r.hard)

    def failures(self, hard_only: bool = False) -> list[CheckRecord]:
        return [r for r in self.records
                if not r.passed and (r.hard or not hard_only)]

    def stamp(self) -> None:
        """Record wall-clock provenance; opt-in so reports stay byte-stable."""
        if os.environ.get("EVGLAB_STAMP"):
            self.provenance["timestamp"] = time.strftime(
                "%Y-%m-%dT%H:%M:%S", time.gmtime())

    # -- serialization --------------------------------------------------

    def to_json(self) -> str:
        payload = {
            "experiment": self.experiment,
            "manifold": self.manifold,
            "provenance": self.provenance,
            "records": [
                {"name": r.name, "tag": r.tag, "observed": r.observed,
                 "criterion": r.criterion, "passed": r.passed,
                 "hard": r.hard, "details": r.details}
                for r in self.records
            ],
        }
        return json.dumps(payload, sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        payload = json.loads(text)
        rep = cls(experiment=payload["experiment"],
                  manifold=payload["manifold"],
                  provenance=payload["provenance"])
        for r in payload["records"]:
            rep.records.append(CheckRecord(
                name=r["name"], tag=r["tag"], observed=r["observed"],
                criterion=r["criterion"], passed=r["passed"],
                hard=r["hard"], details=r["details"]))
        return rep

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = ["experiment", "manifold", "name", "tag", "observed",
                  "criterion", "passed", "hard", "details"]
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for r in self.records:
            row = r.to_row()
            row["experiment"] = self.experiment
            row["manifold"] = self.manifold
            writer.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ExperimentReport":
        reader = csv.DictReader(io.StringIO(text))
        rep = None
        for row in reader:
            if rep is None:
                rep = cls(experiment=row["experiment"], manifold=row["manifold"])
            rep.records.append(CheckRecord.from_row(row))
        return rep if rep is not None else cls(experiment="")

    def validate_tags(self) -> None:
        for r in self.records:
            module_for_tag(r.tag)

    def summary_lines(self) -> list[str]:
        out = []
        for r in self.records:
            flag = "PASS" if r.passed else "FAIL"
            kind = "hard" if r.hard else "soft"
            out.append(f"[{flag}] ({kind}) {self.experiment}/{r.name}: "
                       f"observed={r.observed:.6g} | {r.criterion}")
        return out
