"""Analysis configuration: a JSON file of raw survey and clinical counts.

Schema (version 1)::

    {
      "schema_version": 1,
      "population": 51829023,
      "alpha": 0.05,                      # optional, default 0.05
      "clinical": {"tp": 42, "fp": 1, "fn": 3, "tn": 34},
      "fixed_accuracy": {"sensitivity": ..., "specificity": ...},   # optional
      "surveys": [
        {"name": "round1", "n_samples": 1500, "x_positive": 0,
         "confirmed_cumulative": 12198, "collection_end": "2020-06-16"},
        ...
      ],
      "mcmc": {"n_chains": 4, "n_warmup": 1000, "n_draws": 1000,
               "seed": 20201030, "target_accept": 0.4, "initial_step": 0.5},
      "timeline": [["2020-06-16", 12198], ...]                       # optional
    }

Ratios are never read from the file: the confirmed fraction of each survey is
derived as ``confirmed_cumulative / population`` and the default fixed accuracy
as ``tp / (tp + fn)``, ``tn / (tn + fp)``.
"""
from __future__ import annotations

import datetime as dt
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .bayes import JointModel
from .mcmc import McmcConfig
from .model import ClinicalTable, SurveyObservation, TestAccuracy

SCHEMA_VERSION = 1


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class SurveyEntry:
    name: str
    n_samples: int
    x_positive: int
    confirmed_cumulative: int
    collection_end: str


@dataclass(frozen=True)
class AnalysisConfig:
    surveys: tuple
    population: int
    clinical: ClinicalTable
    alpha: float = 0.05
    fixed_accuracy: TestAccuracy | None = None
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    timeline: tuple = ()

    @property
    def accuracy(self) -> TestAccuracy:
        return self.fixed_accuracy or self.clinical.point_accuracy()

    def observations(self) -> list[SurveyObservation]:
        return [SurveyObservation(s.n_samples, s.x_positive,
                                  s.confirmed_cumulative / self.population,
                                  s.collection_end)
                for s in self.surveys]

    def joint_model(self) -> JointModel:
        return JointModel.from_clinical(self.observations(), self.clinical)

    def confirmed_timeline(self) -> list[tuple[str, int]]:
        """Cumulative confirmed counts by date; falls back to the survey end dates."""
        if self.timeline:
            return list(self.timeline)
        return sorted((s.collection_end, s.confirmed_cumulative) for s in self.surveys)

    def to_dict(self) -> dict:
        c = self.clinical
        out = {
            "schema_version": SCHEMA_VERSION,
            "population": self.population,
            "alpha": self.alpha,
            "clinical": {"tp": c.true_pos_test_pos, "fp": c.true_neg_test_pos,
                         "fn": c.true_pos_test_neg, "tn": c.true_neg_test_neg},
            "fixed_accuracy": ({"sensitivity": self.fixed_accuracy.sensitivity,
                                "specificity": self.fixed_accuracy.specificity}
                               if self.fixed_accuracy else None),
            "surveys": [asdict(s) for s in self.surveys],
            "mcmc": asdict(self.mcmc),
        }
        if self.timeline:
            out["timeline"] = [list(t) for t in self.timeline]
        return out


def _count(raw: dict, key: str, where: str, minimum: int = 0) -> int:
    name = f"{where}.{key}" if where else key
    if key not in raw:
        raise ValidationError(name, "missing")
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(name, f"expected an integer, got {v!r}")
    if v < minimum:
        raise ValidationError(name, f"must be >= {minimum}, got {v}")
    return v


def _date(value, name: str) -> str:
    try:
        return dt.date.fromisoformat(str(value)).isoformat()
    except ValueError:
        raise ValidationError(name, f"expected an ISO date (YYYY-MM-DD), got {value!r}") from None


def parse_config(raw: dict) -> AnalysisConfig:
    """Validate a decoded config mapping."""
    if not isinstance(raw, dict):
        raise ValidationError("<root>", "expected a JSON object")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValidationError("schema_version", f"unsupported version {version!r}")
    population = _count(raw, "population", "", minimum=1)

    alpha = raw.get("alpha", 0.05)
    if isinstance(alpha, bool) or not isinstance(alpha, (int, float)) or not 0 < alpha < 1:
        raise ValidationError("alpha", f"must lie strictly between 0 and 1, got {alpha!r}")

    clin = raw.get("clinical")
    if not isinstance(clin, dict):
        raise ValidationError("clinical", "missing or not an object")
    table = ClinicalTable(*(_count(clin, k, "clinical") for k in ("tp", "fp", "fn", "tn")))

    fixed = raw.get("fixed_accuracy")
    if fixed is not None:
        if not isinstance(fixed, dict):
            raise ValidationError("fixed_accuracy", "expected an object")
        vals = []
        for key in ("sensitivity", "specificity"):
            v = fixed.get(key)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0 < v <= 1:
                raise ValidationError(f"fixed_accuracy.{key}", f"must lie in (0, 1], got {v!r}")
            vals.append(float(v))
        fixed = TestAccuracy(*vals)
    else:
        if table.n_true_pos == 0 or table.n_true_neg == 0:
            raise ValidationError("clinical", "needs positive and negative reference samples "
                                  "when fixed_accuracy is omitted")
        acc = table.point_accuracy()
        if acc.sensitivity == 0 or acc.specificity == 0:
            raise ValidationError("clinical", "derived sensitivity or specificity is zero")

    surveys_raw = raw.get("surveys")
    if not isinstance(surveys_raw, list) or not surveys_raw:
        raise ValidationError("surveys", "expected a non-empty list")
    surveys = []
    for i, s in enumerate(surveys_raw):
        where = f"surveys[{i}]"
        if not isinstance(s, dict):
            raise ValidationError(where, "expected an object")
        n = _count(s, "n_samples", where, minimum=1)
        x = _count(s, "x_positive", where)
        if x > n:
            raise ValidationError(f"{where}.x_positive", f"{x} exceeds n_samples {n}")
        confirmed = _count(s, "confirmed_cumulative", where)
        if confirmed >= population:
            raise ValidationError(f"{where}.confirmed_cumulative",
                                  f"{confirmed} is not below population {population}")
        if "collection_end" not in s:
            raise ValidationError(f"{where}.collection_end", "missing")
        end = _date(s["collection_end"], f"{where}.collection_end")
        surveys.append(SurveyEntry(str(s.get("name", f"survey{i + 1}")), n, x, confirmed, end))

    mc = raw.get("mcmc", {}) or {}
    if not isinstance(mc, dict):
        raise ValidationError("mcmc", "expected an object")
    unknown = set(mc) - set(McmcConfig.__dataclass_fields__)
    if unknown:
        raise ValidationError(f"mcmc.{sorted(unknown)[0]}", "unknown field")
    try:
        mcmc = McmcConfig(**mc)
    except (TypeError, ValueError) as exc:
        raise ValidationError("mcmc", str(exc)) from None

    timeline = []
    for i, item in enumerate(raw.get("timeline", []) or []):
        if not (isinstance(item, (list, tuple)) and len(item) == 2):
            raise ValidationError(f"timeline[{i}]", "expected [date, cumulative_confirmed]")
        timeline.append((_date(item[0], f"timeline[{i}][0]"),
                         _count({"c": item[1]}, "c", f"timeline[{i}]")))

    return AnalysisConfig(tuple(surveys), population, table, float(alpha), fixed, mcmc,
                          tuple(timeline))


def ingest(path) -> AnalysisConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return parse_config(raw)


def bundled_config_path(name: str = "korea2020.json") -> Path:
    return Path(resources.files("seroprev") / "data" / name)


def load_korea2020() -> AnalysisConfig:
    """The three 2020 South Korea survey rounds with the PRNT evaluation table."""
    return ingest(bundled_config_path())
