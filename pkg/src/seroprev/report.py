"""Run the analyses for a config and serialize the results."""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from . import frequentist as freq
from .config import AnalysisConfig
from .mcmc import NonConvergenceWarning, detection_ratio, sample, summarize
from .model import NonIdentifiable

REPORT_SCHEMA_VERSION = 1
METHODS = ("mle", "rao", "cp", "bayes")

OK, EMPTY, ERROR = "ok", "empty", "error"


@dataclass
class MethodResult:
    method: str
    status: str
    estimate: Optional[float] = None
    lower: Optional[float] = None
    upper: Optional[float] = None
    estimate_persons: Optional[float] = None
    lower_persons: Optional[float] = None
    upper_persons: Optional[float] = None
    note: str = ""


@dataclass
class SurveyResult:
    name: str
    collection_end: str
    n_samples: int
    x_positive: int
    confirmed_cumulative: int
    confirmed_fraction: float
    results: dict = field(default_factory=dict)   # method -> MethodResult
    detection_ratio: Optional[float] = None

    @classmethod
    def from_dict(cls, d: dict) -> "SurveyResult":
        d = dict(d)
        d["results"] = {k: MethodResult(**v) for k, v in d["results"].items()}
        return cls(**d)


@dataclass
class ReportBundle:
    population: int
    alpha: float
    methods: list
    fixed_accuracy: dict
    surveys: list = field(default_factory=list)
    accuracy_posterior: Optional[dict] = None
    diagnostics: Optional[dict] = None
    annotations: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ReportBundle":
        d = dict(d)
        d["surveys"] = [SurveyResult.from_dict(s) for s in d["surveys"]]
        return cls(**d)

    @property
    def converged(self) -> bool:
        return self.diagnostics is None or bool(self.diagnostics.get("converged", True))


def _scaled(population: int, estimate=None, lower=None, upper=None, **kw) -> dict:
    def mul(v):
        return None if v is None else v * population
    return dict(estimate=estimate, lower=lower, upper=upper, estimate_persons=mul(estimate),
                lower_persons=mul(lower), upper_persons=mul(upper), **kw)


def _parse_methods(methods) -> list:
    if isinstance(methods, str):
        methods = [m for m in methods.split(",") if m]
    out = []
    for m in methods:
        m = m.strip().lower()
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        if m not in out:
            out.append(m)
    # fixed order keeps output independent of how methods were listed
    return [m for m in METHODS if m in out]


def run_analysis(config: AnalysisConfig, methods=METHODS, n_jobs: int = 1) -> ReportBundle:
    """Run the requested subset of ``mle``, ``rao``, ``cp`` and ``bayes``.

    Non-identifiable accuracy and a failed convergence check are recorded as
    annotations rather than raised.
    """
    methods = _parse_methods(methods)
    acc = config.accuracy
    pop = config.population
    bundle = ReportBundle(
        population=pop, alpha=config.alpha, methods=methods,
        fixed_accuracy={"sensitivity": acc.sensitivity, "specificity": acc.specificity},
        config=config.to_dict())
    obs = config.observations()
    for entry, s in zip(config.surveys, obs):
        bundle.surveys.append(SurveyResult(entry.name, entry.collection_end, entry.n_samples,
                                           entry.x_positive, entry.confirmed_cumulative,
                                           s.confirmed_fraction))

    for row, s in zip(bundle.surveys, obs):
        if "mle" in methods:
            try:
                est = freq.mle(s, acc).value
                row.results["mle"] = MethodResult("mle", OK, **_scaled(
                    pop, estimate=est, note=f"clip_threshold={freq.mle_clip_threshold(s, acc)!r}"))
            except NonIdentifiable as exc:
                row.results["mle"] = MethodResult("mle", ERROR, note=str(exc))
                _annotate(bundle, f"{row.name}: {exc}")
        if "rao" in methods:
            ci = freq.rao_confidence_set(s, acc, config.alpha)
            if ci.is_empty:
                row.results["rao"] = MethodResult("rao", EMPTY, note="empty confidence set")
            else:
                row.results["rao"] = MethodResult("rao", OK, **_scaled(
                    pop, lower=ci.lower, upper=ci.upper))
        if "cp" in methods:
            ci = freq.clopper_pearson(s, config.alpha)
            row.results["cp"] = MethodResult("cp", OK, **_scaled(
                pop, estimate=s.observed_fraction, lower=ci.lower, upper=ci.upper))

    if "bayes" in methods:
        model = config.joint_model()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NonConvergenceWarning)
            samples, diag = sample(model, config.mcmc, n_jobs=n_jobs)
        summary = summarize(samples, pop)
        bundle.diagnostics = diag.as_dict()
        if not diag.converged:
            _annotate(bundle, "NonConvergence: split-Rhat >= 1.01 for at least one parameter")
        ratios = detection_ratio(summary, [max(1, r.confirmed_cumulative) for r in bundle.surveys])
        for row, name, ratio in zip(bundle.surveys, summary.theta_names, ratios):
            st = summary[name]
            row.results["bayes"] = MethodResult("bayes", OK, **_scaled(
                pop, estimate=st.mean, lower=st.q025, upper=st.q975, note=f"sd={st.sd!r}"))
            row.detection_ratio = float(ratio) if row.confirmed_cumulative >= 1 else None
        bundle.accuracy_posterior = {
            n: asdict(summary[n]) for n in ("sensitivity", "specificity")}
    return bundle


def _annotate(bundle: ReportBundle, text: str):
    if text not in bundle.annotations:
        bundle.annotations.append(text)


# -- serialization -----------------------------------------------------------

CSV_COLUMNS = ["survey", "collection_end"] + [f.name for f in fields(MethodResult)]


def to_json(bundle: ReportBundle) -> str:
    return json.dumps(bundle.to_dict(), indent=2, sort_keys=True) + "\n"


def from_json(text: str) -> ReportBundle:
    return ReportBundle.from_dict(json.loads(text))


def to_csv(bundle: ReportBundle) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in bundle.surveys:
        for m in bundle.methods:
            r = row.results.get(m)
            if r is None:
                continue
            vals = [getattr(r, c) for c in CSV_COLUMNS[2:]]
            w.writerow([row.name, row.collection_end] + ["" if v is None else repr(v)
                                                         if isinstance(v, float) else v
                                                         for v in vals])
    return buf.getvalue()


def _persons(v) -> str:
    return "-" if v is None else f"{v:,.1f}"


def _interval(r: MethodResult) -> str:
    if r.status == EMPTY:
        return "empty"
    if r.status == ERROR:
        return "n/a"
    if r.lower is None:
        return "-"
    return f"[{_persons(r.lower_persons)}, {_persons(r.upper_persons)}]"


def to_text(bundle: ReportBundle) -> str:
    acc = bundle.fixed_accuracy
    lines = [
        f"population: {bundle.population:,}   alpha: {bundle.alpha}",
        f"fixed accuracy: sensitivity={acc['sensitivity']:.6f} specificity={acc['specificity']:.6f}",
        f"methods: {', '.join(bundle.methods) or '(none)'}",
        "",
    ]
    labels = {"mle": "MLE", "rao": "Rao score CI", "cp": "Clopper-Pearson",
              "bayes": "Bayesian posterior"}
    for row in bundle.surveys:
        lines.append(f"{row.name} (ends {row.collection_end}): X={row.x_positive} of "
                     f"N={row.n_samples}, confirmed={row.confirmed_cumulative:,}")
        for m in bundle.methods:
            r = row.results.get(m)
            if r is None:
                continue
            est = "" if r.estimate is None else (
                f"estimate {r.estimate:.6g} ({_persons(r.estimate_persons)} persons)  ")
            if r.status == ERROR:
                est = r.note + "  "
            lines.append(f"  {labels[m]:<20}{est}interval {_interval(r)}")
        if row.detection_ratio is not None:
            lines.append(f"  {'detection ratio':<20}{row.detection_ratio:.2f}")
        lines.append("")
    if bundle.diagnostics:
        d = bundle.diagnostics
        lines.append("diagnostics:")
        for name, rh in d["rhat"].items():
            lines.append(f"  {name:<12} rhat {rh:.4f}  ess_bulk {d['ess_bulk'][name]:.0f}")
        lines.append("  accept rate per chain: "
                     + ", ".join(f"{a:.3f}" for a in d["accept_rate"]))
    for note in bundle.annotations:
        lines.append(f"warning: {note}")
    return "\n".join(lines).rstrip() + "\n"


FORMATS = {"json": to_json, "csv": to_csv, "text": to_text}


def render(bundle: ReportBundle, fmt: str = "text") -> str:
    try:
        return FORMATS[fmt](bundle)
    except KeyError:
        raise ValueError(f"unknown format {fmt!r}") from None


def emit_report(bundle: ReportBundle, fmt: str = "text", path=None) -> str:
    """Serialize ``bundle``; writes to ``path`` if given and returns the text."""
    text = render(bundle, fmt)
    if path is not None:
        Path(path).write_text(text)
    return text


# -- figure ------------------------------------------------------------------

FIGURE_COLUMNS = ["series", "label", "date", "estimate", "lower", "upper"]


def figure_table(bundle: ReportBundle, timeline) -> list[dict]:
    """Plot rows in persons: Bayesian and accuracy-assumption intervals plus the confirmed line."""
    rows = []
    for series, method in (("bayesian", "bayes"), ("accuracy_assumption", "cp")):
        if method not in bundle.methods:
            continue
        for s in bundle.surveys:
            r = s.results[method]
            rows.append(dict(series=series, label=s.name, date=s.collection_end,
                             estimate=r.estimate_persons, lower=r.lower_persons,
                             upper=r.upper_persons))
    for date, count in timeline:
        rows.append(dict(series="confirmed", label="", date=date, estimate=float(count),
                         lower=None, upper=None))
    return rows


def emit_figure(bundle: ReportBundle, timeline, fmt: str = "svg", path=None) -> str:
    """Write the comparison figure as SVG, or its underlying plot table as CSV."""
    if not any(m in bundle.methods for m in ("bayes", "cp")):
        raise ValueError("figure needs the bayes or cp method in the bundle")
    rows = figure_table(bundle, timeline)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, FIGURE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v)
                        for k, v in r.items()})
        text = buf.getvalue()
    elif fmt == "svg":
        text = _render_svg(rows)
    else:
        raise ValueError(f"unknown figure format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def _render_svg(rows) -> str:
    import datetime as dt

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    styles = {"bayesian": ("Bayesian method", "tab:blue", -1.5),
              "accuracy_assumption": ("Accuracy assumption", "tab:orange", 1.5)}
    with matplotlib.rc_context({"svg.hashsalt": "seroprev", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(9, 5.5))
        for series, (label, color, shift) in styles.items():
            pts = [r for r in rows if r["series"] == series]
            if not pts:
                continue
            x = [dt.date.fromisoformat(r["date"]) + dt.timedelta(days=shift) for r in pts]
            y = [r["estimate"] for r in pts]
            err = [[r["estimate"] - r["lower"] for r in pts], [r["upper"] - r["estimate"] for r in pts]]
            ax.errorbar(x, y, yerr=err, fmt="o", color=color, capsize=4, label=label)
        line = [r for r in rows if r["series"] == "confirmed"]
        if line:
            ax.plot([dt.date.fromisoformat(r["date"]) for r in line],
                    [r["estimate"] for r in line], "-", color="black", label="Confirmed")
        ax.set_ylabel("persons")
        ax.legend(loc="upper left")
        fig.autofmt_xdate()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()
