"""Baselines and the causal-query metric harness.

Predictors are callables ``(sample, spec) -> float`` where ``spec`` may
differ from the sample's stored intervention (the shuffled-target control
exploits this).  Effects are measured against the paired observational value
at the query cell, which the corpus stores alongside every interventional
series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ctpr.analysis import QUERY_CLASSES, classify_query
from ctpr.dataset import CorpusReader, PairedSample, regenerate_world, simulate_pair
from ctpr.errors import FormatError, InputError
from ctpr.prior import PriorConfig
from ctpr.scm_core import InterventionSpec, QueryTuple, Series
from ctpr.simulate import DEFAULT_CLIP_BOUND

ZERO_EFFECT_TOL = 1e-9

Predictor = Callable[[PairedSample, InterventionSpec], float]


# -- VAR-OLS baseline ---------------------------------------------------------


@dataclass(frozen=True)
class VarModel:
    """Vector autoregression with per-equation least-squares coefficients."""

    lag: int
    coefs: np.ndarray  # (K, N, N); coefs[k, j, i] multiplies x_{t-1-k}[j] in eq. i
    intercept: np.ndarray  # (N,)


def fit_var_ols(series: Series, lag: int) -> VarModel:
    """Least-squares fit of x_t on [1, x_{t-1}, ..., x_{t-lag}].

    Data are centred before the solve, so rank-deficient designs get the
    minimum-norm coefficient solution, with the intercept absorbing the means
    (a constant series yields zero coefficients and intercept equal to the
    constant).
    """
    if lag < 1:
        raise InputError(f"lag must be >= 1, got {lag}")
    x = np.asarray(series.values, dtype=np.float64)
    T, n = x.shape
    rows = T - lag
    if rows < 2:
        raise InputError(f"series of length {T} too short for lag {lag}")
    if not np.isfinite(x).all():
        raise InputError("series contains NaN/Inf")
    design = np.empty((rows, lag * n))
    for k in range(1, lag + 1):
        design[:, (k - 1) * n:k * n] = x[lag - k:T - k]
    target = x[lag:]
    dmean = design.mean(axis=0)
    tmean = target.mean(axis=0)
    beta, *_ = np.linalg.lstsq(design - dmean, target - tmean, rcond=None)
    intercept = tmean - dmean @ beta
    coefs = beta.reshape(lag, n, n)
    return VarModel(lag=lag, coefs=coefs, intercept=intercept)


def _spec_magnitude(spec: InterventionSpec) -> float:
    if spec.kind == "hard":
        return abs(spec.value)
    if spec.kind == "time_varying":
        return max(abs(c) for c in spec.profile.trajectory)
    return max(abs(d) for d in spec.shift)


def _rollout_var(
    model: VarModel,
    observed: np.ndarray,
    spec: InterventionSpec,
    until: int,
    clip_bound: float,
) -> np.ndarray:
    """Conditional-mean rollout from the pre-intervention observations through
    time ``until``, clamping or shifting intervened cells per the spec.

    Unregularized least-squares fits are frequently explosive on short, heavy
    tailed series, so the rollout is kept inside a per-variable plausibility
    box: the observed range, widened to the intervention magnitude (do() may
    push variables to the intervened scale) and capped at the simulation
    domain ±clip_bound.  Spec-clamped cells are written verbatim.
    """
    t_start = spec.times[0]
    n = observed.shape[1]
    m = _spec_magnitude(spec)
    lo = np.maximum(np.minimum(observed.min(axis=0), -m), -clip_bound)
    hi = np.minimum(np.maximum(observed.max(axis=0), m), clip_bound)
    values = np.empty((until + 1, n))
    values[:t_start] = observed[:t_start]
    clamp: dict[tuple[int, int], float] = {}
    shift: dict[tuple[int, int], float] = {}
    if spec.kind == "hard":
        for i in spec.targets:
            for t in spec.times:
                clamp[(t, i)] = spec.value
    elif spec.kind == "time_varying":
        for i in spec.targets:
            for t, c in zip(spec.times, spec.profile.trajectory):
                clamp[(t, i)] = c
    else:
        for i, d in zip(spec.targets, spec.shift):
            for t in spec.times:
                shift[(t, i)] = d
    for t in range(t_start, until + 1):
        pred = model.intercept.copy()
        for k in range(1, model.lag + 1):
            if t - k >= 0:
                pred += values[t - k] @ model.coefs[k - 1]
        pred = np.minimum(np.maximum(pred, lo), hi)
        for i in range(n):
            if (t, i) in clamp:
                pred[i] = clamp[(t, i)]
            elif (t, i) in shift:
                pred[i] = min(max(pred[i] + shift[(t, i)], lo[i]), hi[i])
        values[t] = pred
    return values


def predict_var(
    model: VarModel,
    context: Series,
    spec: InterventionSpec,
    query: QueryTuple,
    clip_bound: float = DEFAULT_CLIP_BOUND,
) -> float:
    """Roll the fitted VAR from the pre-intervention observations to the query
    time, clamping intervened cells, and read off the query cell."""
    t_start = spec.times[0]
    if query.query_time < t_start:
        raise InputError(
            f"query time {query.query_time} precedes intervention start {t_start}"
        )
    observed = np.asarray(context.values, dtype=np.float64)
    values = _rollout_var(model, observed, spec, query.query_time, clip_bound)
    return float(values[query.query_time, query.query_var])


def predict_mean(context: Series, query: QueryTuple) -> float:
    """Observational mean of the query variable."""
    return float(np.asarray(context.values[:, query.query_var], dtype=np.float64).mean())


# -- stock predictors ---------------------------------------------------------


def var_predictor(sample: PairedSample, spec: InterventionSpec) -> float:
    model = fit_var_ols(sample.obs, max(sample.tscm.max_lag, 1))
    return predict_var(model, sample.obs, spec, sample.query)


def mean_predictor(sample: PairedSample, spec: InterventionSpec) -> float:
    return predict_mean(sample.obs, sample.query)


def oracle_predictor(sample: PairedSample, spec: InterventionSpec) -> float:
    """Ground-truth lookup; ignores ``spec``, so it is exact only for the
    sample's own intervention."""
    return sample.query.target_value


def resimulation_predictor(cfg: PriorConfig) -> Predictor:
    """Spec-sensitive oracle: regenerate the world from the stored seed and
    re-simulate under the *given* spec.  Exact for the true spec; degrades
    under shuffled targets, unlike :func:`oracle_predictor`."""

    def predict(sample: PairedSample, spec: InterventionSpec) -> float:
        tscm, _, regime_path, obs_noise, int_noise = regenerate_world(cfg, sample.sample_seed)
        _, intr = simulate_pair(cfg, tscm, spec, regime_path, obs_noise, int_noise)
        return float(intr.values[sample.query.query_time, sample.query.query_var])

    return predict


# -- metrics ------------------------------------------------------------------


@dataclass
class ClassMetrics:
    count: int = 0
    rmse: float = float("nan")
    mae: float = float("nan")
    nmse: float = float("nan")
    mean_pred: float = float("nan")
    mean_gt: float = float("nan")
    mean_abs_pred: float = float("nan")
    mean_abs_gt: float = float("nan")
    pred_gt_ratio: float = float("nan")
    dir_accuracy: float = float("nan")
    effect_corr: float = float("nan")


@dataclass
class EvalReport:
    """Per-query-class and overall metrics.

    ``pred_gt_ratio`` divides the mean absolute prediction by the mean
    absolute ground truth; the raw (signed) means are reported alongside
    since values centre near zero.  NMSE normalizes by the ground-truth
    variance (ddof=0), so the constant GT-mean predictor scores exactly 1.
    """

    per_class: dict = field(default_factory=dict)
    overall: ClassMetrics = field(default_factory=ClassMetrics)
    mean_nll: Optional[float] = None
    skipped: int = 0

    LEGEND = (
        "pred/gt = mean|pred| / mean|gt| (signed means also shown); "
        "nmse = mse / var(gt); dir acc counts sign agreement of effects "
        "vs the paired observational baseline"
    )

    def render_table(self) -> str:
        cols = ["queries", "rmse", "mae", "nmse", "mean_pred", "mean_gt",
                "pred/gt", "dir_acc", "eff_corr"]
        widths = [9] + [10] * (len(cols) - 1)
        head = f"{'query type':<14}" + "".join(f"{c:>{w}}" for c, w in zip(cols, widths))
        lines = [head, "-" * len(head)]
        for name in (*QUERY_CLASSES, "overall"):
            m = self.overall if name == "overall" else self.per_class.get(name, ClassMetrics())
            cells = [m.count, m.rmse, m.mae, m.nmse, m.mean_pred, m.mean_gt,
                     m.pred_gt_ratio, m.dir_accuracy, m.effect_corr]
            row = f"{name:<14}"
            for c, w in zip(cells, widths):
                row += f"{c:>{w}}" if isinstance(c, int) else f"{c:>{w}.4g}"
            lines.append(row)
        if self.mean_nll is not None:
            lines.append(f"mean gaussian nll: {self.mean_nll:.6g}")
        if self.skipped:
            lines.append(f"skipped records: {self.skipped}")
        lines.append(self.LEGEND)
        return "\n".join(lines)

    def to_json(self) -> str:
        import json

        obj = {
            "per_class": {k: vars(v) for k, v in self.per_class.items()},
            "overall": vars(self.overall),
            "mean_nll": self.mean_nll,
            "skipped": self.skipped,
        }
        return json.dumps(obj, sort_keys=True)


def _direction_agreement(pred_eff: float, true_eff: float) -> bool:
    p0 = abs(pred_eff) < ZERO_EFFECT_TOL
    t0 = abs(true_eff) < ZERO_EFFECT_TOL
    if p0 or t0:
        return p0 and t0
    return (pred_eff > 0) == (true_eff > 0)


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    # degenerate variance: 1.0 iff the vectors are effectively identical
    if len(a) < 2 or a.std() == 0.0 or b.std() == 0.0:
        return 1.0 if np.allclose(a, b, atol=1e-12, rtol=0.0) else 0.0
    if np.array_equal(a, b):
        return 1.0
    return float(np.clip(np.corrcoef(a, b)[0, 1], -1.0, 1.0))


def _metrics(preds, gts, baselines) -> ClassMetrics:
    preds = np.asarray(preds, dtype=np.float64)
    gts = np.asarray(gts, dtype=np.float64)
    baselines = np.asarray(baselines, dtype=np.float64)
    m = ClassMetrics(count=len(preds))
    if len(preds) == 0:
        return m
    # canonical ordering makes every reduction bit-identical under record
    # permutation (float addition is not associative)
    order = np.lexsort((baselines, preds, gts))
    preds, gts, baselines = preds[order], gts[order], baselines[order]
    err = preds - gts
    mse = float((err * err).mean())
    m.rmse = math.sqrt(mse)
    m.mae = float(np.abs(err).mean())
    gt_var = float(gts.var())
    if gt_var > 0:
        m.nmse = mse / gt_var
    else:
        m.nmse = 0.0 if mse == 0.0 else math.inf
    m.mean_pred = float(preds.mean())
    m.mean_gt = float(gts.mean())
    m.mean_abs_pred = float(np.abs(preds).mean())
    m.mean_abs_gt = float(np.abs(gts).mean())
    m.pred_gt_ratio = m.mean_abs_pred / m.mean_abs_gt if m.mean_abs_gt > 0 else math.inf
    pred_eff = preds - baselines
    true_eff = gts - baselines
    agree = [_direction_agreement(p, t) for p, t in zip(pred_eff, true_eff)]
    m.dir_accuracy = float(np.mean(agree))
    m.effect_corr = _pearson(pred_eff, true_eff)
    return m


def evaluate(
    samples: Sequence[PairedSample] | CorpusReader,
    predictions: Sequence[float],
    stds: Optional[Sequence[float]] = None,
) -> EvalReport:
    """Score one prediction per record with the three-way class breakdown.

    When ``stds`` is given, also reports the mean Gaussian negative
    log-likelihood of the targets under N(prediction, std^2).
    """
    n = len(samples)
    if len(predictions) != n:
        raise InputError(f"{len(predictions)} predictions for {n} records")
    if stds is not None and len(stds) != n:
        raise InputError(f"{len(stds)} stds for {n} records")
    by_class = {c: ([], [], []) for c in QUERY_CLASSES}
    all_p, all_g, all_b = [], [], []
    nll_terms = []
    for i in range(n):
        sample = samples[i] if not isinstance(samples, CorpusReader) else samples.read(i)
        q = sample.query
        cls = classify_query(sample.tscm, sample.intervention, q,
                             regime_path=sample.obs.regime_path)
        pred = float(predictions[i])
        gt = q.target_value
        base = float(sample.obs.values[q.query_time, q.query_var])
        for bucket in (by_class[cls], (all_p, all_g, all_b)):
            bucket[0].append(pred)
            bucket[1].append(gt)
            bucket[2].append(base)
        if stds is not None:
            s = max(float(stds[i]), 1e-12)
            nll_terms.append(0.5 * math.log(2.0 * math.pi * s * s) + (gt - pred) ** 2 / (2.0 * s * s))
    report = EvalReport()
    for cls, (p, g, b) in by_class.items():
        report.per_class[cls] = _metrics(p, g, b)
    report.overall = _metrics(all_p, all_g, all_b)
    if stds is not None:
        report.mean_nll = float(np.sort(nll_terms).sum() / n)
    return report


def run_predictor(
    samples: Sequence[PairedSample] | CorpusReader,
    predictor: Predictor,
    specs: Optional[Sequence[InterventionSpec]] = None,
) -> list[float]:
    out = []
    for i in range(len(samples)):
        sample = samples[i] if not isinstance(samples, CorpusReader) else samples.read(i)
        spec = sample.intervention if specs is None else specs[i]
        out.append(predictor(sample, spec))
    return out


def shuffle_spec(spec: InterventionSpec, n_vars: int, rng: np.random.Generator) -> Optional[InterventionSpec]:
    """Replace every target with a uniformly random *other* variable (times and
    values kept).  Returns None when no other variable exists."""
    if n_vars <= len(spec.targets):
        return None
    new_targets = []
    for t in spec.targets:
        candidates = [v for v in range(n_vars) if v != t and v not in new_targets]
        if not candidates:
            return None
        new_targets.append(int(candidates[int(rng.integers(0, len(candidates)))]))
    new_targets.sort()
    shift = spec.shift
    return InterventionSpec(targets=tuple(new_targets), times=spec.times, kind=spec.kind,
                            value=spec.value, shift=shift, profile=spec.profile)


def shuffled_control(
    samples: Sequence[PairedSample] | CorpusReader,
    predictor: Predictor,
    rng: np.random.Generator,
) -> tuple[EvalReport, EvalReport]:
    """Evaluate the predictor twice: on the true specs and on specs whose
    targets were randomly reassigned.  Records where no alternative target
    exists are skipped (and counted on both reports)."""
    kept: list[PairedSample] = []
    shuffled_specs: list[InterventionSpec] = []
    skipped = 0
    for i in range(len(samples)):
        sample = samples[i] if not isinstance(samples, CorpusReader) else samples.read(i)
        alt = shuffle_spec(sample.intervention, sample.tscm.n_vars, rng)
        if alt is None:
            skipped += 1
            continue
        kept.append(sample)
        shuffled_specs.append(alt)
    normal = evaluate(kept, run_predictor(kept, predictor))
    shuffled = evaluate(kept, run_predictor(kept, predictor, specs=shuffled_specs))
    normal.skipped = shuffled.skipped = skipped
    return normal, shuffled


# -- predictions files ---------------------------------------------------------


def parse_predictions_file(path, n_records: int) -> tuple[list[float], list[float]]:
    """Read `index,mean,std` lines; every index in [0, n) exactly once."""
    means = [None] * n_records
    stds = [None] * n_records
    duplicates = []
    with open(path) as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 3:
                raise FormatError(f"line {ln}: expected 'index,mean,std', got {raw!r}")
            try:
                idx = int(parts[0])
                mean = float(parts[1])
                std = float(parts[2])
            except ValueError as exc:
                raise FormatError(f"line {ln}: unparseable numbers in {raw!r}") from exc
            if not 0 <= idx < n_records:
                raise FormatError(f"line {ln}: index {idx} out of range [0, {n_records})")
            if means[idx] is not None:
                duplicates.append(idx)
            means[idx] = mean
            stds[idx] = std
    missing = [i for i, m in enumerate(means) if m is None]
    if missing or duplicates:
        parts = []
        if missing:
            parts.append(f"missing indices {missing[:20]}")
        if duplicates:
            parts.append(f"duplicate indices {sorted(set(duplicates))[:20]}")
        raise FormatError("bad predictions file: " + "; ".join(parts))
    return means, stds


def score_predictions_file(corpus: CorpusReader, path) -> EvalReport:
    """Evaluate an externally produced `index,mean,std` file against a corpus."""
    means, stds = parse_predictions_file(path, len(corpus))
    return evaluate(corpus, means, stds=stds)


def write_predictions_file(path, means: Sequence[float], stds: Sequence[float]) -> None:
    with open(path, "w") as fh:
        for i, (m, s) in enumerate(zip(means, stds)):
            fh.write(f"{i},{m!r},{s!r}\n")
