"""Benchmark protocol: splits, runs, query loops, beta selection,
accuracy curves, paired t-tests, win/tie/loss tables, and renderers.

Every run r of an experiment draws a 60/40-style split with seed+r,
seeds the pool with one labeled sample per class, and then lets each
strategy query independently from that identical starting point. After
every query the classifier is retrained on the labeled pool and scored
on the held-out test split — never on pool data. All randomness flows
from named, derived streams, so a (config, seed) pair determines every
output byte; wall-clock timings stay in memory and are never written
into result files.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import stats
from .data import (
    Dataset,
    PoolState,
    commit_query,
    init_pool,
    minmax_rescale,
    parse_csv,
    parse_sparse,
    split_train_test,
)
from .errors import DataFormatError, UsageError
from .optimizer import (
    QueryParams,
    proposed_query,
    select_margin,
    select_random,
    strategy_stream_seed,
)
from .svm import KernelParams, predict, predict_proba, train

KNOWN_STRATEGIES = ("proposed", "random", "margin")
DEFAULT_BETA_CANDIDATES = (1.0, 2.0, 10.0, 100.0, 1000.0)
_SPLIT_RETRIES = 20
_PILOT_QUERIES = 5
_PILOT_FOLDS = 5


@dataclass(frozen=True)
class ExperimentConfig:
    strategies: tuple[str, ...] = KNOWN_STRATEGIES
    runs: int = 10
    train_fraction: float = 0.6
    max_queries: int = 100
    beta: float | None = None  # None selects beta per run by the pilot sweep
    beta_candidates: tuple[float, ...] = DEFAULT_BETA_CANDIDATES
    prob_gamma: float = 1.0
    svm_c: float = 100.0
    svm_gamma: float | None = None
    seed: int = 0
    normalize: bool = False
    negated_position_exponent: bool = False

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise UsageError(f"runs must be >= 1, got {self.runs}")
        if not 0.0 < self.train_fraction < 1.0:
            raise UsageError(f"train fraction must be in (0, 1), got {self.train_fraction}")
        if self.max_queries < 0:
            raise UsageError(f"max queries must be >= 0, got {self.max_queries}")
        if not self.strategies:
            raise UsageError("at least one strategy is required")
        unknown = [s for s in self.strategies if s not in KNOWN_STRATEGIES]
        if unknown:
            raise UsageError(
                f"unknown strategies {unknown}; known: {list(KNOWN_STRATEGIES)}"
            )
        if len(set(self.strategies)) != len(self.strategies):
            raise UsageError("duplicate strategy names")
        if self.beta is not None and self.beta < 0:
            raise UsageError(f"beta must be >= 0, got {self.beta}")

    def kernel_params(self) -> KernelParams:
        return KernelParams(c_reg=self.svm_c, kernel_gamma=self.svm_gamma)


@dataclass(frozen=True)
class RunResult:
    strategy: str
    run: int
    accuracy_curve: tuple[float, ...]
    queried_indices: tuple[int, ...]  # dataset-level indices, query order
    chosen_beta: float | None = None
    rounding_agreement: float | None = None
    wall_times: tuple[float, ...] = ()  # in-memory diagnostics only


@dataclass(frozen=True)
class WtlSummary:
    reference: str
    checkpoints: tuple[int, ...]
    pairs: dict[str, tuple[int, int, int]]  # competitor -> (win, tie, loss)


def load_dataset(content: str, fmt: str, label_column: int = 0, name: str = "") -> Dataset:
    if fmt == "sparse":
        return parse_sparse(content, name=name)
    if fmt == "csv":
        return parse_csv(content, label_column=label_column, name=name)
    raise UsageError(f"unknown dataset format {fmt!r} (expected 'sparse' or 'csv')")


def _accuracy(model, features: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(predict(model, features) == labels))


def _split_with_all_classes(
    dataset: Dataset, fraction: float, base_seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Split so that every class appears in the training side, retrying
    with derived seeds a bounded number of times."""
    for attempt in range(_SPLIT_RETRIES):
        seed = base_seed if attempt == 0 else [base_seed, attempt]
        train_idx, test_idx = split_train_test(dataset.n_samples, fraction, seed)
        if np.unique(dataset.labels[train_idx]).size == dataset.class_count:
            return train_idx, test_idx
    raise DataFormatError(
        f"could not draw a training split containing all {dataset.class_count} classes "
        f"after {_SPLIT_RETRIES} attempts"
    )


def _cv_score(
    features: np.ndarray,
    labels: np.ndarray,
    params: KernelParams,
    rng: np.random.Generator,
) -> float:
    """K-fold CV accuracy on a (small) labeled set; folds whose training
    part holds fewer than two classes are skipped."""
    n = labels.size
    order = rng.permutation(n)
    folds = np.array_split(order, _PILOT_FOLDS)
    scores = []
    for fold in folds:
        if fold.size == 0:
            continue
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        if np.unique(labels[mask]).size < 2:
            continue
        model = train(features[mask], labels[mask], params)
        scores.append(_accuracy(model, features[fold], labels[fold]))
    return float(np.mean(scores)) if scores else -np.inf


def _pilot_beta(
    train_features: np.ndarray,
    train_labels: np.ndarray,
    config: ExperimentConfig,
    run: int,
) -> float:
    """Pick beta for one run: spend a few pilot queries per candidate on a
    seed-isolated pool, then score the resulting labeled set by k-fold CV.

    Ties keep the earliest candidate in the list.
    """
    pilot_seed = strategy_stream_seed(config.seed, run, "beta-pilot")
    pool0 = init_pool(train_labels, pilot_seed)
    params = config.kernel_params()
    best_beta = config.beta_candidates[0]
    best_score = -np.inf
    for beta in config.beta_candidates:
        pool = pool0
        for _ in range(_PILOT_QUERIES):
            if not pool.unlabeled:
                break
            labeled = list(pool.labeled)
            model = train(train_features[labeled], np.array(pool.labels), params)
            probs_all = predict_proba(model, train_features)
            picked = proposed_query(
                model,
                pool,
                probs_all,
                QueryParams(
                    beta=beta,
                    prob_gamma=config.prob_gamma,
                    negated_position_exponent=config.negated_position_exponent,
                ),
            )
            pool = commit_query(pool, picked.pool_index, int(train_labels[picked.pool_index]))
        labeled = list(pool.labeled)
        score = _cv_score(
            train_features[labeled],
            np.array(pool.labels),
            params,
            np.random.default_rng([pilot_seed, int(beta * 1000)]),
        )
        if score > best_score:
            best_score = score
            best_beta = beta
    return float(best_beta)


def _run_strategy(
    strategy: str,
    train_features: np.ndarray,
    train_labels: np.ndarray,
    test_features: np.ndarray,
    test_labels: np.ndarray,
    train_idx: np.ndarray,
    pool0: PoolState,
    beta: float | None,
    config: ExperimentConfig,
    run: int,
) -> RunResult:
    params = config.kernel_params()
    stream_seed = strategy_stream_seed(config.seed, run, strategy)
    query_params = QueryParams(
        beta=beta if beta is not None else 1.0,
        prob_gamma=config.prob_gamma,
        negated_position_exponent=config.negated_position_exponent,
    )
    pool = pool0
    curve: list[float] = []
    queried: list[int] = []
    times: list[float] = []
    agreements: list[bool] = []
    while True:
        started = time.perf_counter()
        labeled = list(pool.labeled)
        model = train(train_features[labeled], np.array(pool.labels), params)
        curve.append(_accuracy(model, test_features, test_labels))
        if pool.iteration >= config.max_queries or not pool.unlabeled:
            times.append(time.perf_counter() - started)
            break
        if strategy == "random":
            index = select_random(pool, stream_seed)
        elif strategy == "margin":
            position = select_margin(model, train_features[list(pool.unlabeled)])
            index = int(pool.unlabeled[position])
        else:
            probs_all = predict_proba(model, train_features)
            picked = proposed_query(model, pool, probs_all, query_params)
            agreements.append(picked.rounding_agrees)
            index = picked.pool_index
        pool = commit_query(pool, index, int(train_labels[index]))
        queried.append(int(train_idx[index]))
        times.append(time.perf_counter() - started)
    return RunResult(
        strategy=strategy,
        run=run,
        accuracy_curve=tuple(curve),
        queried_indices=tuple(queried),
        chosen_beta=float(query_params.beta) if strategy == "proposed" else None,
        rounding_agreement=float(np.mean(agreements)) if agreements else None,
        wall_times=tuple(times),
    )


def run_experiment(dataset: Dataset, config: ExperimentConfig) -> list[RunResult]:
    """Execute the full protocol; results ordered by (strategy, run)."""
    features = minmax_rescale(dataset.features) if config.normalize else dataset.features
    results: list[RunResult] = []
    for run in range(config.runs):
        train_idx, test_idx = _split_with_all_classes(
            dataset, config.train_fraction, config.seed + run
        )
        train_features = features[train_idx]
        train_labels = dataset.labels[train_idx]
        test_features = features[test_idx]
        test_labels = dataset.labels[test_idx]
        pool0 = init_pool(train_labels, strategy_stream_seed(config.seed, run, "init"))
        beta = config.beta
        if beta is None and "proposed" in config.strategies:
            beta = _pilot_beta(train_features, train_labels, config, run)
        for strategy in config.strategies:
            results.append(
                _run_strategy(
                    strategy,
                    train_features,
                    train_labels,
                    test_features,
                    test_labels,
                    train_idx,
                    pool0,
                    beta,
                    config,
                    run,
                )
            )
    results.sort(key=lambda r: (config.strategies.index(r.strategy), r.run))
    return results


def paired_t_test(a, b, significance: float = 0.05) -> str:
    """'win' if a beats b at the given significance, 'loss' if b beats a,
    otherwise 'tie'. Zero-variance differences decide by the mean's sign."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise UsageError("paired test needs two equal-length vectors of size >= 2")
    t, p, mean = stats.paired_t_statistic(a, b)
    if p < significance and mean > 0:
        return "win"
    if p < significance and mean < 0:
        return "loss"
    return "tie"


def default_checkpoints(max_queries: int, first: int = 5) -> tuple[int, ...]:
    return tuple(range(min(first, max_queries), max_queries + 1))


def summarize_wtl(
    results: list[RunResult],
    checkpoints: tuple[int, ...] | None = None,
    reference: str = "proposed",
    significance: float = 0.05,
) -> WtlSummary:
    """Win/tie/loss counts of the reference strategy against every other,
    one paired t-test across runs at each checkpoint iteration."""
    by_strategy: dict[str, dict[int, tuple[float, ...]]] = {}
    for r in results:
        by_strategy.setdefault(r.strategy, {})[r.run] = r.accuracy_curve
    if reference not in by_strategy:
        raise UsageError(f"reference strategy {reference!r} has no results")
    if len(by_strategy) < 2:
        raise UsageError("win/tie/loss needs at least two strategies")
    ref_curves = by_strategy[reference]
    lengths = {len(c) for curves in by_strategy.values() for c in curves.values()}
    if len(lengths) != 1:
        raise UsageError("curves are misaligned across strategies or runs")
    curve_len = lengths.pop()
    if checkpoints is None:
        checkpoints = default_checkpoints(curve_len - 1)
    checkpoints = tuple(t for t in checkpoints if 0 <= t < curve_len)
    if not checkpoints:
        raise UsageError("no valid checkpoints inside the curve length")
    pairs: dict[str, tuple[int, int, int]] = {}
    for strategy in by_strategy:
        if strategy == reference:
            continue
        comp_curves = by_strategy[strategy]
        if set(comp_curves) != set(ref_curves):
            raise UsageError(f"run ids differ between {reference!r} and {strategy!r}")
        runs = sorted(ref_curves)
        win = tie = loss = 0
        for t in checkpoints:
            a = [ref_curves[r][t] for r in runs]
            b = [comp_curves[r][t] for r in runs]
            outcome = paired_t_test(a, b, significance)
            win += outcome == "win"
            tie += outcome == "tie"
            loss += outcome == "loss"
        pairs[strategy] = (win, tie, loss)
    return WtlSummary(reference=reference, checkpoints=checkpoints, pairs=pairs)


def mean_curve(results: list[RunResult], strategy: str) -> np.ndarray:
    curves = [r.accuracy_curve for r in results if r.strategy == strategy]
    if not curves:
        raise UsageError(f"no results for strategy {strategy!r}")
    if len({len(c) for c in curves}) != 1:
        raise UsageError("curves are misaligned")
    return np.mean(np.array(curves, dtype=float), axis=0)


def beta_sweep(
    dataset: Dataset, config: ExperimentConfig, betas: tuple[float, ...] | None = None
) -> list[tuple[float, np.ndarray]]:
    """Mean accuracy curve of the combined strategy for each beta, with
    splits and initial pools shared across beta values."""
    betas = betas if betas is not None else config.beta_candidates
    if not betas:
        raise UsageError("beta sweep needs at least one value")
    out = []
    for beta in betas:
        sweep_config = replace(config, beta=float(beta), strategies=("proposed",))
        results = run_experiment(dataset, sweep_config)
        out.append((float(beta), mean_curve(results, "proposed")))
    return out


# ---------------------------------------------------------------------------
# renderers: deterministic text documents (repr() floats round-trip exactly)


def render_curves_csv(results: list[RunResult]) -> str:
    lines = ["strategy,run,iteration,accuracy"]
    for r in results:
        for t, acc in enumerate(r.accuracy_curve):
            lines.append(f"{r.strategy},{r.run},{t},{acc!r}")
    return "\n".join(lines) + "\n"


def parse_curves_csv(text: str) -> list[RunResult]:
    """Rebuild per-run curves from a stored curves document (queried
    indices and timings are not persisted there)."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0].strip() != "strategy,run,iteration,accuracy":
        raise DataFormatError("expected a curves CSV with header strategy,run,iteration,accuracy")
    acc: dict[tuple[str, int], dict[int, float]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 4:
            raise DataFormatError("expected 4 columns", line=lineno)
        try:
            strategy, run, iteration, accuracy = (
                cells[0],
                int(cells[1]),
                int(cells[2]),
                float(cells[3]),
            )
        except ValueError:
            raise DataFormatError(f"bad row {line!r}", line=lineno) from None
        acc.setdefault((strategy, run), {})[iteration] = accuracy
    results = []
    for (strategy, run), points in sorted(acc.items()):
        iterations = sorted(points)
        if iterations != list(range(len(iterations))):
            raise DataFormatError(f"curve for {strategy}/run {run} has gaps")
        results.append(
            RunResult(
                strategy=strategy,
                run=run,
                accuracy_curve=tuple(points[t] for t in iterations),
                queried_indices=(),
            )
        )
    return results


def render_summary(
    dataset: Dataset,
    config: ExperimentConfig,
    results: list[RunResult],
    wtl: WtlSummary | None,
) -> str:
    lines = [
        f"dataset={dataset.name or 'unnamed'}",
        f"samples={dataset.n_samples}",
        f"features={dataset.n_features}",
        f"classes={dataset.class_count}",
        f"strategies={','.join(config.strategies)}",
        f"runs={config.runs}",
        f"train_fraction={config.train_fraction!r}",
        f"max_queries={config.max_queries}",
        f"seed={config.seed}",
        f"normalize={str(config.normalize).lower()}",
        f"beta_mode={'fixed' if config.beta is not None else 'pilot'}",
        f"prob_gamma={config.prob_gamma!r}",
        f"svm_c={config.svm_c!r}",
        f"svm_gamma={'auto' if config.svm_gamma is None else repr(config.svm_gamma)}",
    ]
    if config.beta is not None:
        lines.append(f"beta={config.beta!r}")
    for r in results:
        if r.strategy == "proposed" and r.chosen_beta is not None:
            lines.append(f"beta.run{r.run}={r.chosen_beta!r}")
    initial = [r.accuracy_curve[0] for r in results]
    if initial:
        lines.append(f"initial_accuracy_mean={float(np.mean(initial))!r}")
    for strategy in config.strategies:
        curves = [r.accuracy_curve for r in results if r.strategy == strategy]
        if not curves:
            continue
        finals = [c[-1] for c in curves]
        means = np.mean(np.array(curves, dtype=float), axis=0)
        lines.append(f"final_accuracy_mean.{strategy}={float(np.mean(finals))!r}")
        lines.append(f"curve_mean_accuracy.{strategy}={float(np.mean(means))!r}")
    agreements = [
        r.rounding_agreement for r in results if r.rounding_agreement is not None
    ]
    if agreements:
        lines.append(f"rounding_agreement={float(np.mean(agreements))!r}")
    if wtl is not None:
        lines.append(
            "checkpoints="
            + (
                f"{wtl.checkpoints[0]}..{wtl.checkpoints[-1]}"
                if len(wtl.checkpoints) > 1
                else str(wtl.checkpoints[0])
            )
        )
        for strategy, (w, t, l) in sorted(wtl.pairs.items()):
            lines.append(f"wtl.{wtl.reference}_vs_{strategy}={w}/{t}/{l}")
    return "\n".join(lines) + "\n"


def render_wtl_tsv(rows: list[tuple[str, WtlSummary]]) -> str:
    """One row per dataset, one `vs_<strategy>` column per competitor."""
    if not rows:
        return "dataset\n"
    competitors: list[str] = []
    for _, summary in rows:
        for strategy in sorted(summary.pairs):
            if strategy not in competitors:
                competitors.append(strategy)
    lines = ["dataset\t" + "\t".join(f"vs_{c}" for c in competitors)]
    for name, summary in rows:
        cells = []
        for c in competitors:
            if c in summary.pairs:
                w, t, l = summary.pairs[c]
                cells.append(f"{w}/{t}/{l}")
            else:
                cells.append("-")
        lines.append(name + "\t" + "\t".join(cells))
    return "\n".join(lines) + "\n"


def render_sweep_csv(sweep: list[tuple[float, np.ndarray]]) -> str:
    lines = ["beta,iteration,mean_accuracy"]
    for beta, curve in sweep:
        for t, acc in enumerate(curve):
            lines.append(f"{beta!r},{t},{float(acc)!r}")
    return "\n".join(lines) + "\n"
