"""Exogenous-variable search.

In a linear acyclic model with independent non-Gaussian external influences,
a variable that is a weighted sum of several influences looks closer to
Gaussian than its sources. The search exploits that: repeatedly take the
most non-Gaussian surviving variable as an exogenous candidate, then drop
every surviving variable whose correlation with any candidate so far is
significant under a Benjamini-Hochberg controlled batch of tests. Correlated
variables are downstream of a candidate or share an ancestor with one, so
they cannot be exogenous themselves.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats as scipy_stats
from sklearn.base import BaseEstimator, clone
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._rng import as_seed_sequence, child
from .exceptions import ConstantColumnWarning, DegenerateSeries, TooFewObservations
from .nongauss import G_FUNCTIONS, NonGaussianityScore, nongaussianity, standardize
from .stats import bh_fdr, correlation_pvalues_from_dots


@dataclass(frozen=True)
class IterationTrace:
    """What happened in one round of the search.

    Attributes
    ----------
    iteration : int
        1-based round number.
    selected : int
        Column index chosen as a candidate this round.
    selected_score : NonGaussianityScore
        Its non-Gaussianity score.
    surviving_before : tuple of int
        Columns still in play at the start of the round, ascending.
    removed_by_correlation : tuple of int
        Columns dropped this round, ascending.
    tests_run, tests_rejected : int
        Size of the correlation test batch and how many rejected.
    rejected_pairs : tuple of (int, int)
        (survivor, candidate) pairs whose test rejected.
    """

    iteration: int
    selected: int
    selected_score: NonGaussianityScore
    surviving_before: tuple[int, ...]
    removed_by_correlation: tuple[int, ...]
    tests_run: int
    tests_rejected: int
    rejected_pairs: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class BootstrapReport:
    """Selection stability under resampling.

    counts[i] is the number of resamples in which column i was selected;
    proportions[i] = counts[i] / n_resamples. full_data_candidates is the
    selection on the unresampled data, which fixes the null selection rate
    len(full_data_candidates) / n_variables used by :func:`flag_significant`.
    """

    n_resamples: int
    counts: tuple[int, ...]
    proportions: tuple[float, ...]
    seed: int | None
    n_variables: int
    full_data_candidates: tuple[int, ...]
    constant_exclusion_rounds: int
    significance_level: float | None = None


class EggFinder(SelectorMixin, BaseEstimator):
    """Select exogenous-variable candidates from a data matrix.

    Parameters
    ----------
    fdr_level : float, default=0.05
        Target false discovery rate for each round's batch of correlation
        tests. The batch covers every (survivor, candidate) pair, candidates
        accumulated so far included, so the control is per round rather than
        per candidate.
    g_function : {"robust_exp", "kurtosis"}, default="robust_exp"
        Contrast function for the non-Gaussianity score. robust_exp is
        bounded and tolerant of outliers; kurtosis is classical but fragile.
    max_candidates : int or None, default=None
        Stop after this many candidates. None means run until no variable
        survives.
    on_constant : {"exclude", "raise"}, default="exclude"
        Constant columns cannot be standardized. "exclude" drops them with a
        ConstantColumnWarning before the search; "raise" treats them as an
        input error.

    Attributes
    ----------
    candidates_ : numpy.ndarray of int
        Selected column indices, in selection order.
    candidate_scores_ : numpy.ndarray of float
        Non-Gaussianity J values of the candidates, same order.
    iterations_ : tuple of IterationTrace
        One trace per selection round.
    excluded_constant_ : numpy.ndarray of int
        Constant columns dropped before the search.
    n_features_in_ : int

    Notes
    -----
    Scores and pairwise correlations are computed from columns standardized
    once up front; dropping rows never happens mid-search, so standardization
    is unaffected by removals. Ties in the score argmax break toward the
    lowest column index. With n observations the correlation test needs
    n >= 3.

    Examples
    --------
    >>> import numpy as np
    >>> rng = np.random.default_rng(7)
    >>> e = rng.laplace(size=(500, 2))
    >>> x = np.column_stack([e[:, 0], 0.8 * e[:, 0] + e[:, 1]])
    >>> EggFinder().fit(x).candidates_
    array([0])
    """

    def __init__(
        self,
        fdr_level: float = 0.05,
        g_function: str = "robust_exp",
        max_candidates: int | None = None,
        on_constant: str = "exclude",
    ):
        self.fdr_level = fdr_level
        self.g_function = g_function
        self.max_candidates = max_candidates
        self.on_constant = on_constant

    def _validate_params_values(self):
        if not 0.0 < self.fdr_level < 1.0:
            raise ValueError(f"fdr_level must be in (0, 1), got {self.fdr_level}")
        if self.g_function not in G_FUNCTIONS:
            raise ValueError(
                f"g_function must be one of {G_FUNCTIONS}, got {self.g_function!r}"
            )
        if self.max_candidates is not None and self.max_candidates < 1:
            raise ValueError(f"max_candidates must be >= 1, got {self.max_candidates}")
        if self.on_constant not in ("exclude", "raise"):
            raise ValueError(
                f"on_constant must be 'exclude' or 'raise', got {self.on_constant!r}"
            )

    def fit(self, X, y=None):
        """Run the search on a data matrix (observations in rows)."""
        self._validate_params_values()
        if hasattr(X, "variable_names"):
            X = X.values
        X = check_array(X, dtype=np.float64)
        n, p = X.shape
        if n < 3:
            raise TooFewObservations(
                f"need at least 3 samples, got {n} sample" + ("s" if n != 1 else "")
            )

        standardized: dict[int, np.ndarray] = {}
        squared_norms: dict[int, float] = {}
        scores: dict[int, NonGaussianityScore] = {}
        excluded = []
        for i in range(p):
            try:
                series = standardize(X[:, i])
            except DegenerateSeries:
                if self.on_constant == "raise":
                    raise DegenerateSeries(f"column {i} is constant") from None
                excluded.append(i)
                continue
            standardized[i] = series.values
            squared_norms[i] = float(np.dot(series.values, series.values))
            scores[i] = nongaussianity(series, self.g_function)
        if excluded:
            warnings.warn(
                f"excluded {len(excluded)} constant column(s): {excluded}",
                ConstantColumnWarning,
                stacklevel=2,
            )

        surviving = [i for i in range(p) if i in standardized]
        candidates: list[int] = []
        traces: list[IterationTrace] = []
        limit = p if self.max_candidates is None else self.max_candidates
        while surviving and len(candidates) < limit:
            best = surviving[0]
            for i in surviving[1:]:
                if scores[i].j_value > scores[best].j_value:
                    best = i
            surviving_before = tuple(surviving)
            surviving.remove(best)
            candidates.append(best)

            # Full batch over every (survivor, candidate) pair, not just the
            # newest candidate: earlier tests saw smaller batches, so a pair
            # can become significant only now.
            pairs = [(i, e) for i in surviving for e in candidates]
            removed: set[int] = set()
            rejected_pairs: list[tuple[int, int]] = []
            if pairs:
                dots = [
                    float(np.dot(standardized[i], standardized[e])) for i, e in pairs
                ]
                products = [squared_norms[i] * squared_norms[e] for i, e in pairs]
                _, _, pvalues = correlation_pvalues_from_dots(dots, products, n)
                decision = bh_fdr(pvalues, self.fdr_level)
                for pair, rejected in zip(pairs, decision.rejected):
                    if rejected:
                        removed.add(pair[0])
                        rejected_pairs.append(pair)
                if removed:
                    surviving = [i for i in surviving if i not in removed]
            traces.append(
                IterationTrace(
                    iteration=len(candidates),
                    selected=best,
                    selected_score=scores[best],
                    surviving_before=surviving_before,
                    removed_by_correlation=tuple(sorted(removed)),
                    tests_run=len(pairs),
                    tests_rejected=len(rejected_pairs),
                    rejected_pairs=tuple(rejected_pairs),
                )
            )

        self.candidates_ = np.asarray(candidates, dtype=np.intp)
        self.candidate_scores_ = np.asarray(
            [scores[i].j_value for i in candidates], dtype=np.float64
        )
        self.iterations_ = tuple(traces)
        self.excluded_constant_ = np.asarray(excluded, dtype=np.intp)
        self.n_features_in_ = p
        return self

    def _get_support_mask(self):
        check_is_fitted(self)
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[self.candidates_] = True
        return mask


def bootstrap_selection(estimator: EggFinder, X, n_resamples: int, seed=None) -> BootstrapReport:
    """Measure selection stability by refitting on bootstrap resamples.

    Parameters
    ----------
    estimator : EggFinder
        Prototype configuration. It is cloned, never mutated.
    X : array-like
        Data matrix, observations in rows.
    n_resamples : int
        Number of bootstrap rounds, >= 1.
    seed : int, optional
        Root seed. Round b draws its row indices from an independent child
        stream, so reports are identical however rounds are scheduled.

    Returns
    -------
    BootstrapReport

    Notes
    -----
    Resampling can make a column constant. Rounds silently exclude such
    columns (they count as unselected) and the report tallies how many
    rounds that happened in.
    """
    if n_resamples < 1:
        raise ValueError(f"n_resamples must be >= 1, got {n_resamples}")
    if hasattr(X, "variable_names"):
        X = X.values
    X = check_array(X, dtype=np.float64)
    n, p = X.shape

    full = clone(estimator).fit(X)
    counts = np.zeros(p, dtype=np.int64)
    constant_rounds = 0
    root = as_seed_sequence(seed)
    for b in range(n_resamples):
        rng = np.random.default_rng(child(root, b))
        rows = rng.integers(0, n, size=n)
        est = clone(estimator).set_params(on_constant="exclude")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConstantColumnWarning)
            est.fit(X[rows])
        if est.excluded_constant_.size:
            constant_rounds += 1
        counts[est.candidates_] += 1

    return BootstrapReport(
        n_resamples=n_resamples,
        counts=tuple(int(c) for c in counts),
        proportions=tuple(float(c) / n_resamples for c in counts),
        seed=seed if isinstance(seed, int) else None,
        n_variables=p,
        full_data_candidates=tuple(int(i) for i in full.candidates_),
        constant_exclusion_rounds=constant_rounds,
    )


def flag_significant(report: BootstrapReport, level: float = 0.05) -> set[int]:
    """Variables selected significantly more often than the null rate.

    The null says selection is blind: each resample picks
    len(full_data_candidates) variables at random out of n_variables, so a
    given variable is selected with probability ell / p per round. A variable
    with count c is flagged when the exact binomial tail
    P(X >= c | n_resamples, ell / p) is below level.

    Returns
    -------
    set of int
        Flagged column indices.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must be in (0, 1), got {level}")
    null_rate = len(report.full_data_candidates) / report.n_variables
    if null_rate == 0.0:
        return set()
    flagged = set()
    for i, count in enumerate(report.counts):
        if count == 0:
            continue
        tail = float(scipy_stats.binom.sf(count - 1, report.n_resamples, null_rate))
        if tail < level:
            flagged.add(i)
    return flagged


def with_significance(report: BootstrapReport, level: float) -> BootstrapReport:
    """Copy of the report annotated with the significance level used."""
    return replace(report, significance_level=level)
