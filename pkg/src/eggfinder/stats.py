"""Hypothesis tests and multiple-testing control.

Pearson correlation tests (exact t-based p-values), Benjamini-Hochberg
step-up FDR control, Welch two-sample t-tests, and per-group mean centering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .exceptions import (
    DegenerateSeries,
    InvalidPValue,
    LabelLengthMismatch,
    TooFewObservations,
)
from .nongauss import standardize


@dataclass(frozen=True)
class CorrelationTestResult:
    """Result of the zero-correlation test for one pair of series."""

    variable_a: int
    variable_b: int
    r: float
    t_statistic: float
    p_value: float
    dof: int


@dataclass(frozen=True)
class FdrDecision:
    """Outcome of one Benjamini-Hochberg pass over a batch of p-values.

    ``rejected[i]`` is True exactly when ``p_values[i]`` is at or below the
    step-up cutoff. ``threshold_index`` is the position of the cutoff in the
    ascending sort, or None when nothing is rejected.
    """

    p_values: tuple[float, ...]
    q_level: float
    rejected: tuple[bool, ...]
    threshold_index: int | None

    @property
    def n_rejected(self) -> int:
        return sum(self.rejected)


def correlation_pvalues_from_dots(dots, squared_norm_products, n: int):
    """Correlation stats from inner products of standardized series.

    ``dots`` holds dot(za, zb) per pair and ``squared_norm_products`` the
    matching dot(za, za) * dot(zb, zb), so r = dots / sqrt(products) is the
    textbook Pearson coefficient (standardizing has already removed the
    means). Normalizing by the realized norms rather than n - 1 keeps
    identical series at r = 1 exactly. Returns (r, t, p) arrays with the
    exact two-sided Student t tail via the regularized incomplete beta
    function. Used by both the scalar test and the batched search loop so the
    two produce bit-identical p-values.
    """
    dots = np.asarray(dots, dtype=np.float64)
    products = np.asarray(squared_norm_products, dtype=np.float64)
    dof = n - 2
    r = np.clip(dots / np.sqrt(products), -1.0, 1.0)
    with np.errstate(divide="ignore"):
        t = r * np.sqrt(dof / (1.0 - r * r))
    # |r| = 1 gives t = +/-inf and x = 0, so the tail collapses to 0 without
    # a special case.
    x = dof / (dof + t * t)
    p = special.betainc(dof / 2.0, 0.5, x)
    return r, t, p


def correlation_test(x, y, variable_a: int = 0, variable_b: int = 1) -> CorrelationTestResult:
    """Two-sided test of zero Pearson correlation between two raw series.

    Parameters
    ----------
    x, y : array-like
        Raw 1-D series of equal length n >= 3.
    variable_a, variable_b : int
        Identifiers recorded in the result, for bookkeeping in batched runs.

    Returns
    -------
    CorrelationTestResult
        With t = r * sqrt((n - 2) / (1 - r^2)) and the exact Student t
        two-sided tail as p-value. Symmetric in its arguments.

    Raises
    ------
    TooFewObservations
        If the series have fewer than 3 observations or unequal lengths.
    DegenerateSeries
        If either series is constant.
    """
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if xv.shape != yv.shape:
        raise TooFewObservations(f"series lengths differ: {xv.shape} vs {yv.shape}")
    n = xv.size
    if n < 3:
        raise TooFewObservations(f"correlation test needs n >= 3, got {n}")
    zx = standardize(xv).values
    zy = standardize(yv).values
    product = float(np.dot(zx, zx)) * float(np.dot(zy, zy))
    r, t, p = correlation_pvalues_from_dots(float(np.dot(zx, zy)), product, n)
    return CorrelationTestResult(
        variable_a=variable_a,
        variable_b=variable_b,
        r=float(r),
        t_statistic=float(t),
        p_value=float(p),
        dof=n - 2,
    )


def bh_fdr(p_values, q_level: float) -> FdrDecision:
    """Benjamini-Hochberg step-up decision over a batch of p-values.

    Parameters
    ----------
    p_values : iterable of float
        Batch of p-values, each in [0, 1]. May be empty.
    q_level : float
        Target false discovery rate, in (0, 1).

    Returns
    -------
    FdrDecision
        Rejects all p-values at or below p_(k*) where k* is the largest k
        with p_(k) <= (k / m) * q_level, or nothing when no such k exists.

    Raises
    ------
    InvalidPValue
        If any p-value falls outside [0, 1].
    """
    if not 0.0 < q_level < 1.0:
        raise ValueError(f"q_level must be in (0, 1), got {q_level}")
    p = tuple(float(v) for v in p_values)
    for i, v in enumerate(p):
        if not 0.0 <= v <= 1.0:
            raise InvalidPValue(f"p-value at position {i} is {v}, outside [0, 1]")
    m = len(p)
    if m == 0:
        return FdrDecision(p_values=p, q_level=q_level, rejected=(), threshold_index=None)
    order = np.argsort(np.asarray(p), kind="stable")
    threshold_index = None
    for k in range(m, 0, -1):
        if p[order[k - 1]] <= k * q_level / m:
            threshold_index = k - 1
            break
    if threshold_index is None:
        rejected = (False,) * m
    else:
        cutoff = p[order[threshold_index]]
        rejected = tuple(v <= cutoff for v in p)
    return FdrDecision(p_values=p, q_level=q_level, rejected=rejected, threshold_index=threshold_index)


def welch_t_test(group_a, group_b) -> float:
    """Two-sided Welch t-test p-value for a difference in means.

    Unequal variances, Welch-Satterthwaite degrees of freedom, exact Student
    t tail. Both groups need at least 2 observations and at least one group
    must have nonzero variance.

    Returns
    -------
    float
        Two-sided p-value.
    """
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("groups must be 1-D")
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise TooFewObservations(f"each group needs >= 2 observations, got {na} and {nb}")
    mean_a = math.fsum(a) / na
    mean_b = math.fsum(b) / nb
    var_a = math.fsum((a - mean_a) ** 2) / (na - 1)
    var_b = math.fsum((b - mean_b) ** 2) / (nb - 1)
    sa, sb = var_a / na, var_b / nb
    se2 = sa + sb
    if se2 == 0.0:
        raise DegenerateSeries("both groups are constant, Welch statistic undefined")
    t = (mean_a - mean_b) / math.sqrt(se2)
    dof = se2 * se2 / (sa * sa / (na - 1) + sb * sb / (nb - 1))
    x = dof / (dof + t * t)
    return float(special.betainc(dof / 2.0, 0.5, x))


def group_mean_center(data, group_labels):
    """Subtract per-group column means from a data matrix.

    Parameters
    ----------
    data : numpy.ndarray or object with ``values`` and ``variable_names``
        Matrix (n, p), observations in rows.
    group_labels : sequence
        One label per row. Rows sharing a label form a group.

    Returns
    -------
    Same kind as the input: a new array, or a new container of the input's
    type, where every group has column means 0. Idempotent.

    Raises
    ------
    LabelLengthMismatch
        If the label count differs from the row count.
    """
    values = getattr(data, "values", data)
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D data matrix, got shape {x.shape}")
    labels = list(group_labels)
    if len(labels) != x.shape[0]:
        raise LabelLengthMismatch(
            f"{len(labels)} group labels for {x.shape[0]} observations"
        )
    centered = x.copy()
    for label in dict.fromkeys(labels):
        rows = np.asarray([lab == label for lab in labels])
        centered[rows] -= centered[rows].mean(axis=0)
    if hasattr(data, "variable_names"):
        return type(data)(values=centered, variable_names=data.variable_names)
    return centered
