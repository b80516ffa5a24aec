"""Synthetic linear acyclic models with non-Gaussian external influences.

A model is x = B x + e in a causal order: each variable is a weighted sum of
its parents plus an external influence. Influences are built from powers of
Gaussians, sign(z) |z|^q, which are symmetric, unit-scalable, and non-Gaussian
for q != 1. Variables without parents are exogenous and equal their influence.

Generation keeps exact control of second moments: coefficients are rescaled
against the analytically propagated covariance so the parent contribution of
every child hits a drawn standard deviation target, and each influence term
is divided by its closed-form standard deviation before scaling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import as_seed_sequence, child
from .data import DataMatrix, atomic_write_text
from .exceptions import SingularParentContribution, TooManyEdges

EXPONENT_RANGE_SUB = (0.5, 0.8)
EXPONENT_RANGE_SUPER = (1.2, 2.0)

MODEL_FORMAT = "eggfinder-causal-model"
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ExternalInfluenceSpec:
    """Distribution of one variable's external influence.

    The influence is a sum of h independent terms sign(z) |z|^q with z
    standard normal, each term divided by its exact standard deviation, the
    sum scaled by target_std / sqrt(h). The result has mean 0 and standard
    deviation exactly target_std.

    kind is "exogenous" for parentless variables (then h = 1) and "error"
    otherwise. Generated models draw exponents from
    [0.5, 0.8] union [1.2, 2.0]; direct construction accepts any q > 0
    (q = 1 gives a Gaussian influence, useful as a control).
    """

    kind: str
    exponents: tuple[float, ...]
    target_std: float

    def __post_init__(self):
        if self.kind not in ("exogenous", "error"):
            raise ValueError(f"kind must be 'exogenous' or 'error', got {self.kind!r}")
        exps = tuple(float(q) for q in self.exponents)
        if not exps:
            raise ValueError("need at least one exponent")
        if any(q <= 0 for q in exps):
            raise ValueError("exponents must be positive")
        if self.kind == "exogenous" and len(exps) != 1:
            raise ValueError("an exogenous influence has exactly one term")
        if not self.target_std > 0:
            raise ValueError(f"target_std must be positive, got {self.target_std}")
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "target_std", float(self.target_std))

    @property
    def h(self) -> int:
        return len(self.exponents)


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph over p variables.

    edges holds (parent, child) pairs; every edge points from earlier to
    later in topo_order.
    """

    p: int
    topo_order: tuple[int, ...]
    edges: frozenset

    def __post_init__(self):
        order = tuple(int(v) for v in self.topo_order)
        if sorted(order) != list(range(self.p)):
            raise ValueError("topo_order must be a permutation of range(p)")
        position = {v: k for k, v in enumerate(order)}
        edges = frozenset((int(a), int(b)) for a, b in self.edges)
        for parent, kid in edges:
            if position[parent] >= position[kid]:
                raise ValueError(f"edge ({parent}, {kid}) violates the causal order")
        object.__setattr__(self, "topo_order", order)
        object.__setattr__(self, "edges", edges)


@dataclass(frozen=True)
class CausalModel:
    """A fully parameterized linear acyclic model.

    b_matrix[i, j] is the coefficient of parent j in the equation of child
    i; rows of exogenous variables are zero. parent_std_targets[i] is the
    drawn standard deviation of i's combined parent contribution (None for
    exogenous variables). seed records the integer the model was generated
    from, when there was one.
    """

    p: int
    b_matrix: np.ndarray
    topo_order: tuple[int, ...]
    influences: tuple[ExternalInfluenceSpec, ...]
    parent_std_targets: tuple = field(default=None)
    seed: int | None = None

    def __post_init__(self):
        b = np.array(self.b_matrix, dtype=np.float64, copy=True)
        if b.shape != (self.p, self.p):
            raise ValueError(f"b_matrix must be ({self.p}, {self.p}), got {b.shape}")
        if np.any(np.diag(b) != 0.0):
            raise ValueError("b_matrix diagonal must be zero")
        order = tuple(int(v) for v in self.topo_order)
        if sorted(order) != list(range(self.p)):
            raise ValueError("topo_order must be a permutation of range(p)")
        position = {v: k for k, v in enumerate(order)}
        rows, cols = np.nonzero(b)
        for i, j in zip(rows, cols):
            if position[int(j)] >= position[int(i)]:
                raise ValueError(f"coefficient ({i}, {j}) violates the causal order")
        if len(self.influences) != self.p:
            raise ValueError("need one influence spec per variable")
        targets = self.parent_std_targets
        if targets is None:
            targets = tuple(None for _ in range(self.p))
        targets = tuple(None if t is None else float(t) for t in targets)
        if len(targets) != self.p:
            raise ValueError("need one parent std target per variable")
        for i in range(self.p):
            has_parents = bool(np.any(b[i]))
            spec = self.influences[i]
            if has_parents and spec.kind != "error":
                raise ValueError(f"variable {i} has parents but kind {spec.kind!r}")
            if not has_parents and spec.kind != "exogenous":
                raise ValueError(f"variable {i} has no parents but kind {spec.kind!r}")
        b.setflags(write=False)
        object.__setattr__(self, "b_matrix", b)
        object.__setattr__(self, "topo_order", order)
        object.__setattr__(self, "influences", tuple(self.influences))
        object.__setattr__(self, "parent_std_targets", targets)

    @property
    def exogenous_set(self) -> frozenset:
        """Indices of variables with no parents. Never empty in an acyclic model."""
        return frozenset(
            int(i) for i in range(self.p) if not np.any(self.b_matrix[i])
        )

    def parents(self, i: int) -> np.ndarray:
        return np.nonzero(self.b_matrix[i])[0]


def random_dag(p: int, edge_count: int, seed=None) -> Dag:
    """Draw a DAG: uniform causal order, then edge_count distinct pairs.

    Pairs are drawn without replacement from all p(p-1)/2 (earlier, later)
    position pairs, so any acyclic pattern consistent with the drawn order
    is possible.

    Raises
    ------
    TooManyEdges
        If edge_count exceeds p(p-1)/2.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if edge_count < 0:
        raise ValueError(f"edge_count must be >= 0, got {edge_count}")
    max_edges = p * (p - 1) // 2
    if edge_count > max_edges:
        raise TooManyEdges(
            f"{edge_count} edges requested but {p} variables allow at most {max_edges}"
        )
    rng = np.random.default_rng(as_seed_sequence(seed))
    order = tuple(int(v) for v in rng.permutation(p))
    edges = set()
    if edge_count:
        picks = rng.choice(max_edges, size=edge_count, replace=False)
        for k in picks:
            a, b = _pair_from_rank(int(k))
            edges.add((order[a], order[b]))
    return Dag(p=p, topo_order=order, edges=frozenset(edges))


def _pair_from_rank(k: int) -> tuple[int, int]:
    # Rank of position pair (a, b), a < b, is b(b-1)/2 + a.
    b = (1 + math.isqrt(1 + 8 * k)) // 2
    while b * (b - 1) // 2 > k:
        b -= 1
    while b * (b + 1) // 2 <= k:
        b += 1
    return k - b * (b - 1) // 2, b


def _draw_exponent(rng) -> float:
    lo, hi = EXPONENT_RANGE_SUB if rng.random() < 0.5 else EXPONENT_RANGE_SUPER
    return float(rng.uniform(lo, hi))


def assign_coefficients(dag: Dag, h: int, seed=None, *, seed_record: int | None = None) -> CausalModel:
    """Parameterize a DAG with coefficients and influence distributions.

    Per variable: influence std target uniform on [0.5, 1.5], exponents from
    [0.5, 0.8] union [1.2, 2.0] (fair coin between the ranges), h terms for
    error influences and one for exogenous ones. Per child, in causal order:
    coefficient magnitudes uniform on [0.1, 1] with random signs, then the
    whole coefficient vector rescaled so the parent contribution's exact
    standard deviation equals a target drawn uniform on [0.5, 1.5]. The
    rescaling uses the covariance propagated analytically through the
    already-parameterized ancestors, so no sampling is involved.

    The per-variable influence streams draw the std target before the
    exponents, and the coefficient stream never touches exponents at all.
    Regenerating with the same seed and a different h therefore changes
    error exponent lists and nothing else.
    """
    if h < 1:
        raise ValueError(f"h must be >= 1, got {h}")
    root = as_seed_sequence(seed)
    spec_root, coef_root = child(root, 0), child(root, 1)
    p = dag.p

    parents_of: dict[int, list[int]] = {i: [] for i in range(p)}
    for parent, kid in dag.edges:
        parents_of[kid].append(parent)
    for kid in parents_of:
        parents_of[kid].sort()

    influences = []
    for i in range(p):
        rng = np.random.default_rng(child(spec_root, i))
        target_std = float(rng.uniform(0.5, 1.5))
        if parents_of[i]:
            exponents = tuple(_draw_exponent(rng) for _ in range(h))
            influences.append(
                ExternalInfluenceSpec(kind="error", exponents=exponents, target_std=target_std)
            )
        else:
            influences.append(
                ExternalInfluenceSpec(
                    kind="exogenous", exponents=(_draw_exponent(rng),), target_std=target_std
                )
            )

    rng = np.random.default_rng(coef_root)
    b = np.zeros((p, p))
    sigma = np.zeros((p, p))
    targets: list[float | None] = [None] * p
    for i in dag.topo_order:
        par = parents_of[i]
        if not par:
            sigma[i, i] = influences[i].target_std ** 2
            continue
        k = len(par)
        # A zero-variance combination cannot occur when every parent carries
        # its own independent influence term, but the redraw guard keeps
        # hand-built degenerate structures from dividing by zero.
        for _ in range(100):
            magnitudes = rng.uniform(0.1, 1.0, size=k)
            signs = np.where(rng.random(size=k) < 0.5, -1.0, 1.0)
            weights = magnitudes * signs
            contribution_var = float(weights @ sigma[np.ix_(par, par)] @ weights)
            if contribution_var > 0.0:
                break
        else:
            raise SingularParentContribution(
                f"variable {i}: parent contribution has zero variance after 100 redraws"
            )
        target = float(rng.uniform(0.5, 1.5))
        coefs = weights * (target / math.sqrt(contribution_var))
        b[i, par] = coefs
        cov = sigma[:, par] @ coefs
        sigma[i, :] = cov
        sigma[:, i] = cov
        sigma[i, i] = target**2 + influences[i].target_std ** 2
        targets[i] = target

    return CausalModel(
        p=p,
        b_matrix=b,
        topo_order=dag.topo_order,
        influences=tuple(influences),
        parent_std_targets=tuple(targets),
        seed=seed_record,
    )


def random_model(p: int, edge_count: int, h: int, seed=None) -> CausalModel:
    """Random DAG plus coefficients and influence specs, from one seed.

    Structure and parameters come from independent child streams of the
    seed, so the same seed with a different h reproduces the graph, the
    coefficients, and the influence std targets exactly.
    """
    root = as_seed_sequence(seed)
    dag = random_dag(p, edge_count, child(root, 0))
    return assign_coefficients(
        dag, h, child(root, 1), seed_record=seed if isinstance(seed, int) else None
    )


def theoretical_term_std(q: float) -> float:
    """Exact standard deviation of sign(z) |z|^q for standard normal z.

    The term has mean 0 by symmetry and E|z|^(2q) = 2^q Gamma(q + 1/2) /
    sqrt(pi), so the standard deviation is the square root of that moment.
    """
    if q <= 0:
        raise ValueError(f"q must be positive, got {q}")
    return math.sqrt(2.0**q * math.gamma(q + 0.5) / math.sqrt(math.pi))


def sample_external_influence(spec: ExternalInfluenceSpec, n: int, seed=None) -> np.ndarray:
    """Draw n observations of an influence.

    Each term is sign(z) |z|^q divided by its exact standard deviation; the
    sum of the h terms is scaled by target_std / sqrt(h). No moments are
    estimated from the sample.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(as_seed_sequence(seed))
    total = np.zeros(n)
    for q in spec.exponents:
        z = rng.standard_normal(n)
        total += np.sign(z) * np.abs(z) ** q / theoretical_term_std(q)
    return total * (spec.target_std / math.sqrt(spec.h))


def sample_dataset(model: CausalModel, n: int, seed=None) -> DataMatrix:
    """Sample n observations from a model by forward substitution.

    Each variable's influence comes from its own child stream of the seed,
    indexed by variable, so draws do not shift when the causal order does.
    Exogenous columns equal their influence draws bitwise.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    root = as_seed_sequence(seed)
    p = model.p
    e = np.empty((n, p))
    for i in range(p):
        e[:, i] = sample_external_influence(model.influences[i], n, child(root, i))
    x = np.empty((n, p))
    for i in model.topo_order:
        par = model.parents(i)
        if par.size == 0:
            x[:, i] = e[:, i]
        else:
            x[:, i] = x[:, par] @ model.b_matrix[i, par] + e[:, i]
    return DataMatrix(values=x)


def model_covariance(model: CausalModel) -> np.ndarray:
    """Exact covariance of the model, propagated in causal order.

    Var(x_i) = b_i' Sigma b_i + target_std_i^2 and Cov(x_i, x_k) follows by
    linearity; no matrix inversion and no sampling.
    """
    p = model.p
    sigma = np.zeros((p, p))
    for i in model.topo_order:
        par = model.parents(i)
        ts2 = model.influences[i].target_std ** 2
        if par.size == 0:
            sigma[i, i] = ts2
            continue
        coefs = model.b_matrix[i, par]
        cov = sigma[:, par] @ coefs
        sigma[i, :] = cov
        sigma[:, i] = cov
        sigma[i, i] = float(coefs @ sigma[np.ix_(par, par)] @ coefs) + ts2
    return sigma


def save_model(model: CausalModel, path) -> None:
    """Write a model as JSON. Coefficients are stored as repr-precision
    decimals in sorted (row, column) triplets, so a load round-trips
    bitwise."""
    rows, cols = np.nonzero(model.b_matrix)
    entries = sorted(
        [int(i), int(j), float(model.b_matrix[i, j])] for i, j in zip(rows, cols)
    )
    payload = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "p": model.p,
        "seed": model.seed,
        "topo_order": list(model.topo_order),
        "b_entries": entries,
        "influences": [
            {"kind": s.kind, "exponents": list(s.exponents), "target_std": s.target_std}
            for s in model.influences
        ],
        "parent_std_targets": list(model.parent_std_targets),
        "metadata": {
            "coefficients": "magnitude uniform on [0.1, 1] with random sign, "
            "rescaled so each parent contribution has its drawn std target",
            "influence_terms": "sign(z) |z|^q, q in [0.5, 0.8] or [1.2, 2.0], "
            "each term divided by its exact std",
        },
    }
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_model(path) -> CausalModel:
    """Read a model written by :func:`save_model`."""
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a causal model file")
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(
            f"{path}: unsupported format version {payload.get('format_version')!r}"
        )
    p = int(payload["p"])
    b = np.zeros((p, p))
    for i, j, value in payload["b_entries"]:
        b[int(i), int(j)] = float(value)
    influences = tuple(
        ExternalInfluenceSpec(
            kind=item["kind"],
            exponents=tuple(item["exponents"]),
            target_std=item["target_std"],
        )
        for item in payload["influences"]
    )
    return CausalModel(
        p=p,
        b_matrix=b,
        topo_order=tuple(payload["topo_order"]),
        influences=influences,
        parent_std_targets=tuple(payload["parent_std_targets"]),
        seed=payload.get("seed"),
    )


def generate(p: int, edge_count: int, h: int, n: int, seed=None):
    """Model plus dataset from one master seed.

    The model and the sampling noise use independent child streams, so the
    model is identical for any n.

    Returns
    -------
    (CausalModel, DataMatrix)
    """
    root = as_seed_sequence(seed)
    model = random_model(p, edge_count, h, child(root, 0))
    if isinstance(seed, int):
        model = replace(model, seed=seed)
    data = sample_dataset(model, n, child(root, 1))
    return model, data
