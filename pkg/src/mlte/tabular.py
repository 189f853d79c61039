"""Data model, file ingestion, and design-matrix construction.

Everything downstream (model fitters, estimators, the simulation engine)
consumes the small immutable containers defined here: ``Dataset`` for the
observed table, ``DesignSpec`` for a symbolic regression design, and
``ContrastSet`` for the treatment pairs under comparison.  Design expansion
supports intercept, main effects, two-way interactions, squares, and natural
cubic spline bases with quantile knots.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "Dataset",
    "DesignSpec",
    "BoundDesign",
    "ContrastSet",
    "load_csv",
    "load_json",
    "expand_design",
    "bind_design",
    "intercept",
    "main",
    "interaction",
    "square",
    "spline",
]


# ---------------------------------------------------------------------------
# term descriptors


def intercept():
    return ("intercept",)


def main(column):
    return ("main", column)


def interaction(col_a, col_b):
    return ("interaction", col_a, col_b)


def square(column):
    return ("square", column)


def spline(column, degree=3, knots=3):
    """Natural cubic spline term with `knots` interior knots at equally
    spaced quantiles.  Only degree 3 is implemented."""
    return ("spline", column, degree, knots)


_TERM_KINDS = {"intercept", "main", "interaction", "square", "spline"}


# ---------------------------------------------------------------------------
# containers


@dataclass(frozen=True)
class Dataset:
    """Immutable covariate/treatment/outcome table.

    Attributes
    ----------
    X : (n, p) float array of covariates.
    columns : covariate column names, length p.
    t : (n,) int array with values in {1..k}; every level occurs.
    y : (n,) float outcome vector.
    outcome_kind : "continuous" or "binary".
    k : number of treatment levels.
    treatment_labels : original treatment labels indexed by code-1, retained
        so reports can print the user's own level names.
    """

    X: np.ndarray
    columns: tuple
    t: np.ndarray
    y: np.ndarray
    outcome_kind: str
    k: int
    treatment_labels: tuple

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        t = np.asarray(self.t, dtype=int)
        y = np.asarray(self.y, dtype=float)
        if X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        n = X.shape[0]
        if t.shape != (n,) or y.shape != (n,):
            raise ValueError("X, t, y must have matching row counts")
        if len(self.columns) != X.shape[1]:
            raise ValueError("column name count does not match X")
        if not np.all(np.isfinite(X)):
            raise ValueError("non-finite covariate")
        if not np.all(np.isfinite(y)):
            raise ValueError("non-finite outcome")
        if t.min() < 1 or t.max() > self.k:
            raise ValueError("treatment codes must lie in 1..k")
        present = np.unique(t)
        if len(present) != self.k:
            missing = sorted(set(range(1, self.k + 1)) - set(present.tolist()))
            raise ValueError(f"treatment level(s) {missing} have zero rows")
        if self.outcome_kind not in ("continuous", "binary"):
            raise ValueError("outcome_kind must be 'continuous' or 'binary'")
        if self.outcome_kind == "binary" and not np.all(np.isin(y, (0.0, 1.0))):
            raise ValueError("binary outcome must take values in {0, 1}")
        if len(self.treatment_labels) != self.k:
            raise ValueError("treatment_labels must have length k")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "treatment_labels", tuple(self.treatment_labels))
        self.X.setflags(write=False)
        self.t.setflags(write=False)
        self.y.setflags(write=False)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def column_index(self, name):
        try:
            return self.columns.index(name)
        except ValueError:
            raise KeyError(f"unknown covariate column {name!r}") from None

    def label_of(self, code):
        """Original treatment label for internal code `code` (1-based)."""
        return self.treatment_labels[code - 1]

    def replace(self, **changes):
        """Functional update returning a new validated Dataset."""
        fields = dict(
            X=self.X,
            columns=self.columns,
            t=self.t,
            y=self.y,
            outcome_kind=self.outcome_kind,
            k=self.k,
            treatment_labels=self.treatment_labels,
        )
        fields.update(changes)
        return Dataset(**fields)

    def take(self, rows):
        """Row subset / resample (used by the bootstrap and plasmode loops).

        The caller is responsible for re-checking level presence; construction
        raises if a treatment level disappears.
        """
        rows = np.asarray(rows, dtype=int)
        return Dataset(
            X=self.X[rows],
            columns=self.columns,
            t=self.t[rows],
            y=self.y[rows],
            outcome_kind=self.outcome_kind,
            k=self.k,
            treatment_labels=self.treatment_labels,
        )

    @staticmethod
    def from_arrays(X, t, y, columns=None, outcome_kind=None, treatment_labels=None):
        """Build a Dataset from raw arrays, recoding treatment labels.

        `t` may hold arbitrary sortable labels; they are recoded to 1..k in
        sorted-label order.  `outcome_kind=None` triggers binary detection
        (binary iff the observed value set is a subset of {0, 1}).
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        codes, labels = recode_treatment(t)
        if columns is None:
            columns = tuple(f"X{j + 1}" for j in range(X.shape[1]))
        if outcome_kind is None:
            outcome_kind = detect_outcome_kind(y)
        if treatment_labels is not None:
            labels = tuple(treatment_labels)
        return Dataset(
            X=X,
            columns=tuple(columns),
            t=codes,
            y=y,
            outcome_kind=outcome_kind,
            k=len(labels),
            treatment_labels=labels,
        )


@dataclass(frozen=True)
class DesignSpec:
    """Symbolic regression design: an ordered tuple of term descriptors plus
    a flag appending treatment dummies (k-1 columns, level 1 reference)."""

    terms: tuple
    includes_treatment_dummies: bool = False

    def __post_init__(self):
        terms = tuple(tuple(term) for term in self.terms)
        for term in terms:
            if not term or term[0] not in _TERM_KINDS:
                raise ValueError(f"unknown design term {term!r}")
            if term[0] == "spline":
                _, _col, degree, knots = term
                if degree != 3:
                    raise ValueError("only cubic (degree 3) splines are implemented")
                if knots < 1:
                    raise ValueError("spline needs at least one interior knot")
        object.__setattr__(self, "terms", terms)

    def referenced_columns(self):
        cols = []
        for term in self.terms:
            cols.extend(term[1:2] if term[0] in ("main", "square", "spline") else ())
            if term[0] == "interaction":
                cols.extend(term[1:3])
        return cols

    def validate(self, data: Dataset):
        for name in self.referenced_columns():
            data.column_index(name)


@dataclass(frozen=True)
class ContrastSet:
    """Ordered treatment pairs (t, t') to be estimated."""

    pairs: tuple

    def __post_init__(self):
        pairs = tuple((int(a), int(b)) for a, b in self.pairs)
        seen = set()
        for a, b in pairs:
            if a == b:
                raise ValueError(f"degenerate pair ({a}, {b})")
            if (a, b) in seen:
                raise ValueError(f"duplicate pair ({a}, {b})")
            seen.add((a, b))
        object.__setattr__(self, "pairs", pairs)

    def validate(self, k):
        for a, b in self.pairs:
            if not (1 <= a <= k and 1 <= b <= k):
                raise ValueError(f"pair ({a}, {b}) outside treatment levels 1..{k}")

    @staticmethod
    def versus_reference(k, reference=1):
        return ContrastSet(tuple((t, reference) for t in range(1, k + 1) if t != reference))

    @staticmethod
    def all_pairs(k):
        """All k(k-1)/2 unordered pairs, each ordered (higher, lower)."""
        return ContrastSet(
            tuple((b, a) for a in range(1, k + 1) for b in range(a + 1, k + 1))
        )


# ---------------------------------------------------------------------------
# treatment recoding / outcome detection


def recode_treatment(values):
    """Map arbitrary treatment labels to consecutive codes 1..k.

    Labels are ordered by sorted(label) so the coding is reproducible no
    matter the row order; numeric-looking labels sort numerically.
    Returns (codes array, tuple of original labels indexed by code-1).
    """
    raw = list(values)
    uniq = sorted(set(raw), key=_label_sort_key)
    code_of = {lab: i + 1 for i, lab in enumerate(uniq)}
    codes = np.array([code_of[v] for v in raw], dtype=int)
    return codes, tuple(uniq)


def _label_sort_key(label):
    try:
        return (0, float(label), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(label))


def detect_outcome_kind(y):
    y = np.asarray(y, dtype=float)
    return "binary" if np.all(np.isin(y, (0.0, 1.0))) else "continuous"


# ---------------------------------------------------------------------------
# file ingestion


def load_csv(path, treatment_col, outcome_col, covariate_cols, outcome_kind=None):
    """Read an RFC-4180 CSV (header row required) into a Dataset.

    Treatment labels are recoded to 1..k in sorted order and the original
    labels retained.  `outcome_kind=None` auto-detects binary outcomes.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file, header row required")
        header = reader.fieldnames
        for col in [treatment_col, outcome_col, *covariate_cols]:
            if col not in header:
                raise ValueError(f"{path}: missing column {col!r}")
        t_raw, y_raw, x_rows = [], [], []
        for lineno, row in enumerate(reader, start=2):
            t_raw.append(row[treatment_col])
            y_raw.append(_parse_cell(row[outcome_col], outcome_col, lineno))
            x_rows.append(
                [_parse_cell(row[c], c, lineno) for c in covariate_cols]
            )
    if not x_rows:
        raise ValueError(f"{path}: no data rows")
    X = np.asarray(x_rows, dtype=float)
    y = np.asarray(y_raw, dtype=float)
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite covariate")
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite outcome")
    return Dataset.from_arrays(
        X, t_raw, y, columns=tuple(covariate_cols), outcome_kind=outcome_kind
    )


def _parse_cell(text, col, lineno):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ValueError(f"line {lineno}: unparseable cell {text!r} in column {col!r}") from None


def load_json(path, outcome_kind=None):
    """Read a JSON dataset whose schema mirrors the Dataset fields:

    ``{"columns": [...], "X": [[...], ...], "T": [...], "Y": [...]}``
    with an optional ``"outcome_kind"`` override.
    """
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    for key in ("columns", "X", "T", "Y"):
        if key not in obj:
            raise ValueError(f"{path}: missing key {key!r}")
    kind = outcome_kind if outcome_kind is not None else obj.get("outcome_kind")
    return Dataset.from_arrays(
        np.asarray(obj["X"], dtype=float),
        obj["T"],
        np.asarray(obj["Y"], dtype=float),
        columns=tuple(obj["columns"]),
        outcome_kind=kind,
    )


# ---------------------------------------------------------------------------
# design expansion


def _natural_cubic_basis(x, knots):
    """Natural cubic spline basis (linear tails) for one column.

    `knots` are the full knot vector, boundaries included.  Returns K-1
    columns for K knots: the identity column plus K-2 curvature columns.
    """
    knots = np.asarray(knots, dtype=float)
    K = len(knots)

    def d(k):
        num = np.maximum(x - knots[k], 0.0) ** 3 - np.maximum(x - knots[-1], 0.0) ** 3
        return num / (knots[-1] - knots[k])

    cols = [x]
    last = d(K - 2)
    for k in range(K - 2):
        cols.append(d(k) - last)
    return np.column_stack(cols)


def _spline_knots(x, n_interior):
    """Boundary knots at the data range, interior at equally spaced quantiles."""
    distinct = np.unique(x)
    if len(distinct) < n_interior + 2:
        raise ValueError(
            f"spline needs more distinct values ({len(distinct)}) than knots ({n_interior + 2})"
        )
    qs = np.linspace(0.0, 1.0, n_interior + 2)[1:-1]
    interior = np.quantile(x, qs)
    return np.concatenate([[x.min()], interior, [x.max()]])


@dataclass(frozen=True)
class BoundDesign:
    """A DesignSpec bound to training data: spline knots are frozen so the
    same basis can be evaluated on new rows (counterfactual prediction,
    cross-validation folds)."""

    spec: DesignSpec
    column_index: dict
    knots: dict = field(default_factory=dict)
    k: int = 2

    def matrix(self, X, t=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        cols = []
        for pos, term in enumerate(self.spec.terms):
            kind = term[0]
            if kind == "intercept":
                cols.append(np.ones(X.shape[0]))
            elif kind == "main":
                cols.append(X[:, self.column_index[term[1]]])
            elif kind == "interaction":
                cols.append(
                    X[:, self.column_index[term[1]]] * X[:, self.column_index[term[2]]]
                )
            elif kind == "square":
                cols.append(X[:, self.column_index[term[1]]] ** 2)
            elif kind == "spline":
                basis = _natural_cubic_basis(
                    X[:, self.column_index[term[1]]], self.knots[pos]
                )
                cols.append(basis)
        if self.spec.includes_treatment_dummies:
            if t is None:
                raise ValueError("design includes treatment dummies but no t given")
            t = np.asarray(t, dtype=int)
            for level in range(2, self.k + 1):
                cols.append((t == level).astype(float))
        return np.column_stack([np.atleast_2d(c.T).T if c.ndim == 1 else c for c in cols])

    @property
    def n_columns(self):
        count = 0
        for pos, term in enumerate(self.spec.terms):
            count += len(self.knots[pos]) - 1 if term[0] == "spline" else 1
        if self.spec.includes_treatment_dummies:
            count += self.k - 1
        return count


def bind_design(data: Dataset, spec: DesignSpec) -> BoundDesign:
    """Resolve columns and compute spline knots on `data`."""
    spec.validate(data)
    knots = {}
    for pos, term in enumerate(spec.terms):
        if term[0] == "spline":
            x = data.X[:, data.column_index(term[1])]
            knots[pos] = _spline_knots(x, term[3])
    index = {name: j for j, name in enumerate(data.columns)}
    return BoundDesign(spec=spec, column_index=index, knots=knots, k=data.k)


def expand_design(data: Dataset, spec: DesignSpec) -> np.ndarray:
    """Expand `spec` against `data` into a dense design matrix.

    Splines use the natural cubic basis with knots at equally spaced
    quantiles of the column; treatment dummies are appended when flagged.
    The expansion is a pure function of (data, spec).
    """
    return bind_design(data, spec).matrix(data.X, data.t)
