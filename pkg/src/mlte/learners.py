"""Outcome and treatment model fitting under three implementation regimes.

The estimators never fit models themselves; they consume an ``OutcomeFit``
(counterfactual outcome predictions for any treatment level) and a
``PropensityFit`` (treatment probabilities), produced here under one of
three regimes:

* ``correct``    the caller supplies the true design (simulation studies),
* ``mainterms``  main effects only, the common applied default,
* ``ml``         a cross-validation-weighted ensemble for the outcome and an
                 adaptively selected spline multinomial for the treatment.

The ml outcome ensemble stacks three candidates (main terms; mains plus all
pairwise interactions and squares; additive natural cubic splines) with
non-negative-least-squares weights on 10-fold cross-validated predictions.
The ml treatment model searches a natural-spline basis (spline mains for
continuous covariates, mains for binary ones, and spline-by-binary
interactions) by forward stepwise group selection under BIC, in the spirit
of adaptive polychotomous spline regression.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import nnls

from .glm import fit_logistic, fit_multinomial, fit_ols, predict_probs
from .tabular import (
    BoundDesign,
    Dataset,
    DesignSpec,
    _natural_cubic_basis,
    _spline_knots,
    bind_design,
    intercept,
    interaction,
    main,
    spline,
    square,
)

__all__ = [
    "OutcomeFit",
    "PropensityFit",
    "SuperLearnerSpec",
    "fit_outcome",
    "fit_propensity",
    "fit_super_learner",
    "REGIMES",
]

REGIMES = ("correct", "mainterms", "ml")

_SL_FOLDS = 10


@dataclass(frozen=True)
class OutcomeFit:
    """Counterfactual outcome predictor Ê(Y | T=t, X).

    ``predict(level, X)`` returns one prediction per row of X, on the
    probability scale for binary outcomes.  ``refit(data, seed)`` rebuilds
    the whole fit (including any cross-validation) on new data, which is how
    the standardization bootstrap resamples it.
    """

    regime: str
    outcome_kind: str
    k: int
    description: str
    _predict: Callable = field(repr=False)
    _refit: Callable = field(repr=False)

    def predict(self, level, X):
        if not (1 <= level <= self.k):
            raise ValueError(f"treatment level {level} outside 1..{self.k}")
        pred = np.asarray(self._predict(level, np.atleast_2d(np.asarray(X, dtype=float))))
        if not np.all(np.isfinite(pred)):
            raise ValueError("non-finite outcome prediction")
        return pred

    def predict_matrix(self, X):
        """All counterfactual predictions, one column per treatment level."""
        return np.column_stack([self.predict(level, X) for level in range(1, self.k + 1)])

    def refit(self, data: Dataset, seed=0):
        return self._refit(data, seed)


@dataclass(frozen=True)
class PropensityFit:
    """Fitted treatment probabilities P̂(T = t | X)."""

    regime: str
    k: int
    probs: np.ndarray
    description: str
    converged: bool
    _predict: Callable = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))
        self.probs.setflags(write=False)

    def predict_matrix(self, X):
        return self._predict(np.atleast_2d(np.asarray(X, dtype=float)))

    def predict_row(self, x_row):
        return self.predict_matrix(np.asarray(x_row, dtype=float)[None, :])[0]


@dataclass
class SuperLearnerSpec:
    """Result of cross-validated stacking.

    `weights` lie on the simplex and align with `candidates`; `fits` holds
    the full-data refit of each candidate, `binds` the bound designs used to
    evaluate them on new rows, and `cv_risks` the per-candidate
    cross-validated mean squared errors.
    """

    candidates: tuple
    folds: int
    weights: np.ndarray
    fits: list = field(default_factory=list)
    binds: list = field(default_factory=list)
    cv_risks: np.ndarray = None


# ---------------------------------------------------------------------------
# design construction helpers


def _is_binary_column(x):
    return len(np.unique(x)) <= 2


def _mainterms_spec(data: Dataset, with_dummies):
    terms = [intercept()] + [main(c) for c in data.columns]
    return DesignSpec(tuple(terms), includes_treatment_dummies=with_dummies)


def _rich_parametric_spec(data: Dataset, with_dummies):
    """Mains, every pairwise covariate interaction, and squares of the
    non-binary covariates."""
    terms = [intercept()] + [main(c) for c in data.columns]
    cols = data.columns
    for i in range(len(cols)):
        for j in range(i + 1, len(cols)):
            terms.append(interaction(cols[i], cols[j]))
    for j, c in enumerate(cols):
        if not _is_binary_column(data.X[:, j]):
            terms.append(square(c))
    return DesignSpec(tuple(terms), includes_treatment_dummies=with_dummies)


def _additive_spline_spec(data: Dataset, with_dummies):
    terms = [intercept()]
    for j, c in enumerate(data.columns):
        if _is_binary_column(data.X[:, j]):
            terms.append(main(c))
        else:
            terms.append(spline(c))
    return DesignSpec(tuple(terms), includes_treatment_dummies=with_dummies)


def _fit_glm(bound: BoundDesign, data: Dataset):
    D = bound.matrix(data.X, data.t)
    if data.outcome_kind == "binary":
        return fit_logistic(D, data.y)
    return fit_ols(D, data.y)


def _glm_predict(bound: BoundDesign, fit, binary, level, X):
    D = bound.matrix(X, np.full(X.shape[0], level, dtype=int))
    if binary:
        return fit.predict_prob(D)
    return fit.predict(D)


# ---------------------------------------------------------------------------
# super learner


def fit_super_learner(data: Dataset, candidates, folds=_SL_FOLDS, seed=0):
    """Stack candidate outcome designs by V-fold cross-validation.

    Each candidate is a DesignSpec; fold membership comes from a seeded
    permutation (row i of the permutation lands in fold i mod `folds`).
    Candidate predictions on held-out folds are combined by non-negative
    least squares against the observed outcome and the solution is
    normalized to the simplex.  An all-zero NNLS solution falls back to the
    single candidate with the smallest cross-validated risk.  Squared-error
    loss is used for both outcome kinds (binary outcomes are stacked on the
    probability scale).
    """
    n = data.n
    if n < folds:
        raise ValueError(f"need at least {folds} rows for {folds}-fold stacking")
    if not candidates:
        raise ValueError("need at least one candidate")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    fold_of = np.empty(n, dtype=int)
    for i in range(folds):
        fold_of[perm[i::folds]] = i

    binary = data.outcome_kind == "binary"
    cv_pred = np.zeros((n, len(candidates)))
    for c, spec in enumerate(candidates):
        for f in range(folds):
            train = np.where(fold_of != f)[0]
            test = np.where(fold_of == f)[0]
            sub = data.take(train)
            bound = bind_design(sub, spec)
            fit = _fit_glm(bound, sub)
            D_test = bound.matrix(data.X[test], data.t[test])
            pred = fit.predict_prob(D_test) if binary else fit.predict(D_test)
            cv_pred[test, c] = pred

    weights, _ = nnls(cv_pred, data.y)
    cv_risks = ((cv_pred - data.y[:, None]) ** 2).mean(axis=0)
    if weights.sum() <= 0:
        weights = np.zeros(len(candidates))
        weights[int(np.argmin(cv_risks))] = 1.0
    weights = weights / weights.sum()

    fits, binds = [], []
    for spec in candidates:
        bound = bind_design(data, spec)
        binds.append(bound)
        fits.append(_fit_glm(bound, data))
    return SuperLearnerSpec(
        candidates=tuple(candidates),
        folds=folds,
        weights=weights,
        fits=fits,
        binds=binds,
        cv_risks=cv_risks,
    )


# ---------------------------------------------------------------------------
# outcome fitting


def fit_outcome(data: Dataset, regime, truth_spec: Optional[DesignSpec] = None, seed=0):
    """Fit the outcome model for a regime and wrap it as an OutcomeFit.

    correct    GLM on the caller-supplied `truth_spec` (simulation use),
    mainterms  GLM on intercept + covariate mains + treatment dummies,
    ml         super learner over the three standard candidates.

    Gaussian link for continuous outcomes, logit for binary.
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    binary = data.outcome_kind == "binary"

    if regime == "correct":
        if truth_spec is None:
            raise ValueError("correct regime requires truth_spec")
        spec = truth_spec
        if not spec.includes_treatment_dummies:
            spec = DesignSpec(spec.terms, includes_treatment_dummies=True)
    elif regime == "mainterms":
        spec = _mainterms_spec(data, with_dummies=True)
    else:
        spec = None  # super learner path below

    if spec is not None:
        bound = bind_design(data, spec)
        fit = _fit_glm(bound, data)

        def predict(level, X, bound=bound, fit=fit):
            return _glm_predict(bound, fit, binary, level, X)

        def refit(new_data, new_seed, regime=regime, truth_spec=truth_spec):
            return fit_outcome(new_data, regime, truth_spec, seed=new_seed)

        desc = f"{'logistic' if binary else 'ols'} regression, {regime} design ({bound.n_columns} columns)"
        return OutcomeFit(regime, data.outcome_kind, data.k, desc, predict, refit)

    candidates = (
        _mainterms_spec(data, with_dummies=True),
        _rich_parametric_spec(data, with_dummies=True),
        _additive_spline_spec(data, with_dummies=True),
    )
    sl = fit_super_learner(data, candidates, folds=_SL_FOLDS, seed=seed)

    def predict(level, X, sl=sl, binary=binary):
        out = np.zeros(X.shape[0])
        for w, bound, fit in zip(sl.weights, sl.binds, sl.fits):
            if w == 0.0:
                continue
            out += w * _glm_predict(bound, fit, binary, level, X)
        return out

    def refit(new_data, new_seed):
        return fit_outcome(new_data, "ml", seed=new_seed)

    wtxt = "/".join(f"{w:.2f}" for w in sl.weights)
    desc = f"super learner ({len(candidates)} candidates, {sl.folds}-fold cv, weights {wtxt})"
    fit_obj = OutcomeFit("ml", data.outcome_kind, data.k, desc, predict, refit)
    object.__setattr__(fit_obj, "super_learner", sl)
    return fit_obj


# ---------------------------------------------------------------------------
# propensity fitting


def _propensity_from_design(data: Dataset, bound: BoundDesign, regime, desc):
    D = bound.matrix(data.X)
    mfit = fit_multinomial(D, data.t, data.k)
    probs = predict_probs(mfit, D)

    def predict(Xnew, bound=bound, mfit=mfit):
        return predict_probs(mfit, bound.matrix(Xnew))

    return PropensityFit(regime, data.k, probs, desc, mfit.converged, predict)


def _spline_groups(data: Dataset):
    """Candidate column groups for the stepwise treatment model.

    Continuous covariates contribute a linear group and a curvature group
    (the nonlinear natural-spline columns); binary covariates contribute a
    main group; each continuous covariate also pairs with each binary one
    through linear-by-binary and curvature-by-binary interaction groups.
    Hierarchy: curvature needs its linear term, interactions need both
    parents.
    """
    groups = {}
    continuous, binaries = [], []
    for j, name in enumerate(data.columns):
        x = data.X[:, j]
        if _is_binary_column(x):
            binaries.append((j, name))
            groups[name] = (x[:, None], frozenset())
        else:
            continuous.append((j, name))
            knots = _spline_knots(x, 3)
            basis = _natural_cubic_basis(x, knots)
            groups[name] = (basis[:, :1], frozenset())
            groups[f"{name}.curv"] = (basis[:, 1:], frozenset({name}))
    for j, cname in continuous:
        for jj, bname in binaries:
            b = data.X[:, jj][:, None]
            lin = groups[cname][0] * b
            curv = groups[f"{cname}.curv"][0] * b
            groups[f"{cname}:{bname}"] = (lin, frozenset({cname, bname}))
            groups[f"{cname}.curv:{bname}"] = (
                curv,
                frozenset({f"{cname}.curv", f"{cname}:{bname}"}),
            )
    return groups


def _stepwise_multinomial(data: Dataset):
    """Forward group selection on the spline basis under BIC.

    Starts from the intercept-only model and greedily adds the eligible
    group with the best BIC until no addition improves it.  Parameter count
    is (k-1) per design column.  Weak treatment-covariate signal therefore
    yields a deliberately sparse model, mirroring how adaptive spline
    classifiers behave under light confounding.
    """
    n, k = data.n, data.k
    groups = _spline_groups(data)
    logn = np.log(n)

    def fit_cols(D):
        mfit = fit_multinomial(D, data.t, k)
        P = predict_probs(mfit, D)
        ll = float(np.log(P[np.arange(n), data.t - 1]).sum())
        return mfit, ll

    D = np.ones((n, 1))
    chosen = []
    _, ll = fit_cols(D)
    bic = -2.0 * ll + (k - 1) * D.shape[1] * logn
    while True:
        best = None
        for name, (cols, needs) in groups.items():
            if name in chosen or not needs.issubset(chosen):
                continue
            D_try = np.column_stack([D, cols])
            _, ll_try = fit_cols(D_try)
            bic_try = -2.0 * ll_try + (k - 1) * D_try.shape[1] * logn
            if bic_try < bic - 1e-9 and (best is None or bic_try < best[0]):
                best = (bic_try, name, D_try)
        if best is None:
            break
        bic, picked, D = best
        chosen.append(picked)
    mfit, _ = fit_cols(D)
    return mfit, tuple(chosen)


def fit_propensity(data: Dataset, regime, truth_spec: Optional[DesignSpec] = None):
    """Fit the treatment model for a regime and wrap it as a PropensityFit.

    correct    multinomial GLM on the caller-supplied `truth_spec`,
    mainterms  multinomial GLM on intercept + covariate mains,
    ml         forward-BIC spline multinomial (see _stepwise_multinomial).
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    if regime == "correct":
        if truth_spec is None:
            raise ValueError("correct regime requires truth_spec")
        spec = DesignSpec(truth_spec.terms, includes_treatment_dummies=False)
        bound = bind_design(data, spec)
        return _propensity_from_design(
            data, bound, regime, f"multinomial GLM, supplied design ({bound.n_columns} columns)"
        )
    if regime == "mainterms":
        spec = _mainterms_spec(data, with_dummies=False)
        bound = bind_design(data, spec)
        return _propensity_from_design(
            data, bound, regime, f"multinomial GLM, main terms ({bound.n_columns} columns)"
        )

    mfit, chosen = _stepwise_multinomial(data)

    # rebuild the selected design on new rows by re-deriving each group's
    # columns from frozen per-column knots
    frozen = {}
    for j, name in enumerate(data.columns):
        x = data.X[:, j]
        if not _is_binary_column(x):
            frozen[name] = _spline_knots(x, 3)

    def group_columns(Xnew, name):
        parent, _, bname = name.partition(":")
        if ":" in name:
            cont = parent.replace(".curv", "")
            basis = _natural_cubic_basis(Xnew[:, data.column_index(cont)], frozen[cont])
            part = basis[:, 1:] if ".curv" in parent else basis[:, :1]
            jb = data.column_index(bname)
            return part * Xnew[:, jb][:, None]
        if name.endswith(".curv"):
            cont = name[: -len(".curv")]
            basis = _natural_cubic_basis(Xnew[:, data.column_index(cont)], frozen[cont])
            return basis[:, 1:]
        j = data.column_index(name)
        if name in frozen:
            basis = _natural_cubic_basis(Xnew[:, j], frozen[name])
            return basis[:, :1]
        return Xnew[:, j][:, None]

    def predict(Xnew, chosen=chosen, mfit=mfit):
        cols = [np.ones((Xnew.shape[0], 1))]
        for name in chosen:
            cols.append(group_columns(Xnew, name))
        return predict_probs(mfit, np.column_stack(cols))

    probs = predict(data.X)
    desc = f"stepwise spline multinomial (BIC, {len(chosen)} groups: {', '.join(chosen) or 'intercept only'})"
    return PropensityFit("ml", data.k, probs, desc, mfit.converged, predict)
