"""scikit-learn compatible wrappers.

:class:`FragmentationPropagator` is a transformer mapping rows of initial
densities to densities at a later time, so propagators over consecutive
intervals chain in a :class:`~sklearn.pipeline.Pipeline`.
:class:`WeightConstructor` fits an admissible weight for a family.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .coefficients import CoefficientFamily
from .solver import SolverConfig, evolution_matrix
from .weights import construct_weight


def _check_family(family):
    if not isinstance(family, CoefficientFamily):
        raise TypeError("family must be a CoefficientFamily")
    return family


class FragmentationPropagator(TransformerMixin, BaseEstimator):
    """Apply the evolution matrix ``U(t, s)`` to each row of ``X``.

    Parameters
    ----------
    family : CoefficientFamily
    s, t : float
        Initial and final time, ``s <= t``.
    n_max : int
        Truncation size; ``X`` must have ``n_max`` columns.
    method : {'adaptive_rk', 'voc_recursion', 'product_oracle'}
    rel_tol, abs_tol : float
        Solver tolerances.
    rescaled : bool
        Use ``V(t, s) = e^{-(t-s)} U(t, s)`` instead of ``U``.
    """

    def __init__(self, family=None, s=0.0, t=1.0, n_max=16, method="adaptive_rk",
                 rel_tol=1e-10, abs_tol=1e-14, rescaled=False):
        self.family = family
        self.s = s
        self.t = t
        self.n_max = n_max
        self.method = method
        self.rel_tol = rel_tol
        self.abs_tol = abs_tol
        self.rescaled = rescaled

    def fit(self, X=None, y=None):
        family = _check_family(self.family)
        if X is not None:
            X = check_array(X, dtype=float)
            if X.shape[1] != self.n_max:
                raise ValueError(f"X has {X.shape[1]} columns, expected n_max={self.n_max}")
        cfg = SolverConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol, method=self.method)
        self.evolution_matrix_ = evolution_matrix(
            family, self.s, self.t, self.n_max, cfg, rescaled=self.rescaled
        )
        self.n_features_in_ = self.n_max
        return self

    def transform(self, X):
        check_is_fitted(self, "evolution_matrix_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        return X @ self.evolution_matrix_.entries.T

    def get_feature_names_out(self, input_features=None):
        return np.array([f"u{n}" for n in range(1, self.n_max + 1)], dtype=object)


class WeightConstructor(BaseEstimator):
    """Iteratively build ``w`` with sampled ratio at most ``kappa_target``.

    After :meth:`fit`, ``weight_`` holds the sequence and ``certificate_``
    the full :class:`~discfrag.weights.WeightCertificate`.
    """

    def __init__(self, family=None, kappa_target=0.5, n_max=16, times=(0.0,)):
        self.family = family
        self.kappa_target = kappa_target
        self.n_max = n_max
        self.times = times

    def fit(self, X=None, y=None):
        family = _check_family(self.family)
        self.certificate_ = construct_weight(family, self.kappa_target, self.n_max, self.times)
        self.weight_ = self.certificate_.w
        self.kappa_hat_ = self.certificate_.kappa_hat
        return self

    def transform(self, X):
        """Weighted norms of the rows of ``X``."""
        check_is_fitted(self, "weight_")
        X = check_array(X, dtype=float)
        return np.abs(X) @ self.weight_[: X.shape[1]]
