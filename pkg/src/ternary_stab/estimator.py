"""Scikit-learn style front end for the direct-method extraction."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .iteration import extract_map
from .scenarios import MapUnderTest
from .trif import make_params
from .validation import as_element


class HomomorphismExtractor(BaseEstimator, TransformerMixin):
    """Learn the exact homomorphism approximated by a perturbed map.

    ``fit`` consumes a :class:`~ternary_stab.scenarios.MapUnderTest` and
    runs the scaled iteration on the matrix-unit basis of its domain;
    ``predict``/``transform`` then apply the learned linear map to new
    elements. Parameter handling follows the scikit-learn estimator
    contract (``get_params``/``set_params``/``clone``).

    Parameters
    ----------
    d, l : int
        Equation parameters with 2 <= l <= d-1.
    n_max : int
        Iteration depth cap per basis element.
    tol : float
        Relative gap threshold for convergence.

    Attributes
    ----------
    map_matrix_ : ndarray
        Learned (out_dim, in_dim) complex matrix acting on row-major
        vectorized elements.
    n_used_ : int
        Largest iteration depth used across basis elements.
    domain_shape_, codomain_shape_ : tuple
    extraction_ : ExtractedMap
        Full extraction record including provenance.
    """

    def __init__(self, d: int = 3, l: int = 2, n_max: int = 20, tol: float = 1e-10):
        self.d = d
        self.l = l
        self.n_max = n_max
        self.tol = tol

    def fit(self, X, y=None):
        """Extract the limiting map of ``X`` (a map under test)."""
        if not isinstance(X, MapUnderTest):
            raise TypeError(
                "X must be a MapUnderTest; wrap a raw callable with the "
                "scenario factories or construct MapUnderTest directly"
            )
        params = make_params(self.d, self.l)
        extraction = extract_map(X, params, n_max=self.n_max, tol=self.tol,
                                 control=X.control)
        self.extraction_ = extraction
        self.map_matrix_ = extraction.matrix
        self.n_used_ = extraction.n_used
        self.domain_shape_ = tuple(extraction.domain_shape)
        self.codomain_shape_ = tuple(extraction.codomain_shape)
        return self

    def predict(self, X):
        """Apply the learned map to one element or a stack of elements."""
        check_is_fitted(self, "map_matrix_")
        arr = np.asarray(X, dtype=np.complex128)
        if arr.ndim == 2:
            return self.extraction_.apply(arr)
        if arr.ndim == 3:
            return np.stack([
                self.extraction_.apply(as_element(a, shape=self.domain_shape_))
                for a in arr
            ])
        raise ValueError(
            f"X must be a single matrix or a 3-d stack, got ndim={arr.ndim}"
        )

    def transform(self, X):
        return self.predict(X)


__all__ = ["HomomorphismExtractor"]
