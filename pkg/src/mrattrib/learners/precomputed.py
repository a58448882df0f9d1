"""Learners backed by externally computed predictions (e.g. boosting or neural nets).

The prediction file is a CSV with columns ``row_id,prediction``; ``row_id`` is
the 0-based position of the row in a reference feature matrix. At predict time
rows are matched to the reference by value.
"""

import csv

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin
from sklearn.utils.validation import check_array

from ..exceptions import InputError, SchemaError


def read_predictions(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"row_id", "prediction"}:
            raise SchemaError(f"{path}: expected header 'row_id,prediction'")
        rows = [(int(r["row_id"]), float(r["prediction"])) for r in reader]
    rows.sort()
    ids = [r[0] for r in rows]
    if ids != list(range(len(ids))):
        raise SchemaError(f"{path}: row_id must enumerate 0..n-1")
    return np.array([r[1] for r in rows])


class _Precomputed(BaseEstimator):
    def __init__(self, predictions, reference):
        self.predictions = predictions
        self.reference = reference

    def fit(self, X=None, y=None):
        ref = check_array(self.reference, dtype=np.float64)
        pred = np.asarray(self.predictions, dtype=np.float64).ravel()
        if len(pred) != len(ref):
            raise InputError(f"{len(pred)} predictions for {len(ref)} reference rows")
        self.lookup_ = {row.tobytes(): v for row, v in zip(ref, pred)}
        return self

    def _values(self, X):
        X = check_array(X, dtype=np.float64)
        try:
            return np.array([self.lookup_[row.tobytes()] for row in X])
        except KeyError as exc:
            raise InputError("row not present in the precomputed reference") from exc

    @classmethod
    def from_csv(cls, path, reference):
        return cls(read_predictions(path), reference)


class PrecomputedRegressor(RegressorMixin, _Precomputed):
    def predict(self, X):
        return self._values(X)


class PrecomputedClassifier(ClassifierMixin, _Precomputed):
    """Predictions are probabilities of label 1."""

    def fit(self, X=None, y=None):
        super().fit(X, y)
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X):
        p1 = np.clip(self._values(X), 0.0, 1.0)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(int)
