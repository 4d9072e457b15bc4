"""
Attribute Model
Per-node binary, categorical and continuous attribute columns
"""
from typing import Dict, List, Optional
import enum

import numpy as np

from estimnet.exceptions import ConfigurationError, PreconditionError

# Marker for a missing binary or categorical value
MISSING = -1


class AttributeKind(str, enum.Enum):
    """Kinds of nodal attribute"""
    BINARY = "binary"
    CATEGORICAL = "categorical"
    CONTINUOUS = "continuous"


class AttributeSet:
    """
    Named attribute columns, each with exactly n entries.

    Binary columns hold 0/1 and categorical columns hold dense codes
    0..K-1, both with MISSING for absent values. Continuous columns are
    float64 with NaN for absent values.
    """

    def __init__(self, n: int):
        self.n = n
        self.binary: Dict[str, np.ndarray] = {}
        self.categorical: Dict[str, np.ndarray] = {}
        self.continuous: Dict[str, np.ndarray] = {}

    def __repr__(self):
        return (
            f"<AttributeSet n={self.n} binary={list(self.binary)} "
            f"categorical={list(self.categorical)} continuous={list(self.continuous)}>"
        )

    def _columns(self, kind: AttributeKind) -> Dict[str, np.ndarray]:
        if kind == AttributeKind.BINARY:
            return self.binary
        if kind == AttributeKind.CATEGORICAL:
            return self.categorical
        return self.continuous

    def add_column(self, kind: AttributeKind, name: str, values) -> None:
        """Add a column, validating its length and value domain."""
        if kind == AttributeKind.CONTINUOUS:
            column = np.asarray(values, dtype=np.float64)
        else:
            column = np.asarray(values, dtype=np.int64)
        if column.shape != (self.n,):
            raise PreconditionError(f"{kind.value} column '{name}' has {column.size} entries, expected {self.n}")
        if kind == AttributeKind.BINARY:
            bad = ~np.isin(column, (0, 1, MISSING))
            if bad.any():
                raise PreconditionError(f"binary column '{name}' has values outside {{0,1,missing}}")
        elif kind == AttributeKind.CATEGORICAL:
            observed = column[column != MISSING]
            if (observed < 0).any():
                raise PreconditionError(f"categorical column '{name}' has negative codes")
            if observed.size and set(np.unique(observed).tolist()) != set(range(int(observed.max()) + 1)):
                raise PreconditionError(f"categorical column '{name}' codes are not dense from 0")
        self._columns(kind)[name] = column

    def column(self, kind: AttributeKind, name: str) -> np.ndarray:
        columns = self._columns(kind)
        if name not in columns:
            raise ConfigurationError(f"no {kind.value} attribute named '{name}'")
        return columns[name]

    def has_column(self, kind: AttributeKind, name: str) -> bool:
        return name in self._columns(kind)

    def names(self, kind: AttributeKind) -> List[str]:
        return list(self._columns(kind))

    def column_as_list(self, kind: AttributeKind, name: str) -> List[Optional[float]]:
        """Column as a Python list with None for missing values."""
        column = self.column(kind, name)
        if kind == AttributeKind.CONTINUOUS:
            return [None if np.isnan(v) else float(v) for v in column.tolist()]
        return [None if v == MISSING else int(v) for v in column.tolist()]
