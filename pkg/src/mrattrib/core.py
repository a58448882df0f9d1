"""Domain types: two-sample data, causal structure, change vectors, outcome functionals."""

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import CapacityError, InputError, SchemaError, StructureError

EXACT_ENUMERATION_CAP = 12
FUNCTIONAL_KINDS = ("mean", "second_moment", "cdf_at")


@dataclass(frozen=True)
class Functional:
    """Outcome summary ``theta(P) = E_P[h(Y)]``.

    ``kind`` is ``"mean"`` (h(y) = y), ``"second_moment"`` (y**2) or
    ``"cdf_at"`` (1{y <= u}).
    """

    kind: str = "mean"
    u: float = None

    def __post_init__(self):
        if self.kind not in FUNCTIONAL_KINDS:
            raise InputError(f"functional kind must be one of {FUNCTIONAL_KINDS}, got {self.kind!r}")
        if self.kind == "cdf_at":
            if self.u is None or not math.isfinite(self.u):
                raise InputError("cdf_at requires a finite threshold u")
        else:
            object.__setattr__(self, "u", None)

    def __call__(self, y):
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "mean":
            return y.copy()
        if self.kind == "second_moment":
            return y**2
        return (y <= self.u).astype(np.float64)

    @classmethod
    def parse(cls, text):
        """Parse ``"mean"``, ``"second_moment"`` or ``"cdf_at:<u>"``."""
        if isinstance(text, cls):
            return text
        kind, _, rest = str(text).partition(":")
        if kind == "cdf_at":
            try:
                return cls("cdf_at", float(rest))
            except ValueError as exc:
                raise InputError(f"bad cdf_at threshold in {text!r}") from exc
        return cls(kind)

    def __str__(self):
        return f"cdf_at:{self.u!r}" if self.kind == "cdf_at" else self.kind


def functional_eval(h, y):
    if not math.isfinite(y):
        raise InputError(f"outcome must be finite, got {y}")
    return float(h(np.array([y]))[0])


@dataclass(frozen=True)
class ChangeVector:
    """Which mechanisms follow sample 1: bits ``(c_1..c_K, c_{K+1})``, the last for Y|X."""

    bits: tuple

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if len(bits) < 2:
            raise InputError("a change vector needs at least 2 bits (K >= 1)")
        if any(b not in (0, 1) for b in bits):
            raise InputError(f"change vector bits must be 0/1, got {self.bits}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            value = value.strip().strip("<>()[]").replace(",", "").replace(" ", "")
            if not set(value) <= {"0", "1"}:
                raise InputError(f"change vector must be a 0/1 string, got {value!r}")
        return cls(tuple(int(b) for b in value))

    @property
    def K(self):
        return len(self.bits) - 1

    def __len__(self):
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def __str__(self):
        return "".join(map(str, self.bits))

    def with_bit(self, k, value=1):
        b = list(self.bits)
        b[k] = value
        return ChangeVector(tuple(b))

    @property
    def is_observed(self):
        return len(set(self.bits)) == 1


def enumerate_change_vectors(K, cap=EXACT_ENUMERATION_CAP):
    """All ``2**(K+1)`` change vectors in lexicographic order."""
    if K < 1:
        raise InputError("K must be >= 1")
    if cap is not None and K + 1 > cap:
        raise CapacityError(
            f"exact enumeration of 2^{K + 1} change vectors exceeds the cap K+1 <= {cap}; "
            "use PATH attribution or sampled Shapley values"
        )
    return [ChangeVector(b) for b in itertools.product((0, 1), repeat=K + 1)]


def path_vectors(K):
    """``b_0 .. b_{K+1}``: the first k mechanisms switched to sample 1."""
    return [ChangeVector((1,) * k + (0,) * (K + 1 - k)) for k in range(K + 2)]


@dataclass(frozen=True)
class CausalStructure:
    """Causal ordering of the explanatory variables plus optional parent sets.

    ``parents`` maps a variable name to the names of its parents; variables
    not listed default to all their predecessors. Each pair in
    ``independence_flags`` removes the edge between two variables, declaring
    them conditionally independent given the remaining parents. With
    ``mutually_independent`` every parent set is empty. The outcome always
    depends on all explanatory variables.
    """

    ordering: tuple
    parents: dict = field(default=None)
    independence_flags: tuple = ()
    mutually_independent: bool = False

    def __post_init__(self):
        ordering = tuple(str(v) for v in self.ordering)
        if len(ordering) < 1:
            raise StructureError("ordering must name at least one explanatory variable")
        if len(set(ordering)) != len(ordering):
            raise StructureError("ordering contains duplicate names")
        object.__setattr__(self, "ordering", ordering)
        pos = {v: i for i, v in enumerate(ordering)}
        given = dict(self.parents or {})
        for v in given:
            if v not in pos:
                raise StructureError(f"parents given for unknown variable {v!r}")
        parent_idx = []
        for i, v in enumerate(ordering):
            if self.mutually_independent:
                pa = set()
            elif v in given:
                pa = set()
                for u in given[v]:
                    if u not in pos:
                        raise StructureError(f"unknown parent {u!r} of {v!r}")
                    if pos[u] >= i:
                        raise StructureError(
                            f"{u!r} is listed as a parent of {v!r} but does not precede it in the ordering"
                        )
                    pa.add(pos[u])
            else:
                pa = set(range(i))
            parent_idx.append(pa)
        flags = []
        for pair in self.independence_flags:
            a, b = tuple(pair)
            if a not in pos or b not in pos or a == b:
                raise StructureError(f"independence flag {pair!r} references invalid variables")
            i, j = sorted((pos[a], pos[b]))
            parent_idx[j].discard(i)
            flags.append((ordering[i], ordering[j]))
        object.__setattr__(self, "independence_flags", tuple(flags))
        object.__setattr__(self, "_parent_idx", tuple(frozenset(p) for p in parent_idx))

    @classmethod
    def chain(cls, names):
        return cls(tuple(names))

    @property
    def K(self):
        return len(self.ordering)

    def parent_indices(self, k):
        """0-based parent indices of the k-th (0-based) explanatory variable."""
        return self._parent_idx[k]

    def ancestors(self):
        """0-based ancestor sets of every explanatory variable."""
        anc = []
        for k in range(self.K):
            a = set()
            for p in self._parent_idx[k]:
                a |= {p} | anc[p]
            anc.append(a)
        return anc

    @property
    def is_default(self):
        return all(self._parent_idx[k] == frozenset(range(k)) for k in range(self.K))

    def to_dict(self):
        return {
            "ordering": list(self.ordering),
            "parents": {v: [self.ordering[p] for p in sorted(self._parent_idx[k])]
                        for k, v in enumerate(self.ordering)},
            "independence_flags": [list(f) for f in self.independence_flags],
            "mutually_independent": self.mutually_independent,
        }


@dataclass(frozen=True, eq=False)
class TwoSampleDataset:
    """Rows of ``(T, X_1..X_K, Y)`` with ``T`` the sample indicator."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    names: tuple = None
    outcome_name: str = "Y"

    def __post_init__(self):
        t = np.asarray(self.t)
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if x.ndim == 1:
            x = x[:, None]
        if t.ndim != 1 or len(t) != len(x) or len(y) != len(x):
            raise InputError("t, x and y must have the same number of rows")
        if not np.all(np.isin(t, (0, 1))):
            raise InputError("every row must have t in {0, 1}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InputError("x and y must be finite (no missing values)")
        t = t.astype(np.int64)
        if not np.any(t == 0):
            raise InputError("empty sample 0")
        if not np.any(t == 1):
            raise InputError("empty sample 1")
        names = tuple(f"X{k + 1}" for k in range(x.shape[1])) if self.names is None else tuple(self.names)
        if len(names) != x.shape[1]:
            raise SchemaError(f"{len(names)} names for {x.shape[1]} explanatory columns")
        for k, v in (("t", t), ("x", x), ("y", y), ("names", names)):
            object.__setattr__(self, k, v)
        for arr in (t, x, y):
            arr.setflags(write=False)

    @property
    def n0(self):
        return int(np.sum(self.t == 0))

    @property
    def n1(self):
        return int(np.sum(self.t == 1))

    @property
    def K(self):
        return self.x.shape[1]

    def __len__(self):
        return len(self.t)

    @classmethod
    def from_csv(cls, path, treatment="T"):
        """Read a CSV with a ``T`` column, explanatory columns in causal order and the outcome last."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = [h.strip() for h in next(reader)]
            except StopIteration:
                raise SchemaError(f"{path}: empty file") from None
            rows = [r for r in reader if r]
        if treatment not in header:
            raise SchemaError(f"{path}: required column {treatment!r} missing")
        if header[-1] == treatment or len(header) < 3:
            raise SchemaError(f"{path}: need T, at least one explanatory column and a final outcome column")
        ti = header.index(treatment)
        xcols = [i for i in range(len(header) - 1) if i != ti]
        try:
            data = np.array([[float(v) for v in r] for r in rows], dtype=np.float64)
        except ValueError as exc:
            raise InputError(f"{path}: non-numeric value ({exc})") from exc
        if data.ndim != 2 or data.shape[1] != len(header):
            raise SchemaError(f"{path}: ragged rows")
        tv = data[:, ti]
        if not np.all(np.isin(tv, (0.0, 1.0))):
            raise InputError(f"{path}: column {treatment!r} must be 0/1")
        return cls(tv.astype(np.int64), data[:, xcols], data[:, -1],
                   names=tuple(header[i] for i in xcols), outcome_name=header[-1])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["T", *self.names, self.outcome_name])
            for ti, xi, yi in zip(self.t, self.x, self.y):
                w.writerow([int(ti), *(repr(float(v)) for v in xi), repr(float(yi))])


@dataclass(frozen=True, eq=False)
class ValidatedModel:
    """A dataset bound to a causal structure whose ordering matches its columns."""

    data: TwoSampleDataset
    structure: CausalStructure

    @property
    def X(self):
        return self.data.x

    @property
    def y(self):
        return self.data.y

    @property
    def t(self):
        return self.data.t

    @property
    def K(self):
        return self.data.K


def validate_structure(data, structure=None):
    """Bind ``data`` to ``structure`` after checking names and sample sizes."""
    if structure is None:
        structure = CausalStructure(data.names)
    if tuple(data.names) != tuple(structure.ordering):
        raise SchemaError(
            f"data columns {list(data.names)} do not match the causal ordering {list(structure.ordering)}"
        )
    if data.n0 < 1:
        raise InputError("empty sample 0")
    if data.n1 < 1:
        raise InputError("empty sample 1")
    return ValidatedModel(data, structure)
