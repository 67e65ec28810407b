"""Two-step Runge-Kutta method representations and conversions.

A k-step, s-stage method is stored in coefficient form::

    y_1 = u^n
    y_i = sum_l D[i,l] u^{n-k+l} + dt sum_l Ahat[i,l] F(u^{n-k+l})
          + dt sum_{j<i} A[i,j] F(y_j)                  (2 <= i <= s)
    u^{n+1} = sum_l theta[l] u^{n-k+l} + dt sum_l bhat[l] F(u^{n-k+l})
              + dt sum_j b[j] F(y_j)

with the convention that the columns of ``D``/``theta`` run from the oldest
step value ``u^{n-k+1}`` to the current one ``u^n``, and the ``hat`` arrays
hold the weights on the derivative of the older step values (k-1 columns).
One-step methods are embedded as k=2 with zero weights on ``u^{n-1}`` so a
single certification and stepping path serves both.

Two derived representations are provided: the compact (S, T) matrix pair
used for SSP analysis, and the convex-combination (Shu-Osher) form
(R, P, r) on which the integrating factor steppers operate.
"""

import os
import re
from dataclasses import dataclass, field

import numpy as np

from .densemat import SingularMatrixError, as_matrix, solve

__all__ = [
    "TableauError",
    "MethodFileError",
    "TsrkMethod",
    "SpijkerForm",
    "CanonicalShuOsherForm",
    "to_spijker",
    "from_spijker",
    "abscissas",
    "to_canonical",
    "save_method",
    "load_method",
    "builtin_registry_dir",
    "registry_names",
    "load_registry",
    "get_method",
]

_ROWSUM_TOL = 1e-12


class TableauError(ValueError):
    """Coefficient arrays violate the structural method invariants."""


class MethodFileError(TableauError):
    """A method file could not be parsed."""


@dataclass(frozen=True)
class TsrkMethod:
    """Coefficients of an explicit k-step Runge-Kutta method."""

    name: str
    k: int
    s: int
    order: int
    D: np.ndarray
    Ahat: np.ndarray
    A: np.ndarray
    theta: np.ndarray
    bhat: np.ndarray
    b: np.ndarray
    certified_C: float | None = None
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        k, s = self.k, self.s
        if k < 1:
            raise TableauError(f"step count k={k} must be >= 1")
        if s < 1:
            raise TableauError(f"stage count s={s} must be >= 1")
        arrays = {
            "D": (np.atleast_2d(np.asarray(self.D, dtype=float)), (s, k)),
            "Ahat": (
                np.asarray(self.Ahat, dtype=float).reshape(s, k - 1),
                (s, k - 1),
            ),
            "A": (np.atleast_2d(np.asarray(self.A, dtype=float)), (s, s)),
            "theta": (np.asarray(self.theta, dtype=float).ravel(), (k,)),
            "bhat": (np.asarray(self.bhat, dtype=float).ravel(), (k - 1,)),
            "b": (np.asarray(self.b, dtype=float).ravel(), (s,)),
        }
        for label, (arr, shape) in arrays.items():
            if arr.shape != shape:
                raise TableauError(
                    f"{label} has shape {arr.shape}, expected {shape}"
                )
            if not np.all(np.isfinite(arr)):
                raise TableauError(f"{label} has non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, label, arr)

        if np.any(np.triu(self.A) != 0.0):
            raise TableauError("A must be strictly lower triangular")
        if np.any(self.Ahat[0] != 0.0) or np.any(self.A[0] != 0.0):
            raise TableauError("first stage must be y_1 = u^n (zero weights)")
        first = np.zeros(k)
        first[-1] = 1.0
        if np.any(np.abs(self.D[0] - first) > _ROWSUM_TOL):
            raise TableauError("first stage must carry weight 1 on u^n only")
        rowsums = self.D.sum(axis=1)
        if np.any(np.abs(rowsums - 1.0) > _ROWSUM_TOL):
            raise TableauError("rows of D must sum to 1")
        if abs(self.theta.sum() - 1.0) > _ROWSUM_TOL:
            raise TableauError("theta must sum to 1")


@dataclass(frozen=True)
class SpijkerForm:
    """Compact (S, T) matrix pair of a k-step general linear method.

    ``w = S x + dt T f`` where ``w`` stacks the old step values, the stages
    and ``u^{n+1}``; ``x`` holds the step values and ``f`` the derivative
    evaluations aligned with ``w``.
    """

    S: np.ndarray
    T: np.ndarray
    k: int
    s: int

    def __post_init__(self):
        n = self.k - 1 + self.s + 1
        S = as_matrix(self.S)
        T = as_matrix(self.T, square=True)
        if S.shape != (n, self.k) or T.shape != (n, n):
            raise TableauError(
                f"inconsistent Spijker shapes S{S.shape} T{T.shape} "
                f"for k={self.k}, s={self.s}"
            )
        if np.any(np.abs(S.sum(axis=1) - 1.0) > _ROWSUM_TOL):
            raise TableauError("S rows must sum to 1 (S e = e)")
        if np.any(T[: self.k - 1] != 0.0) or np.any(T[:, -1] != 0.0):
            raise TableauError(
                "T must have zero rows for old step values and a zero last "
                "column (explicit method)"
            )
        S.setflags(write=False)
        T.setflags(write=False)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "T", T)


@dataclass(frozen=True)
class CanonicalShuOsherForm:
    """Convex-combination form (R, P) at parameter r.

    Row i of ``[R P]`` expresses stage i as a combination of the step values
    (R columns) and of forward-Euler-like substeps ``w_j + (dt/r) f_j``
    (P columns).  ``c`` holds the stage time levels aligned with the rows,
    starting at ``-(k-1), ..., -1`` for the old step values.
    """

    r: float
    R: np.ndarray
    P: np.ndarray
    c: np.ndarray
    k: int
    s: int

    def row_sum_defect(self):
        """Max deviation of the [R P] row sums from one."""
        return float(np.abs(self.R.sum(axis=1) + self.P.sum(axis=1) - 1.0).max())


def to_spijker(m: TsrkMethod) -> SpijkerForm:
    """Assemble the (S, T) pair from the coefficient arrays."""
    k, s = m.k, m.s
    n = k - 1 + s + 1
    S = np.zeros((n, k))
    S[: k - 1, : k - 1] = np.eye(k - 1)
    S[k - 1 : k - 1 + s] = m.D
    S[-1] = m.theta
    T = np.zeros((n, n))
    T[k - 1 : k - 1 + s, : k - 1] = m.Ahat
    T[k - 1 : k - 1 + s, k - 1 : k - 1 + s] = m.A
    T[-1, : k - 1] = m.bhat
    T[-1, k - 1 : k - 1 + s] = m.b
    return SpijkerForm(S=S, T=T, k=k, s=s)


def from_spijker(f: SpijkerForm, name="from_spijker", order=0) -> TsrkMethod:
    """Extract the coefficient blocks back out of an (S, T) pair."""
    k, s = f.k, f.s
    return TsrkMethod(
        name=name,
        k=k,
        s=s,
        order=order,
        D=f.S[k - 1 : k - 1 + s],
        Ahat=f.T[k - 1 : k - 1 + s, : k - 1],
        A=f.T[k - 1 : k - 1 + s, k - 1 : k - 1 + s],
        theta=f.S[-1],
        bhat=f.T[-1, : k - 1],
        b=f.T[-1, k - 1 : k - 1 + s],
    )


def abscissas(m: TsrkMethod) -> np.ndarray:
    """Stage time levels aligned with the rows of the Spijker form.

    The leading k-1 entries are the old step values at ``-(k-1), ..., -1``;
    then the stages (the ``u^n`` stage at 0) and finally ``u^{n+1}``, whose
    abscissa equals 1 whenever the method is first-order consistent.
    """
    k, s = m.k, m.s
    l = np.arange(k - 1, -1, -1, dtype=float)
    c = np.empty(k - 1 + s + 1)
    c[: k - 1] = -l[: k - 1]
    c[k - 1 : k - 1 + s] = (
        m.Ahat.sum(axis=1) + m.A.sum(axis=1) - m.D @ l
    )
    c[-1] = m.bhat.sum() + m.b.sum() - m.theta @ l
    return c


def to_canonical(m: TsrkMethod, r: float) -> CanonicalShuOsherForm:
    """Convex-combination form at parameter r: ``P = r (I + rT)^{-1} T`` and
    ``R = (I + rT)^{-1} S``."""
    if r < 0:
        raise TableauError(f"r must be nonnegative, got {r}")
    f = to_spijker(m)
    n = f.T.shape[0]
    try:
        X = solve(np.eye(n) + r * f.T, np.hstack([f.S, r * f.T]))
    except SingularMatrixError as exc:
        raise TableauError(
            f"I + rT singular at r={r}; r outside the feasible range"
        ) from exc
    R = X[:, : m.k]
    P = X[:, m.k :]
    return CanonicalShuOsherForm(r=r, R=R, P=P, c=abscissas(m), k=m.k, s=m.s)


# ---------------------------------------------------------------------------
# Method files and the registry


def _format_array(a):
    return " ".join(f"{x:.17g}" for x in np.asarray(a, dtype=float).ravel())


def save_method(m: TsrkMethod, path):
    """Write a method file (full double precision, row-major arrays)."""
    lines = [
        f"name = {m.name}",
        f"k = {m.k}",
        f"s = {m.s}",
        f"order = {m.order}",
        f"D = {_format_array(m.D)}",
        f"Ahat = {_format_array(m.Ahat)}",
        f"A = {_format_array(m.A)}",
        f"theta = {_format_array(m.theta)}",
        f"bhat = {_format_array(m.bhat)}",
        f"b = {_format_array(m.b)}",
    ]
    if m.certified_C is not None:
        lines.append(f"certified_C = {m.certified_C:.17g}")
    for key, val in m.provenance.items():
        lines.append(f"{key} = {val}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


_REQUIRED_KEYS = ("name", "k", "s", "order", "D", "Ahat", "A", "theta", "bhat", "b")
_PROVENANCE_KEYS = ("seed", "starts_used", "origin")


def load_method(path) -> TsrkMethod:
    """Parse a method file, with line/field diagnostics on malformed input."""
    fields = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise MethodFileError(
                    f"{path}:{lineno}: expected 'key = value', got {raw!r}"
                )
            key, val = (part.strip() for part in line.split("=", 1))
            if key in fields:
                raise MethodFileError(f"{path}:{lineno}: duplicate key {key!r}")
            fields[key] = (val, lineno)

    for key in _REQUIRED_KEYS:
        if key not in fields:
            raise MethodFileError(f"{path}: missing required field {key!r}")

    def _int(key):
        val, lineno = fields[key]
        try:
            return int(val)
        except ValueError as exc:
            raise MethodFileError(
                f"{path}:{lineno}: field {key!r} is not an integer: {val!r}"
            ) from exc

    def _floats(key, count):
        val, lineno = fields[key]
        toks = val.split()
        if len(toks) != count:
            raise MethodFileError(
                f"{path}:{lineno}: field {key!r} has {len(toks)} entries, "
                f"expected {count}"
            )
        try:
            return np.array([float(t) for t in toks])
        except ValueError as exc:
            raise MethodFileError(
                f"{path}:{lineno}: field {key!r} has a non-numeric entry"
            ) from exc

    k = _int("k")
    s = _int("s")
    if k < 1 or s < 1:
        raise MethodFileError(f"{path}: k={k}, s={s} out of range")
    certified = None
    if "certified_C" in fields:
        certified = float(_floats("certified_C", 1)[0])
    provenance = {
        key: fields[key][0] for key in _PROVENANCE_KEYS if key in fields
    }
    try:
        return TsrkMethod(
            name=fields["name"][0],
            k=k,
            s=s,
            order=_int("order"),
            D=_floats("D", s * k).reshape(s, k),
            Ahat=_floats("Ahat", s * (k - 1)).reshape(s, k - 1),
            A=_floats("A", s * s).reshape(s, s),
            theta=_floats("theta", k),
            bhat=_floats("bhat", k - 1),
            b=_floats("b", s),
            certified_C=certified,
            provenance=provenance,
        )
    except TableauError as exc:
        raise MethodFileError(f"{path}: {exc}") from exc


def builtin_registry_dir():
    """Directory holding the method files shipped with the package."""
    return os.path.join(os.path.dirname(__file__), "registry")


def _iter_registry_files(extra_dirs=()):
    dirs = list(extra_dirs) + [builtin_registry_dir()]
    seen = {}
    for d in dirs:
        if not os.path.isdir(d):
            continue
        for fname in sorted(os.listdir(d)):
            if fname.endswith(".txt"):
                stem = fname[:-4]
                seen.setdefault(stem, os.path.join(d, fname))
    return seen


def registry_names(extra_dirs=()):
    """Sorted names available in the registry (user dirs shadow builtin)."""
    return sorted(_iter_registry_files(extra_dirs))


def load_registry(extra_dirs=()):
    """Load every registry method into a name -> method mapping."""
    return {
        stem: load_method(path)
        for stem, path in sorted(_iter_registry_files(extra_dirs).items())
    }


def get_method(name, extra_dirs=()) -> TsrkMethod:
    """Look a method up by name, searching user dirs before the builtin set."""
    files = _iter_registry_files(extra_dirs)
    if name not in files:
        if re.fullmatch(r"[\w()+,-]+", name) is None:
            raise KeyError(f"invalid method name {name!r}")
        raise KeyError(
            f"unknown method {name!r}; available: {', '.join(sorted(files))}"
        )
    return load_method(files[name])
