"""Pairwise comparison of per-facet (or per-tet) scalar fields between runs:
Pearson correlation in the lower triangle, normalized RMS error in percent
in the upper triangle, with optional capping of large openings and a
four-level severity classification per cell."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class CompareError(Exception):
    pass


@dataclass(frozen=True)
class FieldSample:
    label: str
    values: np.ndarray
    mesh_hash: str | None = None

    def __post_init__(self):
        v = np.asarray(self.values, float)
        if v.ndim != 1 or len(v) <= 1:
            raise CompareError(f"{self.label}: field needs more than one value")
        if not np.all(np.isfinite(v)):
            raise CompareError(f"{self.label}: non-finite values")
        object.__setattr__(self, "values", v)


# classification thresholds: (min correlation, max NRMSE %)
SEVERITY_CLASSES = (
    ("practically identical", 0.999, 1.0),
    ("minor", 0.9, 5.0),
    ("major", 0.8, 10.0),
)


def classify_correlation(corr: float) -> str:
    for name, c_min, _ in SEVERITY_CLASSES:
        if corr >= c_min:
            return name
    return "largely different"


def classify_nrmse(err: float) -> str:
    for name, _, e_max in SEVERITY_CLASSES:
        if err < e_max:
            return name
    return "largely different"


def pearson(a: FieldSample, b: FieldSample) -> float:
    """Product-moment correlation of two equally sized fields."""
    _check_pair(a, b)
    x, y = a.values, b.values
    sx, sy = x.std(), y.std()
    if sx == 0.0 and sy == 0.0:
        raise CompareError("correlation undefined: both fields constant")
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return float(np.corrcoef(x, y)[0, 1])


def nrmse(a: FieldSample, b: FieldSample, normalization: float) -> float:
    """100/normalization * sqrt(mean squared difference), in percent."""
    _check_pair(a, b)
    if normalization <= 0.0:
        raise CompareError("NRMSE normalization must be positive")
    return 100.0 / normalization * float(
        np.sqrt(np.mean((a.values - b.values) ** 2)))


def _check_pair(a: FieldSample, b: FieldSample):
    if len(a.values) != len(b.values):
        raise CompareError(
            f"field size mismatch: {a.label} has {len(a.values)}, "
            f"{b.label} has {len(b.values)}")
    if a.mesh_hash and b.mesh_hash and a.mesh_hash != b.mesh_hash:
        raise CompareError(
            f"fields {a.label} and {b.label} come from different meshes")


@dataclass
class ComparisonMatrix:
    labels: list
    correlation: np.ndarray       # lower triangle
    error: np.ndarray             # upper triangle, percent
    corr_class: list              # lower-triangle severity labels
    error_class: list             # upper-triangle severity labels
    reference: str
    normalization: float

    def to_text(self) -> str:
        n = len(self.labels)
        width = max(10, max(len(l) for l in self.labels) + 2)
        out = [" " * width + "".join(f"{l:>{width}}" for l in self.labels)]
        for i in range(n):
            row = [f"{self.labels[i]:>{width}}"]
            for j in range(n):
                if i == j:
                    row.append(f"{'-':>{width}}")
                elif i < j:
                    row.append(f"{self.error[i, j]:>{width}.3f}")
                else:
                    row.append(f"{self.correlation[i, j]:>{width}.3f}")
            out.append("".join(row))
        out.append(f"(lower: correlation, upper: NRMSE % "
                   f"normalized by max of '{self.reference}')")
        return "\n".join(out)

    def to_csv(self) -> str:
        lines = ["a,b,correlation,nrmse_pct,corr_class,nrmse_class"]
        n = len(self.labels)
        for i in range(n):
            for j in range(i + 1, n):
                lines.append(
                    f"{self.labels[i]},{self.labels[j]},"
                    f"{float(self.correlation[j, i])!r},"
                    f"{float(self.error[i, j])!r},"
                    f"{self.corr_class[j][i]},{self.error_class[i][j]}")
        return "\n".join(lines) + "\n"


def compare_fields(runs, reference: str,
                   cap: float | None = None) -> ComparisonMatrix:
    """All-pairs comparison.  A cap (mm) is applied elementwise to every
    field before any metric, to suppress detached-fragment outliers; the
    NRMSE normalization is the maximum of the (capped) reference field."""
    labels = [r.label for r in runs]
    if reference not in labels:
        raise CompareError(f"reference {reference!r} not among {labels}")
    if cap is not None:
        runs = [FieldSample(r.label, np.minimum(r.values, cap), r.mesh_hash)
                for r in runs]
    ref = runs[labels.index(reference)]
    norm = float(np.max(ref.values))
    if norm <= 0.0:
        raise CompareError("reference field has no positive values")

    n = len(runs)
    corr = np.full((n, n), np.nan)
    err = np.full((n, n), np.nan)
    corr_cls = [[""] * n for _ in range(n)]
    err_cls = [[""] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            c = pearson(runs[i], runs[j])
            e = nrmse(runs[i], runs[j], norm)
            corr[j, i] = c
            err[i, j] = e
            corr_cls[j][i] = classify_correlation(c)
            err_cls[i][j] = classify_nrmse(e)
    return ComparisonMatrix(labels, corr, err, corr_cls, err_cls,
                            reference, norm)


def load_field_dump(path) -> FieldSample:
    """Read a crack-opening or volumetric-strain dump (see runner) and return
    the scalar column as a FieldSample labeled by the file stem."""
    import pathlib
    mesh_hash = None
    ids, vals = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                tok = line[1:].split()
                if len(tok) == 2 and tok[0] == "mesh":
                    mesh_hash = tok[1]
                continue
            if not line:
                continue
            tok = line.split()
            ids.append(int(tok[0]))
            vals.append(float(tok[-1]))
    order = np.argsort(ids)
    return FieldSample(pathlib.Path(path).stem,
                       np.asarray(vals, float)[order], mesh_hash)
