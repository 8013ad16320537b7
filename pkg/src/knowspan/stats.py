"""Correlation matrices, moderated quadratic OLS, and predicted-curve output.

The design for one model is assembled in a fixed column order: intercept,
controls, then for each predictor its linear and squared term, then the
moderator, then for each predictor its linear-by-moderator and
squared-by-moderator products.  Fitting goes through an SVD of the design
matrix rather than the normal equations; near rank deficiency is an error
that names the collinear terms instead of a silently unstable solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import t as student_t

RANK_TOL = 1e-10

STAR_THRESHOLDS = ((0.001, "***"), (0.05, "**"), (0.1, "*"))


def star_label(p: float) -> str:
    """Significance stars: *** p<0.001, ** p<0.05, * p<0.1."""
    for cutoff, stars in STAR_THRESHOLDS:
        if p < cutoff:
            return stars
    return ""


class RankDeficiencyError(ValueError):
    def __init__(self, terms: tuple[str, ...]):
        super().__init__(
            "design matrix is rank deficient; collinear terms: " + ", ".join(terms)
        )
        self.terms = terms


@dataclass
class AnalysisTable:
    """Named numeric columns of equal length; NaN marks a missing cell."""

    columns: dict[str, np.ndarray]

    def __post_init__(self) -> None:
        if not self.columns:
            raise ValueError("analysis table needs at least one column")
        self.columns = {
            name: np.asarray(values, dtype=np.float64)
            for name, values in self.columns.items()
        }
        lengths = {v.shape for v in self.columns.values()}
        if len(lengths) != 1 or any(len(s) != 1 for s in lengths):
            raise ValueError("all columns must be one-dimensional and equally long")

    @property
    def n(self) -> int:
        return next(iter(self.columns.values())).shape[0]

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise KeyError(f"unknown column {name!r}")
        return self.columns[name]

    def listwise(self, names: tuple[str, ...] | list[str]) -> "AnalysisTable":
        """Restrict to ``names`` and drop every row with any missing cell."""
        selected = [self.column(name) for name in names]
        mask = np.ones(self.n, dtype=bool)
        for values in selected:
            mask &= np.isfinite(values)
        return AnalysisTable(
            {name: values[mask] for name, values in zip(names, selected)}
        )


@dataclass(frozen=True)
class CorrelationMatrix:
    columns: tuple[str, ...]
    r: np.ndarray
    p: np.ndarray
    df: int


def pearson_matrix(
    table: AnalysisTable, columns: tuple[str, ...] | list[str]
) -> CorrelationMatrix:
    """Pairwise Pearson r with two-sided t-test p-values, df = N - 2.

    Listwise deletion over ``columns`` is applied first, so every pair shares
    one N.  A zero-variance column is an error naming the column.
    """
    sub = table.listwise(tuple(columns))
    n = sub.n
    if n < 3:
        raise ValueError(f"need at least 3 complete rows, have {n}")
    data = np.stack([sub.column(name) for name in columns])
    stds = data.std(axis=1)
    for name, std in zip(columns, stds):
        if std == 0.0:
            raise ValueError(f"column {name!r} has zero variance")
    r = np.corrcoef(data)
    df = n - 2
    r_clipped = np.clip(r, -1.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stat = r_clipped * np.sqrt(df / (1.0 - r_clipped**2))
        t_stat = np.where(np.abs(r_clipped) >= 1.0, np.inf, np.abs(t_stat))
    p = 2.0 * student_t.sf(t_stat, df)
    return CorrelationMatrix(columns=tuple(columns), r=r, p=p, df=df)


def pearson_r(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Convenience scalar Pearson correlation with its p-value."""
    table = AnalysisTable({"x": x, "y": y})
    matrix = pearson_matrix(table, ("x", "y"))
    return float(matrix.r[0, 1]), float(matrix.p[0, 1])


@dataclass(frozen=True)
class RegressionSpec:
    """One model: outcome, controls, quadratic predictors, optional moderator."""

    outcome: str
    predictors: tuple[str, ...]
    controls: tuple[str, ...] = ()
    moderator: str | None = None
    centering: str = "none"  # "none" or "mean"

    def __post_init__(self) -> None:
        if self.centering not in ("none", "mean"):
            raise ValueError("centering must be 'none' or 'mean'")
        if not self.predictors:
            raise ValueError("at least one predictor is required")
        roles = [self.outcome, *self.controls, *self.predictors]
        if self.moderator is not None:
            roles.append(self.moderator)
        if len(set(roles)) != len(roles):
            raise ValueError("duplicate column across outcome/controls/predictors/moderator")

    def base_columns(self) -> tuple[str, ...]:
        names = [*self.controls, *self.predictors]
        if self.moderator is not None:
            names.append(self.moderator)
        return tuple(names)


@dataclass
class Design:
    matrix: np.ndarray
    names: tuple[str, ...]
    spec: RegressionSpec
    base_means: dict[str, float]
    base_ranges: dict[str, tuple[float, float]]
    column_means: np.ndarray


def build_design(spec: RegressionSpec, table: AnalysisTable) -> Design:
    """Assemble the design matrix for ``spec`` from a complete table.

    The table must already be listwise-complete for every referenced column
    (including the outcome, so design rows align with outcome rows).  With
    centering="mean", predictors and the moderator are mean-centered before
    squares and products are formed; controls are left raw.
    """
    for name in (spec.outcome, *spec.base_columns()):
        if not np.all(np.isfinite(table.column(name))):
            raise ValueError(
                f"column {name!r} has missing values; apply listwise deletion first"
            )

    raw = {name: table.column(name) for name in spec.base_columns()}
    base_means = {name: float(values.mean()) for name, values in raw.items()}
    base_ranges = {
        name: (float(values.min()), float(values.max())) for name, values in raw.items()
    }

    def effect(name: str) -> np.ndarray:
        if spec.centering == "mean":
            return raw[name] - base_means[name]
        return raw[name]

    n = table.n
    cols: list[np.ndarray] = [np.ones(n)]
    names: list[str] = ["const"]
    for name in spec.controls:
        cols.append(raw[name])
        names.append(name)
    for pred in spec.predictors:
        x = effect(pred)
        cols.extend([x, x * x])
        names.extend([pred, f"{pred}^2"])
    if spec.moderator is not None:
        z = effect(spec.moderator)
        cols.append(z)
        names.append(spec.moderator)
        for pred in spec.predictors:
            x = effect(pred)
            cols.extend([x * z, x * x * z])
            names.extend([f"{pred}:{spec.moderator}", f"{pred}^2:{spec.moderator}"])

    matrix = np.column_stack(cols)
    return Design(
        matrix=matrix,
        names=tuple(names),
        spec=spec,
        base_means=base_means,
        base_ranges=base_ranges,
        column_means=matrix.mean(axis=0),
    )


@dataclass(frozen=True)
class TermEstimate:
    name: str
    coefficient: float
    std_error: float
    t: float
    p: float
    stars: str


@dataclass
class RegressionResult:
    terms: tuple[TermEstimate, ...]
    coefficients: np.ndarray
    r2: float
    adjusted_r2: float
    n: int
    df_resid: int
    mean_outcome: float
    design: Design

    def term(self, name: str) -> TermEstimate:
        for estimate in self.terms:
            if estimate.name == name:
                return estimate
        raise KeyError(f"no term named {name!r}")


def _collinear_terms(names: tuple[str, ...], s: np.ndarray, vt: np.ndarray) -> tuple[str, ...]:
    # columns loading on near-null right-singular directions
    bad = s / s[0] < RANK_TOL if s[0] > 0 else np.ones_like(s, dtype=bool)
    involved = np.abs(vt[bad]).max(axis=0) > 0.3
    terms = tuple(name for name, flag in zip(names, involved) if flag)
    return terms if terms else tuple(names)


def ols_fit(design: Design, y: np.ndarray) -> RegressionResult:
    """Least squares through an SVD of the design matrix.

    Standard errors come from sigma^2 * (X'X)^-1; p-values are two-sided
    with N - p - 1 degrees of freedom for p non-intercept columns, which
    equals N minus the total column count.
    """
    x = design.matrix
    y = np.asarray(y, dtype=np.float64)
    n, n_cols = x.shape
    if y.shape != (n,):
        raise ValueError("outcome length does not match the design")
    if n <= n_cols:
        raise ValueError(f"need more rows ({n}) than design columns ({n_cols})")

    u, s, vt = np.linalg.svd(x, full_matrices=False)
    if s[0] == 0.0 or s[-1] / s[0] < RANK_TOL:
        raise RankDeficiencyError(_collinear_terms(design.names, s, vt))

    beta = vt.T @ ((u.T @ y) / s)
    residuals = y - x @ beta
    rss = float(residuals @ residuals)
    df_resid = n - n_cols
    sigma2 = rss / df_resid
    cov_diag = ((vt / s[:, None]) ** 2).sum(axis=0) * sigma2
    se = np.sqrt(cov_diag)

    with np.errstate(divide="ignore", invalid="ignore"):
        t_stat = np.where(
            se > 0.0,
            beta / np.where(se > 0.0, se, 1.0),
            np.where(beta == 0.0, 0.0, np.sign(beta) * np.inf),
        )
    p = 2.0 * student_t.sf(np.abs(t_stat), df_resid)

    mean_y = float(y.mean())
    tss = float(((y - mean_y) ** 2).sum())
    if tss == 0.0:
        raise ValueError("outcome has zero variance")
    r2 = 1.0 - rss / tss
    adjusted = 1.0 - (1.0 - r2) * (n - 1) / df_resid

    terms = tuple(
        TermEstimate(
            name=name,
            coefficient=float(b),
            std_error=float(e),
            t=float(ts),
            p=float(pv),
            stars=star_label(float(pv)),
        )
        for name, b, e, ts, pv in zip(design.names, beta, se, t_stat, p)
    )
    return RegressionResult(
        terms=terms,
        coefficients=beta,
        r2=r2,
        adjusted_r2=adjusted,
        n=n,
        df_resid=df_resid,
        mean_outcome=mean_y,
        design=design,
    )


def fit_model(spec: RegressionSpec, table: AnalysisTable) -> RegressionResult:
    """Listwise-delete, build the design, and fit in one call."""
    complete = table.listwise((spec.outcome, *spec.base_columns()))
    design = build_design(spec, complete)
    return ols_fit(design, complete.column(spec.outcome))


def mean_response(result: RegressionResult) -> float:
    """Prediction with every design column at its sample mean.

    For OLS with an intercept this equals the sample mean of the outcome.
    """
    return float(result.design.column_means @ result.coefficients)


@dataclass(frozen=True)
class CurvePoint:
    predictor: str
    value: float
    moderator_level: float | None
    prediction: float
    extrapolated: bool


def predicted_curve(
    result: RegressionResult,
    predictor: str,
    grid: np.ndarray | list[float],
    moderator_levels: list[float] | None = None,
    others_at: str = "mean",
) -> list[CurvePoint]:
    """Model predictions along a predictor grid at fixed moderator levels.

    The swept predictor's linear, squared, and product columns follow the
    grid value; the moderator main effect follows the level; every other
    design column stays at its sample mean.  Grid values outside the
    observed predictor range are flagged as extrapolated.
    """
    if others_at != "mean":
        raise ValueError("only others_at='mean' is supported")
    spec = result.design.spec
    if predictor not in spec.predictors:
        raise ValueError(f"{predictor!r} is not a predictor of this model")
    if spec.moderator is None:
        if moderator_levels:
            raise ValueError("model has no moderator, but moderator levels were given")
        levels: list[float | None] = [None]
    else:
        if not moderator_levels:
            raise ValueError("moderator levels are required for a moderated model")
        levels = list(moderator_levels)

    names = result.design.names
    position = {name: i for i, name in enumerate(names)}
    centering = spec.centering == "mean"
    means = result.design.base_means
    low, high = result.design.base_ranges[predictor]

    points: list[CurvePoint] = []
    for value in grid:
        value = float(value)
        x = value - means[predictor] if centering else value
        extrapolated = not (low <= value <= high)
        for level in levels:
            row = result.design.column_means.copy()
            row[position[predictor]] = x
            row[position[f"{predictor}^2"]] = x * x
            if level is not None:
                assert spec.moderator is not None
                z = level - means[spec.moderator] if centering else level
                row[position[spec.moderator]] = z
                row[position[f"{predictor}:{spec.moderator}"]] = x * z
                row[position[f"{predictor}^2:{spec.moderator}"]] = x * x * z
            points.append(
                CurvePoint(
                    predictor=predictor,
                    value=value,
                    moderator_level=level,
                    prediction=float(row @ result.coefficients),
                    extrapolated=extrapolated,
                )
            )
    return points
