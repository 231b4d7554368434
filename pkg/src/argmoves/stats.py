"""Move-ratio analyses: ANOVA with eta-squared, Bonferroni, MANOVA with
Wilks' Lambda (Rao's F approximation), and random-intercept multi-level
regression fitted by profiled maximum likelihood.

p-values come from self-contained continued-fraction incomplete-beta and
error-function routines (accurate to ~1e-12); no statistical library is
required at runtime.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import AnnotatedEssay, MoveLabel

# move types entering the application analyses; title, counter_data and
# rebuttal_data are excluded from numerator and denominator
COUNTED_LABELS: tuple[MoveLabel, ...] = (
    MoveLabel.CLAIM,
    MoveLabel.DATA,
    MoveLabel.COUNTER_CLAIM,
    MoveLabel.REBUTTAL_CLAIM,
    MoveLabel.NON_ARGUMENT,
)


def stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


# ---------------------------------------------------------------------------
# special functions (continued-fraction incomplete beta, erfc-based normal)
# ---------------------------------------------------------------------------


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (Lentz's method)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-15:
            return h
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), the regularized incomplete beta function."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f_value: float, df1: float, df2: float) -> float:
    """Survival function of the F distribution."""
    if math.isinf(f_value):
        return 0.0
    if f_value <= 0.0:
        return 1.0
    x = df2 / (df2 + df1 * f_value)
    return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, x)


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def two_sided_z_p(z: float) -> float:
    return min(1.0, 2.0 * normal_sf(abs(z)))


# ---------------------------------------------------------------------------
# move ratios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MoveRatios:
    ratios: Mapping[MoveLabel, float]
    denominator: int
    scale: str  # "fraction" | "percent"


def move_ratios(essay: AnnotatedEssay, scale: str = "fraction") -> MoveRatios:
    """Per-essay share of each counted move type."""
    if scale not in ("fraction", "percent"):
        raise ValueError(f"unknown scale {scale!r}")
    counts = {label: 0 for label in COUNTED_LABELS}
    for move in essay.moves:
        if move.label in counts:
            counts[move.label] += 1
    total = sum(counts.values())
    if total == 0:
        raise ValueError(f"essay {essay.essay.essay_id!r} has no counted moves")
    factor = 100.0 if scale == "percent" else 1.0
    return MoveRatios(
        {label: factor * counts[label] / total for label in COUNTED_LABELS}, total, scale
    )


# ---------------------------------------------------------------------------
# ANOVA / Bonferroni / MANOVA
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    df_between: int
    df_within: int
    p_value: float
    eta_squared: float


class SingularScatterError(ValueError):
    def __init__(self, variables: Sequence[int]):
        self.variables = tuple(variables)
        detail = f"variables {list(variables)}" if variables else "collinear variables"
        super().__init__(f"pooled within-group scatter matrix is singular ({detail})")


def one_way_anova(groups: Sequence[Sequence[float]]) -> AnovaResult:
    if len(groups) < 2 or any(len(g) < 2 for g in groups):
        raise ValueError("need at least 2 groups with at least 2 observations each")
    arrays = [np.asarray(g, dtype=float) for g in groups]
    n_total = sum(len(a) for a in arrays)
    grand = sum(float(a.sum()) for a in arrays) / n_total
    ss_between = sum(len(a) * (float(a.mean()) - grand) ** 2 for a in arrays)
    ss_within = sum(float(((a - a.mean()) ** 2).sum()) for a in arrays)
    ss_total = ss_between + ss_within
    df_between = len(arrays) - 1
    df_within = n_total - len(arrays)
    if ss_total == 0.0:
        return AnovaResult(0.0, df_between, df_within, 1.0, 0.0)
    eta_squared = ss_between / ss_total
    if ss_within == 0.0:
        return AnovaResult(math.inf, df_between, df_within, 0.0, eta_squared)
    f_stat = (ss_between / df_between) / (ss_within / df_within)
    return AnovaResult(f_stat, df_between, df_within, f_sf(f_stat, df_between, df_within), eta_squared)


def bonferroni(p_values: Sequence[float], m: int) -> list[float]:
    if m < 1:
        raise ValueError("m must be >= 1")
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p-value {p} outside [0, 1]")
    return [min(1.0, m * p) for p in p_values]


@dataclass(frozen=True)
class ManovaResult:
    wilks_lambda: float
    f_stat: float
    df1: float
    df2: float
    p_value: float
    n_obs: int
    n_groups: int
    n_vars: int


def manova_wilks(groups: Sequence[np.ndarray]) -> ManovaResult:
    """One-way MANOVA: Wilks' Lambda = det(E)/det(E+H) with Rao's F."""
    if len(groups) < 2:
        raise ValueError("need at least 2 groups")
    arrays = []
    for g in groups:
        a = np.asarray(g, dtype=float)
        arrays.append(a.reshape(-1, 1) if a.ndim == 1 else a)
    p = arrays[0].shape[1]
    if any(a.shape[1] != p for a in arrays):
        raise ValueError("groups disagree on variable count")
    n_total = sum(a.shape[0] for a in arrays)
    g = len(arrays)
    if n_total <= p + g:
        raise ValueError(f"need more than {p + g} observations, got {n_total}")
    grand = np.vstack(arrays).mean(axis=0)
    e_mat = np.zeros((p, p))
    h_mat = np.zeros((p, p))
    for a in arrays:
        centered = a - a.mean(axis=0)
        e_mat += centered.T @ centered
        diff = (a.mean(axis=0) - grand).reshape(-1, 1)
        h_mat += a.shape[0] * (diff @ diff.T)

    sign_e, logdet_e = np.linalg.slogdet(e_mat)
    if sign_e <= 0 or not np.isfinite(logdet_e):
        scale = float(np.trace(e_mat)) / p if p else 0.0
        offenders = [j for j in range(p) if e_mat[j, j] <= 1e-12 * max(scale, 1.0)]
        raise SingularScatterError(offenders)
    sign_t, logdet_t = np.linalg.slogdet(e_mat + h_mat)
    wilks = math.exp(logdet_e - logdet_t) if sign_t > 0 else 0.0
    wilks = min(1.0, max(wilks, 1e-300))

    nu_h = g - 1
    nu_e = n_total - g
    if p * p + nu_h * nu_h - 5 > 0:
        t = math.sqrt((p * p * nu_h * nu_h - 4.0) / (p * p + nu_h * nu_h - 5.0))
    else:
        t = 1.0
    df1 = p * nu_h
    w = nu_e + nu_h - (p + nu_h + 1) / 2.0
    df2 = w * t - (p * nu_h - 2) / 2.0
    lam_root = wilks ** (1.0 / t)
    f_stat = ((1.0 - lam_root) / lam_root) * (df2 / df1)
    f_stat = max(0.0, f_stat)
    return ManovaResult(wilks, f_stat, df1, df2, f_sf(f_stat, df1, df2), n_total, g, p)


# ---------------------------------------------------------------------------
# random-intercept mixed model (profiled ML)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MixedModelFit:
    beta0: float
    beta1: float
    se_beta0: float
    se_beta1: float
    z_beta0: float
    z_beta1: float
    p_beta0: float
    p_beta1: float
    var_between: float  # sigma^2_u (random intercept)
    var_within: float   # sigma^2_e (residual)
    loglik: float
    aic: float
    bic: float
    n_obs: int
    n_individuals: int
    converged: bool
    boundary: bool      # variance ratio estimated at the gamma = 0 boundary
    reml: bool
    iterations: int

    K_PARAMS = 4  # beta0, beta1, sigma^2_u, sigma^2_e


@dataclass
class _SuffStats:
    """Per-individual cross-products for the 2-column design [1, wave].

    y and wave are grand-mean centered before accumulation; the raw RSS is
    a difference of much larger cross-products and the resulting float noise
    blurs the profiled objective enough to shift the gamma minimizer.
    """

    n: np.ndarray       # (m,)
    xtx: np.ndarray     # (m, 2, 2)
    xty: np.ndarray     # (m, 2)
    yty: np.ndarray     # (m,)
    xt1: np.ndarray     # (m, 2) column sums of X
    one_ty: np.ndarray  # (m,)
    n_obs: int
    y_mean: float
    wave_mean: float


def _sufficient_stats(observations: Sequence[tuple]) -> _SuffStats:
    by_individual: dict = {}
    for individual, wave, y in observations:
        by_individual.setdefault(individual, []).append((float(wave), float(y)))
    n_obs = sum(len(rows) for rows in by_individual.values())
    y_mean = sum(r[1] for rows in by_individual.values() for r in rows) / n_obs
    wave_mean = sum(r[0] for rows in by_individual.values() for r in rows) / n_obs
    m = len(by_individual)
    n = np.zeros(m)
    xtx = np.zeros((m, 2, 2))
    xty = np.zeros((m, 2))
    yty = np.zeros(m)
    xt1 = np.zeros((m, 2))
    one_ty = np.zeros(m)
    for i, rows in enumerate(by_individual.values()):
        w = np.array([r[0] for r in rows]) - wave_mean
        y = np.array([r[1] for r in rows]) - y_mean
        x = np.column_stack([np.ones(len(w)), w])
        n[i] = len(w)
        xtx[i] = x.T @ x
        xty[i] = x.T @ y
        yty[i] = float(y @ y)
        xt1[i] = x.sum(axis=0)
        one_ty[i] = float(y.sum())
    return _SuffStats(n, xtx, xty, yty, xt1, one_ty, n_obs, y_mean, wave_mean)


def _profile(stats: _SuffStats, gamma: float, reml: bool):
    """GLS fit and -2 profiled log-likelihood at a fixed variance ratio."""
    weight = gamma / (1.0 + gamma * stats.n)  # (m,)
    a_mat = stats.xtx.sum(axis=0) - np.einsum("i,ij,ik->jk", weight, stats.xt1, stats.xt1)
    b_vec = stats.xty.sum(axis=0) - (weight * stats.one_ty) @ stats.xt1
    c_val = float(stats.yty.sum() - (weight * stats.one_ty**2).sum())
    beta = np.linalg.solve(a_mat, b_vec)
    rss = c_val - float(beta @ b_vec)
    rss = max(rss, 1e-300)
    n_obs = stats.n_obs
    log_h = float(np.log1p(gamma * stats.n).sum())
    if reml:
        dof = n_obs - 2
        sigma2 = rss / dof
        sign, logdet_a = np.linalg.slogdet(a_mat)
        neg2 = dof * math.log(2 * math.pi * sigma2) + dof + log_h + logdet_a
    else:
        sigma2 = rss / n_obs
        neg2 = n_obs * math.log(2 * math.pi * sigma2) + n_obs + log_h
    return neg2, beta, sigma2, a_mat


def _golden_minimize(fun, lo: float, hi: float, iterations: int = 160) -> tuple[float, int]:
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    it = 0
    for it in range(iterations):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
        if b - a <= 1e-8 * max(1.0, abs(a) + abs(b)) / 2.0:
            break
    x = (a + b) / 2.0
    return x, it + 1


def fit_random_intercept(
    observations: Sequence[tuple],
    reml: bool = False,
) -> MixedModelFit:
    """Fit y_ij = b0 + b1*wave_ij + u_i + e_ij by profiled likelihood.

    (b0, b1, sigma^2_e) are profiled in closed form given the variance ratio
    gamma = sigma^2_u / sigma^2_e; gamma >= 0 is then optimized by a
    bracketed golden-section search. A boundary estimate gamma = 0 is
    reported with the `boundary` flag.
    """
    stats = _sufficient_stats(observations)
    if len(stats.n) < 2:
        raise ValueError("need at least 2 individuals")
    if stats.n.max() < 2:
        raise ValueError("need at least 2 observations for at least one individual")
    all_wave_ssq = float(stats.xtx[:, 1, 1].sum()) - float(stats.xt1[:, 1].sum()) ** 2 / stats.n_obs
    if all_wave_ssq <= 1e-12:
        raise ValueError("degenerate design: wave is constant")

    def objective(gamma: float) -> float:
        return _profile(stats, gamma, reml)[0]

    # bracket the minimizer: expand hi until the objective is rising
    hi = 1.0
    f_hi = objective(hi)
    while hi < 1e8:
        f_next = objective(hi * 2)
        if f_next >= f_hi:
            break
        hi *= 2
        f_hi = f_next
    gamma_hat, iterations = _golden_minimize(objective, 0.0, hi * 2)
    boundary = False
    if objective(0.0) <= objective(gamma_hat):
        gamma_hat = 0.0
        boundary = True
    elif gamma_hat < 1e-10:
        boundary = True

    neg2, beta_c, sigma2_e, a_mat = _profile(stats, gamma_hat, reml)
    loglik = -0.5 * neg2
    cov_c = sigma2_e * np.linalg.inv(a_mat)
    # map centered-coordinate estimates back to the raw (intercept, wave) scale
    transform = np.array([[1.0, -stats.wave_mean], [0.0, 1.0]])
    beta = transform @ beta_c + np.array([stats.y_mean, 0.0])
    cov = transform @ cov_c @ transform.T
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    var_u = max(0.0, gamma_hat * sigma2_e)
    z0 = beta[0] / se[0] if se[0] > 0 else math.inf
    z1 = beta[1] / se[1] if se[1] > 0 else math.inf
    k = MixedModelFit.K_PARAMS
    return MixedModelFit(
        beta0=float(beta[0]),
        beta1=float(beta[1]),
        se_beta0=float(se[0]),
        se_beta1=float(se[1]),
        z_beta0=float(z0),
        z_beta1=float(z1),
        p_beta0=two_sided_z_p(z0),
        p_beta1=two_sided_z_p(z1),
        var_between=var_u,
        var_within=float(sigma2_e),
        loglik=float(loglik),
        aic=2 * k - 2 * float(loglik),
        bic=k * math.log(stats.n_obs) - 2 * float(loglik),
        n_obs=stats.n_obs,
        n_individuals=len(stats.n),
        converged=True,
        boundary=boundary,
        reml=reml,
        iterations=iterations,
    )


def random_intercept_loglik(
    observations: Sequence[tuple],
    beta0: float,
    beta1: float,
    var_between: float,
    var_within: float,
) -> float:
    """Exact marginal log-likelihood at arbitrary parameter values."""
    if var_within <= 0 or var_between < 0:
        return -math.inf
    gamma = var_between / var_within
    by_individual: dict = {}
    for individual, wave, y in observations:
        by_individual.setdefault(individual, []).append((float(wave), float(y)))
    total = 0.0
    for rows in by_individual.values():
        w = np.array([r[0] for r in rows])
        y = np.array([r[1] for r in rows])
        r = y - beta0 - beta1 * w
        n_i = len(rows)
        quad = float(r @ r) - (gamma / (1.0 + gamma * n_i)) * float(r.sum()) ** 2
        total += (
            n_i * math.log(2 * math.pi * var_within)
            + math.log1p(gamma * n_i)
            + quad / var_within
        )
    return -0.5 * total


# ---------------------------------------------------------------------------
# analysis drivers and paper-shaped reports
# ---------------------------------------------------------------------------

_LEVELS = ("low", "medium", "high")


@dataclass(frozen=True)
class QualityRow:
    move: str
    means: tuple[float, ...]
    sds: tuple[float, ...]
    ns: tuple[int, ...]
    f_stat: float
    df_between: int
    df_within: int
    p_value: float
    p_bonferroni: float
    eta_squared: float


@dataclass(frozen=True)
class QualityReport:
    rows: tuple[QualityRow, ...]
    levels: tuple[str, ...]
    manova: ManovaResult
    scale: str

    def to_tsv(self) -> str:
        cols = ["move"]
        for level in self.levels:
            cols += [f"mean_{level}", f"sd_{level}", f"n_{level}"]
        cols += ["f", "df_between", "df_within", "p", "p_bonferroni", "eta_squared"]
        lines = ["\t".join(cols)]
        for row in self.rows:
            cells = [row.move]
            for mean, sd, n in zip(row.means, row.sds, row.ns):
                cells += [repr(mean), repr(sd), str(n)]
            cells += [
                repr(row.f_stat),
                str(row.df_between),
                str(row.df_within),
                repr(row.p_value),
                repr(row.p_bonferroni),
                repr(row.eta_squared),
            ]
            lines.append("\t".join(cells))
        m = self.manova
        lines.append(
            "# manova\t" + "\t".join(
                repr(v) for v in (m.wilks_lambda, m.f_stat, m.df1, m.df2, m.p_value)
            ) + f"\t{m.n_obs}\t{m.n_groups}\t{m.n_vars}"
        )
        lines.append(f"# scale\t{self.scale}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_tsv(text: str) -> "QualityReport":
        lines = [l for l in text.splitlines() if l.strip()]
        header = lines[0].split("\t")
        levels = tuple(c[len("mean_"):] for c in header if c.startswith("mean_"))
        rows = []
        manova = None
        scale = "fraction"
        for line in lines[1:]:
            cells = line.split("\t")
            if cells[0] == "# manova":
                manova = ManovaResult(
                    float(cells[1]), float(cells[2]), float(cells[3]), float(cells[4]),
                    float(cells[5]), int(cells[6]), int(cells[7]), int(cells[8]),
                )
                continue
            if cells[0] == "# scale":
                scale = cells[1]
                continue
            k = len(levels)
            means = tuple(float(cells[1 + 3 * i]) for i in range(k))
            sds = tuple(float(cells[2 + 3 * i]) for i in range(k))
            ns = tuple(int(cells[3 + 3 * i]) for i in range(k))
            tail = cells[1 + 3 * k:]
            rows.append(
                QualityRow(
                    cells[0], means, sds, ns,
                    float(tail[0]), int(tail[1]), int(tail[2]),
                    float(tail[3]), float(tail[4]), float(tail[5]),
                )
            )
        if manova is None:
            raise ValueError("quality report TSV missing MANOVA footer")
        return QualityReport(tuple(rows), levels, manova, scale)

    def to_pretty(self) -> str:
        width = 18
        head = f"{'':<{width}}" + "".join(f"{lvl.capitalize():>16}" for lvl in self.levels)
        head += f"{'F':>12}{'eta^2':>8}"
        lines = [head, "-" * len(head)]
        for row in self.rows:
            cells = f"{row.move:<{width}}"
            for mean, sd in zip(row.means, row.sds):
                cells += f"{mean:>8.2f} ({sd:.2f})"
            f_txt = ("inf" if math.isinf(row.f_stat) else f"{row.f_stat:.2f}") + stars(row.p_bonferroni)
            cells += f"{f_txt:>12}{row.eta_squared:>8.3f}"
            lines.append(cells)
        m = self.manova
        lines.append(
            f"MANOVA F({m.df1:g}, {m.df2:.0f})={m.f_stat:.2f}, "
            f"p={m.p_value:.3g}, Wilks Lambda={m.wilks_lambda:.2f}"
        )
        lines.append("Note. * p < .05, ** p < .01, *** p < .001")
        return "\n".join(lines) + "\n"


def quality_analysis(essays: Iterable[AnnotatedEssay], scale: str = "fraction") -> QualityReport:
    """Quality-level analysis: per-level move ratios, ANOVAs, MANOVA.

    The MANOVA drops the non_argument column: the five counted ratios sum to
    one per essay, so their pooled within-group scatter is singular.
    """
    groups: dict[str, list[MoveRatios]] = {}
    for annotated in essays:
        level = annotated.essay.quality_level
        if level is None:
            continue
        groups.setdefault(level.value, []).append(move_ratios(annotated, scale))
    levels = tuple(l for l in _LEVELS if l in groups)
    if len(levels) < 2:
        raise ValueError("need essays at >= 2 quality levels")

    rows = []
    p_values = []
    for label in COUNTED_LABELS:
        samples = [[r.ratios[label] for r in groups[lvl]] for lvl in levels]
        result = one_way_anova(samples)
        arr = [np.asarray(s) for s in samples]
        rows.append(
            (
                label.value,
                tuple(float(a.mean()) for a in arr),
                tuple(float(a.std(ddof=1)) for a in arr),
                tuple(len(a) for a in arr),
                result,
            )
        )
        p_values.append(result.p_value)
    adjusted = bonferroni(p_values, len(COUNTED_LABELS))

    manova_vars = COUNTED_LABELS[:-1]  # drop non_argument (compositional collinearity)
    manova_groups = [
        np.array([[r.ratios[l] for l in manova_vars] for r in groups[lvl]]) for lvl in levels
    ]
    manova = manova_wilks(manova_groups)

    quality_rows = tuple(
        QualityRow(
            move, means, sds, ns, res.f_stat, res.df_between, res.df_within,
            res.p_value, p_adj, res.eta_squared,
        )
        for (move, means, sds, ns, res), p_adj in zip(rows, adjusted)
    )
    return QualityReport(quality_rows, levels, manova, scale)


@dataclass(frozen=True)
class DevelopmentReport:
    moves: tuple[str, ...]
    fits: tuple[MixedModelFit, ...]
    scale: str

    def to_tsv(self) -> str:
        cols = [
            "move", "wave_beta", "wave_se", "wave_z", "wave_p",
            "intercept_beta", "intercept_se", "intercept_z", "intercept_p",
            "var_between", "var_within", "loglik", "aic", "bic",
            "n_obs", "n_individuals", "boundary", "reml", "converged", "iterations",
        ]
        lines = ["\t".join(cols)]
        for move, fit in zip(self.moves, self.fits):
            lines.append(
                "\t".join(
                    [
                        move,
                        repr(fit.beta1), repr(fit.se_beta1), repr(fit.z_beta1), repr(fit.p_beta1),
                        repr(fit.beta0), repr(fit.se_beta0), repr(fit.z_beta0), repr(fit.p_beta0),
                        repr(fit.var_between), repr(fit.var_within),
                        repr(fit.loglik), repr(fit.aic), repr(fit.bic),
                        str(fit.n_obs), str(fit.n_individuals),
                        str(int(fit.boundary)), str(int(fit.reml)),
                        str(int(fit.converged)), str(fit.iterations),
                    ]
                )
            )
        lines.append(f"# scale\t{self.scale}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_tsv(text: str) -> "DevelopmentReport":
        lines = [l for l in text.splitlines() if l.strip()]
        moves, fits = [], []
        scale = "percent"
        for line in lines[1:]:
            cells = line.split("\t")
            if cells[0] == "# scale":
                scale = cells[1]
                continue
            fits.append(
                MixedModelFit(
                    beta0=float(cells[5]), beta1=float(cells[1]),
                    se_beta0=float(cells[6]), se_beta1=float(cells[2]),
                    z_beta0=float(cells[7]), z_beta1=float(cells[3]),
                    p_beta0=float(cells[8]), p_beta1=float(cells[4]),
                    var_between=float(cells[9]), var_within=float(cells[10]),
                    loglik=float(cells[11]), aic=float(cells[12]), bic=float(cells[13]),
                    n_obs=int(cells[14]), n_individuals=int(cells[15]),
                    boundary=bool(int(cells[16])), reml=bool(int(cells[17])),
                    converged=bool(int(cells[18])), iterations=int(cells[19]),
                )
            )
            moves.append(cells[0])
        return DevelopmentReport(tuple(moves), tuple(fits), scale)

    def to_pretty(self) -> str:
        width = 20
        head = f"{'':<{width}}" + "".join(f"{m:>16}" for m in self.moves)
        lines = [head, "-" * len(head), "Fixed effects"]

        def row(label: str, cells: list[str]) -> str:
            return f"{label:<{width}}" + "".join(f"{c:>16}" for c in cells)

        lines.append(row("wave", [f"{f.beta1:.2f}{stars(f.p_beta1)}" for f in self.fits]))
        lines.append(row("Intercept", [f"{f.beta0:.2f}{stars(f.p_beta0)}" for f in self.fits]))
        lines.append("Random effects")
        lines.append(row("Between-individual", [f"{math.sqrt(f.var_between):.2f}" for f in self.fits]))
        lines.append(row("Within-individual", [f"{math.sqrt(f.var_within):.2f}" for f in self.fits]))
        lines.append(row("AIC", [f"{f.aic:.2f}" for f in self.fits]))
        lines.append(row("BIC", [f"{f.bic:.2f}" for f in self.fits]))
        lines.append("Note. * p < .05, ** p < .01, *** p < .001")
        return "\n".join(lines) + "\n"


def development_analysis(
    essays: Iterable[AnnotatedEssay],
    scale: str = "percent",
    reml: bool = False,
) -> DevelopmentReport:
    """Longitudinal analysis: one random-intercept model per counted move."""
    collected = list(essays)
    fits = []
    for label in COUNTED_LABELS:
        observations = []
        for annotated in collected:
            ratio = move_ratios(annotated, scale).ratios[label]
            observations.append((annotated.essay.learner_id, annotated.essay.wave, ratio))
        fits.append(fit_random_intercept(observations, reml=reml))
    return DevelopmentReport(tuple(l.value for l in COUNTED_LABELS), tuple(fits), scale)
