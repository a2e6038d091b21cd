"""Seeded Monte Carlo confrontation of fringe counts with their limit laws.

The harness draws uniform trees from built-in convergent families of degree
profiles, tallies fringe-pattern counts, and compares empirical moments with
three references: the exact finite-size values (rational arithmetic), the
covariance-density predictions scaled by the size, and the plug-in mean.
Standardized counts are tested for normality by Kolmogorov-Smirnov
distance.  Two purely exact scans probe the finite-size error of the
moment approximations: one tracks the gap between exact mean/variance and
their limit forms across sizes, the other checks the quadratic-exponent
shape of high factorial moments that underlies the normality proofs.

Aggregation is exact (integer count sums), so reports are byte-identical
for a given (config, seed) regardless of worker count; replicate r always
uses the derived stream seed.generator(size_index, r).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats as scistats

from .asymptotics import fringe_covariance_density, plugin_mean
from .distributions import OffspringDistribution
from .errors import SizeTooSmall, TooFewSamples
from .exact_moments import factorial_moment, mean_count, product_moment
from .sampling import Seed, excursion_degrees, sample_hub_tree, sample_uniform_trees
from .tree_core import DegreeStatistic, PlaneTree, count_fringe, count_trees, enumerate_trees

DEFAULT_KS_THRESHOLD = 0.05
DEFAULT_VAR_REL_TOL = 0.10


# ---------------------------------------------------------------------------
# Built-in statistic families


@dataclass(frozen=True)
class StatFamily:
    """A named rule mapping a requested size to a feasible degree profile,
    together with the limiting degree distribution the rule converges to."""

    name: str
    params: tuple = ()

    @classmethod
    def full_binary(cls) -> "StatFamily":
        return cls("full_binary")

    @classmethod
    def geometric_profile(cls) -> "StatFamily":
        return cls("geometric_profile")

    @classmethod
    def one_hub(cls, ratio: float = 0.5) -> "StatFamily":
        """Hub profiles with n1 ~ ratio * n0 single-child vertices."""
        return cls("one_hub", (float(ratio),))

    def statistic(self, size: int) -> DegreeStatistic:
        if size < 3:
            raise ValueError("families need size >= 3")
        if self.name == "full_binary":
            m = max(1, round((size - 1) / 2))
            return DegreeStatistic.from_counts({0: m + 1, 2: m})
        if self.name == "geometric_profile":
            return _geometric_profile(size)
        if self.name == "one_hub":
            (ratio,) = self.params
            n0 = max(2, round(size / (1 + ratio)) - 1)
            n1 = size - n0 - 1
            return DegreeStatistic.from_counts({0: n0, 1: n1, n0: 1})
        raise ValueError(f"unknown family {self.name!r}")

    def target(self) -> OffspringDistribution:
        if self.name == "full_binary":
            return OffspringDistribution.finite(
                {0: Fraction(1, 2), 2: Fraction(1, 2)}
            )
        if self.name == "geometric_profile":
            return OffspringDistribution.geometric(Fraction(1, 2))
        if self.name == "one_hub":
            (ratio,) = self.params
            r = Fraction(ratio).limit_denominator(10**6)
            return OffspringDistribution.finite(
                {0: 1 / (1 + r), 1: r / (1 + r)}
            )
        raise ValueError(f"unknown family {self.name!r}")

    def label(self) -> str:
        if self.params:
            return f"{self.name}({','.join(map(str, self.params))})"
        return self.name


def _geometric_profile(size: int) -> DegreeStatistic:
    """Counts n(i) ~ size * 2^-(i+1), floored, with n(0) adjusted by the
    signed balance deficit so the profile is feasible."""
    counts = {}
    i = 0
    while True:
        c = size >> (i + 1)
        if c == 0:
            break
        counts[i] = c
        i += 1
    deficit = 1 + sum(d * c for d, c in counts.items()) - sum(counts.values())
    counts[0] += deficit
    if counts[0] < 1:
        raise ValueError(f"geometric profile infeasible at size {size}")
    return DegreeStatistic.from_counts(counts)


# ---------------------------------------------------------------------------
# Config and report


@dataclass(frozen=True)
class ExperimentConfig:
    family: StatFamily
    patterns: tuple
    sizes: tuple
    replicates: int
    seed: Seed
    tests: tuple = ("moments", "normality")
    standardize_with: str = "exact_mean"  # or "plugin"
    ks_threshold: float = DEFAULT_KS_THRESHOLD
    var_rel_tol: float = DEFAULT_VAR_REL_TOL
    keep_samples: bool = False

    def to_dict(self) -> dict:
        return {
            "family": self.family.label(),
            "patterns": [p.to_text() for p in self.patterns],
            "sizes": list(self.sizes),
            "replicates": self.replicates,
            "seed": {"value": self.seed.value, "stream_id": self.seed.stream_id},
            "tests": list(self.tests),
            "standardize_with": self.standardize_with,
            "ks_threshold": self.ks_threshold,
            "var_rel_tol": self.var_rel_tol,
        }


@dataclass
class ExperimentReport:
    config: dict
    per_size: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "per_size": self.per_size,
            "verdicts": self.verdicts,
            "all_passed": self.all_passed,
        }


# ---------------------------------------------------------------------------
# Count collection


def _count_occurrences(hay: np.ndarray, needle: np.ndarray) -> int:
    n, m = hay.size, needle.size
    if m > n:
        return 0
    window = n - m + 1
    match = hay[:window] == needle[0]
    for j in range(1, m):
        match &= hay[j : window + j] == needle[j]
    return int(match.sum())


def _counts_chunk(args) -> list:
    multiset_list, pattern_lists, seed, size_index, start, stop = args
    multiset = np.array(multiset_list, dtype=np.int64)
    needles = [np.array(p, dtype=np.int64) for p in pattern_lists]
    rows = []
    for r in range(start, stop):
        rng = seed.generator(size_index, r)
        word = excursion_degrees(multiset, rng)
        rows.append([_count_occurrences(word, needle) for needle in needles])
    return rows


def collect_counts(
    stat: DegreeStatistic,
    patterns,
    replicates: int,
    seed: Seed,
    size_index: int = 0,
) -> np.ndarray:
    """(replicates x len(patterns)) matrix of fringe counts; replicate r is a
    pure function of (seed, size_index, r), so any worker split agrees."""
    workers = max(1, int(os.environ.get("FRINGELAB_THREADS", "1")))
    multiset_list = stat.degree_multiset()
    pattern_lists = [p.degrees for p in patterns]
    if workers == 1 or replicates < 4 * workers:
        rows = _counts_chunk(
            (multiset_list, pattern_lists, seed, size_index, 0, replicates)
        )
    else:
        bounds = np.linspace(0, replicates, workers + 1, dtype=int)
        jobs = [
            (multiset_list, pattern_lists, seed, size_index, int(a), int(b))
            for a, b in zip(bounds[:-1], bounds[1:])
            if a < b
        ]
        rows = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(_counts_chunk, jobs):
                rows.extend(chunk)
    return np.array(rows, dtype=np.int64)


# ---------------------------------------------------------------------------
# Statistics helpers (exact aggregation)


def _empirical_moments(counts: np.ndarray) -> dict:
    """Exact sample mean/variance/covariance from integer count sums."""
    reps, m = counts.shape
    cols = [[int(x) for x in counts[:, j]] for j in range(m)]
    out = {"mean": [], "var": [], "se_mean": [], "se_var": [], "cov": None}
    means = []
    for j in range(m):
        s1 = sum(cols[j])
        s2 = sum(x * x for x in cols[j])
        mean = Fraction(s1, reps)
        var = (Fraction(s2) - Fraction(s1 * s1, reps)) / (reps - 1)
        means.append(mean)
        out["mean"].append(mean)
        out["var"].append(var)
        out["se_mean"].append(math.sqrt(float(var) / reps))
        centered2 = [(x - mean) ** 2 for x in cols[j]]
        m4 = sum(c * c for c in centered2) / reps
        se_var = math.sqrt(max(float(m4 - var * var), 0.0) / reps)
        out["se_var"].append(se_var)
    cov = [[None] * m for _ in range(m)]
    for j in range(m):
        for k in range(j, m):
            s12 = sum(a * b for a, b in zip(cols[j], cols[k]))
            c = (Fraction(s12) - reps * means[j] * means[k]) / (reps - 1)
            cov[j][k] = cov[k][j] = c
    out["cov"] = cov
    return out


def exact_variance(stat: DegreeStatistic, pattern: PlaneTree) -> Fraction:
    """Var N_T from the first two factorial moments, exact."""
    first = mean_count(stat, pattern)
    second = factorial_moment(stat, pattern, 2)
    return second + first - first * first


def exact_covariance(
    stat: DegreeStatistic, t1: PlaneTree, t2: PlaneTree
) -> Fraction:
    if t1 == t2:
        return exact_variance(stat, t1)
    return product_moment(stat, t1, t2) - mean_count(stat, t1) * mean_count(stat, t2)


def normality_test(samples, threshold: float = DEFAULT_KS_THRESHOLD):
    """Kolmogorov-Smirnov distance of the studentized samples to the
    standard normal; returns (distance, verdict)."""
    samples = np.asarray(samples, dtype=float)
    if samples.size < 100:
        raise TooFewSamples(f"need >= 100 samples, got {samples.size}")
    spread = samples.std(ddof=1)
    if spread == 0:
        return 0.5, False
    z = (samples - samples.mean()) / spread
    distance = float(scistats.kstest(z, "norm").statistic)
    return distance, distance < threshold


# ---------------------------------------------------------------------------
# The main experiment


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    report = ExperimentReport(config=cfg.to_dict())
    patterns = list(cfg.patterns)
    m = len(patterns)
    for size_index, size in enumerate(cfg.sizes):
        stat = cfg.family.statistic(size)
        n = stat.size
        counts = collect_counts(stat, patterns, cfg.replicates, cfg.seed, size_index)
        emp = _empirical_moments(counts)
        pn = OffspringDistribution.finite(stat.empirical_distribution())
        gamma = [
            [fringe_covariance_density(pn, t1, t2) for t2 in patterns]
            for t1 in patterns
        ]
        entry = {
            "size": n,
            "replicates": cfg.replicates,
            "patterns": [p.to_text() for p in patterns],
            "empirical_mean": [float(x) for x in emp["mean"]],
            "empirical_var": [float(x) for x in emp["var"]],
            "se_mean": emp["se_mean"],
            "se_var": emp["se_var"],
        }
        exact_means = [mean_count(stat, p) for p in patterns]
        exact_vars = [exact_variance(stat, p) for p in patterns]
        entry["exact_mean"] = [float(x) for x in exact_means]
        entry["exact_var"] = [float(x) for x in exact_vars]
        entry["plugin_mean"] = [float(plugin_mean(stat, p)) for p in patterns]
        entry["asymptotic_var"] = [float(n * gamma[j][j]) for j in range(m)]

        if "moments" in cfg.tests:
            _moment_verdicts(report, cfg, entry, emp, exact_means, exact_vars, gamma, n, stat, patterns)
        if "normality" in cfg.tests:
            _normality_verdicts(report, cfg, entry, counts, exact_means, stat, patterns, n)
        report.per_size.append(entry)
    return report


def _moment_verdicts(report, cfg, entry, emp, exact_means, exact_vars, gamma, n, stat, patterns):
    m = len(patterns)
    for j, pattern in enumerate(patterns):
        gap = abs(float(emp["mean"][j] - exact_means[j]))
        tol = 4 * emp["se_mean"][j] + 1e-12
        report.verdicts.append(
            {
                "check": "empirical mean within 4 SE of exact mean",
                "size": n,
                "pattern": pattern.to_text(),
                "observed": gap,
                "tolerance": tol,
                "passed": gap <= tol,
            }
        )
        vgap = abs(float(emp["var"][j] - exact_vars[j]))
        vtol = max(4 * emp["se_var"][j], cfg.var_rel_tol * float(exact_vars[j]))
        report.verdicts.append(
            {
                "check": "empirical variance within max(4 SE, rel tol) of exact",
                "size": n,
                "pattern": pattern.to_text(),
                "observed": vgap,
                "tolerance": vtol,
                "passed": vgap <= vtol,
            }
        )
        agap = abs(float(emp["var"][j]) / n - float(gamma[j][j]))
        # looser of relative tolerance and 4 MC standard errors: the density
        # can be tiny, and short runs carry real sampling noise
        atol = max(
            cfg.var_rel_tol * max(float(gamma[j][j]), 1e-12),
            4 * emp["se_var"][j] / n,
        )
        report.verdicts.append(
            {
                "check": "empirical variance per vertex near covariance density",
                "size": n,
                "pattern": pattern.to_text(),
                "observed": agap,
                "tolerance": atol,
                "passed": agap <= atol,
            }
        )
    for j in range(m):
        for k in range(j + 1, m):
            denom = float(gamma[j][j] * gamma[k][k])
            rho_pred = float(gamma[j][k]) / math.sqrt(denom) if denom > 0 else 0.0
            emp_denom = float(emp["var"][j] * emp["var"][k])
            rho_emp = (
                float(emp["cov"][j][k]) / math.sqrt(emp_denom) if emp_denom > 0 else 0.0
            )
            se = (1 - rho_pred**2) / math.sqrt(cfg.replicates) + 1e-12
            entry.setdefault("correlation", []).append(
                {
                    "pair": [patterns[j].to_text(), patterns[k].to_text()],
                    "empirical": rho_emp,
                    "predicted": rho_pred,
                }
            )
            report.verdicts.append(
                {
                    "check": "empirical correlation within 3 SE of prediction",
                    "size": n,
                    "pattern": f"{patterns[j].to_text()} vs {patterns[k].to_text()}",
                    "observed": abs(rho_emp - rho_pred),
                    "tolerance": 3 * se,
                    "passed": abs(rho_emp - rho_pred) <= 3 * se,
                }
            )


def _normality_verdicts(report, cfg, entry, counts, exact_means, stat, patterns, n):
    entry["ks"] = []
    for j, pattern in enumerate(patterns):
        if cfg.standardize_with == "plugin":
            center = float(plugin_mean(stat, pattern))
        else:
            center = float(exact_means[j])
        z = (counts[:, j].astype(float) - center) / math.sqrt(n)
        if cfg.keep_samples:
            entry.setdefault("standardized_samples", {})[
                pattern.to_text()
            ] = z.tolist()
        if z.std(ddof=1) == 0:
            entry["ks"].append(None)
            continue
        distance, ok = normality_test(z, cfg.ks_threshold)
        entry["ks"].append(distance)
        report.verdicts.append(
            {
                "check": f"KS distance of standardized count below {cfg.ks_threshold}",
                "size": n,
                "pattern": pattern.to_text(),
                "observed": distance,
                "tolerance": cfg.ks_threshold,
                "passed": ok,
            }
        )


# ---------------------------------------------------------------------------
# Exact scans


def _log_int(x: int) -> float:
    if x <= 0:
        raise ValueError("log of nonpositive integer")
    if x < 2**53:
        return math.log(x)
    shift = x.bit_length() - 53
    return math.log(x >> shift) + shift * math.log(2)


def _log_fraction(fr: Fraction) -> float:
    return _log_int(fr.numerator) - _log_int(fr.denominator)


def moment_condition_scan(
    family: StatFamily, pattern: PlaneTree, sizes, c: float = 1.0
) -> list:
    """Check the quadratic-exponent form of high factorial moments.

    For q up to c * mu / sqrt(n), the exact E[(N)_q] should track
    mu^q * exp(((gamma n - mu) / (2 mu^2)) q^2); the report records the
    worst |log LHS - log RHS| per size, which should shrink as sizes grow.
    """
    results = []
    for size in sizes:
        stat = family.statistic(size)
        n = stat.size
        mu = plugin_mean(stat, pattern)
        if mu <= 0:
            raise SizeTooSmall(f"pattern has zero plug-in mean at size {n}")
        pn = OffspringDistribution.finite(stat.empirical_distribution())
        gamma = fringe_covariance_density(pn, pattern, pattern)
        coeff = float((gamma * n - mu) / (2 * mu * mu))
        log_mu = _log_fraction(mu)
        q_max = int(c * float(mu) / math.sqrt(n))
        deviations = []
        for q in range(q_max + 1):
            lhs = factorial_moment(stat, pattern, q)
            if lhs <= 0:
                deviations.append(math.inf)
                continue
            log_lhs = _log_fraction(lhs)
            log_rhs = q * log_mu + coeff * q * q
            deviations.append(abs(log_lhs - log_rhs))
        results.append(
            {
                "size": n,
                "q_max": q_max,
                "max_deviation": max(deviations),
                "deviations": deviations,
            }
        )
    return results


def moment_gap_scan(family: StatFamily, pattern: PlaneTree, sizes) -> dict:
    """Exact finite-size gaps |E N - plug-in mean| and |Var N - n * gamma|
    across a size sweep; both stay bounded."""
    rows = []
    for size in sizes:
        stat = family.statistic(size)
        n = stat.size
        pn = OffspringDistribution.finite(stat.empirical_distribution())
        mean_gap = abs(mean_count(stat, pattern) - plugin_mean(stat, pattern))
        var_gap = abs(
            exact_variance(stat, pattern)
            - n * fringe_covariance_density(pn, pattern, pattern)
        )
        rows.append(
            {
                "size": n,
                "mean_gap": float(mean_gap),
                "var_gap": float(var_gap),
            }
        )
    return {
        "pattern": pattern.to_text(),
        "family": family.label(),
        "rows": rows,
        "sup_mean_gap": max(r["mean_gap"] for r in rows),
        "sup_var_gap": max(r["var_gap"] for r in rows),
    }


# ---------------------------------------------------------------------------
# Hub-tree crosscheck


def composition_crosscheck(n0: int, n1: int, reps: int, seed: Seed) -> dict:
    """Compare the fringe-count law of the 2-vertex path under the two
    independent hub-tree samplers, and against exhaustive enumeration when
    the class is small."""
    pattern = PlaneTree((1, 0))
    stat = DegreeStatistic.from_counts({0: n0, 1: n1, n0: 1})
    gen_hub = seed.generator(0)
    gen_uni = seed.generator(1)
    tally_hub = {}
    for _ in range(reps):
        k = count_fringe(sample_hub_tree(n0, n1, gen_hub), pattern)
        tally_hub[k] = tally_hub.get(k, 0) + 1
    tally_uni = {}
    for tree in sample_uniform_trees(stat, reps, gen_uni):
        k = count_fringe(tree, pattern)
        tally_uni[k] = tally_uni.get(k, 0) + 1

    keys = sorted(set(tally_hub) | set(tally_uni))
    result = {"n0": n0, "n1": n1, "reps": reps, "support": keys}
    if len(keys) == 1:
        result["two_sample_p"] = 1.0
        result["degenerate"] = True
    else:
        table = np.array(
            [
                [tally_hub.get(k, 0) for k in keys],
                [tally_uni.get(k, 0) for k in keys],
            ]
        )
        result["two_sample_p"] = float(scistats.chi2_contingency(table).pvalue)
        result["degenerate"] = False

    if count_trees(stat) <= 10_000:
        law = {}
        total = 0
        for tree in enumerate_trees(stat, cap=stat.size):
            law[count_fringe(tree, pattern)] = (
                law.get(count_fringe(tree, pattern), 0) + 1
            )
            total += 1
        expected = {k: v / total for k, v in law.items()}
        result["exact_support"] = sorted(expected)
        for label, tally in (("hub", tally_hub), ("uniform", tally_uni)):
            if len(expected) == 1:
                result[f"exact_p_{label}"] = 1.0 if tally.keys() <= expected.keys() else 0.0
                continue
            obs = [tally.get(k, 0) for k in sorted(expected)]
            exp = [expected[k] * reps for k in sorted(expected)]
            result[f"exact_p_{label}"] = float(scistats.chisquare(obs, exp).pvalue)
    threshold = 1e-3
    result["passed"] = result["two_sample_p"] > threshold and all(
        result.get(f"exact_p_{label}", 1.0) > threshold for label in ("hub", "uniform")
    )
    return result
