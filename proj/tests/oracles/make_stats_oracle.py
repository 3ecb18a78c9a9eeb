"""Freezes reference statistics from scipy into tests/data/stats_oracle.json.

Run from the repository root:  python3 tests/oracles/make_stats_oracle.py
"""
import json
import pathlib

import numpy as np
from scipy import stats

rng = np.random.default_rng(20240611)


def sample(n):
    return [float(v) for v in np.round(rng.normal(rng.uniform(-5, 5), rng.uniform(0.2, 4.0), n), 6)]


welch = []
for _ in range(50):
    a, b = sample(int(rng.integers(2, 31))), sample(int(rng.integers(2, 31)))
    r = stats.ttest_ind(b, a, equal_var=False)
    ci = r.confidence_interval(0.95)
    welch.append({"a": a, "b": b, "t": float(r.statistic), "df": float(r.df), "p": float(r.pvalue),
                  "ci_low": float(ci.low), "ci_high": float(ci.high)})

pooled = []
for _ in range(20):
    a, b = sample(int(rng.integers(2, 20))), sample(int(rng.integers(2, 20)))
    r = stats.ttest_ind(b, a, equal_var=True)
    pooled.append({"a": a, "b": b, "t": float(r.statistic), "p": float(r.pvalue)})

anova = []
for _ in range(50):
    groups = [sample(int(rng.integers(2, 21))) for _ in range(int(rng.integers(2, 7)))]
    r = stats.f_oneway(*groups)
    anova.append({"groups": groups, "f": float(r.statistic), "p": float(r.pvalue)})

shapiro = []
for _ in range(20):
    x = sample(int(rng.integers(3, 60)))
    r = stats.shapiro(x)
    shapiro.append({"x": x, "w": float(r.statistic), "p": float(r.pvalue)})

levene = []
for _ in range(20):
    groups = [sample(int(rng.integers(3, 20))) for _ in range(int(rng.integers(2, 5)))]
    r = stats.levene(*groups, center="median")
    levene.append({"groups": groups, "w": float(r.statistic), "p": float(r.pvalue)})

out = {"generator": "scipy " + __import__("scipy").__version__, "welch": welch, "pooled": pooled,
       "anova": anova, "shapiro": shapiro, "brown_forsythe": levene}
path = pathlib.Path(__file__).resolve().parent.parent / "data" / "stats_oracle.json"
path.write_text(json.dumps(out, indent=1) + "\n")
print(f"wrote {path}")
