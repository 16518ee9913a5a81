# One-sided paired t-test values frozen in the metrics unit tests.
from scipy import stats

after = [0.61, 0.64, 0.58, 0.70, 0.66, 0.63, 0.59, 0.68]
before = [0.55, 0.60, 0.57, 0.62, 0.61, 0.60, 0.58, 0.61]
r = stats.ttest_rel(after, before, alternative="greater")
print(f"t {r.statistic:.12f} p {r.pvalue:.12e}")
r = stats.ttest_rel(before, after, alternative="greater")
print(f"t {r.statistic:.12f} p {r.pvalue:.12e}")
