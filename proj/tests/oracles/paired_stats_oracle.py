"""Reference p-values for the paired-test fixtures in test_stats.cpp."""
import numpy as np
from scipy import stats

FIXTURES = {
    "mostly_up": ([3, 4, 2, 5, 3, 4, 3, 2], [4, 5, 3, 5, 4, 5, 4, 3]),
    "mixed": ([2, 3, 3, 4, 1, 2, 5, 3], [3, 2, 4, 4, 3, 2, 4, 5]),
    "halves": ([4.5, 3.0, 2.5, 4.0, 3.5, 2.0, 4.0, 3.0], [4.0, 3.5, 3.5, 4.5, 3.0, 3.0, 4.5, 4.0]),
    "noisy": ([1.2, 2.9, 3.3, 4.8, 2.2, 3.9, 4.1, 2.6], [2.0, 2.7, 4.1, 4.9, 3.5, 3.6, 4.4, 3.9]),
}

for name, (a, b) in FIXTURES.items():
    a, b = np.array(a, float), np.array(b, float)
    t = stats.ttest_rel(b, a)
    w = stats.wilcoxon(b - a, zero_method="wilcox", method="exact")
    perm = stats.permutation_test((b - a,), np.mean, permutation_type="samples",
                                  alternative="two-sided", n_resamples=np.inf)
    print(f"{name}: t={t.statistic!r} p_t={t.pvalue!r} W={w.statistic!r} p_w={w.pvalue!r} p_perm={perm.pvalue!r}")

# Wilcoxon with tied |d| (midranks) by brute-force sign enumeration; scipy's
# exact table assumes untied ranks. Differences are rounded first so that
# float noise (4.4 - 4.1 vs 3.9 - 3.6) does not split ties.
import itertools
for name, (a, b) in FIXTURES.items():
    d = np.round(np.array(b, float) - np.array(a, float), 9)
    d = d[d != 0]
    r = stats.rankdata(np.abs(d))
    obs = r[d > 0].sum()
    centre = r.sum() / 2
    hits = 0
    for signs in itertools.product([0, 1], repeat=len(d)):
        w = sum(ri for ri, s in zip(r, signs) if s)
        hits += abs(w - centre) >= abs(obs - centre) - 1e-9
    print(f"{name}: W+={obs!r} p_w_ties={hits / 2 ** len(d)!r}")
