#include "evr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/students_t.hpp>

#include "evr/error.hpp"

namespace evr::stats {

std::string_view to_string(PairedMethod m) {
    switch (m) {
        case PairedMethod::TTest: return "t_test";
        case PairedMethod::Wilcoxon: return "wilcoxon";
        case PairedMethod::Permutation: return "permutation";
    }
    return "unknown";
}

PairedMethod parse_method(std::string_view s) {
    for (const auto m : {PairedMethod::TTest, PairedMethod::Wilcoxon, PairedMethod::Permutation}) {
        if (to_string(m) == s) return m;
    }
    throw ValidationError("invalid_method", "unknown test method '" + std::string(s) + "'");
}

std::string test_name(PairedMethod m) {
    switch (m) {
        case PairedMethod::TTest: return "paired t-test (two-sided)";
        case PairedMethod::Wilcoxon: return "Wilcoxon signed-rank (two-sided)";
        case PairedMethod::Permutation: return "sign-flip permutation (two-sided)";
    }
    return "unknown";
}

double mean(const std::vector<double>& v) {
    if (v.empty()) throw ValidationError("empty_input", "mean of an empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) throw ValidationError("insufficient_data", "sample sd needs two values");
    const double m = mean(v);
    double ss = 0.0;
    for (const double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double median(std::vector<double> v) {
    if (v.empty()) throw ValidationError("empty_input", "median of an empty sample");
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double t_two_sided_p(double t, double df) {
    if (!(df > 0)) throw ValidationError("invalid_df", "degrees of freedom must be positive");
    if (std::isinf(t)) return 0.0;
    const boost::math::students_t dist(df);
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
    return std::clamp(p, 0.0, 1.0);
}

namespace {

// Differences are rounded to this grid before sign-flip and rank
// comparisons so that 0.1 + 0.2 style noise does not split ties.
constexpr double kTieEps = 1e-9;

PairedTest t_test(const std::vector<double>& d) {
    PairedTest r;
    const double n = static_cast<double>(d.size());
    const double sd = sample_sd(d);
    const double t = mean(d) / (sd / std::sqrt(n));
    r.statistic = t;
    r.p_value = t_two_sided_p(t, n - 1);
    return r;
}

PairedTest wilcoxon(const std::vector<double>& d) {
    PairedTest r;
    std::vector<double> nz;
    for (const double x : d) {
        if (std::fabs(x) > kTieEps) nz.push_back(x);
    }
    if (nz.empty()) {
        r.degenerate = true;
        r.p_value = 1.0;
        return r;
    }
    const auto n = nz.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return std::fabs(nz[i]) < std::fabs(nz[j]); });
    // Doubled average ranks stay integral with ties.
    std::vector<long> rank2(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::fabs(std::fabs(nz[order[j + 1]]) - std::fabs(nz[order[i]])) <= kTieEps) ++j;
        const long r2 = static_cast<long>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = r2;
        i = j + 1;
    }
    long w2 = 0, total2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        total2 += rank2[i];
        if (nz[i] > 0) w2 += rank2[i];
    }
    // Exact null distribution of 2*W+ under independent sign flips.
    std::vector<double> dist(static_cast<std::size_t>(total2) + 1, 0.0);
    dist[0] = 1.0;
    long reach = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (long s = reach; s >= 0; --s) {
            if (dist[s] != 0.0) dist[s + rank2[i]] += dist[s];
        }
        reach += rank2[i];
    }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    double lower = 0.0, upper = 0.0;
    for (long s = 0; s <= total2; ++s) {
        if (s <= w2) lower += dist[s];
        if (s >= w2) upper += dist[s];
    }
    r.statistic = static_cast<double>(w2) / 2.0;
    r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / all);
    return r;
}

PairedTest permutation(const std::vector<double>& d, const PairedOptions& opt) {
    PairedTest r;
    const double observed = std::fabs(std::accumulate(d.begin(), d.end(), 0.0));
    r.statistic = std::accumulate(d.begin(), d.end(), 0.0);
    const auto n = d.size();
    auto at_least = [&](double s) { return std::fabs(s) >= observed - kTieEps; };
    if (n <= opt.exact_limit) {
        const std::uint64_t total = std::uint64_t{1} << n;
        std::uint64_t hits = 0;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += (mask >> i & 1u) ? -d[i] : d[i];
            if (at_least(s)) ++hits;
        }
        r.p_value = static_cast<double>(hits) / static_cast<double>(total);
        return r;
    }
    r.exact = false;
    std::mt19937_64 rng(opt.seed);
    std::uint64_t hits = 0;
    for (std::size_t draw = 0; draw < opt.monte_carlo_draws; ++draw) {
        double s = 0.0;
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i % 64 == 0) bits = rng();
            s += (bits & 1u) ? -d[i] : d[i];
            bits >>= 1;
        }
        if (at_least(s)) ++hits;
    }
    // Add-one estimate so that the p-value is never exactly zero.
    r.p_value = static_cast<double>(hits + 1) / static_cast<double>(opt.monte_carlo_draws + 1);
    return r;
}

}  // namespace

PairedTest paired_test(const std::vector<double>& a, const std::vector<double>& b, PairedMethod method,
                       const PairedOptions& options) {
    if (a.size() != b.size()) throw ValidationError("length_mismatch", "paired samples differ in size");
    if (a.size() < 2) throw ValidationError("insufficient_pairs", "a paired test needs at least two pairs");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];

    const double md = mean(d);
    const bool constant =
        std::all_of(d.begin(), d.end(), [&](double x) { return std::fabs(x - d.front()) <= kTieEps; });

    PairedTest r;
    if (constant) {
        r.degenerate = true;
        r.p_value = std::fabs(md) <= kTieEps ? 1.0 : 0.0;
    } else {
        switch (method) {
            case PairedMethod::TTest: r = t_test(d); break;
            case PairedMethod::Wilcoxon: r = wilcoxon(d); break;
            case PairedMethod::Permutation: r = permutation(d, options); break;
        }
    }
    r.n_pairs = a.size();
    r.mean_a = mean(a);
    r.mean_b = mean(b);
    r.mean_diff = md;
    r.test_name = test_name(method);
    return r;
}

}  // namespace evr::stats
