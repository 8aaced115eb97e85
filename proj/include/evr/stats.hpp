#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evr::stats {

enum class PairedMethod { TTest, Wilcoxon, Permutation };

std::string_view to_string(PairedMethod m);
// Accepts "t_test", "wilcoxon", "permutation".
PairedMethod parse_method(std::string_view s);
// Human-readable name recorded in reports.
std::string test_name(PairedMethod m);

struct PairedOptions {
    // Above this many nonzero pairs the permutation test switches from full
    // enumeration to Monte Carlo sign flips.
    std::size_t exact_limit = 20;
    std::size_t monte_carlo_draws = 100000;
    std::uint64_t seed = 7;
};

struct PairedTest {
    std::size_t n_pairs = 0;
    double mean_a = 0.0;
    double mean_b = 0.0;
    double mean_diff = 0.0;  // mean(b - a)
    std::optional<double> statistic;  // t, W+ or sum of differences; absent when degenerate
    double p_value = 1.0;
    bool degenerate = false;
    bool exact = true;
    std::string test_name;
};

// Two-sided paired test of b against a. Throws ValidationError("insufficient_pairs")
// for fewer than two pairs and "length_mismatch" when the samples differ in size.
// Zero variance of the differences is handled by convention: p = 1 when the
// mean difference is zero, p = 0 otherwise, flagged degenerate.
PairedTest paired_test(const std::vector<double>& a, const std::vector<double>& b, PairedMethod method,
                       const PairedOptions& options = {});

// Two-sided p-value of Student's t with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

double mean(const std::vector<double>& v);
// n - 1 denominator; requires at least two values.
double sample_sd(const std::vector<double>& v);
double median(std::vector<double> v);

}  // namespace evr::stats
