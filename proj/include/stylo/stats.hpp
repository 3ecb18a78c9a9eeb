#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stylo/records.hpp"

namespace stylo {

double mean(std::span<const double> x);
/// Sum of squared deviations divided by (n - ddof).
double variance(std::span<const double> x, int ddof);
double stddev(std::span<const double> x, int ddof);

/// Two-sample t test. t, the mean difference and the confidence interval
/// all refer to mean(b) - mean(a); p is two-sided.
struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  double mean_diff = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double alpha = 0.05;

  ordered_json to_json() const;
};

/// Unequal variances, Welch-Satterthwaite degrees of freedom. Needs two
/// values per sample and non-zero variance in at least one of them.
TTestResult welch_ttest(std::span<const double> a, std::span<const double> b, double alpha = 0.05);
/// Equal variances, df = n_a + n_b - 2.
TTestResult pooled_ttest(std::span<const double> a, std::span<const double> b, double alpha = 0.05);

struct AnovaResult {
  double f = 0.0;
  double p_value = 1.0;
  int df_between = 0;
  int df_within = 0;

  ordered_json to_json() const;
};

/// One-way ANOVA; at least two groups of at least two values each.
AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups);

/// A test that may be undefined for the given data.
struct TestOutcome {
  std::string test;
  std::optional<double> statistic;
  std::optional<double> p_value;
  std::string note;

  ordered_json to_json() const;
};

/// Shapiro-Wilk W with Royston's p-value approximation, 3 <= n <= 5000.
TestOutcome shapiro_wilk(std::vector<double> x);
/// Levene's test with group medians as centres (Brown-Forsythe).
TestOutcome brown_forsythe(const std::vector<std::vector<double>>& groups);

struct Diagnostics {
  std::vector<TestOutcome> normality;  // one per sample
  std::optional<TestOutcome> homogeneity;
  double alpha = 0.05;

  ordered_json to_json() const;
};

/// Advisory checks run before t tests and ANOVA; never throws for bad data.
Diagnostics normality_variance_checks(const std::vector<std::vector<double>>& samples, double alpha = 0.05);

}  // namespace stylo
