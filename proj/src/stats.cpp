#include "stylo/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "stylo/types.hpp"

namespace stylo {

namespace bm = boost::math;

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x, int ddof) {
  if (static_cast<long>(x.size()) <= ddof) throw std::invalid_argument("sample too small for variance");
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(static_cast<long>(x.size()) - ddof);
}

double stddev(std::span<const double> x, int ddof) { return std::sqrt(variance(x, ddof)); }

ordered_json TTestResult::to_json() const {
  ordered_json j;
  j["t"] = t;
  j["df"] = df;
  j["p_value"] = p_value;
  j["difference"] = "mean(b) - mean(a)";
  j["mean_diff"] = mean_diff;
  j["ci_level"] = 1.0 - alpha;
  j["ci_low"] = ci_low;
  j["ci_high"] = ci_high;
  return j;
}

namespace {

void check_samples(std::span<const double> a, std::span<const double> b, double alpha) {
  if (a.size() < 2 || b.size() < 2) throw ValidationError("t test needs at least two values per sample");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
}

TTestResult finish(double diff, double se, double df, double alpha) {
  TTestResult r;
  r.alpha = alpha;
  r.df = df;
  r.mean_diff = diff;
  r.t = diff / se;
  bm::students_t dist(df);
  r.p_value = std::clamp(2.0 * bm::cdf(bm::complement(dist, std::fabs(r.t))), 0.0, 1.0);
  const double crit = bm::quantile(bm::complement(dist, alpha / 2.0));
  r.ci_low = diff - crit * se;
  r.ci_high = diff + crit * se;
  return r;
}

}  // namespace

TTestResult welch_ttest(std::span<const double> a, std::span<const double> b, double alpha) {
  check_samples(a, b, alpha);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = variance(a, 1) / na, vb = variance(b, 1) / nb;
  if (va == 0.0 && vb == 0.0) throw ValidationError("both samples have zero variance");
  const double df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  return finish(mean(b) - mean(a), std::sqrt(va + vb), df, alpha);
}

TTestResult pooled_ttest(std::span<const double> a, std::span<const double> b, double alpha) {
  check_samples(a, b, alpha);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double df = na + nb - 2.0;
  const double sp2 = ((na - 1.0) * variance(a, 1) + (nb - 1.0) * variance(b, 1)) / df;
  if (sp2 == 0.0) throw ValidationError("both samples have zero variance");
  return finish(mean(b) - mean(a), std::sqrt(sp2 * (1.0 / na + 1.0 / nb)), df, alpha);
}

ordered_json AnovaResult::to_json() const {
  ordered_json j;
  j["f"] = f;
  j["p_value"] = p_value;
  j["df_between"] = df_between;
  j["df_within"] = df_within;
  return j;
}

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw ValidationError("ANOVA needs at least two groups");
  std::size_t total_n = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw ValidationError("ANOVA needs at least two values per group");
    total_n += g.size();
    grand += std::accumulate(g.begin(), g.end(), 0.0);
  }
  grand /= static_cast<double>(total_n);
  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    const double m = mean(g);
    ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) ssw += (v - m) * (v - m);
  }
  AnovaResult r;
  r.df_between = static_cast<int>(groups.size()) - 1;
  r.df_within = static_cast<int>(total_n - groups.size());
  if (ssw == 0.0 && ssb == 0.0) throw ValidationError("all values identical; F is undefined");
  if (ssw == 0.0) {
    r.f = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.f = (ssb / r.df_between) / (ssw / r.df_within);
  bm::fisher_f dist(r.df_between, r.df_within);
  r.p_value = std::clamp(bm::cdf(bm::complement(dist, r.f)), 0.0, 1.0);
  return r;
}

ordered_json TestOutcome::to_json() const {
  ordered_json j;
  j["test"] = test;
  j["statistic"] = statistic ? ordered_json(*statistic) : ordered_json(nullptr);
  j["p_value"] = p_value ? ordered_json(*p_value) : ordered_json(nullptr);
  if (!note.empty()) j["note"] = note;
  return j;
}

namespace {

double poly(const double* c, int n, double x) {
  double r = c[0];
  if (n > 1) {
    double p = x * c[n - 1];
    for (int j = n - 2; j > 0; --j) p = (p + c[j]) * x;
    r += p;
  }
  return r;
}

}  // namespace

TestOutcome shapiro_wilk(std::vector<double> x) {
  TestOutcome out{"Shapiro-Wilk", std::nullopt, std::nullopt, {}};
  const std::size_t n = x.size();
  if (n < 3) {
    out.note = "needs at least 3 values";
    return out;
  }
  if (n > 5000) {
    out.note = "p-value approximation only holds up to 5000 values";
    return out;
  }
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 1e-19 * std::max(1.0, std::fabs(x.front())))) {
    out.note = "constant sample; normality undefined";
    return out;
  }

  static const double g[] = {-2.273, 0.459};
  static const double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static const double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static const double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static const double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static const double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static const double c6[] = {-0.4803, -0.082676, 0.0030302};

  const double an = static_cast<double>(n);
  const std::size_t half = n / 2;
  std::vector<double> a(half);
  bm::normal stdnorm;
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    std::vector<double> m(half);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
      m[i] = bm::quantile(stdnorm, (static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2), rsn = 1.0 / std::sqrt(an);
    const double a1 = poly(c1, 6, rsn) - m[0] / ssumm2;
    std::size_t first;
    double fac;
    if (n > 5) {
      first = 2;
      const double a2 = -m[1] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      first = 1;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = first; i < half; ++i) a[i] = -m[i] / fac;
  }

  const double xm = mean(x);
  double num = 0.0, ssx = 0.0;
  for (std::size_t i = 0; i < half; ++i) num += a[i] * (x[n - 1 - i] - x[i]);
  for (double v : x) ssx += (v - xm) * (v - xm);
  const double w = std::min(1.0, num * num / ssx);
  out.statistic = w;

  if (n == 3) {
    const double pi6 = 6.0 / std::numbers::pi, stqr = std::numbers::pi / 3.0;
    out.p_value = std::max(0.0, pi6 * (std::asin(std::sqrt(w)) - stqr));
    return out;
  }
  double y = std::log(1.0 - w);
  const double xx = std::log(an);
  double mu, sigma;
  if (n <= 11) {
    const double gamma = poly(g, 2, an);
    if (y >= gamma) {
      out.p_value = 1e-99;
      return out;
    }
    y = -std::log(gamma - y);
    mu = poly(c3, 4, an);
    sigma = std::exp(poly(c4, 4, an));
  } else {
    mu = poly(c5, 4, xx);
    sigma = std::exp(poly(c6, 3, xx));
  }
  const double z = (y - mu) / sigma;
  out.p_value = std::isfinite(z) ? bm::cdf(bm::complement(stdnorm, z)) : (z > 0 ? 0.0 : 1.0);
  return out;
}

TestOutcome brown_forsythe(const std::vector<std::vector<double>>& groups) {
  TestOutcome out{"Brown-Forsythe", std::nullopt, std::nullopt, {}};
  std::vector<std::vector<double>> dev;
  for (auto g : groups) {
    if (g.size() < 2) {
      out.note = "needs at least two values per group";
      return out;
    }
    std::sort(g.begin(), g.end());
    const std::size_t k = g.size();
    const double med = k % 2 ? g[k / 2] : (g[k / 2 - 1] + g[k / 2]) / 2.0;
    std::vector<double> d;
    for (double v : g) d.push_back(std::fabs(v - med));
    dev.push_back(std::move(d));
  }
  if (dev.size() < 2) {
    out.note = "needs at least two groups";
    return out;
  }
  try {
    auto r = anova_oneway(dev);
    out.statistic = r.f;
    out.p_value = r.p_value;
  } catch (const ValidationError&) {
    out.note = "all absolute deviations identical; statistic undefined";
  }
  return out;
}

ordered_json Diagnostics::to_json() const {
  ordered_json j;
  j["alpha"] = alpha;
  j["normality"] = ordered_json::array();
  for (const auto& t : normality) j["normality"].push_back(t.to_json());
  j["homogeneity"] = homogeneity ? homogeneity->to_json() : ordered_json(nullptr);
  return j;
}

Diagnostics normality_variance_checks(const std::vector<std::vector<double>>& samples, double alpha) {
  Diagnostics d;
  d.alpha = alpha;
  for (const auto& s : samples) d.normality.push_back(shapiro_wilk(s));
  if (samples.size() >= 2) d.homogeneity = brown_forsythe(samples);
  return d;
}

}  // namespace stylo
