#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "botforge/cues.hpp"
#include "botforge/error.hpp"

namespace botforge {

// ---------------------------------------------------------------------------
// Student t distribution

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 400;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

inline double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_sided_p(t, df);
  return t >= 0.0 ? 1.0 - tail : tail;
}

struct TTest {
  double t = 0.0;
  double p = 1.0;
};

/// One-sample t test from summary statistics (sample std, n - 1 denominator).
/// A zero-variance sample gives p = 0 when its mean differs from mu by more
/// than 1e-9, else t = 0 and p = 1.
inline TTest one_sample_t(double mean, double std, std::size_t n, double mu) {
  if (n < 2) throw ValidationError("one-sample t test needs n >= 2");
  const double diff = mean - mu;
  if (std <= 0.0) {
    if (std::abs(diff) <= 1e-9) return {0.0, 1.0};
    return {diff > 0 ? std::numeric_limits<double>::infinity()
                     : -std::numeric_limits<double>::infinity(),
            0.0};
  }
  const double t = diff / (std / std::sqrt(static_cast<double>(n)));
  return {t, student_t_two_sided_p(t, static_cast<double>(n - 1))};
}

inline TTest one_sample_t(const std::vector<double>& sample, double mu) {
  if (sample.size() < 2) throw ValidationError("one-sample t test needs n >= 2");
  const auto s = summarize_sample(Cue::first_person_pronouns, sample);
  return one_sample_t(s.mean, s.std, s.n, mu);
}

// ---------------------------------------------------------------------------
// Wild baselines

struct BaselineValue {
  double wild_bot;
  double wild_human;
};

/// Mean cue values of the empirical Wild Bot and Wild Human populations.
class BaselineStats {
public:
  BaselineValue operator[](Cue c) const { return values_[static_cast<std::size_t>(c)]; }

  BaselineValue lookup(std::string_view cue) const {
    auto c = cue_from_name(cue);
    if (!c) throw ValidationError("unknown cue '" + std::string(cue) + "'");
    return (*this)[*c];
  }

  static constexpr std::size_t size() { return kCueCount; }

private:
  friend const BaselineStats& baseline_table();
  std::array<BaselineValue, kCueCount> values_{};
};

inline const BaselineStats& baseline_table() {
  static const BaselineStats table = [] {
    BaselineStats b;
    auto set = [&](Cue c, double bot, double human) {
      b.values_[static_cast<std::size_t>(c)] = {bot, human};
    };
    set(Cue::first_person_pronouns, 0.71, 0.73);
    set(Cue::second_person_pronouns, 0.20, 0.18);
    set(Cue::third_person_pronouns, 0.47, 0.50);
    set(Cue::reading_difficulty, 0.12, 0.10);
    set(Cue::abusive_terms, 0.13, 0.09);
    set(Cue::expletives, 0.12, 0.08);
    set(Cue::negative_sentiment, 1.56, 1.59);
    set(Cue::positive_sentiment, 2.88, 3.10);
    set(Cue::mentions, 1.18, 1.10);
    set(Cue::urls, 0.18, 0.20);
    set(Cue::hashtags, 0.54, 0.49);
    set(Cue::total_degree, 0.15, 0.16);
    set(Cue::in_degree, 0.05, 0.02);
    set(Cue::out_degree, 8e-4, 1.6e-3);
    return b;
  }();
  return table;
}

// ---------------------------------------------------------------------------
// Comparison

inline constexpr double kSignificance = 0.05;

struct ComparisonRow {
  Cue cue = Cue::first_person_pronouns;
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
  TTest vs_bot;
  TTest vs_human;
  bool significant_bot = false;
  bool significant_human = false;
};

inline ComparisonRow compare_summary(const CueSummary& s, const BaselineStats& baselines) {
  ComparisonRow r;
  r.cue = s.cue;
  r.mean = s.mean;
  r.std = s.std;
  r.n = s.n;
  r.vs_bot = one_sample_t(s.mean, s.std, s.n, baselines[s.cue].wild_bot);
  r.vs_human = one_sample_t(s.mean, s.std, s.n, baselines[s.cue].wild_human);
  r.significant_bot = r.vs_bot.p < kSignificance;
  r.significant_human = r.vs_human.p < kSignificance;
  return r;
}

/// Rows in canonical cue order for summaries read from a cue report.
inline std::vector<ComparisonRow> compare(const std::vector<CueSummary>& summaries,
                                          const BaselineStats& baselines = baseline_table()) {
  std::map<Cue, CueSummary> by_cue;
  for (const auto& s : summaries) by_cue.insert_or_assign(s.cue, s);
  std::vector<ComparisonRow> rows;
  for (auto c : kAllCues) {
    auto it = by_cue.find(c);
    if (it == by_cue.end()) continue;
    if (it->second.n < 2)
      throw ValidationError(std::string("need >= 2 agents for cue '") + cue_name(c) + "'");
    rows.push_back(compare_summary(it->second, baselines));
  }
  return rows;
}

/// One-sample tests of per-agent cue values against both wild means.
inline std::vector<ComparisonRow> compare(const std::map<std::string, CueVector>& per_agent,
                                          const BaselineStats& baselines = baseline_table()) {
  if (per_agent.size() < 2) throw ValidationError("need >= 2 agents to compare");
  std::vector<CueSummary> summaries;
  for (auto c : kAllCues) {
    std::vector<double> xs;
    for (const auto& [id, v] : per_agent) xs.push_back(v[c]);
    summaries.push_back(summarize_sample(c, xs));
  }
  return compare(summaries, baselines);
}

enum class ReportFormat { markdown, csv };

namespace detail {
inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}
}  // namespace detail

/// `*` marks significance against Wild Bots, `#` against Wild Humans.
inline std::string render_report(const std::vector<ComparisonRow>& rows, ReportFormat format,
                                 const BaselineStats& baselines = baseline_table()) {
  if (rows.empty()) throw ValidationError("cannot render an empty comparison");
  std::string s;
  if (format == ReportFormat::csv) {
    s = "cue,mean,std,n,t_bot,p_bot,sig_bot,t_human,p_human,sig_human\n";
    for (const auto& r : rows) {
      s += std::string(cue_name(r.cue)) + "," + format_number(r.mean) + "," +
           format_number(r.std) + "," + std::to_string(r.n) + "," + format_number(r.vs_bot.t) +
           "," + format_number(r.vs_bot.p) + "," + (r.significant_bot ? "true" : "false") + "," +
           format_number(r.vs_human.t) + "," + format_number(r.vs_human.p) + "," +
           (r.significant_human ? "true" : "false") + "\n";
    }
    return s;
  }
  s = "| Cue | Wild Bot | Generated | Wild Human | n | t (bot) | p (bot) | t (human) | p (human) |\n";
  s += "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    std::string value = detail::fmt("%.4g", r.mean);
    if (r.significant_bot) value += "*";
    if (r.significant_human) value += "#";
    s += "| " + std::string(cue_label(r.cue)) + " | " + detail::fmt("%.4g", baselines[r.cue].wild_bot) +
         " | " + value + " | " + detail::fmt("%.4g", baselines[r.cue].wild_human) + " | " +
         std::to_string(r.n) + " | " + detail::fmt("%.3f", r.vs_bot.t) + " | " +
         detail::fmt("%.3g", r.vs_bot.p) + " | " + detail::fmt("%.3f", r.vs_human.t) + " | " +
         detail::fmt("%.3g", r.vs_human.p) + " |\n";
  }
  s += "\n`*` significant vs Wild Bots, `#` significant vs Wild Humans (p < 0.05, one-sample t).\n";
  return s;
}

}  // namespace botforge
