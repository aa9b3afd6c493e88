#pragma once

#include <algorithm>
#include <cstddef>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "daf/error.hpp"

namespace daf {

/// Fraction of samples where (score >= tau) matches the label.
/// A score exactly at the threshold classifies as fake (label 1).
inline double accuracy(const std::vector<double>& scores,
                       const std::vector<int>& labels, double tau = 0.5) {
  if (scores.empty()) throw EmptyInput("accuracy: no samples");
  if (scores.size() != labels.size()) {
    throw LengthMismatch("accuracy: scores and labels differ in length");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const int predicted = scores[i] >= tau ? 1 : 0;
    if (predicted == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

/// Area under the ROC curve as the Mann-Whitney rank statistic: the
/// fraction of (negative, positive) pairs ranked correctly, ties worth 0.5.
/// Average ranks keep the result exactly equal to pairwise counting.
inline double auc(const std::vector<double>& scores,
                  const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw LengthMismatch("auc: scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += static_cast<std::size_t>(y == 1);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw SingleClass("auc: both classes required");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Sum of positive-sample ranks, with tied scores sharing the average rank.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) *
                                      static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

/// ROC staircase from (0,0) to (1,1), one vertex per distinct score.
/// Trapezoidal area under these points equals auc().
inline std::vector<std::pair<double, double>> roc_points(
    const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw LengthMismatch("roc_points: scores and labels differ in length");
  }
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += static_cast<std::size_t>(y == 1);
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw SingleClass("roc_points: both classes required");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  std::vector<std::pair<double, double>> points;
  points.emplace_back(0.0, 0.0);
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        ++tp;
      } else {
        ++fp;
      }
    }
    points.emplace_back(static_cast<double>(fp) / static_cast<double>(n_neg),
                        static_cast<double>(tp) / static_cast<double>(n_pos));
    i = j;
  }
  return points;
}

struct GroupMetrics {
  double acc = 0.0;
  double auc = 0.0;
  std::size_t count = 0;
  std::size_t n_real = 0;
  std::size_t n_fake = 0;
};

/// Overall and per-generator-tag detection metrics for one labeled corpus.
struct EvalReport {
  GroupMetrics overall;
  std::map<std::string, GroupMetrics> groups;
  double threshold = 0.5;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    auto group_json = [](const GroupMetrics& g) {
      nlohmann::ordered_json gj;
      gj["acc"] = g.acc;
      gj["auc"] = g.auc;
      gj["count"] = g.count;
      gj["real"] = g.n_real;
      gj["fake"] = g.n_fake;
      return gj;
    };
    j["overall"] = group_json(overall);
    j["groups"] = nlohmann::ordered_json::object();
    for (const auto& [tag, g] : groups) j["groups"][tag] = group_json(g);
    j["threshold"] = threshold;
    return j;
  }

  void print_table(std::ostream& os) const {
    auto line = [&os](const std::string& name, const GroupMetrics& g) {
      os << "  " << std::left << std::setw(20) << name << std::right
         << std::fixed << std::setprecision(4) << " acc=" << g.acc
         << " auc=" << g.auc << "  n=" << g.count << " (real " << g.n_real
         << " / fake " << g.n_fake << ")\n";
    };
    os << "evaluation (threshold " << threshold << ")\n";
    line("overall", overall);
    for (const auto& [tag, g] : groups) line(tag, g);
  }
};

/// Builds an EvalReport from scores, labels, and per-sample generator tags.
/// A tag whose group holds a single class is scored for AUC against all
/// opposite-class samples of the corpus, mirroring per-generator reporting
/// where each generator's fakes face the shared pool of real images.
inline EvalReport evaluate(const std::vector<double>& scores,
                           const std::vector<int>& labels,
                           const std::vector<std::string>& tags,
                           double threshold = 0.5) {
  if (scores.empty()) throw EmptyInput("evaluate: no samples");
  if (scores.size() != labels.size() ||
      (!tags.empty() && tags.size() != scores.size())) {
    throw LengthMismatch("evaluate: input lengths differ");
  }

  EvalReport report;
  report.threshold = threshold;
  report.overall.acc = accuracy(scores, labels, threshold);
  report.overall.auc = auc(scores, labels);
  report.overall.count = scores.size();
  for (int y : labels) {
    ++(y == 1 ? report.overall.n_fake : report.overall.n_real);
  }

  std::map<std::string, std::vector<std::size_t>> by_tag;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    by_tag[tags.empty() ? std::string() : tags[i]].push_back(i);
  }

  for (const auto& [tag, index_list] : by_tag) {
    GroupMetrics g;
    g.count = index_list.size();
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t i : index_list) {
      s.push_back(scores[i]);
      y.push_back(labels[i]);
      ++(labels[i] == 1 ? g.n_fake : g.n_real);
    }
    g.acc = accuracy(s, y, threshold);
    if (g.n_real > 0 && g.n_fake > 0) {
      g.auc = auc(s, y);
    } else {
      // Borrow the missing class from the whole corpus.
      const int missing = g.n_fake == 0 ? 1 : 0;
      std::vector<double> s2 = s;
      std::vector<int> y2 = y;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] == missing) {
          s2.push_back(scores[i]);
          y2.push_back(labels[i]);
        }
      }
      g.auc = (y2.size() > s.size()) ? auc(s2, y2) : 0.5;
    }
    report.groups[tag] = g;
  }
  return report;
}

}  // namespace daf
