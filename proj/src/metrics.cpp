#include "mospred/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "mospred/error.hpp"

namespace mospred::metrics {

namespace {

void check_pair(std::span<const double> a, std::span<const double> b, std::size_t min_len, const char* what) {
  if (a.size() != b.size()) {
    throw ArgumentError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()) + ")");
  }
  if (a.size() < min_len) {
    throw ArgumentError(std::string(what) + ": need at least " + std::to_string(min_len) + " values");
  }
}

double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double mse(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, 1, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = pred[i] - truth[i];
    s += r * r;
  }
  return s / static_cast<double>(pred.size());
}

double lcc(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, 2, "lcc");
  const double mx = mean_of(pred);
  const double my = mean_of(truth);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dx = pred[i] - mx;
    const double dy = truth[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelation("correlation undefined for constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 (0-based) share rank mean(i+1..j).
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double srcc(std::span<const double> pred, std::span<const double> truth) {
  check_pair(pred, truth, 2, "srcc");
  const auto rp = fractional_ranks(pred);
  const auto rt = fractional_ranks(truth);
  return lcc(rp, rt);
}

std::vector<SystemMean> system_aggregate(std::span<const ScoredUtterance> records) {
  std::map<std::string, std::vector<const ScoredUtterance*>> groups;
  for (const auto& r : records) groups[r.system_id].push_back(&r);

  std::vector<SystemMean> out;
  out.reserve(groups.size());
  for (auto& [system, members] : groups) {
    std::sort(members.begin(), members.end(), [](const ScoredUtterance* a, const ScoredUtterance* b) {
      if (a->utterance_id != b->utterance_id) return a->utterance_id < b->utterance_id;
      if (a->predicted != b->predicted) return a->predicted < b->predicted;
      return a->truth < b->truth;
    });
    SystemMean m;
    m.system_id = system;
    m.count = members.size();
    for (const auto* r : members) {
      m.predicted_mean += r->predicted;
      m.true_mean += r->truth;
    }
    m.predicted_mean /= static_cast<double>(m.count);
    m.true_mean /= static_cast<double>(m.count);
    out.push_back(std::move(m));
  }
  return out;
}

LevelReport level_report(Level level, std::span<const double> pred, std::span<const double> truth) {
  LevelReport r;
  r.level = level;
  r.n = pred.size();
  r.mse = mse(pred, truth);
  const char* name = level == Level::utterance ? "utterance" : "system";
  auto guarded = [&](double (*fn)(std::span<const double>, std::span<const double>), const char* metric) {
    try {
      return fn(pred, truth);
    } catch (const UndefinedCorrelation& e) {
      r.warnings.push_back(std::string(name) + "-level " + metric + ": " + e.what());
    } catch (const ArgumentError& e) {
      r.warnings.push_back(std::string(name) + "-level " + metric + ": " + e.what());
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  r.lcc = guarded(&lcc, "LCC");
  r.srcc = guarded(&srcc, "SRCC");
  return r;
}

EvalReport evaluate(std::span<const ScoredUtterance> records) {
  if (records.empty()) throw ArgumentError("evaluate: no records");
  std::vector<double> pred;
  std::vector<double> truth;
  for (const auto& r : records) {
    pred.push_back(r.predicted);
    truth.push_back(r.truth);
  }
  EvalReport report;
  report.utterance = level_report(Level::utterance, pred, truth);

  const auto systems = system_aggregate(records);
  std::vector<double> sp;
  std::vector<double> st;
  for (const auto& s : systems) {
    sp.push_back(s.predicted_mean);
    st.push_back(s.true_mean);
  }
  report.system = level_report(Level::system, sp, st);
  report.system.per_system = systems;
  return report;
}

}  // namespace mospred::metrics
