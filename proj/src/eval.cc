// Copyright 2026 The rcabench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rcabench/eval.h"

#include <sched.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>

#include "rcabench/simengine.h"
#include "rcabench/workload.h"

namespace rcabench {

namespace {

void RequireRanks(const std::vector<uint64_t>& ranks) {
  if (ranks.empty()) throw EmptyInputError("empty result set");
  for (uint64_t r : ranks) {
    if (r == 0) throw std::invalid_argument("ranks are 1-based");
  }
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

double TopK(const std::vector<uint64_t>& ranks, uint64_t k) {
  RequireRanks(ranks);
  if (k < 1) throw std::invalid_argument("K must be at least 1");
  uint64_t hits = 0;
  for (uint64_t r : ranks) hits += r <= k ? 1 : 0;
  return static_cast<double>(hits) / ranks.size();
}

double AvgK(const std::vector<uint64_t>& ranks, uint64_t k) {
  RequireRanks(ranks);
  if (k < 1) throw std::invalid_argument("K must be at least 1");
  double sum = 0.0;
  for (uint64_t i = 1; i <= k; ++i) sum += TopK(ranks, i);
  return sum / k;
}

double Mrr(const std::vector<uint64_t>& ranks) {
  RequireRanks(ranks);
  double sum = 0.0;
  for (uint64_t r : ranks) sum += r == kAbsentRank ? 0.0 : 1.0 / r;
  return sum / ranks.size();
}

MetricRow SummarizeResults(const std::vector<CaseResult>& results) {
  MetricRow row;
  std::vector<uint64_t> ranks;
  double seconds = 0.0;
  for (const auto& r : results) {
    ranks.push_back(r.rank);
    seconds += r.seconds;
    row.flagged += r.flagged ? 1 : 0;
  }
  row.cases = ranks.size();
  row.top1 = TopK(ranks, 1);
  row.top3 = TopK(ranks, 3);
  row.top5 = TopK(ranks, 5);
  row.avg3 = AvgK(ranks, 3);
  row.avg5 = AvgK(ranks, 5);
  row.mrr = Mrr(ranks);
  row.mean_seconds = seconds / ranks.size();
  return row;
}

Split StratifiedSplit(const std::vector<EvalCase>& cases, double train_fraction,
                      uint64_t seed) {
  if (!(train_fraction >= 0 && train_fraction <= 1)) {
    throw ConfigError("train fraction must lie in [0, 1]");
  }
  std::map<std::string, std::vector<std::size_t>> by_type;
  for (std::size_t i = 0; i < cases.size(); ++i) by_type[cases[i].fault_type].push_back(i);
  Split split;
  for (auto& [type, members] : by_type) {
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return cases[a].case_id < cases[b].case_id;
    });
    Rng rng(DeriveSeed(DeriveSeed(seed, "split"), type));
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng.UniformInt(i)]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * members.size()));
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < n_train ? split.train : split.test).push_back(members[i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

namespace {

CaseResult NewResult(const EvalCase& c, const std::string& algorithm) {
  CaseResult r;
  r.case_id = c.case_id;
  r.algorithm = algorithm;
  r.fault_type = c.fault_type;
  r.true_service = c.true_service;
  return r;
}

CaseResult Invoke(RcaAlgorithm& algorithm, const EvalCase& c,
                  const TelemetryBundle& bundle, const Topology& topology) {
  CaseResult result = NewResult(c, algorithm.name());
  RcaInput input{&bundle, &topology, c.case_id, c.case_dir};
  const auto start = std::chrono::steady_clock::now();
  try {
    const RankedCandidates ranking = algorithm.Rank(input);
    result.seconds = Seconds(start);
    if (ranking.ranking.empty()) {
      result.flagged = true;
      result.note = "empty ranking";
    } else {
      const std::size_t rank = ranking.RankOf(c.true_service);
      result.rank = rank == 0 ? kAbsentRank : rank;
    }
  } catch (const Error& e) {
    result.seconds = Seconds(start);
    result.flagged = true;
    result.note = e.what();
  }
  return result;
}

}  // namespace

EvalReport RunEvaluation(const std::vector<EvalCase>& cases, const Topology& topology,
                         const std::vector<std::string>& algorithms,
                         const AlgorithmConfig& config, const EvalOptions& options) {
  if (cases.empty()) throw EmptyEvaluationError("no HasAnomaly cases to evaluate");
  if (algorithms.empty()) throw ConfigError("no algorithms selected");
  std::vector<bool> trainable;
  for (const auto& name : algorithms) {
    trainable.push_back(MakeAlgorithm(name, config)->requires_training());
  }
  const Split split = StratifiedSplit(cases, options.train_fraction, options.seed);
  std::vector<bool> in_test(cases.size(), false);
  for (std::size_t i : split.test) in_test[i] = true;

  // Trainable algorithms are trained before any case is ranked.
  std::vector<std::unique_ptr<RcaAlgorithm>> trained(algorithms.size());
  std::vector<std::string> train_errors(algorithms.size());
  for (std::size_t a = 0; a < algorithms.size(); ++a) {
    if (!trainable[a]) continue;
    trained[a] = MakeAlgorithm(algorithms[a], config);
    std::vector<TrainingCase> training;
    for (std::size_t i : split.train) {
      const auto meta = ReadMetaRecords(cases[i].case_dir);
      training.push_back({cases[i].case_dir, WindowsFromJson(meta.front().at("windows"))});
    }
    try {
      trained[a]->Train(training);
    } catch (const Error& e) {
      train_errors[a] = e.what();
    }
  }

  // results[case][algorithm]; unset slots are not part of the evaluation.
  std::vector<std::vector<std::optional<CaseResult>>> grid(
      cases.size(), std::vector<std::optional<CaseResult>>(algorithms.size()));
  std::atomic<std::size_t> next{0};
  std::atomic<double> load_total{0.0};
  std::mutex trained_mutex;
  std::vector<std::string> errors(cases.size());
  auto worker = [&] {
    std::vector<std::unique_ptr<RcaAlgorithm>> local(algorithms.size());
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
      if (!trainable[a]) local[a] = MakeAlgorithm(algorithms[a], config);
    }
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cases.size()) break;
      const EvalCase& c = cases[i];
      const auto load_start = std::chrono::steady_clock::now();
      TelemetryBundle bundle;
      try {
        bundle = ReadBundle(c.case_dir);
      } catch (const Error& e) {
        errors[i] = e.what();
        continue;
      }
      double expected = load_total.load();
      while (!load_total.compare_exchange_weak(expected, expected + Seconds(load_start))) {
      }
      for (std::size_t a = 0; a < algorithms.size(); ++a) {
        if (!trainable[a]) {
          grid[i][a] = Invoke(*local[a], c, bundle, topology);
        } else if (in_test[i]) {
          if (!train_errors[a].empty()) {
            CaseResult r = NewResult(c, algorithms[a]);
            r.flagged = true;
            r.note = train_errors[a];
            grid[i][a] = r;
            continue;
          }
          std::lock_guard<std::mutex> lock(trained_mutex);
          grid[i][a] = Invoke(*trained[a], c, bundle, topology);
        }
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(cases.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (!errors[i].empty()) {
      throw StorageError(fmt::format("case {}: {}", cases[i].case_id, errors[i]));
    }
  }

  EvalReport report;
  report.load_seconds = load_total.load();
  for (std::size_t a = 0; a < algorithms.size(); ++a) {
    std::vector<CaseResult> mine;
    std::map<std::string, std::vector<CaseResult>> by_type;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      if (!grid[i][a]) continue;
      mine.push_back(*grid[i][a]);
      by_type[cases[i].fault_type].push_back(*grid[i][a]);
    }
    if (mine.empty()) {
      throw EmptyEvaluationError(
          fmt::format("algorithm '{}' has no cases to rank", algorithms[a]));
    }
    MetricRow row = SummarizeResults(mine);
    row.algorithm = algorithms[a];
    report.rows.push_back(row);
    for (const auto& [type, results] : by_type) {
      MetricRow b = SummarizeResults(results);
      b.algorithm = algorithms[a];
      b.fault_type = type;
      report.breakdown.push_back(b);
    }
    report.results.insert(report.results.end(), mine.begin(), mine.end());
  }
  return report;
}

namespace {

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StorageError(fmt::format("cannot write '{}'", path));
  return out;
}

std::string RowCells(const MetricRow& r) {
  return fmt::format("{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}", r.cases,
                     r.flagged, r.top1, r.top3, r.top5, r.avg3, r.avg5, r.mrr);
}

std::string RankText(uint64_t rank) {
  return rank == kAbsentRank ? "inf" : std::to_string(rank);
}

}  // namespace

void WriteEvalReport(const EvalReport& report, const std::string& out_dir) {
  const std::string header = "cases\tflagged\ttop1\ttop3\ttop5\tavg3\tavg5\tmrr";
  {
    auto out = OpenOut(out_dir + "/report.tsv");
    out << "algorithm\t" << header << '\n';
    for (const auto& r : report.rows) out << r.algorithm << '\t' << RowCells(r) << '\n';
  }
  {
    auto out = OpenOut(out_dir + "/breakdown.tsv");
    out << "algorithm\tfault_type\t" << header << '\n';
    for (const auto& r : report.breakdown) {
      out << r.algorithm << '\t' << r.fault_type << '\t' << RowCells(r) << '\n';
    }
  }
  {
    auto out = OpenOut(out_dir + "/results.tsv");
    out << "case_id\talgorithm\tfault_type\ttrue_service\trank\tflagged\tnote\n";
    for (const auto& r : report.results) {
      out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", r.case_id, r.algorithm,
                         r.fault_type, r.true_service, RankText(r.rank),
                         r.flagged ? 1 : 0, r.note);
    }
  }
  {
    // Wall-clock measurements live apart from the deterministic tables.
    auto out = OpenOut(out_dir + "/timing.tsv");
    out << "algorithm\tmean_seconds\n";
    for (const auto& r : report.rows) {
      out << fmt::format("{}\t{:.6f}\n", r.algorithm, r.mean_seconds);
    }
    out << fmt::format("load\t{:.6f}\n", report.load_seconds);
  }
}

uint64_t MaxCallDepth(const std::vector<Span>& spans) {
  // Spans of a trace are contiguous in generated bundles, but do not rely
  // on it.
  std::unordered_map<std::string, std::unordered_map<std::string, const Span*>> traces;
  for (const auto& s : spans) traces[s.trace_id][s.span_id] = &s;
  uint64_t best = 0;
  for (const auto& [trace, by_id] : traces) {
    std::unordered_map<std::string, uint64_t> depth;
    for (const auto& [id, span] : by_id) {
      // Walk up to a known depth or the root.
      std::vector<const Span*> chain;
      const Span* cur = span;
      uint64_t base = 0;
      while (cur != nullptr) {
        auto known = depth.find(cur->span_id);
        if (known != depth.end()) {
          base = known->second;
          break;
        }
        chain.push_back(cur);
        if (cur->IsRoot() || chain.size() > by_id.size()) {
          base = 0;
          cur = nullptr;
          break;
        }
        auto parent = by_id.find(cur->parent_span_id);
        cur = parent == by_id.end() ? nullptr : parent->second;
      }
      // chain.back() is the root (depth 0) or sits below a known span.
      uint64_t d = cur == nullptr ? 0 : base + 1;
      for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        depth[(*it)->span_id] = d;
        best = std::max(best, d);
        ++d;
      }
    }
  }
  return best;
}

DatasetStatsBuilder::DatasetStatsBuilder(std::vector<std::string> services)
    : services_(std::move(services)) {
  for (const auto& s : services_) seen_[s] = false;
  stats_.services = services_.size();
}

void DatasetStatsBuilder::Add(const TelemetryBundle& bundle, const std::string& fault_type) {
  const auto& w = bundle.windows;
  const double seconds = (w.fault_end_ms - w.normal_start_ms) / 1000.0;
  uint64_t roots = 0;
  for (const auto& s : bundle.spans) {
    if (s.IsRoot()) ++roots;
    auto it = seen_.find(s.service);
    if (it != seen_.end()) it->second = true;
  }
  stats_.cases += 1;
  stats_.traces += roots;
  stats_.spans += bundle.spans.size();
  stats_.logs += bundle.logs.size();
  stats_.metrics += bundle.metrics.size();
  stats_.duration_s += seconds;
  if (seconds > 0) stats_.qps_max = std::max(stats_.qps_max, roots / seconds);
  stats_.max_depth = std::max(stats_.max_depth, MaxCallDepth(bundle.spans));
  stats_.fault_types[fault_type.empty() ? "none" : fault_type] += 1;
}

DatasetStats DatasetStatsBuilder::Finish() const {
  DatasetStats out = stats_;
  if (out.duration_s > 0) out.qps_mean = out.traces / out.duration_s;
  uint64_t covered = 0;
  for (const auto& [s, hit] : seen_) covered += hit ? 1 : 0;
  out.coverage = services_.empty() ? 0.0 : static_cast<double>(covered) / services_.size();
  return out;
}

void WriteDatasetStats(const DatasetStats& s, const std::string& path) {
  auto out = OpenOut(path);
  out << "statistic\tvalue\n";
  out << fmt::format("cases\t{}\n", s.cases);
  out << fmt::format("services\t{}\n", s.services);
  out << fmt::format("coverage\t{:.4f}\n", s.coverage);
  out << fmt::format("qps_mean\t{:.4f}\n", s.qps_mean);
  out << fmt::format("qps_max\t{:.4f}\n", s.qps_max);
  out << fmt::format("max_depth\t{}\n", s.max_depth);
  out << fmt::format("traces\t{}\n", s.traces);
  out << fmt::format("spans\t{}\n", s.spans);
  out << fmt::format("logs\t{}\n", s.logs);
  out << fmt::format("metrics\t{}\n", s.metrics);
  out << fmt::format("duration_s\t{:.3f}\n", s.duration_s);
  for (const auto& [type, n] : s.fault_types) {
    out << fmt::format("fault_type:{}\t{}\n", type, n);
  }
}

int RestrictToCores(int cores) {
  cpu_set_t current;
  CPU_ZERO(&current);
  if (sched_getaffinity(0, sizeof current, &current) != 0) return 0;
  cpu_set_t wanted;
  CPU_ZERO(&wanted);
  int granted = 0;
  for (int c = 0; c < CPU_SETSIZE && granted < cores; ++c) {
    if (CPU_ISSET(c, &current)) {
      CPU_SET(c, &wanted);
      ++granted;
    }
  }
  if (granted == 0 || sched_setaffinity(0, sizeof wanted, &wanted) != 0) return 0;
  return granted;
}

std::vector<ScalabilityPoint> ScalabilityRun(
    const std::function<std::unique_ptr<RcaAlgorithm>()>& make_algorithm,
    const Topology& topology, const ScalabilityOptions& options, int* granted_cores) {
  if (options.runs < 1) throw ConfigError("scalability needs at least one run");
  std::vector<uint64_t> volumes = options.volumes;
  std::sort(volumes.begin(), volumes.end());

  cpu_set_t saved;
  CPU_ZERO(&saved);
  const bool have_saved = sched_getaffinity(0, sizeof saved, &saved) == 0;
  const int granted = RestrictToCores(options.cores);
  if (granted_cores != nullptr) *granted_cores = granted;

  std::vector<ScalabilityPoint> points;
  for (uint64_t volume : volumes) {
    CaseProtocol protocol;
    protocol.warmup_s = 10.0;
    protocol.normal_s = options.window_s;
    protocol.fault_s = options.window_s;
    WorkloadProfile profile;
    const double qps = volume / (2.0 * options.window_s);
    profile.rate.mean_qps = qps;
    profile.rate.segments = {{0.0, protocol.TotalSeconds(), qps}};
    const CaseOutput generated =
        RunCase(topology, profile, protocol, std::nullopt,
                DeriveSeed(options.seed, volume), fmt::format("scale-{}", volume));

    ScalabilityPoint point;
    point.volume = volume;
    point.traces = generated.meta.arrivals;
    std::vector<double> times;
    auto algorithm = make_algorithm();
    RcaInput input{&generated.bundle, &topology, generated.meta.case_id, ""};
    for (int r = 0; r < options.runs; ++r) {
      const auto start = std::chrono::steady_clock::now();
      algorithm->Rank(input);
      times.push_back(Seconds(start));
      if (times.back() > options.timeout_s) {
        point.timed_out = true;
        break;
      }
    }
    std::sort(times.begin(), times.end());
    point.runs = static_cast<int>(times.size());
    point.seconds = times[times.size() / 2];
    points.push_back(point);
  }
  if (have_saved) sched_setaffinity(0, sizeof saved, &saved);
  return points;
}

void WriteScalability(const std::vector<ScalabilityPoint>& points, const std::string& path) {
  auto out = OpenOut(path);
  out << "volume\ttraces\tseconds\truns\ttimed_out\n";
  for (const auto& p : points) {
    out << fmt::format("{}\t{}\t{:.6f}\t{}\t{}\n", p.volume, p.traces, p.seconds, p.runs,
                       p.timed_out ? 1 : 0);
  }
}

}  // namespace rcabench
