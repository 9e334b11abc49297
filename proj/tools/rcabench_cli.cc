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

// Command-line front end for campaigns: generate, validate, evaluate,
// stats, scalability and audit.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "rcabench/campaign.h"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;
constexpr int kExitEmpty = 3;

struct Flags {
  std::string config;
  std::string out;
  std::string algorithms;
  int jobs = 1;
  int64_t seed = -1;
  bool resume = false;
};

rcabench::CampaignConfig LoadConfig(const Flags& flags) {
  std::string path = flags.config;
  if (path.empty()) {
    if (flags.out.empty()) throw rcabench::ConfigError("pass --config or --out");
    path = (fs::path(flags.out) / rcabench::kCampaignFile).string();
  }
  std::ifstream in(path);
  if (!in) throw rcabench::ConfigError(fmt::format("cannot open config '{}'", path));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw rcabench::ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  if (flags.seed >= 0) doc["seed"] = static_cast<uint64_t>(flags.seed);
  if (!flags.out.empty()) doc["output"] = flags.out;
  if (!flags.algorithms.empty()) {
    std::vector<std::string> names;
    std::stringstream list(flags.algorithms);
    for (std::string name; std::getline(list, name, ',');) {
      if (!name.empty()) names.push_back(name);
    }
    doc["algorithms"] = names;
  }
  return rcabench::ParseCampaignConfig(doc, fs::path(path).parent_path().string());
}

int Generate(const Flags& flags) {
  const auto config = LoadConfig(flags);
  const auto s = rcabench::CmdGenerate(config, flags.jobs, flags.resume, std::cerr);
  fmt::print("planned {} generated {} skipped {} failed {}\n", s.planned, s.generated,
             s.skipped, s.failed);
  return s.failed > 0 ? kExitPartial : kExitOk;
}

int Validate(const Flags& flags) {
  const auto config = LoadConfig(flags);
  const auto s = rcabench::CmdValidate(config, flags.jobs, std::cerr);
  fmt::print("cases {} HasAnomaly {} NoAnomaly {} failed {}\n", s.cases, s.has_anomaly,
             s.no_anomaly, s.failed);
  return s.failed > 0 ? kExitPartial : kExitOk;
}

int Evaluate(const Flags& flags) {
  const auto config = LoadConfig(flags);
  const auto report = rcabench::CmdEvaluate(config, flags.jobs);
  fmt::print("algorithm\tcases\ttop1\ttop3\ttop5\tavg3\tavg5\tmrr\n");
  bool flagged = false;
  for (const auto& r : report.rows) {
    fmt::print("{}\t{}\t{:.3f}\t{:.3f}\t{:.3f}\t{:.3f}\t{:.3f}\t{:.3f}\n", r.algorithm,
               r.cases, r.top1, r.top3, r.top5, r.avg3, r.avg5, r.mrr);
    flagged = flagged || r.flagged > 0;
  }
  return flagged ? kExitPartial : kExitOk;
}

int Stats(const Flags& flags) {
  const auto config = LoadConfig(flags);
  const auto s = rcabench::CmdStats(config);
  fmt::print("cases {} services {} coverage {:.3f} qps_mean {:.2f} qps_max {:.2f} "
             "max_depth {}\n",
             s.cases, s.services, s.coverage, s.qps_mean, s.qps_max, s.max_depth);
  return kExitOk;
}

int Scalability(const Flags& flags) {
  const auto config = LoadConfig(flags);
  const auto curves = rcabench::CmdScalability(config, std::cerr);
  for (std::size_t a = 0; a < curves.size(); ++a) {
    for (const auto& p : curves[a]) {
      fmt::print("{}\t{}\t{}\t{:.6f}\n", config.algorithms[a], p.volume, p.traces, p.seconds);
    }
  }
  return kExitOk;
}

int Audit(const Flags& flags) {
  const auto config = LoadConfig(flags);
  const auto s = rcabench::CmdAudit(config);
  fmt::print("audited {} complete {}\n", s.cases, s.complete);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microservice RCA benchmark: campaign generation and evaluation"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "Campaign config file");
    cmd->add_option("--out", flags.out, "Campaign output directory");
    cmd->add_option("--jobs", flags.jobs, "Concurrent cases")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", flags.seed, "Global seed override")->check(CLI::NonNegativeNumber);
    cmd->add_option("--algorithms", flags.algorithms, "Comma-separated algorithm names");
    cmd->add_flag("--resume", flags.resume, "Skip cases that are already complete");
  };
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Flags&);
  };
  const Command commands[] = {
      {"generate", "Plan the campaign and generate case telemetry", Generate},
      {"validate", "Classify cases as HasAnomaly or NoAnomaly", Validate},
      {"evaluate", "Rank root causes and write the evaluation report", Evaluate},
      {"stats", "Write dataset statistics", Stats},
      {"scalability", "Time algorithms over growing trace volumes", Scalability},
      {"audit", "Check observability completeness per case", Audit},
  };
  int (*selected)(const Flags&) = nullptr;
  for (const auto& c : commands) {
    CLI::App* cmd = app.add_subcommand(c.name, c.help);
    add_common(cmd);
    cmd->callback([&selected, run = c.run] { selected = run; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  try {
    return selected(flags);
  } catch (const rcabench::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfig;
  } catch (const rcabench::EmptyCampaignError& e) {
    fmt::print(stderr, "empty campaign: {}\n", e.what());
    return kExitEmpty;
  } catch (const rcabench::EmptyEvaluationError& e) {
    fmt::print(stderr, "empty evaluation: {}\n", e.what());
    return kExitEmpty;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitPartial;
  }
}
