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

#include "rcabench/workload.h"

#include <algorithm>
#include <cmath>
#include <functional>

#include <fmt/format.h>

#include "rcabench/common.h"

namespace rcabench {

using nlohmann::json;

double RateSchedule::Rate(double t) const {
  if (!segments.empty()) {
    for (const auto& segment : segments) {
      if (t >= segment.start_s && t < segment.end_s) return segment.qps;
    }
    return segments.back().qps;
  }
  double rate = mean_qps * (1.0 + modulation * std::sin(2.0 * M_PI * t / period_s));
  if (cap_qps > 0.0) rate = std::min(rate, cap_qps);
  return rate;
}

double RateSchedule::MaxRate(double) const {
  if (!segments.empty()) {
    double peak = 0.0;
    for (const auto& segment : segments) peak = std::max(peak, segment.qps);
    return peak;
  }
  double peak = mean_qps * (1.0 + modulation);
  if (cap_qps > 0.0) peak = std::min(peak, cap_qps);
  return peak;
}

void WorkloadProfile::Validate(const Topology& topology) const {
  if (!(duration_s > 0)) throw ConfigError("workload duration must be positive");
  if (!rate.segments.empty()) {
    for (const auto& segment : rate.segments) {
      if (!(segment.qps > 0) || !(segment.end_s > segment.start_s)) {
        throw ConfigError("workload segments need positive qps and length");
      }
    }
  } else if (!(rate.mean_qps > 0) || rate.modulation < 0 ||
             rate.modulation >= 1.0) {
    throw ConfigError("workload qps must stay positive");
  }
  if (topology.TopLevelWorkflows().empty()) {
    throw ConfigError("topology has no top-level workflow");
  }
  for (const auto& [name, weight] : workflow_weights) {
    if (topology.FindWorkflow(name) == nullptr) {
      throw ConfigError(fmt::format("weight for unknown workflow '{}'", name));
    }
    if (weight < 0) throw ConfigError("workflow weights must be nonnegative");
  }
  for (const auto& [key, weights] : transition_weights) {
    const auto slash = key.find('/');
    const auto* workflow = topology.FindWorkflow(key.substr(0, slash));
    const State* state = nullptr;
    if (workflow != nullptr && slash != std::string::npos) {
      for (const auto& s : workflow->states) {
        if (s.name == key.substr(slash + 1)) state = &s;
      }
    }
    if (state == nullptr) {
      throw ConfigError(fmt::format("weights for unknown state '{}'", key));
    }
    if (weights.size() != state->transitions.size()) {
      throw ConfigError(fmt::format("state '{}' needs {} weights", key,
                                    state->transitions.size()));
    }
    double total = 0.0;
    for (double w : weights) {
      if (w < 0) throw ConfigError("transition weights must be nonnegative");
      total += w;
    }
    if (total <= 0) {
      throw ConfigError(fmt::format("state '{}' weights are all zero", key));
    }
  }
}

WorkloadProfile ReferenceProfile(double duration_s, uint64_t seed) {
  WorkloadProfile profile;
  profile.rate.mean_qps = 16.47;
  profile.rate.modulation = 0.5;
  profile.rate.period_s = 300.0;
  profile.rate.cap_qps = 37.6;
  profile.duration_s = duration_s;
  profile.seed = seed;
  return profile;
}

WorkloadProfile ParseWorkloadProfile(const json& doc) {
  WorkloadProfile profile;
  if (doc.is_null()) return profile;
  try {
    if (doc.contains("schedule")) {
      for (const auto& s : doc["schedule"]) {
        profile.rate.segments.push_back(
            {s.at("start_s").get<double>(), s.at("end_s").get<double>(),
             s.at("qps").get<double>()});
      }
    }
    profile.rate.mean_qps = doc.value("qps", profile.rate.mean_qps);
    profile.rate.modulation = doc.value("modulation", 0.0);
    profile.rate.period_s = doc.value("period_s", 300.0);
    profile.rate.cap_qps = doc.value("cap_qps", 0.0);
    const auto policy = doc.value("policy", std::string("uniform"));
    if (policy == "uniform") {
      profile.policy = PathPolicy::kUniform;
    } else if (policy == "weighted") {
      profile.policy = PathPolicy::kWeighted;
    } else {
      throw ConfigError(fmt::format("unknown path policy '{}'", policy));
    }
    if (doc.contains("workflow_weights")) {
      profile.workflow_weights =
          doc["workflow_weights"].get<std::map<std::string, double>>();
    }
    if (doc.contains("transition_weights")) {
      profile.transition_weights =
          doc["transition_weights"]
              .get<std::map<std::string, std::vector<double>>>();
    }
    profile.seed = doc.value("seed", uint64_t{1});
    profile.duration_s = doc.value("duration_s", 60.0);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed workload profile: {}", e.what()));
  }
  return profile;
}

json WorkloadProfileToJson(const WorkloadProfile& profile) {
  json doc = {{"qps", profile.rate.mean_qps},
              {"modulation", profile.rate.modulation},
              {"period_s", profile.rate.period_s},
              {"cap_qps", profile.rate.cap_qps},
              {"policy", profile.policy == PathPolicy::kUniform ? "uniform"
                                                                : "weighted"},
              {"workflow_weights", profile.workflow_weights},
              {"transition_weights", profile.transition_weights},
              {"seed", profile.seed},
              {"duration_s", profile.duration_s}};
  if (!profile.rate.segments.empty()) {
    json schedule = json::array();
    for (const auto& s : profile.rate.segments) {
      schedule.push_back(
          {{"start_s", s.start_s}, {"end_s", s.end_s}, {"qps", s.qps}});
    }
    doc["schedule"] = schedule;
  }
  return doc;
}

namespace {

std::size_t PickWeighted(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double x = rng.Uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (x < weights[i]) return i;
    x -= weights[i];
  }
  // Rounding fallback: last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0) return i;
  }
  return 0;
}

void SampleWeighted(const WorkloadProfile& profile, const Topology& topology,
                    const WorkflowStateMachine& workflow, Rng& rng,
                    std::vector<uint32_t>& choices) {
  for (const auto& state : workflow.states) {
    const auto key = workflow.name + "/" + state.name;
    std::size_t t;
    if (auto it = profile.transition_weights.find(key);
        it != profile.transition_weights.end()) {
      t = PickWeighted(rng, it->second);
    } else {
      t = rng.UniformInt(state.transitions.size());
    }
    choices.push_back(static_cast<uint32_t>(t));
    const auto& sub = state.transitions[t].sub_workflow;
    if (!sub.empty()) {
      SampleWeighted(profile, topology, topology.workflow(sub), rng, choices);
    }
  }
}

}  // namespace

std::vector<RequestArrival> GenerateArrivals(const WorkloadProfile& profile,
                                             const Topology& topology) {
  profile.Validate(topology);
  const auto workflows = topology.TopLevelWorkflows();
  std::vector<double> weights;
  std::vector<uint64_t> path_counts;
  for (const auto* workflow : workflows) {
    auto it = profile.workflow_weights.find(workflow->name);
    weights.push_back(it == profile.workflow_weights.end() ? 1.0 : it->second);
    path_counts.push_back(CountPaths(topology, *workflow));
  }

  Rng timing(DeriveSeed(profile.seed, "arrivals"));
  Rng paths(DeriveSeed(profile.seed, "paths"));
  const double peak = profile.rate.MaxRate(profile.duration_s);
  std::vector<RequestArrival> out;
  out.reserve(static_cast<std::size_t>(peak * profile.duration_s * 1.1) + 16);
  double t = 0.0;
  while (true) {
    t += timing.Exponential(peak);
    if (t >= profile.duration_s) break;
    // Thinning: accept with probability rate(t) / peak.
    if (timing.Uniform() * peak >= profile.rate.Rate(t)) continue;
    const std::size_t w = PickWeighted(paths, weights);
    uint64_t path_id;
    if (profile.policy == PathPolicy::kUniform) {
      path_id = paths.UniformInt(path_counts[w]);
    } else {
      std::vector<uint32_t> choices;
      SampleWeighted(profile, topology, *workflows[w], paths, choices);
      path_id = EncodePath(topology, *workflows[w], choices);
    }
    out.push_back({t, workflows[w]->name, path_id});
  }
  return out;
}

}  // namespace rcabench
