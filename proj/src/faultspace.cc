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

#include "rcabench/faultspace.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

#include "rcabench/common.h"

namespace rcabench {

using nlohmann::json;

std::string_view CategoryName(FaultCategory category) {
  switch (category) {
    case FaultCategory::kResource: return "Resource";
    case FaultCategory::kNetwork: return "Network";
    case FaultCategory::kHttp: return "HTTP";
    case FaultCategory::kCode: return "Code";
    case FaultCategory::kDns: return "DNS";
    case FaultCategory::kTime: return "Time";
  }
  return "?";
}

std::optional<FaultCategory> ParseCategory(std::string_view name) {
  for (auto category : kAllCategories) {
    if (CategoryName(category) == name) return category;
  }
  return std::nullopt;
}

std::string_view TargetKindName(TargetKind kind) {
  switch (kind) {
    case TargetKind::kService: return "service";
    case TargetKind::kPod: return "pod";
    case TargetKind::kContainer: return "container";
    case TargetKind::kEdge: return "edge";
    case TargetKind::kOperation: return "operation";
  }
  return "?";
}

std::string FormatParam(const ParamValue& value) {
  if (const auto* text = std::get_if<std::string>(&value)) return *text;
  return fmt::format("{}", std::get<double>(value));
}

json ParamToJson(const ParamValue& value) {
  if (const auto* text = std::get_if<std::string>(&value)) return *text;
  return std::get<double>(value);
}

namespace {

ParamGrid Numbers(std::string name, std::vector<double> values) {
  ParamGrid grid{std::move(name), {}};
  for (double v : values) grid.values.emplace_back(v);
  return grid;
}

ParamGrid Range(std::string name, double start, double stop, double step) {
  ParamGrid grid{std::move(name), {}};
  const auto count = static_cast<int64_t>(std::floor((stop - start) / step + 1e-9));
  for (int64_t i = 0; i <= count; ++i) grid.values.emplace_back(start + i * step);
  return grid;
}

ParamGrid Labels(std::string name, std::vector<std::string> values) {
  ParamGrid grid{std::move(name), {}};
  for (auto& v : values) grid.values.emplace_back(std::move(v));
  return grid;
}

const std::vector<double> kStressLoads = {0.25, 0.5, 1, 2, 4, 8};
const std::vector<double> kPercentGrid = {1, 5, 10, 25, 50, 75, 90, 100};
const std::vector<double> kErrorPercents = {10, 25, 50, 75, 100};

}  // namespace

FaultRegistry FaultRegistry::Default() {
  using C = FaultCategory;
  using K = TargetKind;
  using D = TargetDomain;
  auto direction = [] { return Labels("direction", {"to", "from", "both"}); };
  auto correlation = [] { return Range("correlation_pct", 0, 100, 1); };
  FaultRegistry r;
  r.types_ = {
      {C::kResource, "PodKill", K::kPod, D::kPod, {}},
      {C::kResource, "PodFailure", K::kPod, D::kPod,
       {Numbers("unavailable_s", {10, 30, 60, 120})}},
      {C::kResource, "ContainerKill", K::kContainer, D::kContainer, {}},
      {C::kResource, "MemoryStress", K::kPod, D::kPod,
       {Numbers("load", kStressLoads)}},
      {C::kResource, "CPUStress", K::kPod, D::kPod,
       {Numbers("load", kStressLoads)}},

      {C::kNetwork, "NetworkDelay", K::kEdge, D::kEdge,
       {Numbers("latency_ms", {10, 50, 100, 250, 500, 1000, 2000, 5000}),
        Range("jitter_ms", 0, 1000, 10), correlation(), direction()}},
      {C::kNetwork, "NetworkLoss", K::kEdge, D::kEdge,
       {Numbers("loss_pct", kPercentGrid), correlation(), direction()}},
      {C::kNetwork, "NetworkDuplicate", K::kEdge, D::kEdge,
       {Numbers("duplicate_pct", kPercentGrid), correlation(), direction()}},
      {C::kNetwork, "NetworkCorrupt", K::kEdge, D::kEdge,
       {Numbers("corrupt_pct", kPercentGrid), correlation(), direction()}},
      {C::kNetwork, "NetworkBandwidth", K::kEdge, D::kEdge,
       {Range("rate_kbps", 1, 10000, 1), Range("limit_kb", 1, 1000, 1),
        Range("buffer_kb", 1, 1000, 1), direction()}},
      {C::kNetwork, "NetworkPartition", K::kEdge, D::kEdge, {direction()}},

      {C::kHttp, "HTTPRequestAbort", K::kEdge, D::kHttpEdge, {}},
      {C::kHttp, "HTTPResponseAbort", K::kEdge, D::kHttpEdge, {}},
      {C::kHttp, "HTTPRequestDelay", K::kEdge, D::kHttpEdge,
       {Range("delay_ms", 10, 10000, 10)}},
      {C::kHttp, "HTTPResponseDelay", K::kEdge, D::kHttpEdge,
       {Range("delay_ms", 10, 10000, 10)}},
      {C::kHttp, "HTTPResponseReplaceBody", K::kEdge, D::kHttpEdge,
       {Labels("body", {"empty", "null", "truncated", "html_error_page",
                        "random_bytes", "wrong_schema"}),
        Numbers("parse_error_pct", kErrorPercents)}},
      {C::kHttp, "HTTPResponsePatchBody", K::kEdge, D::kHttpEdge,
       {Labels("patch", {"remove_field", "null_field", "type_change",
                         "add_field"}),
        Numbers("parse_error_pct", kErrorPercents)}},
      {C::kHttp, "HTTPRequestReplacePath", K::kEdge, D::kHttpEdge,
       {Labels("path", {"/", "/api/v0/unknown", "/admin", "/random"})}},
      {C::kHttp, "HTTPRequestReplaceMethod", K::kEdge, D::kHttpEdge,
       {Labels("method", {"GET", "POST", "PUT", "DELETE", "PATCH", "HEAD"})}},
      {C::kHttp, "HTTPResponseReplaceCode", K::kEdge, D::kHttpEdge,
       {Numbers("code", {400, 403, 404, 500, 502, 503})}},

      {C::kCode, "JVMLatency", K::kOperation, D::kOperation,
       {Range("latency_ms", 10, 10000, 10)}},
      {C::kCode, "JVMReturn", K::kOperation, D::kOperation,
       {Labels("value", {"null", "empty", "zero", "negative", "default"}),
        Numbers("logic_error_pct", kErrorPercents)}},
      {C::kCode, "JVMException", K::kOperation, D::kOperation,
       {Labels("exception",
               {"NullPointerException", "IllegalStateException",
                "IllegalArgumentException", "IOException", "TimeoutException",
                "RuntimeException", "ArithmeticException",
                "IndexOutOfBoundsException"})}},
      {C::kCode, "JVMGarbageCollector", K::kOperation, D::kOperation,
       {Range("interval_s", 1, 60, 1), Range("pause_ms", 10, 1000, 10)}},
      {C::kCode, "JVMCPUStress", K::kOperation, D::kOperation,
       {Numbers("load", kStressLoads)}},
      {C::kCode, "JVMMemoryStress", K::kOperation, D::kOperation,
       {Numbers("load", kStressLoads), Labels("memory_type", {"heap", "stack"})}},
      {C::kCode, "JVMMySQLLatency", K::kOperation, D::kDatabaseOperation,
       {Range("latency_ms", 10, 10000, 10)}},
      {C::kCode, "JVMMySQLException", K::kOperation, D::kDatabaseOperation,
       {Labels("exception", {"SQLException", "SQLTimeoutException",
                             "SQLSyntaxErrorException",
                             "DeadlockLoserDataAccessException"})}},

      {C::kDns, "DNSError", K::kService, D::kCallingService,
       {Numbers("scope_pct", {25, 50, 75, 100})}},
      {C::kDns, "DNSRandom", K::kService, D::kCallingService,
       {Numbers("scope_pct", {25, 50, 75, 100})}},

      {C::kTime, "TimeSkew", K::kPod, D::kPod,
       {Numbers("offset_s", {-300, -60, -5, 5, 60, 300})}},
  };
  return r;
}

const FaultType* FaultRegistry::Find(std::string_view name) const {
  for (const auto& type : types_) {
    if (type.name == name) return &type;
  }
  return nullptr;
}

const FaultType& FaultRegistry::Get(std::string_view name) const {
  const auto* type = Find(name);
  if (type == nullptr) {
    throw ConfigError(fmt::format("unknown fault type '{}'", name));
  }
  return *type;
}

void FaultRegistry::ApplyOverrides(const json& overrides) {
  if (overrides.is_null()) return;
  if (!overrides.is_object()) throw ConfigError("registry overrides must be an object");
  for (const auto& [type_name, grids] : overrides.items()) {
    auto it = std::find_if(types_.begin(), types_.end(),
                           [&](const auto& t) { return t.name == type_name; });
    if (it == types_.end()) {
      throw ConfigError(fmt::format("override for unknown fault type '{}'", type_name));
    }
    for (const auto& [param, values] : grids.items()) {
      auto grid = std::find_if(it->params.begin(), it->params.end(),
                               [&](const auto& g) { return g.name == param; });
      if (grid == it->params.end()) {
        throw ConfigError(fmt::format("fault type '{}' has no parameter '{}'",
                                      type_name, param));
      }
      ParamGrid replacement;
      if (values.is_object()) {
        replacement = Range(param, values.at("start").get<double>(),
                            values.at("stop").get<double>(),
                            values.at("step").get<double>());
      } else {
        replacement.name = param;
        for (const auto& v : values) {
          if (v.is_string()) {
            replacement.values.emplace_back(v.get<std::string>());
          } else {
            replacement.values.emplace_back(v.get<double>());
          }
        }
      }
      if (replacement.values.empty()) {
        throw ConfigError(fmt::format("empty grid for {}.{}", type_name, param));
      }
      *grid = std::move(replacement);
    }
  }
}

std::vector<std::string> EnumerateTargets(const FaultType& type,
                                          const ServiceGraph& graph) {
  std::vector<std::string> out;
  switch (type.domain) {
    case TargetDomain::kCallingService:
      for (const auto& s : graph.services()) {
        if (!s.monitored) continue;
        const bool calls = std::any_of(
            graph.edges().begin(), graph.edges().end(),
            [&](const CallEdge& e) { return e.caller == s.name; });
        if (calls) out.push_back(s.name);
      }
      break;
    case TargetDomain::kPod:
      for (const auto& s : graph.services()) {
        if (!s.monitored) continue;
        for (const auto& pod : s.pods) out.push_back(pod.id);
      }
      break;
    case TargetDomain::kContainer:
      for (const auto& s : graph.services()) {
        if (!s.monitored) continue;
        for (const auto& pod : s.pods) {
          for (const auto& c : pod.containers) out.push_back(c);
        }
      }
      break;
    case TargetDomain::kEdge:
      for (const auto& e : graph.edges()) {
        if (graph.service(e.caller).monitored) out.push_back(e.Id());
      }
      break;
    case TargetDomain::kHttpEdge:
      for (const auto& e : graph.edges()) {
        if (!e.is_database_edge && graph.service(e.caller).monitored) {
          out.push_back(e.Id());
        }
      }
      break;
    case TargetDomain::kOperation:
      for (const auto& s : graph.services()) {
        if (!s.monitored) continue;
        for (const auto& op : graph.Operations(s.name)) {
          out.push_back(s.name + ":" + op);
        }
      }
      break;
    case TargetDomain::kDatabaseOperation:
      for (const auto& s : graph.services()) {
        if (!s.monitored) continue;
        for (const auto& op : graph.Operations(s.name)) {
          for (std::size_t i : graph.OutgoingCalls(s.name, op)) {
            if (graph.edges()[i].is_database_edge) {
              out.push_back(s.name + ":" + op);
              break;
            }
          }
        }
      }
      break;
  }
  return out;
}

double FaultSpec::Number(const std::string& param) const {
  auto it = params.find(param);
  if (it == params.end() || !std::holds_alternative<double>(it->second)) {
    throw Error(fmt::format("fault {} lacks numeric parameter '{}'", type, param));
  }
  return std::get<double>(it->second);
}

std::string FaultSpec::Text(const std::string& param) const {
  auto it = params.find(param);
  if (it == params.end() || !std::holds_alternative<std::string>(it->second)) {
    throw Error(fmt::format("fault {} lacks text parameter '{}'", type, param));
  }
  return std::get<std::string>(it->second);
}

std::string FaultSpec::ConfigurationKey() const {
  std::string key = type + "|" + target;
  for (const auto& [name, value] : params) {
    key += "|" + name + "=" + FormatParam(value);
  }
  return key;
}

json FaultSpecToJson(const FaultSpec& spec) {
  json params = json::object();
  for (const auto& [name, value] : spec.params) params[name] = ParamToJson(value);
  json doc = json::object();
  doc["case_id"] = spec.case_id;
  doc["fault_type"] = spec.type;
  doc["category"] = std::string(CategoryName(spec.category));
  doc["target"] = spec.target;
  doc["params"] = params;
  doc["window"] = {spec.window_start_s, spec.window_end_s};
  return doc;
}

FaultSpec FaultSpecFromJson(const json& doc) {
  try {
    FaultSpec spec;
    spec.case_id = doc.value("case_id", "");
    spec.type = doc.at("fault_type").get<std::string>();
    auto category = ParseCategory(doc.at("category").get<std::string>());
    if (!category) throw ConfigError("unknown fault category");
    spec.category = *category;
    spec.target = doc.at("target").get<std::string>();
    for (const auto& [name, value] : doc.at("params").items()) {
      if (value.is_string()) {
        spec.params[name] = value.get<std::string>();
      } else {
        spec.params[name] = value.get<double>();
      }
    }
    spec.window_start_s = doc.at("window").at(0).get<double>();
    spec.window_end_s = doc.at("window").at(1).get<double>();
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed fault spec: {}", e.what()));
  }
}

void ValidateFaultSpec(const FaultSpec& spec, const FaultRegistry& registry,
                       const ServiceGraph& graph) {
  const auto& type = registry.Get(spec.type);
  if (type.category != spec.category) {
    throw ConfigError(fmt::format("fault {} is not in category {}", spec.type,
                                  CategoryName(spec.category)));
  }
  if (spec.params.size() != type.params.size()) {
    throw ConfigError(fmt::format("fault {} expects {} parameters", spec.type,
                                  type.params.size()));
  }
  for (const auto& grid : type.params) {
    auto it = spec.params.find(grid.name);
    if (it == spec.params.end() ||
        std::find(grid.values.begin(), grid.values.end(), it->second) ==
            grid.values.end()) {
      throw ConfigError(fmt::format("fault {} parameter '{}' is off-grid",
                                    spec.type, grid.name));
    }
  }
  const auto targets = EnumerateTargets(type, graph);
  if (std::find(targets.begin(), targets.end(), spec.target) == targets.end()) {
    throw ConfigError(fmt::format("fault {} cannot target '{}'", spec.type,
                                  spec.target));
  }
  if (!(spec.window_end_s > spec.window_start_s)) {
    throw ConfigError("fault window must be non-empty");
  }
}

namespace {

BigCount GridProduct(const FaultType& type) {
  BigCount product = 1;
  for (const auto& grid : type.params) product *= grid.values.size();
  return product;
}

// Precomputed targets and sizes for decoding configuration indices.
class Stratum {
 public:
  Stratum(std::vector<const FaultType*> types, const ServiceGraph& graph)
      : types_(std::move(types)) {
    for (const auto* type : types_) {
      targets_.push_back(EnumerateTargets(*type, graph));
      grid_products_.push_back(GridProduct(*type));
      sizes_.push_back(grid_products_.back() * targets_.back().size());
      total_ += sizes_.back();
    }
  }

  const BigCount& total() const { return total_; }

  FaultSpec Decode(BigCount index) const {
    if (index < 0 || index >= total_) throw Error("configuration index out of range");
    std::size_t t = 0;
    while (index >= sizes_[t]) {
      index -= sizes_[t];
      ++t;
    }
    const FaultType& type = *types_[t];
    FaultSpec spec;
    spec.type = type.name;
    spec.category = type.category;
    const BigCount target_index = index / grid_products_[t];
    BigCount rest = index % grid_products_[t];
    spec.target = targets_[t][target_index.convert_to<std::size_t>()];
    for (std::size_t p = type.params.size(); p-- > 0;) {
      const auto& grid = type.params[p];
      const BigCount digit = rest % grid.values.size();
      rest /= grid.values.size();
      spec.params[grid.name] = grid.values[digit.convert_to<std::size_t>()];
    }
    return spec;
  }

 private:
  std::vector<const FaultType*> types_;
  std::vector<std::vector<std::string>> targets_;
  std::vector<BigCount> grid_products_;
  std::vector<BigCount> sizes_;
  BigCount total_ = 0;
};

BigCount UniformBelow(Rng& rng, const BigCount& bound) {
  const unsigned bits = boost::multiprecision::msb(bound) + 1;
  while (true) {
    BigCount x = 0;
    for (unsigned have = 0; have < bits; have += 64) {
      x <<= 64;
      x += rng.NextU64();
    }
    const unsigned excess = ((bits + 63) / 64) * 64 - bits;
    x >>= excess;
    if (x < bound) return x;
  }
}

std::vector<const FaultType*> StratumTypes(const std::string& key,
                                           const FaultRegistry& registry) {
  std::vector<const FaultType*> types;
  if (auto category = ParseCategory(key)) {
    for (const auto& type : registry.types()) {
      if (type.category == *category) types.push_back(&type);
    }
  } else if (const auto* type = registry.Find(key)) {
    types.push_back(type);
  } else {
    throw ConfigError(fmt::format("unknown stratum '{}'", key));
  }
  return types;
}

}  // namespace

SpaceCardinality ComputeSpaceCardinality(const ServiceGraph& graph,
                                         const FaultRegistry& registry) {
  SpaceCardinality out;
  for (auto category : kAllCategories) out.per_category[category] = 0;
  for (const auto& type : registry.types()) {
    const BigCount count = GridProduct(type) * EnumerateTargets(type, graph).size();
    out.per_type[type.name] = count;
    out.per_category[type.category] += count;
    out.total += count;
  }
  return out;
}

FaultSpec DecodeConfiguration(const std::vector<const FaultType*>& stratum,
                              const ServiceGraph& graph, const BigCount& index) {
  return Stratum(stratum, graph).Decode(index);
}

FaultSpacePlan ParseFaultSpacePlan(const json& doc) {
  FaultSpacePlan plan;
  if (doc.is_null()) return plan;
  try {
    if (doc.contains("strata")) {
      plan.strata = doc["strata"].get<std::map<std::string, uint64_t>>();
    }
    plan.seed = doc.value("seed", uint64_t{1});
    if (doc.contains("exclusions")) {
      for (const auto& key : doc["exclusions"]) {
        plan.exclusions.insert(key.get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed fault plan: {}", e.what()));
  }
  return plan;
}

std::vector<FaultSpec> PlanCampaign(const FaultSpacePlan& plan,
                                    const ServiceGraph& graph,
                                    const FaultRegistry& registry) {
  std::vector<FaultSpec> out;
  std::unordered_set<std::string> taken(plan.exclusions.begin(),
                                        plan.exclusions.end());
  for (const auto& [key, requested] : plan.strata) {
    if (requested == 0) continue;
    const Stratum stratum(StratumTypes(key, registry), graph);
    Rng rng(DeriveSeed(plan.seed, key));

    // Exclusions and earlier strata may overlap this stratum.
    BigCount available = stratum.total();
    std::vector<BigCount> pool;
    const bool enumerate = stratum.total() <= 200000;
    if (enumerate) {
      const std::size_t n = stratum.total().convert_to<std::size_t>();
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken.contains(stratum.Decode(i).ConfigurationKey())) {
          pool.emplace_back(i);
        }
      }
      available = pool.size();
    } else {
      std::set<std::string> names;
      for (const auto* type : StratumTypes(key, registry)) names.insert(type->name);
      for (const auto& excluded : taken) {
        if (names.contains(excluded.substr(0, excluded.find('|')))) available -= 1;
      }
    }
    if (available < requested) {
      throw StratumExhaustedError(fmt::format(
          "stratum '{}' has {} configurations available, {} requested", key,
          available.str(), requested));
    }

    for (uint64_t k = 0; k < requested; ++k) {
      FaultSpec spec;
      if (enumerate) {
        // Partial Fisher-Yates over the remaining pool.
        const std::size_t j = k + rng.UniformInt(pool.size() - k);
        std::swap(pool[k], pool[j]);
        spec = stratum.Decode(pool[k]);
      } else {
        do {
          spec = stratum.Decode(UniformBelow(rng, stratum.total()));
        } while (taken.contains(spec.ConfigurationKey()));
      }
      taken.insert(spec.ConfigurationKey());
      spec.case_id = fmt::format("{:04d}-{}", out.size(), spec.type);
      spec.window_start_s = plan.window_start_s;
      spec.window_end_s = plan.window_end_s;
      out.push_back(std::move(spec));
    }
  }
  return out;
}

}  // namespace rcabench
