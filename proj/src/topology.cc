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

#include "rcabench/topology.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "rcabench/common.h"

namespace rcabench {

namespace internal {
extern const std::string_view kReference_chain3;
extern const std::string_view kReference_trainticket50;
}  // namespace internal

using nlohmann::json;

std::string CallEdge::Id() const {
  return fmt::format("{}->{}:{}", caller, callee, operation);
}

ServiceGraph::ServiceGraph(std::vector<ServiceNode> services,
                           std::vector<CallEdge> edges,
                           std::vector<std::string> entry_points)
    : services_(std::move(services)),
      edges_(std::move(edges)),
      entry_points_(std::move(entry_points)) {
  Index();

  for (const auto& service : services_) {
    if (service.pods.empty()) {
      throw ConfigError(fmt::format("service '{}' has no pods", service.name));
    }
    for (const auto& pod : service.pods) {
      if (pod.containers.empty()) {
        throw ConfigError(fmt::format("pod '{}' has no containers", pod.id));
      }
    }
    if (!(service.cpu_capacity > 0) || !(service.memory_capacity > 0)) {
      throw ConfigError(
          fmt::format("service '{}' needs positive capacities", service.name));
    }
  }
  for (const auto& edge : edges_) {
    for (const auto* endpoint : {&edge.caller, &edge.callee}) {
      if (!service_index_.contains(*endpoint)) {
        throw ConfigError(fmt::format(
            "edge {} references undeclared service '{}'", edge.Id(), *endpoint));
      }
    }
    if (edge.caller == edge.callee) {
      throw ConfigError(fmt::format("cycle detected: {} -> {}", edge.caller,
                                    edge.callee));
    }
    if (edge.is_database_edge && service(edge.callee).monitored) {
      throw ConfigError(fmt::format(
          "database edge {} must target an unmonitored service", edge.Id()));
    }
    if (!(edge.base_latency_ms >= 0) || edge.payload_bytes < 0) {
      throw ConfigError(fmt::format("edge {} has negative cost", edge.Id()));
    }
  }
  if (entry_points_.empty()) {
    throw ConfigError("topology declares no entry point");
  }
  for (const auto& entry : entry_points_) {
    if (!service_index_.contains(entry)) {
      throw ConfigError(
          fmt::format("entry point references undeclared service '{}'", entry));
    }
  }

  // Cycle check on the service-level call graph.
  const std::size_t n = services_.size();
  std::vector<std::vector<std::size_t>> adjacency(n);
  for (const auto& edge : edges_) {
    adjacency[service_index_.at(edge.caller)].push_back(
        service_index_.at(edge.callee));
  }
  std::vector<int> color(n, 0);
  std::vector<std::size_t> stack;
  std::function<void(std::size_t)> visit = [&](std::size_t u) {
    color[u] = 1;
    stack.push_back(u);
    for (std::size_t v : adjacency[u]) {
      if (color[v] == 1) {
        std::string cycle;
        auto it = std::find(stack.begin(), stack.end(), v);
        for (; it != stack.end(); ++it) {
          cycle += services_[*it].name + " -> ";
        }
        cycle += services_[v].name;
        throw ConfigError("cycle detected: " + cycle);
      }
      if (color[v] == 0) visit(v);
    }
    stack.pop_back();
    color[u] = 2;
  };
  for (std::size_t u = 0; u < n; ++u) {
    if (color[u] == 0) visit(u);
  }
}

void ServiceGraph::Index() {
  for (std::size_t s = 0; s < services_.size(); ++s) {
    const auto& service = services_[s];
    if (!service_index_.emplace(service.name, s).second) {
      throw ConfigError(fmt::format("duplicate service '{}'", service.name));
    }
    for (std::size_t p = 0; p < service.pods.size(); ++p) {
      const auto& pod = service.pods[p];
      if (!pod_index_.emplace(pod.id, PodRef{s, p}).second) {
        throw ConfigError(fmt::format("duplicate pod id '{}'", pod.id));
      }
      for (std::size_t c = 0; c < pod.containers.size(); ++c) {
        if (!container_index_.emplace(pod.containers[c], ContainerRef{s, p, c})
                 .second) {
          throw ConfigError(
              fmt::format("duplicate container id '{}'", pod.containers[c]));
        }
      }
    }
  }
}

const ServiceNode* ServiceGraph::FindService(std::string_view name) const {
  auto it = service_index_.find(std::string(name));
  return it == service_index_.end() ? nullptr : &services_[it->second];
}

const ServiceNode& ServiceGraph::service(std::string_view name) const {
  const ServiceNode* node = FindService(name);
  if (node == nullptr) {
    throw ConfigError(fmt::format("unknown service '{}'", name));
  }
  return *node;
}

std::optional<std::size_t> ServiceGraph::ServiceIndex(
    std::string_view name) const {
  auto it = service_index_.find(std::string(name));
  if (it == service_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> ServiceGraph::OutgoingCalls(
    std::string_view service, std::string_view operation) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& edge = edges_[i];
    if (edge.caller == service &&
        (edge.trigger.empty() || edge.trigger == operation)) {
      out.push_back(i);
    }
  }
  return out;
}

const CallEdge* ServiceGraph::FindEdge(std::string_view caller,
                                       std::string_view callee,
                                       std::string_view operation) const {
  for (const auto& edge : edges_) {
    if (edge.caller == caller && edge.callee == callee &&
        edge.operation == operation) {
      return &edge;
    }
  }
  return nullptr;
}

std::vector<std::string> ServiceGraph::Operations(
    std::string_view service) const {
  std::vector<std::string> ops;
  for (const auto& edge : edges_) {
    if (edge.callee == service &&
        std::find(ops.begin(), ops.end(), edge.operation) == ops.end()) {
      ops.push_back(edge.operation);
    }
  }
  return ops;
}

std::optional<ServiceGraph::PodRef> ServiceGraph::FindPod(
    std::string_view pod_id) const {
  auto it = pod_index_.find(std::string(pod_id));
  if (it == pod_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<ServiceGraph::ContainerRef> ServiceGraph::FindContainer(
    std::string_view container_id) const {
  auto it = container_index_.find(std::string(container_id));
  if (it == container_index_.end()) return std::nullopt;
  return it->second;
}

const WorkflowStateMachine* Topology::FindWorkflow(
    std::string_view name) const {
  for (const auto& workflow : workflows) {
    if (workflow.name == name) return &workflow;
  }
  return nullptr;
}

const WorkflowStateMachine& Topology::workflow(std::string_view name) const {
  const auto* found = FindWorkflow(name);
  if (found == nullptr) {
    throw ConfigError(fmt::format("unknown workflow '{}'", name));
  }
  return *found;
}

std::vector<const WorkflowStateMachine*> Topology::TopLevelWorkflows() const {
  std::vector<const WorkflowStateMachine*> out;
  for (const auto& workflow : workflows) {
    if (workflow.top_level) out.push_back(&workflow);
  }
  return out;
}

namespace {

std::string Lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(c));
  return out;
}

template <typename T>
T Field(const json& object, const char* key, T fallback) {
  auto it = object.find(key);
  if (it == object.end() || it->is_null()) return fallback;
  return it->get<T>();
}

std::string RequiredString(const json& object, const char* key,
                           std::string_view context) {
  auto it = object.find(key);
  if (it == object.end() || !it->is_string()) {
    throw ConfigError(fmt::format("{}: missing string field '{}'", context, key));
  }
  return it->get<std::string>();
}

ServiceNode ParseService(const json& doc) {
  ServiceNode node;
  node.name = RequiredString(doc, "name", "service");
  node.cpu_capacity = Field<double>(doc, "cpu_capacity", 1.0);
  node.memory_capacity = Field<double>(doc, "memory_capacity", 1 << 30);
  node.monitored = Field<bool>(doc, "monitored", true);
  const auto suffixes =
      Field<std::vector<std::string>>(doc, "containers", {"main"});
  auto pods = doc.find("pods");
  if (pods == doc.end() || pods->is_number_integer()) {
    const int count = pods == doc.end() ? 1 : pods->get<int>();
    for (int i = 0; i < count; ++i) {
      Pod pod;
      pod.id = fmt::format("{}-{}", Lower(node.name), i);
      for (const auto& suffix : suffixes) {
        pod.containers.push_back(pod.id + "-" + suffix);
      }
      node.pods.push_back(std::move(pod));
    }
  } else if (pods->is_array()) {
    for (const auto& entry : *pods) {
      Pod pod;
      if (entry.is_string()) {
        pod.id = entry.get<std::string>();
        for (const auto& suffix : suffixes) {
          pod.containers.push_back(pod.id + "-" + suffix);
        }
      } else {
        pod.id = RequiredString(entry, "id", "pod");
        pod.containers =
            Field<std::vector<std::string>>(entry, "containers", {});
      }
      node.pods.push_back(std::move(pod));
    }
  } else {
    throw ConfigError(
        fmt::format("service '{}': 'pods' must be a count or list", node.name));
  }
  return node;
}

std::optional<Call> ParseCall(const json& doc) {
  if (!doc.contains("service") || doc["service"].get<std::string>().empty()) {
    return std::nullopt;
  }
  return Call{doc["service"].get<std::string>(),
              RequiredString(doc, "operation", "call")};
}

WorkflowStateMachine ParseWorkflow(const json& doc) {
  WorkflowStateMachine workflow;
  workflow.name = RequiredString(doc, "name", "workflow");
  workflow.entry_service = Field<std::string>(doc, "entry", "");
  workflow.root_operation = Field<std::string>(doc, "root_operation",
                                               workflow.name);
  workflow.entry_latency_ms = Field<double>(doc, "latency_ms", 1.0);
  workflow.top_level = Field<bool>(doc, "top_level", true);
  if (auto it = doc.find("request"); it != doc.end() && !it->is_null()) {
    workflow.request = ParseCall(*it);
  }
  for (const auto& state_doc : Field<json>(doc, "states", json::array())) {
    State state;
    state.name = RequiredString(state_doc, "name", "state");
    for (const auto& t : Field<json>(state_doc, "transitions", json::array())) {
      Transition transition;
      transition.name = RequiredString(t, "name", "transition");
      transition.call = ParseCall(t);
      transition.sub_workflow = Field<std::string>(t, "sub_workflow", "");
      state.transitions.push_back(std::move(transition));
    }
    workflow.states.push_back(std::move(state));
  }
  return workflow;
}

void ValidateWorkflows(const Topology& topology) {
  const auto& graph = topology.graph;
  std::set<std::string> names;
  for (const auto& workflow : topology.workflows) {
    if (!names.insert(workflow.name).second) {
      throw ConfigError(fmt::format("duplicate workflow '{}'", workflow.name));
    }
  }
  for (const auto& workflow : topology.workflows) {
    for (const auto& state : workflow.states) {
      if (state.transitions.empty()) {
        throw ConfigError(fmt::format("workflow '{}' state '{}' has no transitions",
                                      workflow.name, state.name));
      }
      for (const auto& t : state.transitions) {
        if (!t.call && t.sub_workflow.empty()) {
          throw ConfigError(fmt::format(
              "workflow '{}' transition '{}' neither calls a service nor "
              "invokes a sub-workflow",
              workflow.name, t.name));
        }
        if (!t.sub_workflow.empty() && !names.contains(t.sub_workflow)) {
          throw ConfigError(fmt::format(
              "workflow '{}' references undeclared sub-workflow '{}'",
              workflow.name, t.sub_workflow));
        }
      }
    }
  }

  // Sub-workflow dependency relation must be acyclic.
  std::map<std::string, int> color;
  std::vector<std::string> stack;
  std::function<void(const WorkflowStateMachine&)> visit =
      [&](const WorkflowStateMachine& w) {
        color[w.name] = 1;
        stack.push_back(w.name);
        for (const auto& state : w.states) {
          for (const auto& t : state.transitions) {
            if (t.sub_workflow.empty()) continue;
            if (color[t.sub_workflow] == 1) {
              std::string cycle;
              auto it = std::find(stack.begin(), stack.end(), t.sub_workflow);
              for (; it != stack.end(); ++it) cycle += *it + " -> ";
              throw ConfigError("cycle detected in workflows: " + cycle +
                                t.sub_workflow);
            }
            if (color[t.sub_workflow] == 0) {
              visit(topology.workflow(t.sub_workflow));
            }
          }
        }
        stack.pop_back();
        color[w.name] = 2;
      };
  for (const auto& workflow : topology.workflows) {
    if (color[workflow.name] == 0) visit(workflow);
  }

  // Calls are issued from the entry service of the top-level workflow.
  std::function<void(const WorkflowStateMachine&, const std::string&)>
      check_calls = [&](const WorkflowStateMachine& w,
                        const std::string& entry) {
        auto check = [&](const Call& call) {
          if (graph.FindService(call.service) == nullptr) {
            throw ConfigError(fmt::format(
                "workflow '{}' calls undeclared service '{}'", w.name,
                call.service));
          }
          if (graph.FindEdge(entry, call.service, call.operation) == nullptr) {
            throw ConfigError(fmt::format(
                "workflow '{}' calls {}:{} with no edge from entry '{}'",
                w.name, call.service, call.operation, entry));
          }
        };
        for (const auto& state : w.states) {
          for (const auto& t : state.transitions) {
            if (!t.sub_workflow.empty()) {
              check_calls(topology.workflow(t.sub_workflow), entry);
            }
            if (t.call) check(*t.call);
          }
        }
        if (w.request) check(*w.request);
      };
  for (const auto& workflow : topology.workflows) {
    if (!workflow.top_level) continue;
    if (workflow.entry_service.empty()) {
      throw ConfigError(
          fmt::format("top-level workflow '{}' needs an entry", workflow.name));
    }
    const auto& entries = graph.entry_points();
    if (std::find(entries.begin(), entries.end(), workflow.entry_service) ==
        entries.end()) {
      throw ConfigError(fmt::format(
          "workflow '{}' entry '{}' is not an entry point", workflow.name,
          workflow.entry_service));
    }
    check_calls(workflow, workflow.entry_service);
  }

  // Triggers must name operations the caller can handle.
  for (const auto& edge : graph.edges()) {
    if (edge.trigger.empty()) continue;
    auto ops = graph.Operations(edge.caller);
    bool known = std::find(ops.begin(), ops.end(), edge.trigger) != ops.end();
    for (const auto& workflow : topology.workflows) {
      known = known || (workflow.entry_service == edge.caller &&
                        workflow.root_operation == edge.trigger);
    }
    if (!known) {
      throw ConfigError(fmt::format(
          "edge {} is triggered by unknown operation '{}'", edge.Id(),
          edge.trigger));
    }
  }
}

}  // namespace

Topology LoadTopology(const json& doc) {
  if (!doc.is_object()) throw ConfigError("topology document must be an object");
  try {
    std::vector<ServiceNode> services;
    for (const auto& s : Field<json>(doc, "services", json::array())) {
      services.push_back(ParseService(s));
    }
    std::vector<CallEdge> edges;
    for (const auto& e : Field<json>(doc, "edges", json::array())) {
      CallEdge edge;
      edge.caller = RequiredString(e, "caller", "edge");
      edge.callee = RequiredString(e, "callee", "edge");
      edge.operation = RequiredString(e, "operation", "edge");
      edge.trigger = Field<std::string>(e, "trigger", "");
      edge.base_latency_ms = Field<double>(e, "latency_ms", 1.0);
      edge.payload_bytes = Field<int64_t>(e, "payload_bytes", 1024);
      edge.is_database_edge = Field<bool>(e, "database", false);
      edge.optional = Field<bool>(e, "optional", false);
      edges.push_back(std::move(edge));
    }
    auto entry_points =
        Field<std::vector<std::string>>(doc, "entry_points", {});
    Topology topology;
    topology.graph = ServiceGraph(std::move(services), std::move(edges),
                                  std::move(entry_points));
    for (const auto& w : Field<json>(doc, "workflows", json::array())) {
      topology.workflows.push_back(ParseWorkflow(w));
    }
    ValidateWorkflows(topology);
    return topology;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed topology: {}", e.what()));
  }
}

Topology LoadTopology(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("topology parse error: {}", e.what()));
  }
  return LoadTopology(doc);
}

Topology LoadTopologyFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open topology '{}'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  return LoadTopology(std::string_view(text));
}

std::string_view ReferenceTopologyText(std::string_view name) {
  if (name == "chain3") return internal::kReference_chain3;
  if (name == "trainticket50") return internal::kReference_trainticket50;
  throw ConfigError(fmt::format("unknown reference topology '{}'", name));
}

Topology ReferenceTopology(std::string_view name) {
  return LoadTopology(ReferenceTopologyText(name));
}

Topology ResolveTopology(const json& ref, const std::string& base_dir) {
  if (ref.is_object()) return LoadTopology(ref);
  if (!ref.is_string()) throw ConfigError("topology must be a name, path or object");
  const auto value = ref.get<std::string>();
  if (value == "chain3" || value == "trainticket50") {
    return ReferenceTopology(value);
  }
  if (!value.empty() && value.front() != '/' && !base_dir.empty()) {
    return LoadTopologyFile(base_dir + "/" + value);
  }
  return LoadTopologyFile(value);
}

json TopologyToJson(const Topology& topology) {
  json services = json::array();
  for (const auto& s : topology.graph.services()) {
    json pods = json::array();
    for (const auto& pod : s.pods) {
      pods.push_back({{"id", pod.id}, {"containers", pod.containers}});
    }
    services.push_back({{"name", s.name},
                        {"pods", pods},
                        {"cpu_capacity", s.cpu_capacity},
                        {"memory_capacity", s.memory_capacity},
                        {"monitored", s.monitored}});
  }
  json edges = json::array();
  for (const auto& e : topology.graph.edges()) {
    edges.push_back({{"caller", e.caller},
                     {"callee", e.callee},
                     {"operation", e.operation},
                     {"trigger", e.trigger},
                     {"latency_ms", e.base_latency_ms},
                     {"payload_bytes", e.payload_bytes},
                     {"database", e.is_database_edge},
                     {"optional", e.optional}});
  }
  auto call_json = [](const std::optional<Call>& call) -> json {
    if (!call) return nullptr;
    return {{"service", call->service}, {"operation", call->operation}};
  };
  json workflows = json::array();
  for (const auto& w : topology.workflows) {
    json states = json::array();
    for (const auto& state : w.states) {
      json transitions = json::array();
      for (const auto& t : state.transitions) {
        json tj = {{"name", t.name}, {"sub_workflow", t.sub_workflow}};
        if (t.call) {
          tj["service"] = t.call->service;
          tj["operation"] = t.call->operation;
        }
        transitions.push_back(std::move(tj));
      }
      states.push_back({{"name", state.name}, {"transitions", transitions}});
    }
    workflows.push_back({{"name", w.name},
                         {"entry", w.entry_service},
                         {"root_operation", w.root_operation},
                         {"latency_ms", w.entry_latency_ms},
                         {"top_level", w.top_level},
                         {"states", states},
                         {"request", call_json(w.request)}});
  }
  return {{"services", services},
          {"edges", edges},
          {"workflows", workflows},
          {"entry_points", topology.graph.entry_points()}};
}

std::string SerializeTopology(const Topology& topology) {
  return TopologyToJson(topology).dump(2);
}

namespace {

uint64_t CheckedMul(uint64_t a, uint64_t b) {
  uint64_t out;
  if (__builtin_mul_overflow(a, b, &out)) {
    throw Error("path count overflows 64 bits");
  }
  return out;
}

uint64_t CheckedAdd(uint64_t a, uint64_t b) {
  uint64_t out;
  if (__builtin_add_overflow(a, b, &out)) {
    throw Error("path count overflows 64 bits");
  }
  return out;
}

class PathCounter {
 public:
  explicit PathCounter(const Topology& topology) : topology_(topology) {}

  uint64_t Workflow(const WorkflowStateMachine& w) {
    if (auto it = memo_.find(w.name); it != memo_.end()) return it->second;
    uint64_t total = 1;
    for (const auto& state : w.states) total = CheckedMul(total, StateSize(state));
    memo_[w.name] = total;
    return total;
  }

  uint64_t TransitionSize(const Transition& t) {
    if (t.sub_workflow.empty()) return 1;
    return Workflow(topology_.workflow(t.sub_workflow));
  }

  uint64_t StateSize(const State& state) {
    uint64_t sum = 0;
    for (const auto& t : state.transitions) sum = CheckedAdd(sum, TransitionSize(t));
    return sum;
  }

 private:
  const Topology& topology_;
  std::map<std::string, uint64_t> memo_;
};

}  // namespace

uint64_t CountPaths(const Topology& topology,
                    const WorkflowStateMachine& workflow) {
  return PathCounter(topology).Workflow(workflow);
}

std::vector<ExecutionPath> EnumeratePaths(const Topology& topology,
                                          const WorkflowStateMachine& workflow,
                                          uint64_t limit) {
  std::vector<ExecutionPath> out;
  if (limit == 0) return out;
  using Continuation = std::function<bool(std::vector<uint32_t>&)>;
  // Expands states [index, end) of `w`, then hands the extended prefix to
  // `done`. Returns false once the limit is reached.
  std::function<bool(const WorkflowStateMachine&, std::size_t,
                     std::vector<uint32_t>&, const Continuation&)>
      expand = [&](const WorkflowStateMachine& w, std::size_t index,
                   std::vector<uint32_t>& prefix,
                   const Continuation& done) -> bool {
    if (index == w.states.size()) return done(prefix);
    const auto& state = w.states[index];
    for (uint32_t t = 0; t < state.transitions.size(); ++t) {
      const auto& transition = state.transitions[t];
      prefix.push_back(t);
      Continuation rest = [&](std::vector<uint32_t>& p) {
        return expand(w, index + 1, p, done);
      };
      bool keep_going;
      if (transition.sub_workflow.empty()) {
        keep_going = rest(prefix);
      } else {
        const std::size_t mark = prefix.size();
        keep_going = expand(topology.workflow(transition.sub_workflow), 0,
                            prefix, rest);
        prefix.resize(mark);
      }
      prefix.pop_back();
      if (!keep_going) return false;
    }
    return true;
  };
  std::vector<uint32_t> prefix;
  expand(workflow, 0, prefix, [&](std::vector<uint32_t>& choices) {
    out.push_back(ExecutionPath{workflow.name, out.size(), choices});
    return out.size() < limit;
  });
  return out;
}

namespace {

void DecodeInto(const Topology& topology, PathCounter& counter,
                const WorkflowStateMachine& w, uint64_t id,
                std::vector<uint32_t>& choices) {
  std::vector<uint64_t> digits(w.states.size());
  for (std::size_t i = w.states.size(); i-- > 0;) {
    const uint64_t size = counter.StateSize(w.states[i]);
    digits[i] = id % size;
    id /= size;
  }
  for (std::size_t i = 0; i < w.states.size(); ++i) {
    uint64_t digit = digits[i];
    const auto& transitions = w.states[i].transitions;
    for (uint32_t t = 0; t < transitions.size(); ++t) {
      const uint64_t size = counter.TransitionSize(transitions[t]);
      if (digit < size) {
        choices.push_back(t);
        if (!transitions[t].sub_workflow.empty()) {
          DecodeInto(topology, counter,
                     topology.workflow(transitions[t].sub_workflow), digit,
                     choices);
        }
        break;
      }
      digit -= size;
    }
  }
}

uint64_t EncodeFrom(const Topology& topology, PathCounter& counter,
                    const WorkflowStateMachine& w,
                    const std::vector<uint32_t>& choices, std::size_t& pos) {
  uint64_t id = 0;
  for (const auto& state : w.states) {
    if (pos >= choices.size()) throw Error("truncated choice sequence");
    const uint32_t t = choices[pos++];
    if (t >= state.transitions.size()) throw Error("choice out of range");
    uint64_t digit = 0;
    for (uint32_t k = 0; k < t; ++k) {
      digit += counter.TransitionSize(state.transitions[k]);
    }
    if (!state.transitions[t].sub_workflow.empty()) {
      digit += EncodeFrom(topology, counter,
                          topology.workflow(state.transitions[t].sub_workflow),
                          choices, pos);
    }
    id = id * counter.StateSize(state) + digit;
  }
  return id;
}

void CallsInto(const Topology& topology, const WorkflowStateMachine& w,
               const std::vector<uint32_t>& choices, std::size_t& pos,
               std::vector<Call>& calls) {
  for (const auto& state : w.states) {
    const auto& t = state.transitions.at(choices.at(pos++));
    if (!t.sub_workflow.empty()) {
      CallsInto(topology, topology.workflow(t.sub_workflow), choices, pos,
                calls);
    }
    if (t.call) calls.push_back(*t.call);
  }
  if (w.request) calls.push_back(*w.request);
}

}  // namespace

ExecutionPath DecodePath(const Topology& topology,
                         const WorkflowStateMachine& workflow, uint64_t id) {
  PathCounter counter(topology);
  if (id >= counter.Workflow(workflow)) {
    throw Error(fmt::format("path id {} out of range for '{}'", id,
                            workflow.name));
  }
  ExecutionPath path{workflow.name, id, {}};
  DecodeInto(topology, counter, workflow, id, path.choices);
  return path;
}

uint64_t EncodePath(const Topology& topology,
                    const WorkflowStateMachine& workflow,
                    const std::vector<uint32_t>& choices) {
  PathCounter counter(topology);
  std::size_t pos = 0;
  const uint64_t id = EncodeFrom(topology, counter, workflow, choices, pos);
  if (pos != choices.size()) throw Error("trailing choices");
  return id;
}

std::vector<Call> PathCalls(const Topology& topology,
                            const WorkflowStateMachine& workflow,
                            const ExecutionPath& path) {
  std::vector<Call> calls;
  std::size_t pos = 0;
  CallsInto(topology, workflow, path.choices, pos, calls);
  return calls;
}

}  // namespace rcabench
