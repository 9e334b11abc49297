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

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace rcabench {

struct Pod {
  std::string id;
  std::vector<std::string> containers;

  bool operator==(const Pod&) const = default;
};

struct ServiceNode {
  std::string name;
  std::vector<Pod> pods;
  double cpu_capacity = 1.0;          // work units per second, per pod
  double memory_capacity = 1 << 30;   // bytes, per pod
  // False models unmonitored infrastructure (databases): no telemetry.
  bool monitored = true;

  bool operator==(const ServiceNode&) const = default;
};

// A call from `caller` to `callee.operation`. The call is issued whenever
// the caller handles `trigger` (or any operation when `trigger` is empty).
// `base_latency_ms` is the callee's processing time for the operation at
// zero contention.
struct CallEdge {
  std::string caller;
  std::string callee;
  std::string operation;
  std::string trigger;
  double base_latency_ms = 1.0;
  int64_t payload_bytes = 1024;
  bool is_database_edge = false;
  // A failed optional call does not fail the caller.
  bool optional = false;

  // "caller->callee:operation"
  std::string Id() const;
  bool operator==(const CallEdge&) const = default;
};

struct Call {
  std::string service;
  std::string operation;

  bool operator==(const Call&) const = default;
};

struct Transition {
  std::string name;
  std::optional<Call> call;
  // Resolved before `call` is issued.
  std::string sub_workflow;

  bool operator==(const Transition&) const = default;
};

struct State {
  std::string name;
  std::vector<Transition> transitions;

  bool operator==(const State&) const = default;
};

// A request composed from states (required parameters), each fulfilled by
// one of its transitions. Calls are issued from the entry service in
// depth-first order, followed by the optional final request call.
struct WorkflowStateMachine {
  std::string name;
  std::string entry_service;
  std::string root_operation;
  double entry_latency_ms = 1.0;
  std::vector<State> states;
  std::optional<Call> request;
  // Top-level workflows are sampled by the workload generator; others are
  // only reachable as sub-workflows.
  bool top_level = true;

  bool operator==(const WorkflowStateMachine&) const = default;
};

class ServiceGraph {
 public:
  ServiceGraph() = default;
  // Validates invariants; throws ConfigError.
  ServiceGraph(std::vector<ServiceNode> services, std::vector<CallEdge> edges,
               std::vector<std::string> entry_points);

  const std::vector<ServiceNode>& services() const { return services_; }
  const std::vector<CallEdge>& edges() const { return edges_; }
  const std::vector<std::string>& entry_points() const { return entry_points_; }

  const ServiceNode* FindService(std::string_view name) const;
  const ServiceNode& service(std::string_view name) const;
  std::optional<std::size_t> ServiceIndex(std::string_view name) const;

  // Edges issued by `service` while handling `operation`, in declaration
  // order.
  std::vector<std::size_t> OutgoingCalls(std::string_view service,
                                         std::string_view operation) const;
  const CallEdge* FindEdge(std::string_view caller, std::string_view callee,
                           std::string_view operation) const;

  // Operations a service can handle: the callee side of incoming edges.
  std::vector<std::string> Operations(std::string_view service) const;

  // Lookup of pods and containers by id: (service index, pod index).
  struct PodRef {
    std::size_t service;
    std::size_t pod;
  };
  std::optional<PodRef> FindPod(std::string_view pod_id) const;
  struct ContainerRef {
    std::size_t service;
    std::size_t pod;
    std::size_t container;
  };
  std::optional<ContainerRef> FindContainer(std::string_view container_id) const;

  bool operator==(const ServiceGraph& other) const {
    return services_ == other.services_ && edges_ == other.edges_ &&
           entry_points_ == other.entry_points_;
  }

 private:
  void Index();

  std::vector<ServiceNode> services_;
  std::vector<CallEdge> edges_;
  std::vector<std::string> entry_points_;
  std::unordered_map<std::string, std::size_t> service_index_;
  std::unordered_map<std::string, PodRef> pod_index_;
  std::unordered_map<std::string, ContainerRef> container_index_;
};

struct Topology {
  ServiceGraph graph;
  std::vector<WorkflowStateMachine> workflows;

  const WorkflowStateMachine* FindWorkflow(std::string_view name) const;
  const WorkflowStateMachine& workflow(std::string_view name) const;
  std::vector<const WorkflowStateMachine*> TopLevelWorkflows() const;

  bool operator==(const Topology&) const = default;
};

// Parses and validates a topology document. Throws ConfigError on parse
// errors, dangling references, and cycles (the message names one cycle).
Topology LoadTopology(std::string_view document);
Topology LoadTopology(const nlohmann::json& document);
Topology LoadTopologyFile(const std::string& path);

// Shipped configs: "chain3", "trainticket50".
Topology ReferenceTopology(std::string_view name);
std::string_view ReferenceTopologyText(std::string_view name);

// Resolves a config reference: a reference name, a file path, or an inline
// JSON object.
Topology ResolveTopology(const nlohmann::json& ref, const std::string& base_dir);

nlohmann::json TopologyToJson(const Topology& topology);
std::string SerializeTopology(const Topology& topology);

struct ExecutionPath {
  std::string workflow;
  // Position in enumeration order.
  uint64_t id = 0;
  // Chosen transition index for every state visited, depth-first.
  std::vector<uint32_t> choices;

  bool operator==(const ExecutionPath&) const = default;
};

// Product over states of the summed per-transition path counts, expanded
// recursively through sub-workflows. Throws Error on 64-bit overflow.
uint64_t CountPaths(const Topology& topology,
                    const WorkflowStateMachine& workflow);

// Depth-first enumeration in transition declaration order, stopping after
// `limit` paths.
std::vector<ExecutionPath> EnumeratePaths(const Topology& topology,
                                          const WorkflowStateMachine& workflow,
                                          uint64_t limit = UINT64_MAX);

// The path with enumeration index `id` (id < CountPaths).
ExecutionPath DecodePath(const Topology& topology,
                         const WorkflowStateMachine& workflow, uint64_t id);
// Inverse of DecodePath: the enumeration index of a choice sequence.
uint64_t EncodePath(const Topology& topology,
                    const WorkflowStateMachine& workflow,
                    const std::vector<uint32_t>& choices);

// The calls the entry service issues for a path, in order.
std::vector<Call> PathCalls(const Topology& topology,
                            const WorkflowStateMachine& workflow,
                            const ExecutionPath& path);

}  // namespace rcabench
