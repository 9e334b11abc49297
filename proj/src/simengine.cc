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

#include "rcabench/simengine.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <fmt/format.h>

#include "rcabench/common.h"

namespace rcabench {

using nlohmann::json;

void CaseProtocol::Validate() const {
  if (!(warmup_s > 0 && normal_s > 0 && fault_s > 0)) {
    throw ConfigError("protocol windows must be positive");
  }
  if (!(timeout_ms > 0)) throw ConfigError("protocol timeout must be positive");
  if (retries < 0) throw ConfigError("protocol retries must be non-negative");
  if (noise_sigma < 0 || contention_clamp < 1 || oom_kill_load <= 0 ||
      oom_grace_s < 0 || restart_s <= 0) {
    throw ConfigError("invalid engine constants in protocol");
  }
}

CaseWindows CaseProtocol::Windows() const {
  const int64_t normal = std::llround(warmup_s * 1000);
  const int64_t fault = normal + std::llround(normal_s * 1000);
  return {normal, fault, fault + std::llround(fault_s * 1000)};
}

CaseProtocol ParseCaseProtocol(const json& doc) {
  CaseProtocol p;
  if (doc.is_null()) return p;
  if (!doc.is_object()) throw ConfigError("protocol must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "warmup_s") p.warmup_s = value.get<double>();
    else if (key == "normal_s") p.normal_s = value.get<double>();
    else if (key == "fault_s") p.fault_s = value.get<double>();
    else if (key == "timeout_ms") p.timeout_ms = value.get<double>();
    else if (key == "retries") p.retries = value.get<int>();
    else if (key == "noise_sigma") p.noise_sigma = value.get<double>();
    else if (key == "contention_clamp") p.contention_clamp = value.get<double>();
    else if (key == "oom_kill_load") p.oom_kill_load = value.get<double>();
    else if (key == "oom_grace_s") p.oom_grace_s = value.get<double>();
    else if (key == "restart_s") p.restart_s = value.get<double>();
    else if (key == "emit") {
      p.emit_metrics = value.value("metrics", true);
      p.emit_logs = value.value("logs", true);
      p.emit_traces = value.value("traces", true);
    } else {
      throw ConfigError(fmt::format("unknown protocol key '{}'", key));
    }
  }
  p.Validate();
  return p;
}

json CaseProtocolToJson(const CaseProtocol& p) {
  return {{"warmup_s", p.warmup_s},
          {"normal_s", p.normal_s},
          {"fault_s", p.fault_s},
          {"timeout_ms", p.timeout_ms},
          {"retries", p.retries},
          {"noise_sigma", p.noise_sigma},
          {"contention_clamp", p.contention_clamp},
          {"oom_kill_load", p.oom_kill_load},
          {"oom_grace_s", p.oom_grace_s},
          {"restart_s", p.restart_s},
          {"emit",
           {{"metrics", p.emit_metrics},
            {"logs", p.emit_logs},
            {"traces", p.emit_traces}}}};
}

double ContentionFactor(double utilization, double stress_load, double clamp) {
  return std::min(clamp, 1.0 + std::max(0.0, utilization) + std::max(0.0, stress_load));
}

StressState ApplyStress(const FaultSpec& spec, const CaseProtocol& protocol,
                        double t_s) {
  StressState state;
  if (t_s < spec.window_start_s || t_s >= spec.window_end_s) return state;
  const double load = spec.Number("load");
  if (load > protocol.oom_kill_load &&
      t_s >= spec.window_start_s + protocol.oom_grace_s) {
    state.oom_killed = true;
    return state;
  }
  state.load = load;
  return state;
}

json CaseMeta::ToJson() const {
  json doc = json::object();
  doc["case_id"] = case_id;
  doc["seed"] = seed;
  doc["fault"] = fault ? FaultSpecToJson(*fault) : json(nullptr);
  doc["windows"] = WindowsToJson(windows);
  doc["arrivals"] = arrivals;
  return doc;
}

namespace {

enum class Effect {
  kNone, kPodKill, kPodFailure, kContainerKill, kMemoryStress, kCpuStress,
  kNetDelay, kNetLoss, kNetDuplicate, kNetCorrupt, kNetBandwidth, kNetPartition,
  kRequestAbort, kResponseAbort, kRequestDelay, kResponseDelay, kReplaceBody,
  kPatchBody, kReplacePath, kReplaceMethod, kReplaceCode,
  kJvmLatency, kJvmReturn, kJvmException, kJvmGc, kJvmCpuStress,
  kJvmMemoryStress, kMysqlLatency, kMysqlException,
  kDnsError, kDnsRandom, kTimeSkew,
};

Effect EffectOf(const std::string& type) {
  static const std::unordered_map<std::string, Effect> kMap = {
      {"PodKill", Effect::kPodKill},
      {"PodFailure", Effect::kPodFailure},
      {"ContainerKill", Effect::kContainerKill},
      {"MemoryStress", Effect::kMemoryStress},
      {"CPUStress", Effect::kCpuStress},
      {"NetworkDelay", Effect::kNetDelay},
      {"NetworkLoss", Effect::kNetLoss},
      {"NetworkDuplicate", Effect::kNetDuplicate},
      {"NetworkCorrupt", Effect::kNetCorrupt},
      {"NetworkBandwidth", Effect::kNetBandwidth},
      {"NetworkPartition", Effect::kNetPartition},
      {"HTTPRequestAbort", Effect::kRequestAbort},
      {"HTTPResponseAbort", Effect::kResponseAbort},
      {"HTTPRequestDelay", Effect::kRequestDelay},
      {"HTTPResponseDelay", Effect::kResponseDelay},
      {"HTTPResponseReplaceBody", Effect::kReplaceBody},
      {"HTTPResponsePatchBody", Effect::kPatchBody},
      {"HTTPRequestReplacePath", Effect::kReplacePath},
      {"HTTPRequestReplaceMethod", Effect::kReplaceMethod},
      {"HTTPResponseReplaceCode", Effect::kReplaceCode},
      {"JVMLatency", Effect::kJvmLatency},
      {"JVMReturn", Effect::kJvmReturn},
      {"JVMException", Effect::kJvmException},
      {"JVMGarbageCollector", Effect::kJvmGc},
      {"JVMCPUStress", Effect::kJvmCpuStress},
      {"JVMMemoryStress", Effect::kJvmMemoryStress},
      {"JVMMySQLLatency", Effect::kMysqlLatency},
      {"JVMMySQLException", Effect::kMysqlException},
      {"DNSError", Effect::kDnsError},
      {"DNSRandom", Effect::kDnsRandom},
      {"TimeSkew", Effect::kTimeSkew},
  };
  auto it = kMap.find(type);
  if (it == kMap.end()) throw ConfigError(fmt::format("unknown fault type '{}'", type));
  return it->second;
}

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr int64_t kForever = std::numeric_limits<int64_t>::max() / 4;

struct PodInfo {
  std::size_t service;
  std::string id;
  std::vector<std::string> containers;
  double capacity;
  double memory_capacity;
};

// Per pod and second.
struct SecondStats {
  double work_s = 0.0;
  double busy_ms = 0.0;
  double net_in = 0.0;
  double net_out = 0.0;
  double gc_ms = 0.0;
  int requests = 0;
  int errors = 0;
  std::vector<float> latencies;
};

struct CompiledFault {
  Effect effect = Effect::kNone;
  FaultSpec spec;
  std::size_t service = kNone;
  std::size_t pod = kNone;
  std::size_t edge = kNone;
  std::string operation;
  bool leg_to = false;
  bool leg_from = false;
  double value = 0.0;       // the type's primary numeric parameter
  double probability = 0.0;
  double correlation = 0.0;
  int64_t start_ms = 0;
  int64_t end_ms = 0;
};

// Why an outbound call failed, from the caller's perspective.
enum class Failure { kNone, kTimeout, kTransport, kApplication, kException };

struct CallOutcome {
  int64_t resume_us = 0;
  Failure failure = Failure::kNone;
  int code = 200;
};

struct SpanResult {
  int64_t end_us = 0;
  SpanStatus status = SpanStatus::kOk;
  int code = 200;
};

// Correlated Bernoulli/uniform draws in the style of netem.
class CorrelatedDraw {
 public:
  double Next(Rng& rng, double correlation) {
    const double fresh = rng.Uniform();
    last_ = has_last_ ? correlation * last_ + (1 - correlation) * fresh : fresh;
    has_last_ = true;
    return last_;
  }

 private:
  bool has_last_ = false;
  double last_ = 0.0;
};

class TokenBucket {
 public:
  TokenBucket() = default;
  TokenBucket(double rate_bytes_per_us, double burst, double limit)
      : rate_(rate_bytes_per_us), burst_(burst), limit_(limit), tokens_(burst) {}

  // Queueing delay for `bytes` sent at `t_us`, or -1 when dropped.
  int64_t Send(double bytes, int64_t t_us) {
    const double dt = std::max<int64_t>(0, t_us - last_us_);
    last_us_ = std::max(last_us_, t_us);
    tokens_ = std::min(burst_, tokens_ + dt * rate_);
    if (tokens_ - bytes < -limit_) return -1;
    tokens_ -= bytes;
    return tokens_ < 0 ? std::llround(-tokens_ / rate_) : 0;
  }

 private:
  double rate_ = 1.0;
  double burst_ = 0.0;
  double limit_ = 0.0;
  double tokens_ = 0.0;
  int64_t last_us_ = 0;
};

}  // namespace

struct Simulator::Impl {
  const Topology& topology;
  const ServiceGraph& graph;
  CaseProtocol protocol;
  CaseWindows windows;
  uint64_t seed;
  Rng rng;
  Rng fault_rng;
  CompiledFault fault;
  int64_t timeout_us;

  std::vector<PodInfo> pods;
  std::vector<std::size_t> first_pod;  // per service
  std::vector<std::size_t> monitored_services;
  int64_t seconds;
  std::vector<SecondStats> stats;  // pods x seconds

  std::unordered_map<std::string, std::vector<std::size_t>> outgoing_cache;
  std::unordered_map<std::string, std::vector<std::size_t>> path_cache;

  CorrelatedDraw draw_to;
  CorrelatedDraw draw_from;
  CorrelatedDraw jitter;
  TokenBucket bucket_to;
  TokenBucket bucket_from;
  std::vector<int64_t> gc_pulses_ms;

  // Per-request output.
  std::string trace_id;
  uint64_t next_span = 0;
  int64_t util_second = 0;
  RequestTelemetry out;

  Impl(const Topology& t, const CaseProtocol& p,
       const std::optional<FaultSpec>& spec, uint64_t s)
      : topology(t),
        graph(t.graph),
        protocol(p),
        windows(p.Windows()),
        seed(s),
        rng(DeriveSeed(s, "engine")),
        fault_rng(DeriveSeed(s, "fault")),
        timeout_us(std::llround(p.timeout_ms * 1000)) {
    protocol.Validate();
    for (std::size_t i = 0; i < graph.services().size(); ++i) {
      const auto& svc = graph.services()[i];
      first_pod.push_back(pods.size());
      if (svc.monitored) monitored_services.push_back(i);
      for (const auto& pod : svc.pods) {
        pods.push_back({i, pod.id, pod.containers, svc.cpu_capacity,
                        svc.memory_capacity});
      }
    }
    seconds = static_cast<int64_t>(std::ceil(p.TotalSeconds())) + 1;
    stats.resize(pods.size() * seconds);
    if (spec) Compile(*spec);
  }

  void Compile(const FaultSpec& spec) {
    fault.effect = EffectOf(spec.type);
    fault.spec = spec;
    fault.start_ms = std::llround(spec.window_start_s * 1000);
    fault.end_ms = std::llround(spec.window_end_s * 1000);
    const std::string& registry_target = spec.target;
    auto number = [&](const char* name) { return spec.Number(name); };
    auto direction = [&] {
      const std::string dir = spec.Text("direction");
      fault.leg_to = dir == "to" || dir == "both";
      fault.leg_from = dir == "from" || dir == "both";
    };
    auto edge_target = [&] {
      for (std::size_t i = 0; i < graph.edges().size(); ++i) {
        if (graph.edges()[i].Id() == registry_target) {
          fault.edge = i;
          fault.service = *graph.ServiceIndex(graph.edges()[i].callee);
          return;
        }
      }
      throw ConfigError(fmt::format("unknown edge target '{}'", registry_target));
    };
    auto pod_target = [&] {
      const auto ref = graph.FindPod(registry_target);
      if (!ref) throw ConfigError(fmt::format("unknown pod target '{}'", registry_target));
      fault.service = ref->service;
      fault.pod = first_pod[ref->service] + ref->pod;
    };
    auto operation_target = [&] {
      const auto colon = registry_target.rfind(':');
      if (colon == std::string::npos) {
        throw ConfigError(fmt::format("bad operation target '{}'", registry_target));
      }
      const auto svc = graph.ServiceIndex(registry_target.substr(0, colon));
      if (!svc) throw ConfigError(fmt::format("unknown service in '{}'", registry_target));
      fault.service = *svc;
      fault.pod = first_pod[*svc];
      fault.operation = registry_target.substr(colon + 1);
    };
    switch (fault.effect) {
      case Effect::kPodKill:
        pod_target();
        break;
      case Effect::kPodFailure:
        pod_target();
        fault.value = number("unavailable_s");
        break;
      case Effect::kContainerKill: {
        const auto ref = graph.FindContainer(registry_target);
        if (!ref) throw ConfigError(fmt::format("unknown container '{}'", registry_target));
        fault.service = ref->service;
        fault.pod = first_pod[ref->service] + ref->pod;
        break;
      }
      case Effect::kMemoryStress:
      case Effect::kCpuStress:
        pod_target();
        fault.value = number("load");
        break;
      case Effect::kNetDelay:
        edge_target();
        direction();
        fault.value = number("latency_ms");
        fault.probability = number("jitter_ms");
        fault.correlation = number("correlation_pct") / 100.0;
        break;
      case Effect::kNetLoss:
      case Effect::kNetDuplicate:
      case Effect::kNetCorrupt: {
        edge_target();
        direction();
        const char* name = fault.effect == Effect::kNetLoss        ? "loss_pct"
                           : fault.effect == Effect::kNetDuplicate ? "duplicate_pct"
                                                                   : "corrupt_pct";
        fault.probability = number(name) / 100.0;
        fault.correlation = number("correlation_pct") / 100.0;
        break;
      }
      case Effect::kNetBandwidth: {
        edge_target();
        direction();
        const double rate = number("rate_kbps") * 1000.0 / 8.0 / 1e6;
        bucket_to = TokenBucket(rate, number("buffer_kb") * 1024, number("limit_kb") * 1024);
        bucket_from = bucket_to;
        break;
      }
      case Effect::kNetPartition:
        edge_target();
        direction();
        break;
      case Effect::kRequestAbort:
      case Effect::kResponseAbort:
        edge_target();
        break;
      case Effect::kRequestDelay:
      case Effect::kResponseDelay:
        edge_target();
        fault.value = number("delay_ms");
        break;
      case Effect::kReplaceBody:
      case Effect::kPatchBody:
        edge_target();
        fault.probability = number("parse_error_pct") / 100.0;
        break;
      case Effect::kReplacePath:
        edge_target();
        fault.value = 404;
        break;
      case Effect::kReplaceMethod:
        edge_target();
        fault.value = 405;
        break;
      case Effect::kReplaceCode:
        edge_target();
        fault.value = number("code");
        break;
      case Effect::kJvmLatency:
      case Effect::kMysqlLatency:
        operation_target();
        fault.value = number("latency_ms");
        break;
      case Effect::kJvmReturn:
        operation_target();
        fault.probability = number("logic_error_pct") / 100.0;
        break;
      case Effect::kJvmException:
      case Effect::kMysqlException:
        operation_target();
        break;
      case Effect::kJvmGc: {
        operation_target();
        fault.value = number("pause_ms");
        const int64_t interval = std::llround(number("interval_s") * 1000);
        for (int64_t t = fault.start_ms; t < fault.end_ms; t += interval) {
          gc_pulses_ms.push_back(t);
        }
        break;
      }
      case Effect::kJvmCpuStress:
      case Effect::kJvmMemoryStress:
        operation_target();
        fault.value = number("load");
        break;
      case Effect::kDnsError:
      case Effect::kDnsRandom: {
        const auto svc = graph.ServiceIndex(registry_target);
        if (!svc) throw ConfigError(fmt::format("unknown service '{}'", registry_target));
        fault.service = *svc;
        fault.probability = number("scope_pct") / 100.0;
        break;
      }
      case Effect::kTimeSkew:
        pod_target();
        fault.value = number("offset_s");
        break;
      case Effect::kNone:
        break;
    }
  }

  bool Active(int64_t t_us) const {
    const int64_t ms = t_us / 1000;
    return fault.effect != Effect::kNone && ms >= fault.start_ms && ms < fault.end_ms;
  }
  bool Is(Effect e) const { return fault.effect == e; }

  // Pod process running (PodKill/PodFailure take it down).
  bool PodUp(std::size_t pod, int64_t t_ms) const {
    if (pod != fault.pod || t_ms < fault.start_ms || t_ms >= fault.end_ms) return true;
    if (Is(Effect::kPodKill)) return false;
    if (Is(Effect::kPodFailure)) {
      const int64_t down = std::llround(fault.value * 1000);
      const int64_t period = down + std::llround(protocol.restart_s * 1000);
      return (t_ms - fault.start_ms) % period >= down;
    }
    return true;
  }

  bool ContainerDown(std::size_t pod, int64_t t_ms) const {
    return Is(Effect::kContainerKill) && pod == fault.pod &&
           t_ms >= fault.start_ms && t_ms < fault.end_ms;
  }

  bool Servable(std::size_t pod, int64_t t_ms) const {
    return PodUp(pod, t_ms) && !ContainerDown(pod, t_ms);
  }

  int Restarts(std::size_t pod, int64_t t_ms) const {
    if (pod != fault.pod || t_ms < fault.start_ms) return 0;
    const int64_t t = std::min(t_ms, fault.end_ms - 1);
    if (Is(Effect::kPodFailure)) {
      const int64_t down = std::llround(fault.value * 1000);
      const int64_t period = down + std::llround(protocol.restart_s * 1000);
      // Completed outages.
      return static_cast<int>((t - fault.start_ms + period - down) / period);
    }
    if (Is(Effect::kContainerKill) && t_ms >= fault.end_ms) return 1;
    return 0;
  }

  double StressLoad(std::size_t pod, int64_t t_ms, bool memory) const {
    if (pod != fault.pod) return 0.0;
    const bool cpu_type = Is(Effect::kCpuStress) || Is(Effect::kJvmCpuStress);
    const bool mem_type = Is(Effect::kMemoryStress) || Is(Effect::kJvmMemoryStress);
    if (!(memory ? mem_type : cpu_type)) return 0.0;
    return ApplyStress(fault.spec, protocol, t_ms / 1000.0).load;
  }

  double GcExtraMs(std::size_t pod, int64_t start_us, double busy_ms) {
    if (!Is(Effect::kJvmGc) || pod != fault.pod || gc_pulses_ms.empty()) return 0.0;
    const double pause = fault.value;
    const double start_ms = start_us / 1000.0;
    double extra = 0.0;
    auto it = std::upper_bound(gc_pulses_ms.begin(), gc_pulses_ms.end(),
                               static_cast<int64_t>(start_ms));
    if (it != gc_pulses_ms.begin()) {
      const double prev = static_cast<double>(*std::prev(it));
      if (start_ms < prev + pause) extra += prev + pause - start_ms;
    }
    for (; it != gc_pulses_ms.end() && *it < start_ms + busy_ms + extra; ++it) {
      extra += pause;
    }
    return extra;
  }

  SecondStats& StatsAt(std::size_t pod, int64_t t_us) {
    int64_t sec = std::clamp<int64_t>(t_us / 1000000, 0, seconds - 1);
    return stats[pod * seconds + sec];
  }

  double Utilization(std::size_t pod) const {
    if (util_second < 0) return 0.0;
    return stats[pod * seconds + util_second].work_s / pods[pod].capacity;
  }

  const std::vector<std::size_t>& Outgoing(std::size_t svc, const std::string& op) {
    const std::string key = graph.services()[svc].name + '\n' + op;
    auto it = outgoing_cache.find(key);
    if (it == outgoing_cache.end()) {
      it = outgoing_cache
               .emplace(key, graph.OutgoingCalls(graph.services()[svc].name, op))
               .first;
    }
    return it->second;
  }

  const std::vector<std::size_t>& RootCalls(const WorkflowStateMachine& wf,
                                            uint64_t path_id) {
    const std::string key = fmt::format("{}\n{}", wf.name, path_id);
    auto it = path_cache.find(key);
    if (it != path_cache.end()) return it->second;
    std::vector<std::size_t> edges;
    const auto path = DecodePath(topology, wf, path_id);
    for (const auto& call : PathCalls(topology, wf, path)) {
      const auto* edge = graph.FindEdge(wf.entry_service, call.service, call.operation);
      if (edge == nullptr) {
        throw ConfigError(fmt::format("no edge {}->{}:{}", wf.entry_service,
                                      call.service, call.operation));
      }
      edges.push_back(static_cast<std::size_t>(edge - graph.edges().data()));
    }
    return path_cache.emplace(key, std::move(edges)).first->second;
  }

  std::optional<std::size_t> PickPod(std::size_t svc, int64_t t_us) {
    std::size_t alive[64];
    std::size_t n = 0;
    const std::size_t count = graph.services()[svc].pods.size();
    for (std::size_t i = 0; i < count && n < 64; ++i) {
      if (Servable(first_pod[svc] + i, t_us / 1000)) alive[n++] = first_pod[svc] + i;
    }
    // One draw per routing decision keeps the stream aligned across faults.
    const uint64_t r = count > 1 ? rng.UniformInt(count) : 0;
    if (n == 0) return std::nullopt;
    return alive[r % n];
  }

  bool Monitored(std::size_t svc) const { return graph.services()[svc].monitored; }

  void Log(std::size_t pod, int64_t t_us, Severity severity, const char* tmpl,
           std::string message) {
    const auto& info = pods[pod];
    if (!Monitored(info.service) || !PodUp(pod, t_us / 1000)) return;
    out.logs.push_back({t_us / 1000, graph.services()[info.service].name, info.id,
                        trace_id, severity, tmpl, std::move(message)});
  }

  std::string NewSpanId() { return fmt::format("{:04x}", ++next_span); }

  double Noise() {
    if (protocol.noise_sigma == 0) return 1.0;
    const double s = protocol.noise_sigma;
    return std::exp(s * rng.Normal() - 0.5 * s * s);
  }

  void Record(std::size_t pod, int64_t start_us, int64_t end_us, double work_ms,
              bool error, double bytes_in) {
    auto& st = StatsAt(pod, start_us);
    st.work_s += work_ms / 1000.0;
    const double dur_ms = (end_us - start_us) / 1000.0;
    st.busy_ms += dur_ms;
    st.requests += 1;
    st.errors += error ? 1 : 0;
    st.latencies.push_back(static_cast<float>(dur_ms));
    st.net_in += bytes_in;
    st.net_out += bytes_in;
  }

  void EmitSpan(std::size_t svc, std::size_t pod, const std::string& id,
                const std::string& parent, const std::string& op, int64_t start_us,
                int64_t end_us, SpanStatus status, int code) {
    if (!Monitored(svc)) return;
    const int64_t start_ms = start_us / 1000;
    out.spans.push_back({trace_id, id, parent, graph.services()[svc].name,
                         pod == kNone ? "" : pods[pod].id, op, start_ms,
                         end_us - start_ms * 1000, status, code});
  }

  // A short error span on the callee for misrouted or rewritten requests.
  void RejectSpan(std::size_t svc, std::size_t pod, const std::string& parent,
                  const std::string& op, int64_t start_us, int code) {
    const std::string id = NewSpanId();
    const int64_t end_us = start_us + 1000;
    EmitSpan(svc, pod, id, parent, op, start_us, end_us, SpanStatus::kError, code);
    Record(pod, start_us, end_us, 0.0, true, 0.0);
  }

  SpanResult Serve(std::size_t svc, const std::string& op, std::size_t pod,
                   int64_t start_us, int64_t deadline_us, const std::string& parent,
                   double base_ms, const std::vector<std::size_t>& calls,
                   double bytes_in) {
    const std::string id = NewSpanId();
    const int64_t start_ms = start_us / 1000;
    const bool at_target_op = pod == fault.pod && op == fault.operation &&
                              svc == fault.service && Active(start_us);
    const double work_ms = base_ms * Noise();
    const double factor = ContentionFactor(
        Utilization(pod), StressLoad(pod, start_ms, false) + StressLoad(pod, start_ms, true),
        protocol.contention_clamp);
    double self_ms = work_ms * factor;
    if (at_target_op && Is(Effect::kJvmLatency)) self_ms += fault.value;
    const double gc_ms = GcExtraMs(pod, start_us, self_ms);
    if (gc_ms > 0) StatsAt(pod, start_us).gc_ms += gc_ms;
    self_ms += gc_ms;
    const int64_t self_us = std::llround(self_ms * 1000);
    const int64_t pre_us = self_us / 2;
    int64_t t = start_us + pre_us;

    SpanResult result;
    if (at_target_op && Is(Effect::kJvmException)) {
      result.status = SpanStatus::kError;
      result.code = 500;
      Log(pod, t, Severity::kError, "code-exception",
          fmt::format("java.lang.{}: unhandled exception in {}",
                      fault.spec.Text("exception"), op));
    } else {
      for (std::size_t e : calls) {
        if (t >= deadline_us) break;
        const CallOutcome call = Call(svc, op, pod, e, t, deadline_us, id);
        t = call.resume_us;
        if (call.failure != Failure::kNone && !graph.edges()[e].optional) {
          result.status = call.failure == Failure::kTimeout ? SpanStatus::kTimeout
                                                            : SpanStatus::kError;
          result.code = call.failure == Failure::kTimeout ? 504
                        : Is(Effect::kReplaceCode) && call.code == fault.value
                            ? call.code
                            : 500;
          break;
        }
      }
    }
    int64_t end = t + (self_us - pre_us);
    if (end > deadline_us) {
      end = std::max(start_us, deadline_us);
      result.status = SpanStatus::kTimeout;
      result.code = 504;
    }
    result.end_us = end;
    EmitSpan(svc, pod, id, parent, op, start_us, end, result.status, result.code);
    Record(pod, start_us, end, work_ms, result.status != SpanStatus::kOk, bytes_in);
    if (result.status == SpanStatus::kOk) {
      Log(pod, end, Severity::kInfo, "request-done",
          fmt::format("{} completed in {:.1f} ms", op, (end - start_us) / 1000.0));
    }
    return result;
  }

  // Extra leg latency in us, or -1 when the message is lost.
  int64_t LegDelay(const CallEdge& edge, bool request_leg, int64_t t_us) {
    const bool on_leg = request_leg ? fault.leg_to : fault.leg_from;
    int64_t delay = 0;
    switch (fault.effect) {
      case Effect::kNetDelay:
        if (on_leg) {
          const double j = jitter.Next(fault_rng, fault.correlation) * 2 - 1;
          delay = std::llround(std::max(0.0, fault.value + fault.probability * j) * 1000);
        }
        break;
      case Effect::kNetLoss:
        if (on_leg &&
            (request_leg ? draw_to : draw_from).Next(fault_rng, fault.correlation) <
                fault.probability) {
          return -1;
        }
        break;
      case Effect::kNetBandwidth:
        if (on_leg) {
          delay = (request_leg ? bucket_to : bucket_from)
                      .Send(static_cast<double>(edge.payload_bytes), t_us);
        }
        break;
      case Effect::kNetPartition:
        if (on_leg) return -1;
        break;
      case Effect::kRequestDelay:
        if (request_leg) delay = std::llround(fault.value * 1000);
        break;
      case Effect::kResponseDelay:
        if (!request_leg) delay = std::llround(fault.value * 1000);
        break;
      default:
        break;
    }
    return delay;
  }

  CallOutcome Fail(int64_t resume_us, Failure failure, int code) {
    return {resume_us, failure, code};
  }

  CallOutcome Call(std::size_t caller, const std::string& caller_op,
                   std::size_t caller_pod, std::size_t edge_index, int64_t t_call,
                   int64_t deadline_us, const std::string& parent_id) {
    CallOutcome outcome;
    for (int attempt = 0; attempt <= protocol.retries; ++attempt) {
      outcome = CallOnce(caller, caller_op, caller_pod, edge_index, t_call,
                         deadline_us, parent_id);
      if (outcome.failure == Failure::kNone || outcome.resume_us >= deadline_us) break;
      t_call = outcome.resume_us;
    }
    return outcome;
  }

  CallOutcome CallOnce(std::size_t caller, const std::string& caller_op,
                       std::size_t caller_pod, std::size_t edge_index,
                       int64_t t_call, int64_t deadline_us,
                       const std::string& parent_id) {
    const CallEdge& edge = graph.edges()[edge_index];
    const std::size_t callee = *graph.ServiceIndex(edge.callee);
    const std::string target = fmt::format("{}:{}", edge.callee, edge.operation);
    const int64_t timeout_at = t_call + timeout_us;
    const int64_t child_deadline = std::min(deadline_us, timeout_at);
    const bool active = Active(t_call);
    auto timed_out = [&] {
      Log(caller_pod, timeout_at, Severity::kError, "rpc-timeout",
          fmt::format("timeout calling {} after {} ms", target, timeout_us / 1000));
      return Fail(timeout_at, Failure::kTimeout, 504);
    };

    if (active && caller == fault.service &&
        (Is(Effect::kDnsError) || Is(Effect::kDnsRandom)) &&
        fault_rng.Bernoulli(fault.probability)) {
      const int64_t resume = t_call + 1000;
      if (Is(Effect::kDnsError)) {
        Log(caller_pod, resume, Severity::kError, "dns-error",
            fmt::format("java.net.UnknownHostException: {}", edge.callee));
        return Fail(resume, Failure::kTransport, 503);
      }
      std::vector<std::size_t> others;
      for (std::size_t s : monitored_services) {
        if (s != callee) others.push_back(s);
      }
      if (!others.empty()) {
        const std::size_t wrong = others[fault_rng.UniformInt(others.size())];
        const auto wrong_pod = PickPod(wrong, t_call);
        if (wrong_pod) {
          RejectSpan(wrong, *wrong_pod, parent_id, edge.operation, t_call, 404);
        }
      }
      Log(caller_pod, resume + 1000, Severity::kError, "http-status",
          fmt::format("request to {} returned 404 Not Found", target));
      return Fail(resume + 1000, Failure::kTransport, 404);
    }

    const bool on_edge = active && edge_index == fault.edge;
    bool request_lost = false;
    int64_t request_us = 0;
    if (on_edge) {
      if (Is(Effect::kRequestAbort)) {
        Log(caller_pod, t_call + 1000, Severity::kError, "rpc-abort",
            fmt::format("connection reset while sending request to {}", target));
        return Fail(t_call + 1000, Failure::kTransport, 500);
      }
      request_us = LegDelay(edge, true, t_call);
      if (request_us < 0) {
        request_lost = true;
        request_us = 0;
      }
      if (Is(Effect::kNetCorrupt) && fault.leg_to &&
          draw_to.Next(fault_rng, fault.correlation) < fault.probability) {
        const int64_t resume = t_call + request_us + 1000;
        Log(caller_pod, resume, Severity::kError, "rpc-protocol",
            fmt::format("protocol error: malformed frame from {}", target));
        return Fail(resume, Failure::kTransport, 502);
      }
    }
    const int64_t arrive_us = t_call + request_us;
    if (request_lost) return timed_out();
    if (arrive_us >= child_deadline) {
      return arrive_us >= timeout_at ? timed_out() : Fail(child_deadline, Failure::kTimeout, 504);
    }

    const auto pod = PickPod(callee, arrive_us);
    if (!pod) {
      const int64_t resume = arrive_us + 1000;
      Log(caller_pod, resume, Severity::kError, "rpc-refused",
          fmt::format("connection refused by {}", edge.callee));
      return Fail(resume, Failure::kTransport, 503);
    }
    if (on_edge && (Is(Effect::kReplacePath) || Is(Effect::kReplaceMethod))) {
      const int code = static_cast<int>(fault.value);
      RejectSpan(callee, *pod, parent_id, edge.operation, arrive_us, code);
      const int64_t resume = arrive_us + 2000;
      Log(caller_pod, resume, Severity::kError, "http-status",
          fmt::format("request to {} returned {}", target,
                      code == 404 ? "404 Not Found" : "405 Method Not Allowed"));
      return Fail(resume, Failure::kTransport, code);
    }

    const bool db_fault = edge.is_database_edge && caller == fault.service &&
                          caller_pod == fault.pod && caller_op == fault.operation &&
                          active;
    const SpanResult child = Serve(callee, edge.operation, *pod, arrive_us,
                                   child_deadline, parent_id, edge.base_latency_ms,
                                   Outgoing(callee, edge.operation),
                                   static_cast<double>(edge.payload_bytes));
    if (on_edge && Is(Effect::kNetDuplicate) && fault.leg_to &&
        draw_to.Next(fault_rng, fault.correlation) < fault.probability) {
      Serve(callee, edge.operation, *pod, arrive_us, child.end_us, parent_id,
            edge.base_latency_ms, Outgoing(callee, edge.operation),
            static_cast<double>(edge.payload_bytes));
    }

    int64_t response_us = 0;
    if (on_edge) {
      response_us = LegDelay(edge, false, child.end_us);
      if (response_us < 0) return timed_out();
    }
    if (db_fault && Is(Effect::kMysqlLatency)) response_us += std::llround(fault.value * 1000);
    const int64_t back_us = child.end_us + response_us;
    if (back_us > timeout_at) return timed_out();
    if (back_us > child_deadline) return Fail(child_deadline, Failure::kTimeout, 504);

    if (db_fault && Is(Effect::kMysqlException)) {
      Log(caller_pod, back_us, Severity::kError, "db-exception",
          fmt::format("java.sql.{}: query on {} failed", fault.spec.Text("exception"),
                      edge.callee));
      return Fail(back_us, Failure::kException, 500);
    }
    if (child.status != SpanStatus::kOk) {
      Log(caller_pod, back_us, Severity::kWarn, "rpc-status",
          fmt::format("call to {} returned status {}", target, child.code));
      return Fail(back_us, Failure::kApplication, child.code);
    }
    if (on_edge) {
      if (Is(Effect::kResponseAbort)) {
        Log(caller_pod, back_us, Severity::kError, "rpc-abort",
            fmt::format("connection reset while reading response from {}", target));
        return Fail(back_us, Failure::kTransport, 500);
      }
      if (Is(Effect::kNetCorrupt) && fault.leg_from &&
          draw_from.Next(fault_rng, fault.correlation) < fault.probability) {
        Log(caller_pod, back_us, Severity::kError, "rpc-protocol",
            fmt::format("protocol error: malformed frame from {}", target));
        return Fail(back_us, Failure::kTransport, 502);
      }
      if (Is(Effect::kReplaceCode)) {
        const int code = static_cast<int>(fault.value);
        Log(caller_pod, back_us, Severity::kError, "http-status",
            fmt::format("request to {} returned HTTP {}", target, code));
        return Fail(back_us, Failure::kTransport, code);
      }
      if ((Is(Effect::kReplaceBody) || Is(Effect::kPatchBody)) &&
          fault_rng.Bernoulli(fault.probability)) {
        Log(caller_pod, back_us, Severity::kError, "parse-error",
            fmt::format("failed to parse response from {}", target));
        return Fail(back_us, Failure::kTransport, 500);
      }
    }
    if (Is(Effect::kJvmReturn) && callee == fault.service && *pod == fault.pod &&
        edge.operation == fault.operation && Active(arrive_us) &&
        fault_rng.Bernoulli(fault.probability)) {
      Log(caller_pod, back_us, Severity::kError, "logic-error",
          fmt::format("unexpected {} value returned by {}", fault.spec.Text("value"),
                      target));
      return Fail(back_us, Failure::kTransport, 500);
    }
    return {back_us, Failure::kNone, 200};
  }

  RequestTelemetry Execute(const RequestArrival& arrival, uint64_t index) {
    out = {};
    next_span = 0;
    trace_id = fmt::format("{:06x}{:010x}", index,
                           DeriveSeed(seed, index) & 0xffffffffffULL);
    const auto& wf = topology.workflow(arrival.workflow);
    const int64_t start_ms = static_cast<int64_t>(std::floor(arrival.time_s * 1000));
    const int64_t start_us = start_ms * 1000;
    util_second = start_ms / 1000 - 1;
    const std::size_t entry = *graph.ServiceIndex(wf.entry_service);
    const auto& calls = RootCalls(wf, arrival.path_id);
    const auto pod = PickPod(entry, start_us);
    if (!pod) {
      // The ingress answers for an entry service without a live pod.
      out.spans.push_back({trace_id, NewSpanId(), "", wf.entry_service, "",
                           wf.root_operation, start_ms, 1000, SpanStatus::kError, 503});
      return std::move(out);
    }
    Serve(entry, wf.root_operation, *pod, start_us, kForever, "",
          wf.entry_latency_ms, calls, 512.0);
    return std::move(out);
  }

  std::vector<MetricPoint> Metrics(int64_t from_s, int64_t to_s) const {
    std::vector<MetricPoint> points;
    for (std::size_t p = 0; p < pods.size(); ++p) {
      const auto& info = pods[p];
      if (!Monitored(info.service)) continue;
      const std::string& service = graph.services()[info.service].name;
      Rng noise(DeriveSeed(DeriveSeed(seed, "metrics"), p));
      // Draw for every second so streams align regardless of liveness.
      for (int64_t s = 0; s < to_s; ++s) {
        const double n_cpu = noise.Normal();
        const double n_mem = noise.Normal();
        const double n_gc = noise.Normal();
        if (s < from_s) continue;
        const int64_t t_ms = s * 1000;
        if (!PodUp(p, t_ms)) continue;
        const SecondStats& st = stats[p * seconds + std::min(s, seconds - 1)];
        const double util = st.work_s / info.capacity;
        auto add = [&](const std::string& container, const char* metric, double value) {
          points.push_back({t_ms, service, info.id, container, metric, value});
        };
        if (!ContainerDown(p, t_ms)) {
          const double share = 1.0 / info.containers.size();
          for (const auto& c : info.containers) {
            add(c, "cpu_usage",
                share * std::max(0.0, util + StressLoad(p, t_ms, false) + 0.02 * n_cpu));
            add(c, "memory_usage",
                share * info.memory_capacity *
                    std::max(0.0, 0.35 + 0.05 * util + StressLoad(p, t_ms, true) +
                                      0.01 * n_mem));
            add(c, "gc_pause", share * (std::max(0.0, 2.0 + 0.5 * n_gc) + st.gc_ms));
            add(c, "restarts", Restarts(p, t_ms));
          }
        }
        double mean = 0.0;
        double p95 = 0.0;
        if (!st.latencies.empty()) {
          std::vector<double> lat(st.latencies.begin(), st.latencies.end());
          mean = Mean(lat);
          p95 = Percentile(std::move(lat), 0.95);
        }
        add("", "request_count", st.requests);
        add("", "error_count", st.errors);
        add("", "rpc_latency_mean", mean);
        add("", "rpc_latency_p95", p95);
        add("", "queue_depth", st.busy_ms / 1000.0);
        add("", "net_in", st.net_in);
        add("", "net_out", st.net_out);
        add("", "liveness", ContainerDown(p, t_ms) ? 0.0 : 1.0);
      }
    }
    std::stable_sort(points.begin(), points.end(),
                     [](const MetricPoint& a, const MetricPoint& b) {
                       return a.timestamp_ms < b.timestamp_ms;
                     });
    return points;
  }
};

Simulator::Simulator(const Topology& topology, const CaseProtocol& protocol,
                     const std::optional<FaultSpec>& fault, uint64_t seed)
    : impl_(std::make_unique<Impl>(topology, protocol, fault, seed)) {}

Simulator::~Simulator() = default;

RequestTelemetry Simulator::ExecuteRequest(const RequestArrival& arrival,
                                           uint64_t index) {
  return impl_->Execute(arrival, index);
}

std::vector<MetricPoint> Simulator::EmitMetrics(int64_t from_s, int64_t to_s) const {
  return impl_->Metrics(from_s, to_s);
}

CaseOutput RunCase(const Topology& topology, const WorkloadProfile& profile,
                   const CaseProtocol& protocol,
                   const std::optional<FaultSpec>& fault, uint64_t seed,
                   const std::string& case_id) {
  protocol.Validate();
  const CaseWindows w = protocol.Windows();
  std::optional<FaultSpec> spec = fault;
  if (spec) {
    spec->window_start_s = w.fault_start_ms / 1000.0;
    spec->window_end_s = w.fault_end_ms / 1000.0;
  }

  WorkloadProfile run_profile = profile;
  run_profile.duration_s = protocol.TotalSeconds();
  run_profile.seed = DeriveSeed(seed, "workload");
  const auto arrivals = GenerateArrivals(run_profile, topology);

  Simulator sim(topology, protocol, spec, seed);
  CaseOutput result;
  auto& bundle = result.bundle;
  bundle.windows = w;
  uint64_t landed = 0;
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    auto request = sim.ExecuteRequest(arrivals[i], i);
    const int64_t root_ms = static_cast<int64_t>(std::floor(arrivals[i].time_s * 1000));
    if (root_ms < w.normal_start_ms) continue;
    if (root_ms >= w.fault_end_ms) break;
    ++landed;
    for (auto& span : request.spans) {
      if (span.start_ms < w.fault_end_ms) bundle.spans.push_back(std::move(span));
    }
    for (auto& log : request.logs) {
      if (log.timestamp_ms < w.fault_end_ms) bundle.logs.push_back(std::move(log));
    }
  }
  const int64_t first_s = (w.normal_start_ms + 999) / 1000;
  const int64_t last_s = (w.fault_end_ms + 999) / 1000;
  bundle.metrics = sim.EmitMetrics(first_s, last_s);

  if (spec && spec->type == "TimeSkew") {
    const std::string& pod = spec->target;
    const int64_t offset = std::llround(spec->Number("offset_s") * 1000);
    auto in_fault = [&](int64_t t) { return t >= w.fault_start_ms && t < w.fault_end_ms; };
    for (auto& s : bundle.spans) {
      if (s.pod == pod && in_fault(s.start_ms)) s.start_ms += offset;
    }
    for (auto& l : bundle.logs) {
      if (l.pod == pod && in_fault(l.timestamp_ms)) l.timestamp_ms += offset;
    }
    for (auto& m : bundle.metrics) {
      if (m.pod == pod && in_fault(m.timestamp_ms)) m.timestamp_ms += offset;
    }
  }
  if (!protocol.emit_metrics) bundle.metrics.clear();
  if (!protocol.emit_logs) bundle.logs.clear();
  if (!protocol.emit_traces) bundle.spans.clear();

  result.meta.case_id = case_id;
  result.meta.fault = spec;
  result.meta.windows = w;
  result.meta.seed = seed;
  result.meta.arrivals = landed;
  return result;
}

}  // namespace rcabench
