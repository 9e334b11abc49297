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

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include <fmt/format.h>

#include "rcabench/rca.h"

namespace rcabench {

namespace {

std::string WindowArgs(const CaseWindows& w) {
  return fmt::format("{} {} {}", FormatMillisAsSeconds(w.normal_start_ms),
                     FormatMillisAsSeconds(w.fault_start_ms),
                     FormatMillisAsSeconds(w.fault_end_ms));
}

}  // namespace

PluginAlgorithm::PluginAlgorithm(PluginSpec spec) : spec_(std::move(spec)) {}

PluginAlgorithm::~PluginAlgorithm() { Stop(); }

void PluginAlgorithm::Start() {
  if (pid_ > 0) return;
  // A dead plugin must surface as an error, not kill the harness.
  signal(SIGPIPE, SIG_IGN);
  int in_pipe[2];
  int out_pipe[2];
  if (pipe(in_pipe) != 0) throw PluginError(fmt::format("pipe: {}", std::strerror(errno)));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw PluginError(fmt::format("pipe: {}", std::strerror(errno)));
  }
  const pid_t pid = fork();
  if (pid < 0) throw PluginError(fmt::format("fork: {}", std::strerror(errno)));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", spec_.command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  fcntl(in_pipe[1], F_SETFD, FD_CLOEXEC);
  fcntl(out_pipe[0], F_SETFD, FD_CLOEXEC);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  buffer_.clear();
}

void PluginAlgorithm::Stop() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    kill(pid_, SIGTERM);
    waitpid(pid_, nullptr, 0);
  }
  pid_ = -1;
  buffer_.clear();
}

void PluginAlgorithm::Send(const std::string& line) {
  const std::string data = line + "\n";
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = write(to_child_, data.data() + sent, data.size() - sent);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw PluginError(fmt::format("plugin '{}' closed its input", spec_.name));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string PluginAlgorithm::ReadLine() {
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(static_cast<int64_t>(spec_.timeout_s * 1000));
  while (true) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      throw PluginError(fmt::format("plugin '{}' timed out", spec_.name));
    }
    pollfd fd{from_child_, POLLIN, 0};
    const int ready = poll(&fd, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) continue;
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw PluginError(fmt::format("plugin '{}' exited", spec_.name));
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void PluginAlgorithm::Train(const std::vector<TrainingCase>& cases) {
  training_ = cases;
  try {
    Start();
    for (const auto& c : cases) {
      Send(fmt::format("train {} {}", c.case_dir, WindowArgs(c.windows)));
    }
    Send("fit");
    const std::string reply = ReadLine();
    if (reply != "ok") {
      throw PluginError(fmt::format("plugin '{}' answered '{}' to fit", spec_.name, reply));
    }
  } catch (const PluginError&) {
    Stop();
    throw;
  }
}

RankedCandidates PluginAlgorithm::Rank(const RcaInput& input) {
  std::vector<std::pair<std::string, double>> scores;
  try {
    if (pid_ <= 0 && spec_.trainable && !training_.empty()) {
      // Restarted after a crash: replay training.
      auto cases = training_;
      Train(cases);
    }
    Start();
    Send(fmt::format("rank {} {}", input.case_dir, WindowArgs(input.bundle->windows)));
    while (true) {
      const std::string line = ReadLine();
      if (line == "end") break;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw PluginError(fmt::format("plugin '{}' sent malformed line '{}'", spec_.name, line));
      }
      try {
        scores.emplace_back(line.substr(0, tab), std::stod(line.substr(tab + 1)));
      } catch (const std::exception&) {
        throw PluginError(fmt::format("plugin '{}' sent a bad score in '{}'", spec_.name, line));
      }
    }
  } catch (const PluginError&) {
    Stop();
    throw;
  }
  return MakeRanking(std::move(scores));
}

}  // namespace rcabench
