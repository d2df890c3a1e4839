// Copyright 2026 The LayerComp Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "layercomp/canvas.hpp"
#include "layercomp/composer.hpp"
#include "layercomp/nets/inference.hpp"

namespace layercomp {

struct ServiceOptions {
  /// Write-through directory for session files; sessions found there are
  /// replayed on start.
  std::optional<std::filesystem::path> session_dir;
  std::size_t max_body_bytes = 8u << 20;
  int timeout_seconds = 30;
  int thread_count = 8;
};

/// Immutable view of a session at one canvas version.
struct SessionSnapshot {
  std::int64_t version = 0;
  std::vector<Canvas> canvases;
  nlohmann::json state;
};

/// In-memory session registry. Mutations of one session are serialized;
/// readers get the last published snapshot without blocking on writers.
class SessionStore {
 public:
  SessionStore(std::shared_ptr<GeneratorSet> generators, std::optional<std::filesystem::path> dir);
  ~SessionStore();

  /// Replays every session file in the write-through directory. Returns the
  /// number of sessions restored.
  int restore();

  std::string create(BackgroundSource background, ComposeMode mode);
  /// Runs `mutate` on a copy of the session under its lock and publishes the
  /// result with a new version. The session is unchanged when it throws.
  std::shared_ptr<const SessionSnapshot> mutate(
      const std::string& id, const std::function<void(CompositionSession&)>& mutate);
  std::shared_ptr<const SessionSnapshot> snapshot(const std::string& id) const;
  void remove(const std::string& id);
  std::vector<std::string> ids() const;
  const GeneratorSet& generators() const { return *generators_; }

 private:
  struct Entry;
  std::shared_ptr<Entry> find(const std::string& id) const;
  void persist(const Entry& entry, const SessionSnapshot& snap) const;

  std::shared_ptr<GeneratorSet> generators_;
  std::optional<std::filesystem::path> dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mutex inference_mutex_;
};

/// HTTP/JSON front end over a SessionStore.
class CompositionServer {
 public:
  CompositionServer(std::shared_ptr<GeneratorSet> generators, ServiceOptions options = {});
  ~CompositionServer();

  SessionStore& store();

  /// Binds to `port` (0 picks a free one) and serves on a background thread.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  bool listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace layercomp
