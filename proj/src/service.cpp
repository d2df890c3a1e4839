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
#include "layercomp/service.hpp"

#include <fstream>
#include <random>
#include <thread>

#include <httplib.h>

#include "layercomp/error.hpp"
#include "layercomp/image_io.hpp"
#include "layercomp/rle.hpp"
#include "layercomp/rng.hpp"

namespace layercomp {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- session store ------------------------------------------------------------------

struct SessionStore::Entry {
  Entry(std::string id, CompositionSession s) : id(std::move(id)), session(std::move(s)) {}

  std::string id;
  std::mutex write;
  CompositionSession session;
  std::int64_t version = 0;
  mutable std::mutex read;
  std::shared_ptr<const SessionSnapshot> published;

  std::shared_ptr<const SessionSnapshot> current() const {
    std::lock_guard lock(read);
    return published;
  }
  std::shared_ptr<const SessionSnapshot> publish() {
    auto snap = std::make_shared<SessionSnapshot>();
    snap->version = version;
    snap->canvases = session.canvases();
    snap->state = session.to_json();
    snap->state["canvas_version"] = version;
    std::lock_guard lock(read);
    published = snap;
    return snap;
  }
};

SessionStore::SessionStore(std::shared_ptr<GeneratorSet> generators, std::optional<fs::path> dir)
    : generators_(std::move(generators)), dir_(std::move(dir)) {
  require(generators_ != nullptr, ErrorCode::kInvalidInput, "generators are required");
  if (dir_) fs::create_directories(*dir_);
}

SessionStore::~SessionStore() = default;

int SessionStore::restore() {
  if (!dir_) return 0;
  int restored = 0;
  for (const auto& file : fs::directory_iterator(*dir_)) {
    if (file.path().extension() != ".json") continue;
    std::ifstream in(file.path());
    const auto doc = json::parse(in, nullptr, false);
    require(!doc.is_discarded(), ErrorCode::kParse, "unreadable session file " + file.path().string());
    auto session = CompositionSession::from_json(doc, generators_);
    auto entry = std::make_shared<Entry>(session.id(), std::move(session));
    entry->version = doc.value("canvas_version", std::int64_t{0});
    entry->publish();
    std::lock_guard lock(mutex_);
    sessions_[entry->id] = entry;
    ++restored;
  }
  return restored;
}

std::string SessionStore::create(BackgroundSource background, ComposeMode mode) {
  static std::mutex id_mutex;
  static std::mt19937_64 id_rng{std::random_device{}()};
  std::string id;
  {
    std::lock_guard lock(id_mutex);
    id = hex64(id_rng());
  }
  std::shared_ptr<Entry> entry;
  {
    std::lock_guard gen(inference_mutex_);
    entry = std::make_shared<Entry>(id, CompositionSession(generators_, std::move(background), mode, id));
  }
  const auto snap = entry->publish();
  persist(*entry, *snap);
  std::lock_guard lock(mutex_);
  sessions_[id] = entry;
  return id;
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  require(it != sessions_.end(), ErrorCode::kNotFound, "no session '" + id + "'");
  return it->second;
}

std::shared_ptr<const SessionSnapshot> SessionStore::mutate(
    const std::string& id, const std::function<void(CompositionSession&)>& fn) {
  const auto entry = find(id);
  std::lock_guard lock(entry->write);
  CompositionSession work = entry->session;
  {
    std::lock_guard gen(inference_mutex_);
    fn(work);
  }
  entry->session = std::move(work);
  ++entry->version;
  const auto snap = entry->publish();
  persist(*entry, *snap);
  return snap;
}

std::shared_ptr<const SessionSnapshot> SessionStore::snapshot(const std::string& id) const {
  return find(id)->current();
}

void SessionStore::remove(const std::string& id) {
  std::shared_ptr<Entry> entry;
  {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    require(it != sessions_.end(), ErrorCode::kNotFound, "no session '" + id + "'");
    entry = it->second;
    sessions_.erase(it);
  }
  std::lock_guard lock(entry->write);
  if (dir_) fs::remove(*dir_ / (id + ".json"));
}

std::vector<std::string> SessionStore::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

void SessionStore::persist(const Entry& entry, const SessionSnapshot& snap) const {
  if (!dir_) return;
  const auto path = *dir_ / (entry.id + ".json");
  const auto tmp = *dir_ / (entry.id + ".json.tmp");
  write_file(tmp, snap.state.dump());
  fs::rename(tmp, path);
}

// ---- HTTP layer -------------------------------------------------------------------------

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput:
    case ErrorCode::kParse:
    case ErrorCode::kConfig:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kConflict:
    case ErrorCode::kVersion:
      return 409;
    case ErrorCode::kEmptyMask:
    case ErrorCode::kEmptyLayout:
    case ErrorCode::kOutOfFrame:
      return 422;
    default:
      return 500;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

json parse_body(const httplib::Request& req) {
  auto doc = json::parse(req.body, nullptr, false);
  require(!doc.is_discarded() && doc.is_object(), ErrorCode::kInvalidInput, "body must be a JSON object");
  return doc;
}

template <typename T>
T field(const json& doc, const char* key) {
  require(doc.contains(key), ErrorCode::kInvalidInput, std::string("missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kInvalidInput, std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& doc, const char* key, T fallback) {
  return doc.contains(key) ? field<T>(doc, key) : fallback;
}

std::string canvas_url(const std::string& id) { return "/sessions/" + id + "/canvas"; }

json mutation_reply(const std::string& id, const SessionSnapshot& snap) {
  return {{"session_id", id}, {"canvas_version", snap.version}, {"canvas_url", canvas_url(id)},
          {"n_steps", static_cast<int>(snap.canvases.size()) - 1}};
}

int object_id_param(const std::string& text) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::kNotFound, "no object '" + text + "'");
}

BBox parse_bbox(const json& doc) {
  require(doc.is_object(), ErrorCode::kInvalidInput, "bbox must be an object");
  return BBox{field<int>(doc, "row_min"), field<int>(doc, "row_max"), field<int>(doc, "col_min"),
              field<int>(doc, "col_max")};
}

}  // namespace

struct CompositionServer::Impl {
  Impl(std::shared_ptr<GeneratorSet> g, ServiceOptions o)
      : options(std::move(o)), store(std::move(g), options.session_dir) {}

  ServiceOptions options;
  SessionStore store;
  httplib::Server server;
  std::thread thread;

  std::uint64_t default_seed(const std::string& id, std::int64_t version) const {
    return derive_seed(fnv1a64(id), static_cast<std::uint64_t>(version + 1));
  }

  void routes();
};

void CompositionServer::Impl::routes() {
  auto guarded = [](auto handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const Error& e) {
        send_error(res, status_for(e.code()), to_string(e.code()), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  };

  server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const auto doc = parse_body(req);
    const auto& config = store.generators().config;
    const int width = field<int>(doc, "width"), height = field<int>(doc, "height");
    require(width == config.image_size && height == config.image_size, ErrorCode::kInvalidInput,
            "canvas must be " + std::to_string(config.image_size) + "x" + std::to_string(config.image_size));
    const auto mode = parse_compose_mode(field<std::string>(doc, "mode"));
    const auto bg = field<json>(doc, "background");
    require(bg.is_object(), ErrorCode::kInvalidInput, "background must be an object");
    const auto kind = field<std::string>(bg, "kind");
    BackgroundSource source;
    if (kind == "generate") {
      source = BackgroundSource::generate(field_or<std::uint64_t>(bg, "seed", 0));
    } else if (kind == "upload") {
      std::vector<std::uint8_t> bytes;
      try {
        bytes = base64_decode(field<std::string>(bg, "image"));
      } catch (const Error& e) {
        fail(ErrorCode::kInvalidInput, e.what());
      }
      Canvas image;
      try {
        image = decode_image(bytes);
      } catch (const Error& e) {
        fail(ErrorCode::kInvalidInput, std::string("background image: ") + e.what());
      }
      source = BackgroundSource::upload(std::move(image));
    } else {
      fail(ErrorCode::kInvalidInput, "background kind must be 'generate' or 'upload'");
    }
    const auto id = store.create(std::move(source), mode);
    const auto snap = store.snapshot(id);
    send_json(res, 201, mutation_reply(id, *snap));
  }));

  server.Post(R"(/sessions/([^/]+)/objects)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto doc = parse_body(req);
    const int class_id = field<int>(doc, "class_id");
    const bool has_mask = doc.contains("mask_rle"), has_box = doc.contains("bbox");
    require(has_mask != has_box, ErrorCode::kInvalidInput, "give exactly one of mask_rle or bbox");
    std::optional<std::uint64_t> seed;
    if (doc.contains("seed")) seed = field<std::uint64_t>(doc, "seed");
    std::optional<InstanceMask> mask;
    std::optional<BBox> box;
    if (has_mask) {
      const auto& config = store.generators().config;
      require(class_id >= 0 && class_id < config.n_classes, ErrorCode::kInvalidInput, "class_id out of range");
      OccupancyMap plane;
      try {
        plane = rle_decode(field<std::string>(doc, "mask_rle"), config.image_size, config.image_size);
      } catch (const Error& e) {
        fail(ErrorCode::kInvalidInput, std::string("mask_rle: ") + e.what());
      }
      mask = InstanceMask(std::move(plane), class_id, config.n_classes);
    } else {
      box = parse_bbox(doc.at("bbox"));
    }
    int object_id = -1;
    std::string mask_rle;
    const auto snap = store.mutate(id, [&](CompositionSession& s) {
      const std::uint64_t used = seed.value_or(default_seed(id, store.snapshot(id)->version));
      if (mask) {
        s.add_object(*mask, used);
      } else {
        s.add_object_from_bbox(*box, class_id, used);
      }
      object_id = s.steps().back().object_id;
      mask_rle = rle_encode(s.steps().back().mask.plane());
    });
    auto reply = mutation_reply(id, *snap);
    reply["object_id"] = object_id;
    reply["mask_rle"] = mask_rle;
    send_json(res, 201, reply);
  }));

  server.Post(R"(/sessions/([^/]+)/objects/([^/]+)/resample)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const int oid = object_id_param(req.matches[2]);
    const auto doc = parse_body(req);
    const auto seed = field<std::uint64_t>(doc, "seed");
    const auto snap = store.mutate(id, [&](CompositionSession& s) { s.resample_object(oid, seed); });
    send_json(res, 200, mutation_reply(id, *snap));
  }));

  server.Post(R"(/sessions/([^/]+)/objects/([^/]+)/transform)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const int oid = object_id_param(req.matches[2]);
    const auto doc = parse_body(req);
    AffineTransform t;
    t.dx = field_or<double>(doc, "dx", 0.0);
    t.dy = field_or<double>(doc, "dy", 0.0);
    t.rotation_deg = field_or<double>(doc, "rot", 0.0);
    t.scale = field_or<double>(doc, "scale", 1.0);
    std::string mask_rle;
    const auto snap = store.mutate(id, [&](CompositionSession& s) {
      s.transform_object(oid, t);
      mask_rle = rle_encode(s.steps()[s.index_of(oid)].mask.plane());
    });
    auto reply = mutation_reply(id, *snap);
    reply["object_id"] = oid;
    reply["mask_rle"] = mask_rle;
    send_json(res, 200, reply);
  }));

  server.Put(R"(/sessions/([^/]+)/order)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto doc = parse_body(req);
    const auto order = field<std::vector<int>>(doc, "ids");
    const auto snap = store.mutate(id, [&](CompositionSession& s) { s.reorder(order); });
    send_json(res, 200, mutation_reply(id, *snap));
  }));

  server.Get(R"(/sessions/([^/]+)/canvas)", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto snap = store.snapshot(id);
    int step = static_cast<int>(snap->canvases.size()) - 1;
    if (req.has_param("step")) {
      const auto text = req.get_param_value("step");
      try {
        std::size_t used = 0;
        step = std::stoi(text, &used);
        require(used == text.size(), ErrorCode::kInvalidInput, "step must be an integer");
      } catch (const std::logic_error&) {
        fail(ErrorCode::kInvalidInput, "step must be an integer");
      }
    }
    require(step >= 0 && step < static_cast<int>(snap->canvases.size()), ErrorCode::kNotFound,
            "no canvas at step " + std::to_string(step));
    const auto png = encode_png(snap->canvases[static_cast<std::size_t>(step)]);
    res.status = 200;
    res.set_header("X-Canvas-Version", std::to_string(snap->version));
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }));

  server.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto snap = store.snapshot(id);
    auto body = snap->state;
    body["canvas_url"] = canvas_url(id);
    body["n_steps"] = static_cast<int>(snap->canvases.size()) - 1;
    send_json(res, 200, body);
  }));

  server.Delete(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    store.remove(id);
    send_json(res, 200, {{"session_id", id}, {"deleted", true}});
  }));

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const std::string code = res.status == 413 ? "payload_too_large" : "http_error";
    send_error(res, res.status, code, httplib::status_message(res.status));
  });
}

CompositionServer::CompositionServer(std::shared_ptr<GeneratorSet> generators, ServiceOptions options)
    : impl_(std::make_unique<Impl>(std::move(generators), std::move(options))) {
  auto& s = impl_->server;
  s.set_payload_max_length(impl_->options.max_body_bytes);
  s.set_read_timeout(impl_->options.timeout_seconds, 0);
  s.set_write_timeout(impl_->options.timeout_seconds, 0);
  const int threads = std::max(1, impl_->options.thread_count);
  s.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
  impl_->routes();
  impl_->store.restore();
}

CompositionServer::~CompositionServer() { stop(); }

SessionStore& CompositionServer::store() { return impl_->store; }

int CompositionServer::start(const std::string& host, int port) {
  auto& s = impl_->server;
  const int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  require(bound > 0, ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&s] { s.listen_after_bind(); });
  s.wait_until_ready();
  return bound;
}

bool CompositionServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void CompositionServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace layercomp
