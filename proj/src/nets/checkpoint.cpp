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
#include "layercomp/nets/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <map>
#include <set>

#include "layercomp/error.hpp"
#include "layercomp/image_io.hpp"
#include "layercomp/rng.hpp"

namespace layercomp {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'L', 'C', 'C', 'K', 'P', 'T', '0', '1'};
constexpr int kFormatVersion = 1;

void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t read_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

const torch::Tensor& ModelCheckpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  fail(ErrorCode::kCheckpoint, "checkpoint has no tensor '" + name + "'");
}

bool ModelCheckpoint::has(const std::string& name) const {
  for (const auto& entry : tensors)
    if (entry.first == name) return true;
  return false;
}

std::string ModelCheckpoint::fingerprint() const {
  const auto bytes = serialize_checkpoint(*this);
  return hex64(fnv1a64(bytes.data(), bytes.size()));
}

std::vector<std::uint8_t> serialize_checkpoint(const ModelCheckpoint& ckpt) {
  nlohmann::json entries = nlohmann::json::array();
  std::vector<std::uint8_t> blob;
  for (const auto& [name, t] : ckpt.tensors) {
    auto flat = t.detach().to(torch::kCPU, torch::kFloat32).contiguous();
    entries.push_back({{"name", name}, {"shape", flat.sizes().vec()}, {"offset", blob.size()}});
    const auto* p = reinterpret_cast<const std::uint8_t*>(flat.data_ptr<float>());
    blob.insert(blob.end(), p, p + flat.numel() * sizeof(float));
  }
  const nlohmann::json manifest = {{"format_version", kFormatVersion},
                                   {"kind", ckpt.kind},
                                   {"config", ckpt.config.to_json()},
                                   {"config_hash", ckpt.config.hash()},
                                   {"step", ckpt.step},
                                   {"tensors", entries},
                                   {"extra", ckpt.extra}};
  const std::string text = manifest.dump();
  std::vector<std::uint8_t> out(kMagic, kMagic + 8);
  append_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), blob.begin(), blob.end());
  return out;
}

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
  // Write-then-rename so readers never observe a partial archive.
  auto tmp = path;
  tmp += ".tmp";
  write_file(tmp, serialize_checkpoint(ckpt));
  std::filesystem::rename(tmp, path);
}

ModelCheckpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  require(bytes.size() >= 16 && std::memcmp(bytes.data(), kMagic, 8) == 0, ErrorCode::kVersion,
          "not a layercomp checkpoint (bad magic)");
  const std::uint64_t len = read_u64(bytes.data() + 8);
  require(16 + len <= bytes.size(), ErrorCode::kCheckpoint, "truncated checkpoint manifest");
  const auto manifest = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(len),
                                              nullptr, false);
  require(!manifest.is_discarded(), ErrorCode::kCheckpoint, "malformed checkpoint manifest");
  ModelCheckpoint ckpt;
  try {
    require(manifest.at("format_version").get<int>() == kFormatVersion, ErrorCode::kVersion,
            "unsupported checkpoint format version");
    const auto& cfg = manifest.at("config");
    const std::string stored_hash = manifest.at("config_hash").get<std::string>();
    const std::string actual_hash = hex64(fnv1a64(cfg.dump()));
    require(stored_hash == actual_hash, ErrorCode::kVersion,
            "config hash mismatch: manifest says " + stored_hash + ", config hashes to " + actual_hash);
    ckpt.config = NetConfig::from_json(cfg);
    require(ckpt.config.hash() == stored_hash, ErrorCode::kVersion,
            "config uses fields this build does not know");
    ckpt.kind = manifest.at("kind").get<std::string>();
    ckpt.step = manifest.at("step").get<std::int64_t>();
    ckpt.extra = manifest.value("extra", nlohmann::json::object());
    const std::uint8_t* blob = bytes.data() + 16 + len;
    const std::uint64_t blob_size = bytes.size() - 16 - len;
    std::uint64_t expected = 0;
    for (const auto& e : manifest.at("tensors")) {
      const auto shape = e.at("shape").get<std::vector<int64_t>>();
      const auto offset = e.at("offset").get<std::uint64_t>();
      int64_t numel = 1;
      for (auto d : shape) {
        require(d >= 0, ErrorCode::kCheckpoint, "negative tensor dimension");
        numel *= d;
      }
      const std::uint64_t nbytes = static_cast<std::uint64_t>(numel) * sizeof(float);
      require(offset == expected && offset + nbytes <= blob_size, ErrorCode::kCheckpoint,
              "tensor '" + e.at("name").get<std::string>() + "' does not match the data blob");
      auto t = torch::empty(shape, torch::kFloat32);
      std::memcpy(t.data_ptr<float>(), blob + offset, nbytes);
      ckpt.tensors.emplace_back(e.at("name").get<std::string>(), std::move(t));
      expected += nbytes;
    }
    require(expected == blob_size, ErrorCode::kCheckpoint,
            "data blob size disagrees with the manifest shape list");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kCheckpoint, std::string("checkpoint manifest: ") + e.what());
  }
  return ckpt;
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file(path));
}

NamedTensors module_state(const torch::nn::Module& module, const std::string& prefix) {
  NamedTensors out;
  for (const auto& p : module.named_parameters(true)) out.emplace_back(prefix + p.key(), p.value().detach().clone());
  for (const auto& b : module.named_buffers(true)) out.emplace_back(prefix + b.key(), b.value().detach().clone());
  return out;
}

void load_module_state(torch::nn::Module& module, const ModelCheckpoint& ckpt,
                       const std::string& prefix) {
  std::map<std::string, torch::Tensor> targets;
  for (const auto& p : module.named_parameters(true)) targets[prefix + p.key()] = p.value();
  for (const auto& b : module.named_buffers(true)) targets[prefix + b.key()] = b.value();
  std::set<std::string> seen;
  torch::NoGradGuard no_grad;
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.rfind(prefix, 0) != 0) continue;
    auto it = targets.find(name);
    require(it != targets.end(), ErrorCode::kCheckpoint, "unexpected tensor '" + name + "'");
    require(it->second.sizes() == t.sizes(), ErrorCode::kCheckpoint,
            "shape mismatch for '" + name + "'");
    it->second.copy_(t);
    seen.insert(name);
  }
  require(seen.size() == targets.size(), ErrorCode::kCheckpoint,
          "checkpoint is missing tensors for prefix '" + prefix + "'");
}

}  // namespace layercomp
