// Copyright (c) 2026 The dynnet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dynnet/family.hpp"

#include <algorithm>
#include <filesystem>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "dynnet/errors.hpp"
#include "io_util.hpp"

namespace dynnet {

namespace fs = std::filesystem;

const ManifestLevel& DeviceSection::level(int number) const {
  if (number < 1 || number > static_cast<int>(levels.size())) {
    throw UnknownLevel("device '" + device_id + "' has no level " + std::to_string(number));
  }
  return levels[static_cast<std::size_t>(number - 1)];
}

const DeviceSection& FamilyManifest::device(const std::string& device_id) const {
  auto it = devices.find(device_id);
  if (it == devices.end()) throw UnknownDevice("manifest has no device '" + device_id + "'");
  return it->second;
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

PayloadRef PayloadStore::create(const std::string& device_id, int level,
                                const OfaArchitecture& arch) {
  CalibrationPayload payload;
  payload.level_id = level;
  payload.nominal_size = nominal_size_;
  payload.load_cost_ms = load_cost_ms_;
  Rng rng(ArchitectureHash{}(arch) ^ mix64(static_cast<std::uint64_t>(level)));
  payload.blob.resize(nominal_size_);
  for (auto& b : payload.blob) b = static_cast<std::uint8_t>(rng() >> 56);

  PayloadRef ref;
  ref.path = "payloads/" + device_id + "/level_" + std::to_string(level) + ".bin";
  ref.sha256 = sha256_hex(payload.blob);
  ref.size_bytes = payload.blob.size();
  ref.load_cost_ms = payload.load_cost_ms;
  put(ref.path, std::move(payload));
  return ref;
}

void PayloadStore::put(const std::string& path, CalibrationPayload payload) {
  if (payload.nominal_size == 0) throw InvalidInput("calibration payload size must be > 0");
  if (payload.load_cost_ms < 0.0) throw InvalidInput("calibration payload load cost must be >= 0");
  payloads_[path] = std::move(payload);
}

const CalibrationPayload* PayloadStore::find(const std::string& path) const {
  auto it = payloads_.find(path);
  return it == payloads_.end() ? nullptr : &it->second;
}

void PayloadStore::write_all(const std::string& base_dir) const {
  for (const auto& [rel, payload] : payloads_) {
    const fs::path target = fs::path(base_dir) / rel;
    fs::create_directories(target.parent_path());
    detail::write_file(target.string(),
                       std::string_view(reinterpret_cast<const char*>(payload.blob.data()),
                                        payload.blob.size()));
  }
}

FamilyManifest build_manifest(const std::vector<ParetoFamily>& families, PayloadStore& store,
                              const std::map<std::string, double>& switch_costs,
                              const std::string& backbone_id) {
  FamilyManifest manifest;
  manifest.backbone_id = backbone_id;
  for (const auto& family : families) {
    if (family.device_id.empty()) throw InvalidFamily("family without a device id");
    if (family.levels.empty()) {
      throw InvalidFamily("family for '" + family.device_id + "' has no levels");
    }
    if (manifest.devices.contains(family.device_id)) {
      throw InvalidFamily("duplicate family for '" + family.device_id + "'");
    }
    std::vector<Candidate> levels = family.levels;
    for (auto& c : levels) {
      if (c.measured) {
        c.lat = c.measured->latency_ms;
        c.acc = c.measured->accuracy;
      }
    }
    std::stable_sort(levels.begin(), levels.end(),
                     [](const Candidate& a, const Candidate& b) { return a.lat < b.lat; });
    for (std::size_t i = 1; i < levels.size(); ++i) {
      if (!(levels[i - 1].lat < levels[i].lat && levels[i - 1].acc < levels[i].acc)) {
        throw InvalidFamily("family for '" + family.device_id +
                            "': latency and accuracy must both increase strictly (level " +
                            std::to_string(i + 1) + ")");
      }
    }

    DeviceSection section;
    section.device_id = family.device_id;
    if (auto it = switch_costs.find(family.device_id); it != switch_costs.end()) {
      section.switch_cost_ms = it->second;
    }
    if (section.switch_cost_ms < 0.0) throw InvalidInput("switch cost must be >= 0");
    for (std::size_t i = 0; i < levels.size(); ++i) {
      ManifestLevel level;
      level.level = static_cast<int>(i + 1);
      level.arch = levels[i].arch;
      level.acc = levels[i].acc;
      level.lat = levels[i].lat;
      level.payload = store.create(family.device_id, level.level, level.arch);
      section.levels.push_back(std::move(level));
    }
    manifest.devices.emplace(family.device_id, std::move(section));
  }
  return manifest;
}

int lookup_level(const DeviceSection& section, const LevelConstraint& constraint) {
  for (auto it = section.levels.rbegin(); it != section.levels.rend(); ++it) {
    if (it->lat > constraint.max_lat) continue;
    if (constraint.min_acc && it->acc < *constraint.min_acc) break;
    return it->level;
  }
  throw NoFeasibleLevel("device '" + section.device_id + "': no level meets " +
                        detail::format_double(constraint.max_lat) + " ms" +
                        (constraint.min_acc
                             ? " at >= " + detail::format_double(*constraint.min_acc) + " %"
                             : std::string{}));
}

int lookup_level(const FamilyManifest& manifest, const std::string& device_id,
                 const LevelConstraint& constraint) {
  return lookup_level(manifest.device(device_id), constraint);
}

SwitchPlan switch_payload(const DeviceSection& section, int from_level, int to_level) {
  section.level(from_level);
  const ManifestLevel& target = section.level(to_level);
  if (from_level == to_level) return {};
  return {section.switch_cost_ms, target.payload.size_bytes};
}

SwitchPlan switch_payload(const FamilyManifest& manifest, const std::string& device_id,
                          int from_level, int to_level) {
  return switch_payload(manifest.device(device_id), from_level, to_level);
}

void to_json(nlohmann::json& j, const FamilyManifest& m) {
  nlohmann::json devices = nlohmann::json::object();
  for (const auto& [id, section] : m.devices) {
    auto levels = nlohmann::json::array();
    for (const auto& l : section.levels) {
      levels.push_back({{"level", l.level},
                        {"arch", l.arch},
                        {"acc", l.acc},
                        {"lat", l.lat},
                        {"payload",
                         {{"path", l.payload.path},
                          {"sha256", l.payload.sha256},
                          {"size_bytes", l.payload.size_bytes},
                          {"load_cost_ms", l.payload.load_cost_ms}}}});
    }
    devices[id] = {{"switch_cost_ms", section.switch_cost_ms}, {"levels", levels}};
  }
  j = nlohmann::json{{"schema_version", m.schema_version},
                     {"backbone_id", m.backbone_id},
                     {"devices", devices}};
}

void from_json(const nlohmann::json& j, FamilyManifest& m) {
  FamilyManifest out;
  try {
    out.schema_version = j.at("schema_version").get<int>();
    if (out.schema_version != kManifestSchemaVersion) {
      throw InvalidInput("manifest: unsupported schema_version " +
                         std::to_string(out.schema_version));
    }
    out.backbone_id = j.at("backbone_id").get<std::string>();
    for (const auto& [id, jd] : j.at("devices").items()) {
      DeviceSection section;
      section.device_id = id;
      section.switch_cost_ms = jd.value("switch_cost_ms", kDefaultSwitchCostMs);
      for (const auto& jl : jd.at("levels")) {
        ManifestLevel l;
        jl.at("level").get_to(l.level);
        jl.at("arch").get_to(l.arch);
        jl.at("acc").get_to(l.acc);
        jl.at("lat").get_to(l.lat);
        const auto& jp = jl.at("payload");
        jp.at("path").get_to(l.payload.path);
        jp.at("sha256").get_to(l.payload.sha256);
        jp.at("size_bytes").get_to(l.payload.size_bytes);
        l.payload.load_cost_ms = jp.value("load_cost_ms", kDefaultPayloadLoadMs);
        section.levels.push_back(std::move(l));
      }
      if (section.levels.empty()) throw InvalidFamily("manifest: device '" + id + "' has no levels");
      for (std::size_t i = 0; i < section.levels.size(); ++i) {
        const auto& l = section.levels[i];
        if (l.level != static_cast<int>(i + 1)) {
          throw InvalidFamily("manifest: device '" + id + "' levels must be numbered 1..N");
        }
        if (i > 0 && !(section.levels[i - 1].lat < l.lat && section.levels[i - 1].acc < l.acc)) {
          throw InvalidFamily("manifest: device '" + id +
                              "' latency and accuracy must increase strictly with level");
        }
      }
      out.devices.emplace(id, std::move(section));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("manifest JSON: ") + e.what());
  }
  m = std::move(out);
}

std::string manifest_to_string(const FamilyManifest& manifest) {
  return nlohmann::json(manifest).dump(2) + "\n";
}

FamilyManifest manifest_from_string(const std::string& text) {
  try {
    return nlohmann::json::parse(text).get<FamilyManifest>();
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("manifest JSON: ") + e.what());
  }
}

void save_manifest(const std::string& path, const FamilyManifest& manifest,
                   const PayloadStore* store) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  detail::write_file(path, manifest_to_string(manifest));
  if (store != nullptr) store->write_all(p.parent_path().string());
}

FamilyManifest load_manifest(const std::string& path, bool verify_payloads) {
  FamilyManifest manifest = manifest_from_string(detail::read_file(path));
  if (!verify_payloads) return manifest;
  const fs::path base = fs::path(path).parent_path();
  for (const auto& [id, section] : manifest.devices) {
    for (const auto& l : section.levels) {
      const fs::path blob_path = base / l.payload.path;
      std::string bytes;
      try {
        bytes = detail::read_file(blob_path.string());
      } catch (const InvalidInput&) {
        throw InvalidInput("manifest: payload '" + l.payload.path + "' of device '" + id +
                           "' level " + std::to_string(l.level) + " does not resolve");
      }
      std::vector<std::uint8_t> blob(bytes.begin(), bytes.end());
      if (blob.size() != l.payload.size_bytes || sha256_hex(blob) != l.payload.sha256) {
        throw InvalidInput("manifest: payload '" + l.payload.path + "' does not match its hash");
      }
    }
  }
  return manifest;
}

}  // namespace dynnet
