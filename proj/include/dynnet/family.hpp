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

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dynnet/arch_space.hpp"
#include "dynnet/search.hpp"

namespace dynnet {

inline constexpr double kDefaultSwitchCostMs = 73.0;
inline constexpr std::size_t kDefaultPayloadBytes = 2048;
inline constexpr double kDefaultPayloadLoadMs = 2.0;
inline constexpr int kManifestSchemaVersion = 1;

/// Per-level normalization statistics. Opaque here; only size and load
/// cost matter to the runtime.
struct CalibrationPayload {
  int level_id = 0;
  std::vector<std::uint8_t> blob;
  std::size_t nominal_size = kDefaultPayloadBytes;
  double load_cost_ms = kDefaultPayloadLoadMs;
};

struct PayloadRef {
  std::string path;    // relative to the manifest file
  std::string sha256;  // hex digest of the blob
  std::size_t size_bytes = 0;
  double load_cost_ms = kDefaultPayloadLoadMs;

  friend bool operator==(const PayloadRef&, const PayloadRef&) = default;
};

struct ManifestLevel {
  int level = 0;
  OfaArchitecture arch;
  double acc = 0.0;
  double lat = 0.0;
  PayloadRef payload;
};

struct DeviceSection {
  std::string device_id;
  double switch_cost_ms = kDefaultSwitchCostMs;
  std::vector<ManifestLevel> levels;  // level 1 is the fastest

  const ManifestLevel& level(int number) const;  // throws UnknownLevel
};

struct FamilyManifest {
  int schema_version = kManifestSchemaVersion;
  std::string backbone_id = "ofa-mbv3-elastic";
  std::map<std::string, DeviceSection> devices;

  const DeviceSection& device(const std::string& device_id) const;  // throws UnknownDevice
};

/// Holds payload blobs keyed by their manifest-relative path.
class PayloadStore {
 public:
  PayloadStore() = default;
  explicit PayloadStore(std::size_t nominal_size, double load_cost_ms = kDefaultPayloadLoadMs)
      : nominal_size_(nominal_size), load_cost_ms_(load_cost_ms) {}

  /// Creates the payload for one level; the blob is derived from the
  /// architecture so identical inputs give identical bytes.
  PayloadRef create(const std::string& device_id, int level, const OfaArchitecture& arch);

  void put(const std::string& path, CalibrationPayload payload);
  const CalibrationPayload* find(const std::string& path) const;
  std::size_t size() const { return payloads_.size(); }

  /// Writes every blob under `base_dir`.
  void write_all(const std::string& base_dir) const;

 private:
  std::size_t nominal_size_ = kDefaultPayloadBytes;
  double load_cost_ms_ = kDefaultPayloadLoadMs;
  std::map<std::string, CalibrationPayload> payloads_;
};

std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

/**
 * Packages per-device families into a manifest. Levels are renumbered
 * 1..N by ascending latency; measured values are used when present.
 * Throws InvalidFamily for an empty family or one whose latency and
 * accuracy are not both strictly increasing.
 */
FamilyManifest build_manifest(const std::vector<ParetoFamily>& families, PayloadStore& store,
                              const std::map<std::string, double>& switch_costs = {},
                              const std::string& backbone_id = "ofa-mbv3-elastic");

struct LevelConstraint {
  double max_lat = 0.0;
  std::optional<double> min_acc;
};

/// Highest level with lat <= max_lat (and acc >= min_acc when given).
/// Throws NoFeasibleLevel or UnknownDevice.
int lookup_level(const FamilyManifest& manifest, const std::string& device_id,
                 const LevelConstraint& constraint);
int lookup_level(const DeviceSection& section, const LevelConstraint& constraint);

struct SwitchPlan {
  double stall_ms = 0.0;
  std::size_t payload_bytes = 0;
};

SwitchPlan switch_payload(const FamilyManifest& manifest, const std::string& device_id,
                          int from_level, int to_level);
SwitchPlan switch_payload(const DeviceSection& section, int from_level, int to_level);

void to_json(nlohmann::json& j, const FamilyManifest& m);
void from_json(const nlohmann::json& j, FamilyManifest& m);

std::string manifest_to_string(const FamilyManifest& manifest);
FamilyManifest manifest_from_string(const std::string& text);

/// Writes the manifest JSON and, when `store` is given, the payload blobs
/// next to it.
void save_manifest(const std::string& path, const FamilyManifest& manifest,
                   const PayloadStore* store = nullptr);

/// Loads a manifest. With `verify_payloads`, every payload file must exist
/// next to the manifest and match its recorded size and hash.
FamilyManifest load_manifest(const std::string& path, bool verify_payloads = true);

}  // namespace dynnet
