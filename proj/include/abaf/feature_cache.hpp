#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "abaf/features.hpp"

namespace abaf {

/// On-disk layout (all integers and doubles little-endian):
///
///   "ABFC" | u8 version | u64 config_hash | u32 id_len | id bytes
///   3 x image: u8 kind | u32 C | u32 H | u32 W | C*H*W f64
///   u32 hsf_len | hsf_len f64
///
/// One file per (subject, config hash): `<subject_id>.<hash:016x>.abfc`.
inline constexpr std::uint8_t kFeatureCacheVersion = 1;

std::filesystem::path feature_cache_path(const std::string& subject_id, std::uint64_t config_hash,
                                         const std::filesystem::path& cache_dir);

std::filesystem::path store_feature_bundle(const std::string& subject_id, const FeatureBundle& bundle,
                                           std::uint64_t config_hash,
                                           const std::filesystem::path& cache_dir);

/// std::nullopt when no entry exists for this subject under this config hash.
std::optional<FeatureBundle> load_feature_bundle(const std::string& subject_id, std::uint64_t config_hash,
                                                 const std::filesystem::path& cache_dir);

}  // namespace abaf
