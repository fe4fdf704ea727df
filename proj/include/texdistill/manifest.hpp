#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

namespace texdistill {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr const char* kManifestFile = "MANIFEST.json";
inline constexpr const char* kLockFile = ".texdistill.lock";

// Lowercase hex SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

// MANIFEST.json of an output directory: the resolved run config, per-stage
// status, and every artifact with its size and hash (paths relative to the
// directory). Saved atomically after every change.
class Manifest {
 public:
  Manifest(std::filesystem::path dir, nlohmann::json config);
  static bool exists(const std::filesystem::path& dir);
  static Manifest load(const std::filesystem::path& dir);

  const nlohmann::json& config() const { return data_.at("config"); }
  bool stage_complete(const std::string& stage) const;
  // Hash still matches for every artifact recorded under `stage`.
  bool stage_artifacts_intact(const std::string& stage) const;

  void begin_stage(const std::string& stage);
  void complete_stage(const std::string& stage);
  void fail(const std::string& stage, const std::string& error);
  void finish();
  // Records (or re-hashes) an artifact produced by `stage`.
  void add_artifact(const std::string& stage, const std::filesystem::path& file);

  const nlohmann::json& data() const { return data_; }
  void save() const;

 private:
  std::filesystem::path dir_;
  nlohmann::json data_;
};

// Exclusive per-directory lock; released on destruction.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);  // throws std::runtime_error if held
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace texdistill
