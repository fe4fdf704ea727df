#include "texdistill/manifest.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <openssl/evp.h>

namespace texdistill {

using nlohmann::json;

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot hash " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::array<char, 1 << 16> buf;
  while (is) {
    is.read(buf.data(), buf.size());
    if (is.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

Manifest::Manifest(std::filesystem::path dir, json config) : dir_(std::move(dir)) {
  data_ = json{{"schema_version", kManifestSchemaVersion},
               {"status", "running"},
               {"completed_stage", nullptr},
               {"config", std::move(config)},
               {"stages", json::object()},
               {"artifacts", json::array()}};
}

bool Manifest::exists(const std::filesystem::path& dir) { return std::filesystem::is_regular_file(dir / kManifestFile); }

Manifest Manifest::load(const std::filesystem::path& dir) {
  std::ifstream is(dir / kManifestFile);
  if (!is) throw std::runtime_error("cannot read " + (dir / kManifestFile).string());
  Manifest m(dir, json::object());
  m.data_ = json::parse(is);
  if (m.data_.value("schema_version", 0) != kManifestSchemaVersion)
    throw std::runtime_error("unsupported manifest schema in " + dir.string());
  return m;
}

bool Manifest::stage_complete(const std::string& stage) const {
  const json& stages = data_.at("stages");
  return stages.contains(stage) && stages.at(stage).value("status", "") == "complete";
}

bool Manifest::stage_artifacts_intact(const std::string& stage) const {
  for (const json& a : data_.at("artifacts")) {
    if (a.at("stage") != stage) continue;
    const auto p = dir_ / a.at("path").get<std::string>();
    if (!std::filesystem::is_regular_file(p) || sha256_file(p) != a.at("sha256").get<std::string>()) return false;
  }
  return true;
}

void Manifest::begin_stage(const std::string& stage) {
  data_["stages"][stage] = json{{"status", "running"}};
  data_["status"] = "running";
  save();
}

void Manifest::complete_stage(const std::string& stage) {
  data_["stages"][stage] = json{{"status", "complete"}};
  data_["completed_stage"] = stage;
  save();
}

void Manifest::fail(const std::string& stage, const std::string& error) {
  data_["stages"][stage] = json{{"status", "failed"}, {"error", error}};
  data_["status"] = "failed";
  data_["error"] = error;
  save();
}

void Manifest::finish() {
  data_["status"] = "complete";
  data_.erase("error");
  save();
}

void Manifest::add_artifact(const std::string& stage, const std::filesystem::path& file) {
  const std::string rel = std::filesystem::relative(file, dir_).generic_string();
  json entry{{"path", rel},
             {"stage", stage},
             {"bytes", std::filesystem::file_size(file)},
             {"sha256", sha256_file(file)}};
  json& arts = data_["artifacts"];
  for (json& a : arts) {
    if (a.at("path") == rel) {
      a = std::move(entry);
      save();
      return;
    }
  }
  arts.push_back(std::move(entry));
  save();
}

void Manifest::save() const {
  const auto target = dir_ / kManifestFile;
  const auto tmp = dir_ / (std::string(kManifestFile) + ".tmp");
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << data_.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, target);
}

DirectoryLock::DirectoryLock(const std::filesystem::path& dir) : path_(dir / kLockFile) {
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    throw std::runtime_error("output directory is locked by another run (" + path_.string() +
                             "); remove the file if no run is active");
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const ssize_t written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

}  // namespace texdistill
