#pragma once

// Run manifest: config snapshot, code version, timestamps and SHA-256 digests
// of every input and output file. Timestamps live only here, so all other
// outputs stay byte-identical across reruns.

#include <cstdint>
#include <string>
#include <vector>

namespace motrims::io {

// Lowercase hex SHA-256 of a file's bytes; IoError naming the path if unreadable.
std::string sha256_file(const std::string& path);
std::string sha256_hex(const std::string& bytes);

struct FileDigest {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

FileDigest digest_file(const std::string& path);

struct RunManifest {
  std::string command;
  std::string config_text;  // dump_config of the effective configuration
  std::string code_version;
  std::string started_utc;
  std::string finished_utc;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
};

std::string utc_timestamp();
std::string manifest_json(const RunManifest& m);
void write_manifest(const std::string& path, const RunManifest& m);

}  // namespace motrims::io
