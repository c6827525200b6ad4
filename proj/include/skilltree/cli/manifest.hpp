#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace skilltree::cli {

/// SHA-1 of "blob <size>\0" + content, as git computes object ids.
std::string git_blob_hash(std::string_view content);
std::string git_blob_hash_file(const std::filesystem::path& path);

struct FileHash {
  std::string path;
  std::string hash;
};

/// Record of one command run: what it read, what it wrote, under which config.
struct Manifest {
  std::string command;
  std::string config_hash;  ///< git_blob_hash of the canonical config text
  std::uint64_t seed = 0;
  std::vector<FileHash> inputs;
  std::vector<FileHash> outputs;

  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);

  std::string to_json() const;
  static Manifest from_json(const std::string& text);
};

}  // namespace skilltree::cli
