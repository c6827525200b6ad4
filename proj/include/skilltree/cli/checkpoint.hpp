#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "skilltree/diffcore/tensor.hpp"

namespace skilltree::cli {

/// Binary container: magic "SKTR", u32 version, u32 section count, a section
/// table of (name, kind, rows, cols, offset, length) and the payloads in table
/// order. Arrays are little-endian float32; text sections hold raw bytes.
/// Everything is little-endian.
class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  enum class Kind : std::uint8_t { f32 = 0, text = 1 };

  struct Section {
    std::string name;
    Kind kind = Kind::f32;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::uint8_t> payload;
  };

  /// Adds or replaces a section. Insertion order is the file order.
  void put_tensor(const std::string& name, const diffcore::Tensor& t);
  void put_text(const std::string& name, const std::string& text);

  bool has(const std::string& name) const;
  /// Throws CheckpointError naming the section if it is absent or not an array.
  diffcore::Tensor tensor(const std::string& name) const;
  /// As tensor(), and also checks the shape.
  diffcore::Tensor tensor(const std::string& name, int rows, int cols) const;
  std::string text(const std::string& name) const;

  const std::vector<Section>& sections() const noexcept { return sections_; }

  std::vector<std::uint8_t> serialize() const;
  /// Strict parse: any inconsistency throws CheckpointError naming where it broke.
  static Checkpoint parse(std::span<const std::uint8_t> bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  const Section& find(const std::string& name) const;
  std::vector<Section> sections_;
};

}  // namespace skilltree::cli
