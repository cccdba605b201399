#pragma once

// Binary checkpoint container.
//
//   "P2SQ"            4 bytes
//   version           u32
//   record count      u32
//   record*           name_len u32, name bytes, rank u32, dims u64[rank],
//                     dtype u8, payload (little-endian)
//   payload size      u64  (bytes before this field)
//   checksum          u64  (FNV-1a over the same bytes)
//
// Multi-byte values are little-endian.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "code2seq/tensor.hpp"

namespace code2seq {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class DType : std::uint8_t { kF64 = 0, kF32 = 1, kI64 = 2, kBytes = 3 };

struct Record {
  std::string name;
  DType dtype = DType::kF64;
  std::vector<std::uint64_t> dims;
  std::vector<std::uint8_t> payload;
};

class CheckpointArchive {
 public:
  void put_tensor(const std::string& name, const Tensor& t, DType storage = DType::kF64);
  void put_f64(const std::string& name, double v);
  void put_i64(const std::string& name, std::int64_t v);
  void put_string(const std::string& name, const std::string& s);
  void put_strings(const std::string& name, const std::vector<std::string>& items);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor get_tensor(const std::string& name) const;
  double get_f64(const std::string& name) const;
  std::int64_t get_i64(const std::string& name) const;
  std::string get_string(const std::string& name) const;
  std::vector<std::string> get_strings(const std::string& name) const;

  const std::vector<Record>& records() const { return records_; }

  std::vector<std::uint8_t> encode() const;
  static CheckpointArchive decode(const std::vector<std::uint8_t>& bytes);

  void save(const std::filesystem::path& file) const;
  static CheckpointArchive load(const std::filesystem::path& file);

 private:
  void put(Record r);
  const Record& get(const std::string& name, DType dtype) const;

  std::vector<Record> records_;
  std::map<std::string, std::size_t> index_;
};

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size);

}  // namespace code2seq
