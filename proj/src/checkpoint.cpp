#include "code2seq/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "code2seq/error.hpp"

namespace code2seq {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'P', '2', 'S', 'Q'};

template <typename T>
void write_pod(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T read() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::vector<std::uint8_t> bytes(std::uint64_t n) {
    need(n);
    std::vector<std::uint8_t> out(data_ + pos_, data_ + pos_ + n);
    pos_ += static_cast<std::size_t>(n);
    return out;
  }

  std::size_t position() const { return pos_; }

 private:
  void need(std::uint64_t n) const {
    if (n > size_ - pos_) throw Error(ErrorCode::kCorruptFile, "checkpoint truncated at byte " + std::to_string(pos_));
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::size_t dtype_width(DType t) {
  switch (t) {
    case DType::kF64: return 8;
    case DType::kF32: return 4;
    case DType::kI64: return 8;
    case DType::kBytes: return 1;
  }
  throw Error(ErrorCode::kCorruptFile, "unknown dtype tag");
}

std::uint64_t element_count(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

}  // namespace

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void CheckpointArchive::put(Record r) {
  if (auto it = index_.find(r.name); it != index_.end()) {
    records_[it->second] = std::move(r);
    return;
  }
  index_.emplace(r.name, records_.size());
  records_.push_back(std::move(r));
}

void CheckpointArchive::put_tensor(const std::string& name, const Tensor& t, DType storage) {
  Record r{name, storage, {}, {}};
  for (auto d : t.shape()) r.dims.push_back(d);
  if (storage == DType::kF64) {
    r.payload.resize(t.size() * 8);
    std::memcpy(r.payload.data(), t.raw(), r.payload.size());
  } else if (storage == DType::kF32) {
    r.payload.reserve(t.size() * 4);
    for (double x : t.data()) write_pod(r.payload, static_cast<float>(x));
  } else {
    throw Error(ErrorCode::kInvalidArgument, "tensors are stored as f64 or f32");
  }
  put(std::move(r));
}

void CheckpointArchive::put_f64(const std::string& name, double v) {
  Record r{name, DType::kF64, {}, {}};
  write_pod(r.payload, v);
  put(std::move(r));
}

void CheckpointArchive::put_i64(const std::string& name, std::int64_t v) {
  Record r{name, DType::kI64, {}, {}};
  write_pod(r.payload, v);
  put(std::move(r));
}

void CheckpointArchive::put_string(const std::string& name, const std::string& s) {
  Record r{name, DType::kBytes, {s.size()}, {s.begin(), s.end()}};
  put(std::move(r));
}

void CheckpointArchive::put_strings(const std::string& name, const std::vector<std::string>& items) {
  // Newline-separated; items never contain newlines.
  std::string joined;
  for (const auto& s : items) {
    if (s.find('\n') != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "string list item contains a newline");
    }
    joined += s;
    joined.push_back('\n');
  }
  put_string(name, joined);
}

const Record& CheckpointArchive::get(const std::string& name, DType dtype) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::kCorruptFile, "checkpoint has no record '" + name + "'");
  const Record& r = records_[it->second];
  if (r.dtype != dtype && !(dtype == DType::kF64 && r.dtype == DType::kF32)) {
    throw Error(ErrorCode::kCorruptFile, "record '" + name + "' has an unexpected dtype");
  }
  return r;
}

Tensor CheckpointArchive::get_tensor(const std::string& name) const {
  const Record& r = get(name, DType::kF64);
  if (r.dims.empty()) throw Error(ErrorCode::kCorruptFile, "record '" + name + "' is a scalar, not a tensor");
  Shape shape(r.dims.begin(), r.dims.end());
  Tensor t(shape);
  if (r.dtype == DType::kF64) {
    std::memcpy(t.raw(), r.payload.data(), t.size() * 8);
  } else {
    ByteReader reader(r.payload.data(), r.payload.size());
    for (auto& x : t.data()) x = static_cast<double>(reader.read<float>());
  }
  return t;
}

double CheckpointArchive::get_f64(const std::string& name) const {
  const Record& r = get(name, DType::kF64);
  ByteReader reader(r.payload.data(), r.payload.size());
  return reader.read<double>();
}

std::int64_t CheckpointArchive::get_i64(const std::string& name) const {
  const Record& r = get(name, DType::kI64);
  ByteReader reader(r.payload.data(), r.payload.size());
  return reader.read<std::int64_t>();
}

std::string CheckpointArchive::get_string(const std::string& name) const {
  const Record& r = get(name, DType::kBytes);
  return std::string(r.payload.begin(), r.payload.end());
}

std::vector<std::string> CheckpointArchive::get_strings(const std::string& name) const {
  const std::string joined = get_string(name);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < joined.size()) {
    const auto nl = joined.find('\n', start);
    if (nl == std::string::npos) throw Error(ErrorCode::kCorruptFile, "string list '" + name + "' is not terminated");
    out.push_back(joined.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

std::vector<std::uint8_t> CheckpointArchive::encode() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  write_pod(out, kCheckpointVersion);
  write_pod(out, static_cast<std::uint32_t>(records_.size()));
  for (const auto& r : records_) {
    write_pod(out, static_cast<std::uint32_t>(r.name.size()));
    out.insert(out.end(), r.name.begin(), r.name.end());
    write_pod(out, static_cast<std::uint32_t>(r.dims.size()));
    for (auto d : r.dims) write_pod(out, d);
    write_pod(out, static_cast<std::uint8_t>(r.dtype));
    out.insert(out.end(), r.payload.begin(), r.payload.end());
  }
  const std::uint64_t size = out.size();
  const std::uint64_t sum = fnv1a64(out.data(), out.size());
  write_pod(out, size);
  write_pod(out, sum);
  return out;
}

CheckpointArchive CheckpointArchive::decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 + 4 + 4 + 16) throw Error(ErrorCode::kCorruptFile, "checkpoint too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(ErrorCode::kCorruptFile, "bad checkpoint magic");

  const std::size_t body = bytes.size() - 16;
  ByteReader trailer(bytes.data() + body, 16);
  const auto declared = trailer.read<std::uint64_t>();
  const auto sum = trailer.read<std::uint64_t>();
  if (declared != body) {
    throw Error(ErrorCode::kCorruptFile, "checkpoint size mismatch: header says " + std::to_string(declared) +
                                             " bytes, file has " + std::to_string(body));
  }
  if (fnv1a64(bytes.data(), body) != sum) throw Error(ErrorCode::kCorruptFile, "checkpoint checksum mismatch");

  ByteReader in(bytes.data(), body);
  in.bytes(4);
  const auto version = in.read<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kVersionMismatch, "checkpoint version " + std::to_string(version) + ", expected " +
                                                 std::to_string(kCheckpointVersion));
  }
  const auto count = in.read<std::uint32_t>();
  CheckpointArchive archive;
  for (std::uint32_t i = 0; i < count; ++i) {
    Record r;
    const auto name_len = in.read<std::uint32_t>();
    const auto name = in.bytes(name_len);
    r.name.assign(name.begin(), name.end());
    const auto rank = in.read<std::uint32_t>();
    for (std::uint32_t d = 0; d < rank; ++d) r.dims.push_back(in.read<std::uint64_t>());
    r.dtype = static_cast<DType>(in.read<std::uint8_t>());
    r.payload = in.bytes(element_count(r.dims) * dtype_width(r.dtype));
    archive.put(std::move(r));
  }
  if (in.position() != body) throw Error(ErrorCode::kCorruptFile, "trailing bytes after the last record");
  return archive;
}

void CheckpointArchive::save(const std::filesystem::path& file) const {
  const auto bytes = encode();
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + tmp + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, file, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot move checkpoint into place: " + ec.message());
}

CheckpointArchive CheckpointArchive::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open checkpoint '" + file.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

}  // namespace code2seq
