#include "qe/weights.hpp"

#include <bit>
#include <cstdio>
#include <limits>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

namespace qe {
namespace {

static_assert(std::numeric_limits<float>::is_iec559, "IEEE-754 single precision required");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  float f32() { return std::bit_cast<float>(u32("tensor data")); }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("weight file truncated while reading ") + what);
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_weights(const WeightStore& store) {
  std::vector<std::uint8_t> out{'Q', 'E', 'W', '1'};
  put_u32(out, kWeightFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, t] : store) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

WeightStore parse_weights(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.str(4, "magic") != "QEW1") throw FormatError("not a weight file (bad magic)");
  const std::uint32_t version = r.u32("version");
  if (version != kWeightFormatVersion) throw FormatError("unsupported weight file version " + std::to_string(version));
  const std::uint32_t count = r.u32("tensor count");
  WeightStore store;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = r.str(r.u32("name length"), "tensor name");
    const std::uint32_t ndim = r.u32("rank");
    Shape shape;
    for (std::uint32_t d = 0; d < ndim; ++d) shape.push_back(r.u32("extent"));
    const std::size_t n = shape_numel(shape);
    if (n > r.remaining() / 4) throw FormatError("weight file truncated in tensor '" + name + "'");
    std::vector<float> values(n);
    for (float& v : values) v = r.f32();
    if (!store.emplace(name, Tensor<float>(std::move(shape), std::move(values))).second) {
      throw FormatError("duplicate tensor name '" + name + "' in weight file");
    }
  }
  if (!r.done()) throw FormatError("unexpected trailing bytes in weight file");
  return store;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::random_device rd;
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw DataError("failed writing '" + path.string() + "'");
    }
  }
  fs::rename(tmp, path);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void save_weights(const WeightStore& store, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_weights(store));
}

WeightStore load_weights(const std::filesystem::path& path) { return parse_weights(read_file_bytes(path)); }

std::string content_hash(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string content_hash(const std::string& text) {
  return content_hash(std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace qe
