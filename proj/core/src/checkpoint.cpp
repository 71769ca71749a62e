#include "matn/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace matn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::uint8_t kMagic[4] = {0x4D, 0x41, 0x54, 0x4E};
constexpr const char* kFlagsTensor = "variant_flags";

class Writer {
 public:
  template <class T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  template <class T>
  T get() {
    T value;
    get_bytes(&value, sizeof(T));
    return value;
  }
  void get_bytes(void* out, std::size_t n) {
    if (n > size_ - pos_) throw CorruptionError("checkpoint truncated");
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large files.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& data) {
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  const auto& h = data.header;
  for (std::uint32_t v : {h.dim, h.heads, h.memories, h.depth, h.behaviors,
                          h.users, h.items, h.target_index,
                          static_cast<std::uint32_t>(h.model)}) {
    w.put<std::uint32_t>(v);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(data.tensors.size()));
  for (const auto& t : data.tensors) {
    if (t.name.size() > 0xFFFF) throw Error("tensor name too long: " + t.name);
    if (t.dims.size() > 0xFF) throw Error("tensor rank too large: " + t.name);
    std::uint64_t count = 1;
    for (auto dim : t.dims) count *= dim;
    if (count != t.values.size()) {
      throw DimensionError("tensor " + t.name + " payload/dims mismatch");
    }
    w.put<std::uint16_t>(static_cast<std::uint16_t>(t.name.size()));
    w.put_bytes(t.name.data(), t.name.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(t.dims.size()));
    for (auto dim : t.dims) w.put<std::uint64_t>(dim);
    w.put_bytes(t.values.data(), t.values.size() * sizeof(double));
  }
  auto& bytes = w.bytes();
  const auto crc = crc_of(bytes.data() + 4, bytes.size() - 4);
  w.put<std::uint32_t>(crc);
  return std::move(bytes);
}

CheckpointData decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw CorruptionError("checkpoint truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not a MATN checkpoint (bad magic)");
  }
  if (bytes.size() < 8) throw CorruptionError("checkpoint truncated");
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + 4, 4);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(version));
  }
  if (bytes.size() < 12) throw CorruptionError("checkpoint truncated");
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);

  Reader r(bytes.data() + 8, bytes.size() - 12);
  CheckpointData out;
  auto& h = out.header;
  h.dim = r.get<std::uint32_t>();
  h.heads = r.get<std::uint32_t>();
  h.memories = r.get<std::uint32_t>();
  h.depth = r.get<std::uint32_t>();
  h.behaviors = r.get<std::uint32_t>();
  h.users = r.get<std::uint32_t>();
  h.items = r.get<std::uint32_t>();
  h.target_index = r.get<std::uint32_t>();
  h.model = static_cast<ModelCode>(r.get<std::uint32_t>());
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    const auto name_len = r.get<std::uint16_t>();
    t.name.resize(name_len);
    r.get_bytes(t.name.data(), name_len);
    const auto rank = r.get<std::uint8_t>();
    std::uint64_t n = 1;
    for (std::uint8_t a = 0; a < rank; ++a) {
      t.dims.push_back(r.get<std::uint64_t>());
      n *= t.dims.back();
    }
    if (n > r.remaining() / sizeof(double)) {
      throw CorruptionError("checkpoint truncated inside tensor " + t.name);
    }
    t.values.resize(n);
    r.get_bytes(t.values.data(), n * sizeof(double));
    out.tensors.push_back(std::move(t));
  }
  if (r.remaining() != 0) {
    throw CorruptionError("checkpoint has trailing bytes or is truncated");
  }
  if (crc_of(bytes.data() + 4, bytes.size() - 8) != stored_crc) {
    throw CorruptionError("checkpoint CRC mismatch");
  }
  return out;
}

void write_checkpoint_file(const std::filesystem::path& path,
                           const CheckpointData& data) {
  const auto bytes = encode_checkpoint(data);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointData read_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  return read_checkpoint_file(path).header;
}

// ---------------------------------------------------------------------------
// MATN parameters

void save_checkpoint(const ModelParams& params, const TrainConfig& config,
                     std::size_t users, std::size_t target_index,
                     const std::filesystem::path& path) {
  CheckpointData data;
  const auto& s = params.shape;
  data.header = {static_cast<std::uint32_t>(s.dim),
                 static_cast<std::uint32_t>(s.heads),
                 static_cast<std::uint32_t>(s.memories),
                 static_cast<std::uint32_t>(s.depth),
                 static_cast<std::uint32_t>(s.behaviors),
                 static_cast<std::uint32_t>(users),
                 static_cast<std::uint32_t>(s.items),
                 static_cast<std::uint32_t>(target_index),
                 ModelCode::kMatnRelu};
  for (const auto& t : params.tensors()) {
    data.tensors.push_back(
        {t.name, t.dims, std::vector<double>(t.data.begin(), t.data.end())});
  }
  data.tensors.push_back(
      {kFlagsTensor,
       {5},
       {config.disable_transformer ? 1.0 : 0.0, config.disable_memory ? 1.0 : 0.0,
        config.mean_pool_gate ? 1.0 : 0.0,
        config.raw_attention_weights ? 1.0 : 0.0,
        config.mean_project ? 1.0 : 0.0}});
  write_checkpoint_file(path, data);
}

LoadedModel load_checkpoint(const std::filesystem::path& path) {
  auto data = read_checkpoint_file(path);
  const auto& h = data.header;
  if (h.model != ModelCode::kMatnRelu) {
    throw FormatError("checkpoint " + path.string() +
                      " does not hold a MATN model");
  }
  if (h.heads == 0 || h.dim % h.heads != 0) {
    throw CorruptionError("checkpoint has inconsistent head count");
  }
  LoadedModel out;
  out.config.dim = h.dim;
  out.config.heads = h.heads;
  out.config.memories = h.memories;
  out.config.depth = h.depth;
  out.config.activation = Activation::kRelu;
  out.users = h.users;
  out.target_index = h.target_index;

  const ModelShape shape{h.dim, h.heads, h.memories, h.depth, h.behaviors,
                         h.items};
  out.params = ModelParams::zeros(shape);
  auto views = out.params.tensors();
  std::size_t next = 0;
  bool have_flags = false;
  for (const auto& t : data.tensors) {
    if (t.name == kFlagsTensor) {
      if (t.values.size() != 5) throw CorruptionError("bad variant flags");
      out.config.disable_transformer = t.values[0] != 0.0;
      out.config.disable_memory = t.values[1] != 0.0;
      out.config.mean_pool_gate = t.values[2] != 0.0;
      out.config.raw_attention_weights = t.values[3] != 0.0;
      out.config.mean_project = t.values[4] != 0.0;
      have_flags = true;
      continue;
    }
    if (next >= views.size() || views[next].name != t.name ||
        views[next].dims != t.dims) {
      throw CorruptionError("unexpected tensor '" + t.name + "' in checkpoint");
    }
    std::copy(t.values.begin(), t.values.end(), views[next].data.begin());
    ++next;
  }
  if (next != views.size() || !have_flags) {
    throw CorruptionError("checkpoint is missing tensors");
  }
  return out;
}

}  // namespace matn
