#include "cosmic/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cosmic {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'M', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw CheckpointError("truncated checkpoint");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  std::string out(kMagic, 4);
  put_u32(out, kVersion);
  const auto text = render_config(checkpoint.config);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  const auto& p = checkpoint.params;
  put_u32(out, static_cast<std::uint32_t>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) {
    put_u32(out, static_cast<std::uint32_t>(p.name(i).size()));
    out += p.name(i);
    put_u32(out, static_cast<std::uint32_t>(p[i].rows()));
    put_u32(out, static_cast<std::uint32_t>(p[i].cols()));
    for (Eigen::Index k = 0; k < p[i].size(); ++k) put_f32(out, p[i].data()[k]);
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.str(4) != std::string(kMagic, 4)) throw CheckpointError("not a model checkpoint (bad magic)");
  const auto version = r.u32();
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  try {
    c.config = parse_config(r.str(r.u32()));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.str(r.u32());
    const auto rows = r.u32();
    const auto cols = r.u32();
    ad::Matrix<float> m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = r.f32();
    c.params.add(name, std::move(m));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint");

  const auto shapes = model::parameter_shapes(c.config.model);
  if (shapes.size() != c.params.size()) throw CheckpointError("checkpoint tensor count does not match its config");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& [name, shape] = shapes[i];
    if (c.params.name(i) != name || c.params[i].rows() != shape.first || c.params[i].cols() != shape.second) {
      throw CheckpointError("checkpoint tensor '" + c.params.name(i) + "' does not match its config");
    }
  }
  if (!c.params.all_finite()) throw CheckpointError("checkpoint contains non-finite values");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path.string());
  const auto bytes = serialize_checkpoint(checkpoint);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace cosmic
