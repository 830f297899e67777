#include "fw/weights_io.hpp"

#include <fstream>
#include <limits>
#include <vector>

#include "fw/binary_io.hpp"

namespace fw {

void write_weights(std::ostream& out, const ParamSet<float>& params) {
  out.write("FWWT", 4);
  io::put_le<std::uint32_t>(out, kWeightsVersion);
  io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, p] : params) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw InvalidInput("parameter name too long for FWWT: " + name);
    }
    io::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    io::put_le<std::uint8_t>(out, p.trainable ? 1 : 0);
    io::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(p.value.rank()));
    for (int d : p.value.shape().dims()) io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (float v : p.value.values()) io::put_f32(out, v);
  }
}

ParamSet<float> read_weights(std::istream& in) {
  io::expect_magic(in, "FWWT");
  const auto version = io::get_le<std::uint32_t>(in, "version");
  if (version != kWeightsVersion) {
    throw FormatError("unsupported FWWT version " + std::to_string(version));
  }
  const auto count = io::get_le<std::uint32_t>(in, "tensor count");
  ParamSet<float> params;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = io::get_le<std::uint16_t>(in, "name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw FormatError("truncated data while reading tensor name");
    const auto flag = io::get_le<std::uint8_t>(in, "trainable flag");
    if (flag > 1) throw FormatError("invalid trainable flag for " + name);
    const auto rank = io::get_le<std::uint8_t>(in, "rank");
    if (rank < 1 || rank > Shape::kMaxRank) throw FormatError("invalid rank for " + name);
    std::vector<int> dims(rank);
    for (auto& d : dims) {
      const auto v = io::get_le<std::uint32_t>(in, "dims");
      if (v == 0 || v > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
        throw FormatError("invalid extent for " + name);
      }
      d = static_cast<int>(v);
    }
    Shape shape{std::span<const int>(dims)};
    std::vector<float> values(shape.numel());
    for (auto& v : values) v = io::get_f32(in, name.c_str());
    try {
      params.add(std::move(name), Tensor<float>(shape, std::move(values)), flag == 1);
    } catch (const InvalidInput& e) {
      throw FormatError(e.what());
    }
  }
  return params;
}

void save_weights(const std::filesystem::path& path, const ParamSet<float>& params) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    write_weights(out, params);
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

ParamSet<float> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return read_weights(in);
}

void check_layout(const ParamSet<float>& got, const ParamSet<float>& expected) {
  auto g = got.begin();
  auto e = expected.begin();
  while (g != got.end() || e != expected.end()) {
    if (e == expected.end() || (g != got.end() && g->first < e->first)) {
      throw FormatError("unexpected tensor " + g->first);
    }
    if (g == got.end() || e->first < g->first) throw FormatError("missing tensor " + e->first);
    if (!(g->second.value.shape() == e->second.value.shape())) {
      throw FormatError("shape mismatch for tensor " + e->first + ": found " +
                        g->second.value.shape().str() + ", expected " +
                        e->second.value.shape().str());
    }
    if (g->second.trainable != e->second.trainable) {
      throw FormatError("trainable flag mismatch for tensor " + e->first);
    }
    ++g;
    ++e;
  }
}

}  // namespace fw
