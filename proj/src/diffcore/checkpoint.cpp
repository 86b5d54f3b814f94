#include "cmdp/diffcore/checkpoint.hpp"

#include <bit>
#include <fstream>

#include "cmdp/error.hpp"

namespace cmdp {
namespace {

std::filesystem::path strip_extension(const std::filesystem::path& p) {
  const auto ext = p.extension();
  if (ext == ".bin" || ext == ".json") return p.parent_path() / p.stem();
  return p;
}

std::filesystem::path with_suffix(const std::filesystem::path& base, const char* suffix) {
  return std::filesystem::path(base.string() + suffix);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& base, const ParamVector& params,
                     const nlohmann::json& meta) {
  static_assert(std::endian::native == std::endian::little, "checkpoint format is little-endian");
  const auto bin_path = with_suffix(base, ".bin");
  std::ofstream bin(bin_path, std::ios::binary | std::ios::trunc);
  if (!bin) throw std::runtime_error("cannot write " + bin_path.string());
  bin.write(reinterpret_cast<const char*>(params.values().data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));

  nlohmann::json side;
  side["dtype"] = "float64";
  side["total"] = params.size();
  side["segments"] = nlohmann::json::array();
  for (const auto& s : params.segments()) {
    side["segments"].push_back({{"name", s.name}, {"shape", {s.rows, s.cols}}, {"offset", s.offset}});
  }
  side["meta"] = meta;
  const auto json_path = with_suffix(base, ".json");
  std::ofstream js(json_path, std::ios::trunc);
  if (!js) throw std::runtime_error("cannot write " + json_path.string());
  js << side.dump(2) << '\n';
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const auto base = strip_extension(path);
  const auto json_path = with_suffix(base, ".json");
  std::ifstream js(json_path);
  if (!js) throw std::runtime_error("cannot read " + json_path.string());
  const auto side = nlohmann::json::parse(js);

  LoadedCheckpoint out;
  for (const auto& seg : side.at("segments")) {
    const auto idx = out.params.add_segment(seg.at("name").get<std::string>(),
                                            seg.at("shape").at(0).get<Eigen::Index>(),
                                            seg.at("shape").at(1).get<Eigen::Index>());
    if (out.params.segments()[idx].offset != seg.at("offset").get<std::size_t>()) {
      throw ShapeError("checkpoint segments are not packed in order");
    }
  }
  if (out.params.size() != side.at("total").get<std::size_t>()) {
    throw ShapeError("checkpoint total size disagrees with segments");
  }

  const auto bin_path = with_suffix(base, ".bin");
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot read " + bin_path.string());
  bin.read(reinterpret_cast<char*>(out.params.values().data()),
           static_cast<std::streamsize>(out.params.size() * sizeof(double)));
  if (bin.gcount() != static_cast<std::streamsize>(out.params.size() * sizeof(double))) {
    throw ShapeError("checkpoint binary is shorter than its sidecar declares");
  }
  out.meta = side.value("meta", nlohmann::json::object());
  return out;
}

}  // namespace cmdp
