#include "nmflux/io.hpp"

#include <fstream>

#include "nmflux/error.hpp"

namespace nmflux {

nlohmann::ordered_json params_json(const ModelParams& p) {
  return {{"gamma", p.gamma},
          {"v", p.v},
          {"delta", p.delta},
          {"c0", {p.c0_init.real(), p.c0_init.imag()}},
          {"t_max", p.t_max}};
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace nmflux
