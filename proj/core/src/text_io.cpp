#include "text_io.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mgmc/errors.hpp"

namespace mgmc::detail {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::string content;
  if (path.extension() == ".gz") {
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f) throw ParseError("cannot open " + path.string());
    char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof(buf))) > 0) content.append(buf, n);
    gzclose(f);
  } else {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    content = ss.str();
  }
  std::vector<std::string> lines;
  std::string line;
  std::istringstream ss(content);
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace mgmc::detail
