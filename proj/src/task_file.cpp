#include "hypersmc/task_file.hpp"

#include <fstream>
#include <sstream>

#include "hypersmc/error.hpp"

namespace hypersmc {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T number(const std::string& value, std::size_t line, const std::string& key) {
  std::istringstream in(value);
  T out{};
  if constexpr (std::is_unsigned_v<T>) {
    if (!value.empty() && value[0] == '-') throw ParseError("'" + key + "' must be non-negative", line, 1);
  }
  in >> out;
  if (!in || !in.eof()) throw ParseError("bad value '" + value + "' for '" + key + "'", line, 1);
  return out;
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TaskSettings parse_task_file(std::string_view text, const std::filesystem::path& base_dir) {
  TaskSettings t;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string l = trim(std::string_view(raw).substr(0, hash));
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line, 1);
    const std::string key = trim(std::string_view(l).substr(0, eq));
    const std::string value = trim(std::string_view(l).substr(eq + 1));
    if (value.empty()) throw ParseError("empty value for '" + key + "'", line, eq + 2);
    auto resolve = [&](const std::string& v) {
      std::filesystem::path p(v);
      return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    if (key == "model") {
      t.model = resolve(value).string();
    } else if (key == "formula") {
      std::error_code ec;
      const auto p = resolve(value);
      t.formula = std::filesystem::is_regular_file(p, ec) ? trim(read_file(p)) : value;
    } else if (key == "alpha") {
      t.alpha = number<double>(value, line, key);
    } else if (key == "beta") {
      t.beta = number<double>(value, line, key);
    } else if (key == "margin") {
      t.margin = number<double>(value, line, key);
    } else if (key == "horizon") {
      t.horizon = number<std::size_t>(value, line, key);
    } else if (key == "batch") {
      t.batch = number<std::int64_t>(value, line, key);
    } else if (key == "max_samples") {
      t.max_samples = number<std::int64_t>(value, line, key);
    } else if (key == "seed") {
      t.seed = number<std::uint64_t>(value, line, key);
    } else if (key == "workers") {
      t.workers = number<unsigned>(value, line, key);
    } else {
      throw ParseError("unknown key '" + key + "'", line, 1);
    }
  }
  return t;
}

TaskSettings load_task_file(const std::filesystem::path& file) {
  return parse_task_file(read_file(file), file.parent_path());
}

}  // namespace hypersmc
