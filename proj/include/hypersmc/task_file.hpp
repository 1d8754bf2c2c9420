#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace hypersmc {

/// Settings read from a `key = value` task file. Unset keys stay empty so flags can fill them.
struct TaskSettings {
  std::optional<std::string> model;
  /// Formula text; a value naming an existing file is replaced by that file's contents.
  std::optional<std::string> formula;
  std::optional<double> alpha, beta, margin;
  std::optional<std::size_t> horizon;
  std::optional<std::int64_t> batch, max_samples;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
};

/// Lines are `key = value`; `#` starts a comment. Relative paths resolve against `base_dir`.
TaskSettings parse_task_file(std::string_view text, const std::filesystem::path& base_dir = {});
TaskSettings load_task_file(const std::filesystem::path& file);

}  // namespace hypersmc
