#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "hypersmc/sprt.hpp"

namespace hypersmc {

enum class OutputFormat { Csv, Jsonl };

/// One run as printed by the command-line tool. The column set is the same for every subcommand.
struct RunRecord {
  std::string command;
  std::string model;
  std::string formula;
  double alpha = 0.0;
  double beta = 0.0;
  double margin = 0.0;
  std::optional<std::size_t> horizon;
  std::int64_t batch = 1;
  std::int64_t max_samples = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  Outcome verdict = Outcome::Undecided;
  std::int64_t samples = 0;
  /// Omitted from the output when unset, so seeded runs print identical bytes.
  std::optional<double> seconds;
};

void write_header(std::ostream& out, OutputFormat format);
void write_record(std::ostream& out, OutputFormat format, const RunRecord& r);

/// Quotes a CSV field when it contains a separator, quote or newline.
std::string csv_field(const std::string& s);

}  // namespace hypersmc
