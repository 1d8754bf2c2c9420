#include "hypersmc/records.hpp"

#include <json.hpp>

namespace hypersmc {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_header(std::ostream& out, OutputFormat format) {
  if (format == OutputFormat::Csv)
    out << "command,model,formula,alpha,beta,margin,horizon,batch,max_samples,seed,workers,verdict,samples,"
           "seconds\n";
}

void write_record(std::ostream& out, OutputFormat format, const RunRecord& r) {
  if (format == OutputFormat::Jsonl) {
    nlohmann::ordered_json j;
    j["command"] = r.command;
    j["model"] = r.model;
    j["formula"] = r.formula;
    j["alpha"] = r.alpha;
    j["beta"] = r.beta;
    j["margin"] = r.margin;
    j["horizon"] = r.horizon ? nlohmann::ordered_json(*r.horizon) : nlohmann::ordered_json(nullptr);
    j["batch"] = r.batch;
    j["max_samples"] = r.max_samples;
    j["seed"] = r.seed;
    j["workers"] = r.workers;
    j["verdict"] = to_string(r.verdict);
    j["samples"] = r.samples;
    j["seconds"] = r.seconds ? nlohmann::ordered_json(*r.seconds) : nlohmann::ordered_json(nullptr);
    out << j.dump() << '\n';
    return;
  }
  out << csv_field(r.command) << ',' << csv_field(r.model) << ',' << csv_field(r.formula) << ',' << r.alpha << ','
      << r.beta << ',' << r.margin << ',';
  if (r.horizon) out << *r.horizon;
  out << ',' << r.batch << ',' << r.max_samples << ',' << r.seed << ',' << r.workers << ',' << to_string(r.verdict)
      << ',' << r.samples << ',';
  if (r.seconds) out << *r.seconds;
  out << '\n';
}

}  // namespace hypersmc
