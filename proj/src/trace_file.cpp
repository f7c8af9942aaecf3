#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "spread/error.hpp"
#include "spread/io.hpp"

namespace spread::io {

void write_trace(std::ostream& out, const SolveTrace<double>& trace) {
  for (const auto& rec : trace.records) {
    nlohmann::ordered_json line;
    line["k"] = rec.iteration;
    line["ell"] = rec.objective;
    line["grad_norm"] = rec.grad_norm;
    line["feas_residual"] = rec.feasibility_residual;
    line["Z"] = rec.z;
    out << line.dump() << '\n';
  }
}

void write_trace_file(const std::filesystem::path& path, const SolveTrace<double>& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string() + " for writing");
  write_trace(out, trace);
}

SolveTrace<double> read_trace(std::istream& in) {
  SolveTrace<double> trace;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto doc = nlohmann::json::parse(line);
      TraceRecord<double> rec;
      rec.iteration = doc.at("k").get<long>();
      rec.objective = doc.at("ell").get<double>();
      rec.grad_norm = doc.at("grad_norm").get<double>();
      rec.feasibility_residual = doc.at("feas_residual").get<double>();
      rec.z = doc.at("Z").get<double>();
      trace.records.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, "trace line " + std::to_string(line_no) + ": " + e.what(),
                  line_no);
    }
  }
  return trace;
}

SolveTrace<double> read_trace_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, "cannot open trace " + path.string());
  return read_trace(in);
}

}  // namespace spread::io
