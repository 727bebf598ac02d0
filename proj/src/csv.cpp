#include "rses/csv.hpp"

#include <limits>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

namespace rses::csv {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path,
                                                std::string& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  if (!std::getline(in, header)) throw IoError("'" + path.string() + "' is empty");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split(line));
  }
  return rows;
}

std::int64_t parse_int(const std::string& text) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw IoError("malformed integer field '" + text + "'");
  }
  return value;
}

void expect_columns(const std::vector<std::string>& row, std::size_t count,
                    const std::filesystem::path& path) {
  if (row.size() != count) {
    throw IoError("'" + path.string() + "': expected " + std::to_string(count) + " columns, got " +
                  std::to_string(row.size()));
  }
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, ptr);
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw IoError("malformed numeric field '" + text + "'");
  }
  return value;
}

void write_traces(const std::filesystem::path& path, std::span<const harness::TrialSet> sets) {
  std::ofstream out = open_for_write(path);
  out << kTraceHeader << '\n';
  for (const harness::TrialSet& set : sets) {
    for (std::size_t t = 0; t < set.traces.size(); ++t) {
      for (const EvaluationRecord& rec : set.traces[t].evaluations) {
        out << set.problem << ',' << set.solver << ',' << t << ',' << rec.eval_index << ','
            << format_double(rec.residual_norm) << ',' << format_double(rec.best_residual_norm) << ','
            << (rec.best_param_error ? format_double(*rec.best_param_error) : "") << ','
            << format_double(rec.wall_time_s) << '\n';
      }
    }
  }
  finish(out, path);
}

void write_aggregates(const std::filesystem::path& path,
                      std::span<const harness::TrialAggregate> aggregates) {
  std::ofstream out = open_for_write(path);
  out << kAggregateHeader << '\n';
  for (const harness::TrialAggregate& agg : aggregates) {
    for (std::int64_t i = 0; i < agg.length(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      out << agg.problem << ',' << agg.solver << ',' << agg.trials << ',' << (i + 1) << ','
          << format_double(agg.mean_residual[k]) << ',' << format_double(agg.mean_best_residual[k])
          << ',' << (agg.has_param_error ? format_double(agg.mean_param_error[k]) : "") << ','
          << format_double(agg.mean_wall_time[k]) << ',' << format_double(agg.mean_dist[k]) << ','
          << format_double(agg.rms_dist[k]) << '\n';
    }
  }
  finish(out, path);
}

void write_report(const std::filesystem::path& path, std::span<const harness::ReportRow> rows) {
  std::ofstream out = open_for_write(path);
  out << kReportHeader << '\n';
  for (const harness::ReportRow& row : rows) {
    out << row.problem << ',' << row.solver << ',' << row.label << ',' << to_string(row.counter)
        << ',' << row.eval_index << ',' << format_double(row.residual_norm) << ','
        << (row.param_error ? format_double(*row.param_error) : "") << ','
        << format_double(row.distance) << ',' << format_double(row.wall_time_s) << ','
        << (row.capped ? 1 : 0) << ',' << row.trials << '\n';
  }
  finish(out, path);
}

void write_ablation(const std::filesystem::path& path, std::span<const harness::AblationRow> rows) {
  std::ofstream out = open_for_write(path);
  out << kAblationHeader << '\n';
  for (const harness::AblationRow& row : rows) {
    out << to_string(row.param) << ',' << format_double(row.value) << ',' << row.trials << ','
        << format_double(row.mean_terminal_residual) << ','
        << format_double(row.rms_terminal_residual) << ','
        << format_double(row.min_terminal_residual) << ','
        << format_double(row.max_terminal_residual) << ',' << (row.is_min ? 1 : 0) << '\n';
  }
  finish(out, path);
}

std::vector<harness::TrialAggregate> read_aggregates(const std::filesystem::path& path) {
  std::string header;
  const auto rows = read_rows(path, header);
  if (header != kAggregateHeader) throw IoError("'" + path.string() + "' is not an aggregate file");
  std::vector<harness::TrialAggregate> out;
  for (const auto& row : rows) {
    expect_columns(row, 10, path);
    if (out.empty() || out.back().problem != row[0] || out.back().solver != row[1] ||
        parse_int(row[3]) == 1) {
      harness::TrialAggregate agg;
      agg.problem = row[0];
      agg.solver = row[1];
      agg.trials = static_cast<int>(parse_int(row[2]));
      agg.has_param_error = !row[6].empty();
      out.push_back(std::move(agg));
    }
    harness::TrialAggregate& agg = out.back();
    if (parse_int(row[3]) != agg.length() + 1) {
      throw IoError("'" + path.string() + "': evaluation indices are not consecutive");
    }
    agg.mean_residual.push_back(parse_double(row[4]));
    agg.mean_best_residual.push_back(parse_double(row[5]));
    if (agg.has_param_error) agg.mean_param_error.push_back(parse_double(row[6]));
    agg.mean_wall_time.push_back(parse_double(row[7]));
    agg.mean_dist.push_back(parse_double(row[8]));
    agg.rms_dist.push_back(parse_double(row[9]));
  }
  return out;
}

std::vector<harness::TrialAggregate> read_traces_as_aggregates(const std::filesystem::path& path) {
  std::string header;
  const auto rows = read_rows(path, header);
  if (header != kTraceHeader) throw IoError("'" + path.string() + "' is not a trace file");
  // Preserve first-appearance order of (problem, solver) pairs.
  std::vector<harness::TrialSet> sets;
  std::map<std::pair<std::string, std::string>, std::size_t> slot;
  for (const auto& row : rows) {
    expect_columns(row, 8, path);
    const auto key = std::make_pair(row[0], row[1]);
    auto [it, inserted] = slot.try_emplace(key, sets.size());
    if (inserted) {
      harness::TrialSet set;
      set.problem = row[0];
      set.solver = row[1];
      set.counter = row[1] == "adam" ? EvaluationCounter::gradient : EvaluationCounter::residual;
      set.has_true_solution = !row[6].empty();
      sets.push_back(std::move(set));
    }
    harness::TrialSet& set = sets[it->second];
    const auto trial = static_cast<std::size_t>(parse_int(row[2]));
    if (set.traces.size() <= trial) set.traces.resize(trial + 1);
    EvaluationRecord rec;
    rec.eval_index = parse_int(row[3]);
    rec.residual_norm = parse_double(row[4]);
    rec.best_residual_norm = parse_double(row[5]);
    if (!row[6].empty()) rec.best_param_error = parse_double(row[6]);
    rec.wall_time_s = parse_double(row[7]);
    set.traces[trial].evaluations.push_back(rec);
  }
  std::vector<harness::TrialAggregate> out;
  for (const harness::TrialSet& set : sets) out.push_back(harness::aggregate_trials(set));
  return out;
}

std::vector<harness::TrialAggregate> read_any(const std::filesystem::path& path) {
  std::string header;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::getline(in, header);
    if (!header.empty() && header.back() == '\r') header.pop_back();
  }
  if (header == kAggregateHeader) return read_aggregates(path);
  if (header == kTraceHeader) return read_traces_as_aggregates(path);
  throw IoError("'" + path.string() + "' has an unrecognised header");
}

}  // namespace rses::csv
