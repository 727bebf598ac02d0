#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rses/harness.hpp"

namespace rses::csv {

inline constexpr const char* kTraceHeader =
    "problem,solver,trial,eval_index,residual_norm,best_residual_norm,best_param_error,wall_time_s";
inline constexpr const char* kAggregateHeader =
    "problem,solver,trial,eval_index,residual_norm,best_residual_norm,best_param_error,wall_time_s,"
    "mean_dist,rms_dist";
inline constexpr const char* kReportHeader =
    "problem,solver,row,counter,eval_index,residual_norm,param_error,distance,wall_time_s,capped,"
    "trials";
inline constexpr const char* kAblationHeader =
    "param,value,trials,mean_terminal_residual,rms_terminal_residual,min_terminal_residual,"
    "max_terminal_residual,is_min";

/// File could not be opened, written or parsed. The message carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);
double parse_double(const std::string& text);

void write_traces(const std::filesystem::path& path, std::span<const harness::TrialSet> sets);
/// Aggregate rows: `trial` holds the trial count, the record columns hold means.
void write_aggregates(const std::filesystem::path& path,
                      std::span<const harness::TrialAggregate> aggregates);
void write_report(const std::filesystem::path& path, std::span<const harness::ReportRow> rows);
void write_ablation(const std::filesystem::path& path, std::span<const harness::AblationRow> rows);

std::vector<harness::TrialAggregate> read_aggregates(const std::filesystem::path& path);
/// Re-aggregates a trace file (one aggregate per problem/solver pair).
std::vector<harness::TrialAggregate> read_traces_as_aggregates(const std::filesystem::path& path);
/// Dispatches on the header.
std::vector<harness::TrialAggregate> read_any(const std::filesystem::path& path);

}  // namespace rses::csv
