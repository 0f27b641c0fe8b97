#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ianpe/numerics.hpp"

namespace ianpe {

struct LibsvmRecord {
  double label = 0.0;
  std::vector<std::pair<std::uint32_t, double>> features;  // 1-based indices
};

struct LibsvmData {
  SparseRowMatrix matrix;
  Vec labels;  // mapped to {-1, +1}
  bool remapped_zero_one = false;
};

// "label idx:val idx:val ..." lines; '#' starts a comment; indices 1-based
// and strictly increasing; 0/1 labels are remapped to -+1 with a flag.
// dim_override > 0 forces the column count.
LibsvmData parse_libsvm(std::istream& in, std::size_t dim_override = 0);
LibsvmData parse_libsvm_file(const std::string& path,
                             std::size_t dim_override = 0);

void write_libsvm(std::ostream& out, const SparseRowMatrix& m,
                  const Vec& labels);
void write_libsvm_file(const std::string& path, const SparseRowMatrix& m,
                       const Vec& labels);

// Per-iteration trace row. wall_nanos is measured time and therefore lives
// in the JSON header on disk, keeping the CSV body byte-stable under a seed.
struct TraceRecord {
  std::int64_t iter = 0;
  std::string mode;  // accel | gr | stop
  double f = 0.0;
  double grad_norm = 0.0;
  double lambda = 0.0;
  double delta = 0.0;
  double step_length = 0.0;
  int bisection_count = 0;
  int while_count = 0;
  std::uint64_t oracle_calls = 0;  // cumulative ANS solves
  double data_passes = 0.0;        // cumulative epochs
  std::uint64_t wall_nanos = 0;    // nondecreasing
  double sigma_k = 0.0;
  std::uint64_t sample_size = 0;
};

// shortest round-trippable decimal for a double
std::string format_double(double v);
double parse_double(const std::string& s);

// CSV with a fixed column header, preceded by '#'-prefixed JSON header lines
// carrying the resolved config, the seed and the per-row wall timings.
void write_trace(std::ostream& out, const std::vector<TraceRecord>& records,
                 const std::string& config_json);
void write_trace_file(const std::string& path,
                      const std::vector<TraceRecord>& records,
                      const std::string& config_json);

struct TraceFile {
  std::string header_json;
  std::vector<TraceRecord> records;
};
TraceFile read_trace(std::istream& in);
TraceFile read_trace_file(const std::string& path);

// the deterministic part of a trace file: column header line + rows
std::string trace_body(const std::vector<TraceRecord>& records);

}  // namespace ianpe
