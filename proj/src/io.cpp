#include "ianpe/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ianpe {

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;  // from_chars rejects '+'
  auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw ParseError("bad floating-point literal: '" + s + "'");
  return v;
}

// ---------------------------------------------------------------------------
// LIBSVM

namespace {

[[noreturn]] void parse_fail(std::size_t line, std::size_t col,
                             const std::string& what) {
  throw ParseError("libsvm parse error at line " + std::to_string(line) +
                   ", column " + std::to_string(col) + ": " + what);
}

}  // namespace

LibsvmData parse_libsvm(std::istream& in, std::size_t dim_override) {
  std::vector<LibsvmRecord> recs;
  std::string line;
  std::size_t lineno = 0;
  std::uint32_t max_index = 0;
  bool saw_zero = false, saw_one = false, saw_pm = false;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::size_t pos = 0;
    auto skip_ws = [&] {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t'))
        ++pos;
    };
    skip_ws();
    if (pos == line.size()) continue;  // blank or comment-only line

    LibsvmRecord rec;
    {
      const std::size_t start = pos;
      while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
      std::size_t lead = start;
      if (lead < pos && line[lead] == '+') ++lead;  // from_chars rejects '+'
      double lab = 0.0;
      auto res = std::from_chars(line.data() + lead, line.data() + pos, lab);
      if (res.ec != std::errc() || res.ptr != line.data() + pos)
        parse_fail(lineno, start + 1, "cannot parse label");
      rec.label = lab;
    }

    std::uint32_t prev_index = 0;
    for (;;) {
      skip_ws();
      if (pos == line.size()) break;
      const std::size_t start = pos;
      std::uint32_t idx = 0;
      auto res = std::from_chars(line.data() + pos, line.data() + line.size(), idx);
      if (res.ec != std::errc() || res.ptr == line.data() + pos ||
          *res.ptr != ':')
        parse_fail(lineno, start + 1, "expected index:value");
      if (idx == 0) parse_fail(lineno, start + 1, "indices are 1-based");
      if (idx <= prev_index)
        parse_fail(lineno, start + 1, "indices must be strictly increasing");
      pos = static_cast<std::size_t>(res.ptr - line.data()) + 1;
      double val = 0.0;
      auto vres =
          std::from_chars(line.data() + pos, line.data() + line.size(), val);
      if (vres.ec != std::errc() || vres.ptr == line.data() + pos)
        parse_fail(lineno, pos + 1, "cannot parse feature value");
      if (!std::isfinite(val))
        parse_fail(lineno, pos + 1, "non-finite feature value");
      pos = static_cast<std::size_t>(vres.ptr - line.data());
      prev_index = idx;
      max_index = std::max(max_index, idx);
      rec.features.emplace_back(idx, val);
    }

    if (rec.label == 0.0)
      saw_zero = true;
    else if (rec.label == 1.0)
      saw_one = true;
    else if (rec.label == -1.0)
      saw_pm = true;
    else
      throw NonBinaryLabel("line " + std::to_string(lineno) + ": label " +
                           format_double(rec.label));
    recs.push_back(std::move(rec));
  }

  const bool remap = saw_zero;
  if (remap && saw_pm)
    throw NonBinaryLabel("mixed 0/1 and -1/+1 labels in one file");
  (void)saw_one;

  std::size_t d = dim_override > 0 ? dim_override : max_index;
  if (dim_override > 0 && max_index > dim_override)
    throw ParseError("dimension override smaller than max feature index");

  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> indices;
  Vec values, labels;
  offsets.reserve(recs.size() + 1);
  labels.reserve(recs.size());
  for (const auto& r : recs) {
    for (const auto& [i1, v] : r.features) {
      indices.push_back(i1 - 1);  // 0-based in memory
      values.push_back(v);
    }
    offsets.push_back(indices.size());
    labels.push_back(remap ? (r.label == 0.0 ? -1.0 : 1.0) : r.label);
  }
  LibsvmData out{SparseRowMatrix(recs.size(), d, std::move(offsets),
                                 std::move(indices), std::move(values)),
                 std::move(labels), remap};
  return out;
}

LibsvmData parse_libsvm_file(const std::string& path,
                             std::size_t dim_override) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset: " + path);
  return parse_libsvm(in, dim_override);
}

void write_libsvm(std::ostream& out, const SparseRowMatrix& m,
                  const Vec& labels) {
  if (labels.size() != m.rows())
    throw DimensionMismatch("write_libsvm: labels vs rows");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << format_double(labels[i]);
    const auto* idxs = m.row_indices(i);
    const auto* vals = m.row_values(i);
    for (std::size_t p = 0; p < m.row_nnz(i); ++p)
      out << ' ' << (idxs[p] + 1) << ':' << format_double(vals[p]);
    out << '\n';
  }
}

void write_libsvm_file(const std::string& path, const SparseRowMatrix& m,
                       const Vec& labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_libsvm(out, m, labels);
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Trace

namespace {
constexpr const char* kTraceHeader =
    "iter,mode,f,grad_norm,lambda,delta,step_length,bisection_count,"
    "while_count,oracle_calls,data_passes,sigma_k,sample_size";
}

std::string trace_body(const std::vector<TraceRecord>& records) {
  std::ostringstream os;
  os << kTraceHeader << '\n';
  for (const auto& r : records) {
    os << r.iter << ',' << r.mode << ',' << format_double(r.f) << ','
       << format_double(r.grad_norm) << ',' << format_double(r.lambda) << ','
       << format_double(r.delta) << ',' << format_double(r.step_length) << ','
       << r.bisection_count << ',' << r.while_count << ',' << r.oracle_calls
       << ',' << format_double(r.data_passes) << ','
       << format_double(r.sigma_k) << ',' << r.sample_size << '\n';
  }
  return os.str();
}

void write_trace(std::ostream& out, const std::vector<TraceRecord>& records,
                 const std::string& config_json) {
  nlohmann::json header;
  if (!config_json.empty())
    header = nlohmann::json::parse(config_json);
  nlohmann::json walls = nlohmann::json::array();
  for (const auto& r : records) walls.push_back(r.wall_nanos);
  header["wall_nanos"] = std::move(walls);
  out << "# " << header.dump() << '\n';
  out << trace_body(records);
}

void write_trace_file(const std::string& path,
                      const std::vector<TraceRecord>& records,
                      const std::string& config_json) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open trace for writing: " + path);
  write_trace(out, records, config_json);
  if (!out) throw IoError("trace write failed: " + path);
}

TraceFile read_trace(std::istream& in) {
  TraceFile tf;
  std::string line;
  bool have_columns = false;
  std::vector<std::uint64_t> walls;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto j = nlohmann::json::parse(line.substr(1));
      tf.header_json = j.dump();
      if (j.contains("wall_nanos"))
        walls = j["wall_nanos"].get<std::vector<std::uint64_t>>();
      continue;
    }
    if (!have_columns) {
      if (line != kTraceHeader)
        throw ParseError("trace: unexpected column header");
      have_columns = true;
      continue;
    }
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (cells.size() != 13) throw ParseError("trace: wrong column count");
    TraceRecord r;
    r.iter = std::stoll(cells[0]);
    r.mode = cells[1];
    r.f = parse_double(cells[2]);
    r.grad_norm = parse_double(cells[3]);
    r.lambda = parse_double(cells[4]);
    r.delta = parse_double(cells[5]);
    r.step_length = parse_double(cells[6]);
    r.bisection_count = std::stoi(cells[7]);
    r.while_count = std::stoi(cells[8]);
    r.oracle_calls = std::stoull(cells[9]);
    r.data_passes = parse_double(cells[10]);
    r.sigma_k = parse_double(cells[11]);
    r.sample_size = std::stoull(cells[12]);
    tf.records.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < walls.size() && i < tf.records.size(); ++i)
    tf.records[i].wall_nanos = walls[i];
  return tf;
}

TraceFile read_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace: " + path);
  return read_trace(in);
}

}  // namespace ianpe
