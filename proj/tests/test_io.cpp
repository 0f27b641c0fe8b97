#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "ianpe/io.hpp"
#include "ianpe/synth.hpp"
#include "test_util.hpp"

using namespace ianpe;
using namespace ianpe::testutil;

TEST_CASE("parse a single libsvm line") {
  std::istringstream in("+1 1:0.5 3:2\n");
  const LibsvmData data = parse_libsvm(in);
  CHECK(data.matrix.rows() == 1);
  CHECK(data.matrix.cols() == 3);
  CHECK(data.labels[0] == 1.0);
  CHECK(data.matrix.row_nnz(0) == 2);
  CHECK(data.matrix.row_indices(0)[0] == 0);  // 0-based in memory
  CHECK(data.matrix.row_values(0)[0] == 0.5);
  CHECK(data.matrix.row_indices(0)[1] == 2);
  CHECK(data.matrix.row_values(0)[1] == 2.0);
  CHECK(!data.remapped_zero_one);
}

TEST_CASE("0/1 labels are remapped with the flag set") {
  std::istringstream in("0 2:1\n1 1:1\n");
  const LibsvmData data = parse_libsvm(in);
  CHECK(data.remapped_zero_one);
  CHECK(data.labels[0] == -1.0);
  CHECK(data.labels[1] == 1.0);
}

TEST_CASE("comments and blank lines are ignored") {
  std::istringstream in("# header comment\n+1 1:1 # trailing\n\n-1 2:3\n");
  const LibsvmData data = parse_libsvm(in);
  CHECK(data.matrix.rows() == 2);
  CHECK(data.labels[1] == -1.0);
}

TEST_CASE("parse errors carry line positions") {
  std::istringstream bad_order("+1 3:1 2:1\n");
  CHECK_THROWS_AS(parse_libsvm(bad_order), ParseError);
  std::istringstream zero_idx("+1 0:1\n");
  CHECK_THROWS_AS(parse_libsvm(zero_idx), ParseError);
  std::istringstream garbage("+1 1:x\n");
  CHECK_THROWS_AS(parse_libsvm(garbage), ParseError);
  std::istringstream non_binary("3 1:1\n");
  CHECK_THROWS_AS(parse_libsvm(non_binary), NonBinaryLabel);
  std::istringstream mixed("0 1:1\n-1 1:1\n");
  CHECK_THROWS_AS(parse_libsvm(mixed), NonBinaryLabel);
}

TEST_CASE("CRLF line endings and empty feature lists parse") {
  std::istringstream in("+1 1:0.5 2:1\r\n-1\r\n");
  const LibsvmData data = parse_libsvm(in);
  CHECK(data.matrix.rows() == 2);
  CHECK(data.matrix.row_nnz(0) == 2);
  CHECK(data.matrix.row_nnz(1) == 0);  // all-zero sample
  CHECK(data.matrix.row_values(0)[1] == 1.0);
}

TEST_CASE("dimension override") {
  std::istringstream in("+1 2:1\n");
  const LibsvmData data = parse_libsvm(in, 10);
  CHECK(data.matrix.cols() == 10);
  std::istringstream in2("+1 12:1\n");
  CHECK_THROWS_AS(parse_libsvm(in2, 10), ParseError);
}

TEST_CASE("libsvm canonicalization is idempotent") {
  LogisticGenOptions opt;
  opt.n = 40;
  opt.d = 9;
  opt.seed = 5;
  opt.density = 0.5;
  const LogisticRegression p = gen_logistic(opt);

  std::ostringstream first;
  write_libsvm(first, p.data(), p.labels());
  std::istringstream round1(first.str());
  const LibsvmData parsed = parse_libsvm(round1, 9);
  std::ostringstream second;
  write_libsvm(second, parsed.matrix, parsed.labels);
  CHECK(first.str() == second.str());
}

TEST_CASE("format_double round trips exactly") {
  for (double v : {0.1, -2.5e17, 1e-300, 3.141592653589793, 0.0, -0.0,
                   5.0e-324, 1.7976931348623157e308}) {
    CHECK(parse_double(format_double(v)) == v);
  }
}

namespace {

TraceRecord sample_record(int i) {
  TraceRecord r;
  r.iter = i;
  r.mode = "accel";
  r.f = 0.6931471805599453 / (i + 1);
  r.grad_norm = std::pow(10.0, -i);
  r.lambda = 0.4 * (i + 1);
  r.delta = 0.25 / (i + 1);
  r.step_length = 2.08;
  r.bisection_count = i;
  r.while_count = 1;
  r.oracle_calls = 3 * i + 1;
  r.data_passes = 1.5 * i;
  r.wall_nanos = 1000u * (i + 1);
  r.sigma_k = 0.9;
  r.sample_size = 830;
  return r;
}

}  // namespace

TEST_CASE("trace round trip preserves records") {
  std::vector<TraceRecord> recs{sample_record(0), sample_record(1)};
  std::ostringstream out;
  write_trace(out, recs, R"({"seed": 42})");
  std::istringstream in(out.str());
  const TraceFile tf = read_trace(in);
  REQUIRE(tf.records.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(tf.records[i].iter == recs[i].iter);
    CHECK(tf.records[i].mode == recs[i].mode);
    CHECK(tf.records[i].f == recs[i].f);
    CHECK(tf.records[i].grad_norm == recs[i].grad_norm);
    CHECK(tf.records[i].lambda == recs[i].lambda);
    CHECK(tf.records[i].delta == recs[i].delta);
    CHECK(tf.records[i].data_passes == recs[i].data_passes);
    CHECK(tf.records[i].wall_nanos == recs[i].wall_nanos);
    CHECK(tf.records[i].sample_size == recs[i].sample_size);
  }
  CHECK(tf.header_json.find("42") != std::string::npos);
}

TEST_CASE("empty run writes a header-only body") {
  std::ostringstream out;
  write_trace(out, {}, "{}");
  std::istringstream in(out.str());
  const TraceFile tf = read_trace(in);
  CHECK(tf.records.empty());
  CHECK(trace_body({}).find("iter,mode,f") == 0);
}

TEST_CASE("large traces round trip by count") {
  std::vector<TraceRecord> recs;
  for (int i = 0; i < 10000; ++i) recs.push_back(sample_record(i % 50));
  std::ostringstream out;
  write_trace(out, recs, "{}");
  std::istringstream in(out.str());
  const TraceFile tf = read_trace(in);
  CHECK(tf.records.size() == 10000);
}

TEST_CASE("trace body excludes wall timing and is deterministic") {
  std::vector<TraceRecord> recs{sample_record(0)};
  const std::string body1 = trace_body(recs);
  recs[0].wall_nanos = 999999;  // timing lives in the JSON header only
  const std::string body2 = trace_body(recs);
  CHECK(body1 == body2);
  CHECK(body1.find("wall") == std::string::npos);
}

TEST_CASE("a9a has the documented shape when present") {
  // hermetic: runs only when a local copy exists (see README for retrieval)
  std::ifstream f("data/a9a");
  if (!f) return;
  const LibsvmData data = parse_libsvm(f);
  CHECK(data.matrix.rows() == 32561);
  CHECK(data.matrix.cols() == 123);
}
