#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sga/checkpoint.hpp"
#include "sga/error.hpp"
#include "sga/io.hpp"
#include "test_util.hpp"

using namespace sga;

TEST_CASE("jsonl round trip and error location") {
  std::string dir = test::scratch_dir("io");
  std::vector<Json> recs = {Json{{"id", "a"}, {"n", 1}}, Json{{"id", "b"}, {"n", 2}}};
  write_jsonl(dir + "/x.jsonl", recs);
  auto back = read_jsonl(dir + "/x.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[1].at("id") == "b");

  write_file(dir + "/bad.jsonl", "{\"ok\":1}\nnot json\n");
  CHECK_THROWS_WITH_AS(read_jsonl(dir + "/bad.jsonl"), doctest::Contains("bad.jsonl:2"), Error);
  CHECK_THROWS_AS(read_jsonl(dir + "/absent.jsonl"), Error);
}

TEST_CASE("tsv skips comments and splits on tabs only") {
  std::string dir = test::scratch_dir("tsv");
  write_file(dir + "/t.tsv", "# comment\na b\tc\n\nx\ty\tz\n");
  auto rows = read_tsv(dir + "/t.tsv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a b", "c"});
  CHECK(rows[1].size() == 3);
}

TEST_CASE("checkpoint stores doubles bit-exactly") {
  std::string dir = test::scratch_dir("ckpt");
  Checkpoint ckpt;
  ckpt.config["note"] = "test";
  ckpt.extra["aux"] = Json{{"k", 3}};
  Tensor t(2, 3);
  t.v = {1.0, -0.0, 1e-300, 3.141592653589793, -2.5e17, 0.1};
  ckpt.add("weights", t);
  save_checkpoint(dir + "/m.ckpt", ckpt);

  Checkpoint back = load_checkpoint(dir + "/m.ckpt");
  CHECK(back.config.at("note") == "test");
  CHECK(back.extra.at("aux").at("k") == 3);
  const Tensor& bt = back.require("weights");
  REQUIRE(bt.rows == 2);
  REQUIRE(bt.cols == 3);
  for (std::size_t i = 0; i < t.v.size(); ++i) {
    std::uint64_t a, b;
    std::memcpy(&a, &t.v[i], 8);
    std::memcpy(&b, &bt.v[i], 8);
    CHECK(a == b);
  }
  CHECK_THROWS_AS(back.require("absent"), Error);
}

TEST_CASE("corrupt checkpoints are rejected") {
  std::string dir = test::scratch_dir("ckpt_bad");
  write_file(dir + "/junk.ckpt", "not a checkpoint at all");
  CHECK_THROWS_AS(load_checkpoint(dir + "/junk.ckpt"), Error);
}

TEST_CASE("manifest digests catch artifact drift") {
  std::string dir = test::scratch_dir("manifest");
  write_file(dir + "/artifact.txt", "v1");
  Manifest m;
  m.command = "demo";
  m.add_output(dir + "/artifact.txt");
  m.write(dir);

  CHECK_NOTHROW(check_manifest_outputs(dir, "demo"));
  write_file(dir + "/artifact.txt", "v2");
  CHECK_THROWS_AS(check_manifest_outputs(dir, "demo"), Error);
  // no manifest for another command: silently passes
  CHECK_NOTHROW(check_manifest_outputs(dir, "other"));
}

TEST_CASE("file digest is stable across reads") {
  std::string dir = test::scratch_dir("digest");
  write_file(dir + "/f.bin", std::string("\x00\x01\xff proof", 9));
  CHECK(file_digest(dir + "/f.bin") == file_digest(dir + "/f.bin"));
}

TEST_CASE("require_artifact names the producing command") {
  CHECK_THROWS_WITH_AS(require_artifact("/nonexistent/path.jsonl", "cluster"),
                       doctest::Contains("sga cluster"), Error);
}
