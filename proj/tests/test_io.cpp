#include <doctest.h>

#include <filesystem>

#include <nlohmann/json.hpp>

#include "a2a/io.hpp"
#include "a2a/rng.hpp"

using namespace a2a;

TEST_CASE("matrix rows round trip") {
  Rng rng(1);
  const Mat m = rng.normal_matrix(3, 5);
  const Mat back = rows_to_matrix(matrix_to_rows(m));
  CHECK((m - back).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(rows_to_matrix({{1.0, 2.0}, {3.0}}), std::invalid_argument);
  CHECK_THROWS_AS(rows_to_matrix({}), std::invalid_argument);
}

TEST_CASE("atomic_write_text leaves no temp files and creates parents") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "a2a_io_test" / "nested";
  fs::remove_all(dir.parent_path());
  const fs::path file = dir / "data.txt";
  atomic_write_text(file.string(), "hello");
  CHECK(read_text_file(file.string()) == "hello");
  int entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
  CHECK(entries == 1);
  atomic_write_text(file.string(), "rewritten");
  CHECK(read_text_file(file.string()) == "rewritten");
  fs::remove_all(dir.parent_path());
}

TEST_CASE("fnv1a64 is stable across runs and platforms") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a2a") == fnv1a64("a2a"));
  CHECK(fnv1a64("a2a") != fnv1a64("a2b"));
  CHECK(hash_hex(0xdeadbeefull) == "00000000deadbeef");
}

TEST_CASE("trajectory JSONL parses line by line") {
  Trajectory traj;
  traj.iterates = {Vec::Zero(2), Vec::Ones(2), 2.0 * Vec::Ones(2)};
  traj.err_w = {0.5};
  traj.err_u = {0.25};
  traj.turns_run = 1;
  Rng rng(2);
  const ObjectivePair pair =
      ObjectivePair::from_targets(rng.normal_vector(2), rng.normal_vector(2));
  const std::string jsonl = trajectory_to_jsonl(traj, pair, "cafe");
  int lines = 0;
  std::size_t begin = 0;
  while (begin < jsonl.size()) {
    const auto end = jsonl.find('\n', begin);
    const auto rec = nlohmann::json::parse(jsonl.substr(begin, end - begin));
    CHECK(rec.at("config_hash") == "cafe");
    CHECK(rec.at("state").size() == 2);
    CHECK(rec.contains("speaker"));
    begin = end + 1;
    ++lines;
  }
  CHECK(lines == 3);
}
