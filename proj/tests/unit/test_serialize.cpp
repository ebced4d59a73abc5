#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "blockveil/serialize.hpp"

using namespace blockveil;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("blockveil_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345678.9, 0.0}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("binary and csv matrices round-trip bit-exactly") {
  auto dir = scratch_dir("matrix");
  Matrix a = Matrix::Random(5, 3) * 1e3;
  a(0, 0) = 1.0 / 3.0;
  Metadata meta{{"origin", "unit test"}, {"seed", "9"}};
  write_matrix_binary(dir / "a.bin", a, meta);
  Metadata back;
  CHECK(read_matrix_binary(dir / "a.bin", &back) == a);
  CHECK(back == meta);
  write_matrix_csv(dir / "a.csv", a, meta);
  back.clear();
  CHECK(read_matrix_csv(dir / "a.csv", &back) == a);
  CHECK(back == meta);
}

TEST_CASE("corrupt matrix files are rejected") {
  auto dir = scratch_dir("corrupt");
  write_matrix_binary(dir / "a.bin", Matrix::Ones(2, 2));
  {
    std::ofstream out(dir / "a.bin", std::ios::app | std::ios::binary);
    out << "x";
  }
  CHECK_THROWS_AS(read_matrix_binary(dir / "a.bin"), FormatError);
  {
    std::ofstream out(dir / "b.bin", std::ios::binary);
    out << "NOPE";
  }
  CHECK_THROWS_AS(read_matrix_binary(dir / "b.bin"), FormatError);
  {
    std::ofstream out(dir / "c.csv");
    out << "1,2\n3\n";
  }
  CHECK_THROWS_AS(read_matrix_csv(dir / "c.csv"), FormatError);
  CHECK_THROWS(read_matrix_binary(dir / "missing.bin"));
}

TEST_CASE("channels and structures round-trip") {
  auto dir = scratch_dir("channel");
  auto ch = gen_gaussian_channel(6, 10, Seed(4));
  save_channel_binary(dir / "a.bin", ch);
  auto back = load_channel_binary(dir / "a.bin");
  CHECK(back.a() == ch.a());
  CHECK(back.seed() == ch.seed());
  CHECK(back.generator() == ch.generator());
  save_channel_csv(dir / "a.csv", ch);
  CHECK(load_channel_csv(dir / "a.csv").a() == ch.a());

  auto bs = random_block_structure(10, 5, Seed(2));
  auto j = to_json(bs);
  CHECK(j["n"] == 10);
  CHECK(j["labels"][0] == bs.label(0) + 1);
  CHECK(structures_equal(block_structure_from_json(j), bs));
  save_block_structure(dir / "b.json", bs);
  CHECK(load_block_structure(dir / "b.json").labels() == bs.labels());
  j["labels"][0] = 0;
  CHECK_THROWS_AS(block_structure_from_json(j), FormatError);
}

TEST_CASE("moment estimate directory") {
  auto dir = scratch_dir("estimate");
  auto ch = gen_gaussian_channel(12, 16, Seed(1));
  auto bs = BlockStructure::contiguous(16, 4);
  AttackParams params{0.2, 4, 0.01};
  Matrix y = snapshots(ch, bs, {{0.2, Constellation::kGaussian}, 0.01, 500}, Seed(2));
  auto est = eavesdrop(y, ch, params);
  save_moment_estimate(dir, est, params, {{"note", "x"}});
  for (auto f : {"sigma_hat.bin", "b_tilde.bin", "u_tilde.csv", "b_hat.json", "manifest.json"})
    CHECK(fs::exists(dir / f));
  CHECK(read_matrix_binary(dir / "b_tilde.bin") == est.b_tilde);
  CHECK(load_block_structure(dir / "b_hat.json").labels() == est.b_hat.labels());
  std::ifstream in(dir / "manifest.json");
  auto manifest = nlohmann::json::parse(in);
  CHECK(manifest.dump().find("\"note\"") != std::string::npos);
}
