#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gbsim/serialization.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

using gbsim::ChipSpec;
using gbsim::CMat;
using gbsim::JobSpec;
using gbsim::Json;
using gbsim::Pattern;

namespace {

// Scratch directory for writer tests, wiped per run.
fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "gbsim_serialization_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("bundled chip file", "[serialization]") {
  const ChipSpec chip = gbsim::load_chip(fixtures::data_path("chip_default.json"));
  const ChipSpec ref = fixtures::default_chip();
  CHECK(chip.eta == ref.eta);
  CHECK(chip.nbar == ref.nbar);
  CHECK(chip.r1 == ref.r1);
  CHECK(chip.r2 == ref.r2);
}

TEST_CASE("chip JSON round trip", "[serialization]") {
  const ChipSpec chip = fixtures::default_chip();
  const ChipSpec back = gbsim::chip_from_json(gbsim::chip_to_json(chip));
  CHECK(back.eta == chip.eta);
  CHECK(back.nbar == chip.nbar);
  CHECK(back.r1 == chip.r1);
  CHECK(back.r2 == chip.r2);

  Json j = gbsim::chip_to_json(chip);
  j.erase("nbar");
  CHECK_THROWS_AS(gbsim::chip_from_json(j), gbsim::ValidationError);
  j = gbsim::chip_to_json(chip);
  j["eta"][3] = 1.5;
  CHECK_THROWS_AS(gbsim::chip_from_json(j), gbsim::ValidationError);
  j = gbsim::chip_to_json(chip);
  j["r1"] = {"a", "b", "c", "d"};
  CHECK_THROWS_AS(gbsim::chip_from_json(j), gbsim::ValidationError);
}

TEST_CASE("bundled job files", "[serialization]") {
  const JobSpec id = gbsim::load_job(fixtures::data_path("job_identity.json"));
  CHECK((id.unitary - CMat::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(id.shots == 1000);
  CHECK(id.total_cutoff == 8);
  CHECK(id.seed == 7);
  CHECK(id.squeezers_on == std::array<bool, 4>{true, true, true, true});
  CHECK_FALSE(id.squeezing_override.has_value());

  // The interferometer file is printed to four decimals; loading projects it
  // onto the nearest unitary.
  const JobSpec u1 = gbsim::load_job(fixtures::data_path("job_u1.json"));
  CHECK(gbsim::is_unitary(u1.unitary, 1e-12));
  CHECK((u1.unitary - fixtures::u1_printed()).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("job JSON round trip", "[serialization]") {
  JobSpec job = gbsim::load_job(fixtures::data_path("job_u2.json"));
  job.squeezing_override = std::vector<double>{0.9, 0.0, 0.3, 0.0};
  const JobSpec back = gbsim::job_from_json(gbsim::job_to_json(job));
  CHECK((back.unitary - job.unitary).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.squeezers_on == job.squeezers_on);
  CHECK(back.shots == job.shots);
  CHECK(back.total_cutoff == job.total_cutoff);
  CHECK(back.seed == job.seed);
  REQUIRE(back.squeezing_override.has_value());
  CHECK(*back.squeezing_override == *job.squeezing_override);

  Json j = gbsim::job_to_json(job);
  j["unitary"][0][0] = {1.01, 0.0};
  j["unitary"][1][1] = {1.01, 0.0};
  CHECK_THROWS_AS(gbsim::job_from_json(j), gbsim::ValidationError);
  j = gbsim::job_to_json(job);
  j["shots"] = -3;
  CHECK_THROWS_AS(gbsim::job_from_json(j), gbsim::ValidationError);
  j = gbsim::job_to_json(job);
  j.erase("seed");
  CHECK_THROWS_AS(gbsim::job_from_json(j), gbsim::ValidationError);
}

TEST_CASE("complex matrix JSON", "[serialization]") {
  const CMat m = oracle::random_complex(3, 99);
  const CMat back =
      gbsim::complex_matrix_from_json(gbsim::complex_matrix_to_json(m), "test");
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(gbsim::complex_matrix_from_json(Json::array(), "test"),
                  gbsim::ValidationError);
  // Bare numbers instead of [re, im] pairs.
  CHECK_THROWS_AS(
      gbsim::complex_matrix_from_json(Json::parse("[[1.0, 2.0]]"), "test"),
      gbsim::ValidationError);
  // Ragged rows.
  CHECK_THROWS_AS(gbsim::complex_matrix_from_json(
                      Json::parse("[[[1,0],[2,0]],[[3,0]]]"), "test"),
                  gbsim::ValidationError);
}

TEST_CASE("real matrix JSON", "[serialization]") {
  gbsim::RMat m(2, 3);
  m << 1.5, -2.0, 0.25, 3.0, 4.5, -6.0;
  const gbsim::RMat back =
      gbsim::real_matrix_from_json(gbsim::real_matrix_to_json(m), "test");
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(
      gbsim::real_matrix_from_json(Json::parse("[[1,2],[3]]"), "test"),
      gbsim::ValidationError);
  CHECK_THROWS_AS(
      gbsim::real_matrix_from_json(Json::parse("[[1,\"x\"]]"), "test"),
      gbsim::ValidationError);
}

TEST_CASE("sample batch text format", "[serialization]") {
  const std::vector<Pattern> samples = {{1, 0, 2, 0, 0, 0, 0, 3},
                                        {0, 0, 0, 0, 0, 0, 0, 0},
                                        {2, 1, 0, 0, 1, 0, 0, 0}};
  const std::string text = gbsim::samples_to_text(samples);
  CHECK(text ==
        "1 0 2 0 0 0 0 3\n"
        "0 0 0 0 0 0 0 0\n"
        "2 1 0 0 1 0 0 0\n");
  CHECK(gbsim::samples_from_text(text) == samples);
  CHECK(gbsim::samples_from_text("1 2\n\n3 4\n").size() == 2);

  CHECK_THROWS_AS(gbsim::samples_from_text("1 x 2\n"), gbsim::ValidationError);
  CHECK_THROWS_AS(gbsim::samples_from_text("1 2\n1 2 3\n"),
                  gbsim::ValidationError);
  CHECK_THROWS_AS(gbsim::samples_from_text("1 -2\n"), gbsim::ValidationError);

  const fs::path dir = scratch_dir();
  const std::string path = (dir / "batch.txt").string();
  gbsim::write_text_file(path, text);
  CHECK(gbsim::load_samples(path) == samples);
}

TEST_CASE("csv formatting", "[serialization]") {
  CHECK(gbsim::csv_format(0.1) == "0.1");
  CHECK(gbsim::csv_format(2.0) == "2");
  CHECK(gbsim::csv_format(0.0358471719139) == "0.0358471719139");
  CHECK(gbsim::csv_format(1e-30) == "1e-30");

  gbsim::CsvTable table({"phi", "value"});
  table.append_row({gbsim::csv_format(0.5), gbsim::csv_format(1.25)});
  CHECK(table.str() == "phi,value\n0.5,1.25\n");
}

TEST_CASE("permutation files", "[serialization]") {
  CHECK(gbsim::load_permutation(fixtures::data_path("perm_pi1.json")) ==
        std::vector<int>{2, 0, 1, 3});
  CHECK(gbsim::load_permutation(fixtures::data_path("perm_pi2.json")) ==
        std::vector<int>{3, 2, 1, 0});
  CHECK(gbsim::load_permutation(fixtures::data_path("perm_pi3.json")) ==
        std::vector<int>{1, 2, 3, 0});

  CHECK_THROWS_AS(
      gbsim::permutation_from_json(Json::parse("{\"permutation\": [1,2,3]}")),
      gbsim::ValidationError);
  CHECK_THROWS_AS(
      gbsim::permutation_from_json(Json::parse("{\"permutation\": [0,1,2,3]}")),
      gbsim::ValidationError);
  CHECK_THROWS_AS(gbsim::permutation_from_json(
                      Json::parse("{\"permutation\": [1,2,2,4]}")),
                  gbsim::ValidationError);
}

TEST_CASE("molecule and graph loaders validate their input", "[serialization]") {
  const gbsim::VibronicInput in =
      gbsim::load_vibronic(fixtures::data_path("ethylene.json"));
  CHECK(in.omega(0) == 2978.9764);
  CHECK(in.omega_prime(0) == 2828.1124);
  CHECK(in.squeezing == 1.0);
  // Loading runs the orthogonal projection.
  const gbsim::RMat gram = in.duschinsky.transpose() * in.duschinsky;
  CHECK((gram - gbsim::RMat::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);

  Json j = gbsim::parse_json_file(fixtures::data_path("ethylene.json"));
  j.erase("r");
  CHECK_THROWS_AS(gbsim::vibronic_from_json(j), gbsim::ValidationError);

  Json g;
  g["adjacency"] = gbsim::real_matrix_to_json(gbsim::RMat::Zero(4, 4));
  CHECK_THROWS_AS(gbsim::graph_from_json(g), gbsim::ValidationError);
  CHECK(gbsim::load_graph(fixtures::data_path("graph_a3.json"))
            .adjacency.rows() == 8);
}

TEST_CASE("text file helpers", "[serialization]") {
  const fs::path dir = scratch_dir();
  const std::string path = (dir / "note.txt").string();
  gbsim::write_text_file(path, "alpha\nbeta\n");
  CHECK(gbsim::read_text_file(path) == "alpha\nbeta\n");
  // The temp file used for the atomic rename must not linger.
  CHECK_FALSE(fs::exists(path + ".tmp"));
  CHECK_THROWS_AS(gbsim::read_text_file((dir / "missing.txt").string()),
                  gbsim::ValidationError);
  CHECK_THROWS_AS(gbsim::parse_json_file(path), gbsim::ValidationError);
}

TEST_CASE("run manifests", "[serialization]") {
  gbsim::RunManifest m;
  m.command = "sample";
  m.inputs = {"chip_default.json", "job_identity.json"};
  m.seed = 7;
  m.cutoff = 8;
  m.shots = 1000;
  const fs::path dir = scratch_dir();
  const std::string out = (dir / "samples.txt").string();
  m.outputs = {out};
  m.duration_seconds = 0.125;

  const Json j = gbsim::manifest_to_json(m);
  CHECK(j.at("command") == "sample");
  CHECK(j.at("seed") == 7);
  CHECK(j.at("cutoff") == 8);
  CHECK(j.at("shots") == 1000);
  CHECK(j.at("version") == gbsim::kVersion);
  CHECK(j.at("outputs")[0] == out);

  gbsim::RunManifest bare;
  bare.command = "stats";
  bare.outputs = {"r.json"};
  CHECK(gbsim::manifest_to_json(bare).at("seed").is_null());

  CHECK(gbsim::manifest_path_for(out) == out + ".manifest.json");
  gbsim::write_manifest(m);
  const Json loaded = gbsim::parse_json_file(out + ".manifest.json");
  CHECK(loaded.at("command") == "sample");
  CHECK(loaded.at("duration_seconds") == 0.125);

  gbsim::RunManifest empty;
  CHECK_THROWS_AS(gbsim::write_manifest(empty), gbsim::ValidationError);
}
