#pragma once

// File formats. JSON for structured specs and reports (complex matrices as
// nested [re, im] pairs), plain text for sample batches (one pattern per
// line, space-separated counts), CSV with a header row and 12 significant
// digits for tables. Writers go through a temp-file rename so failed runs
// never leave partial outputs behind.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gbsim/device.hpp"
#include "gbsim/errors.hpp"
#include "gbsim/graph_similarity.hpp"
#include "gbsim/nonclassicality.hpp"
#include "gbsim/types.hpp"
#include "gbsim/version.hpp"
#include "gbsim/vibronic.hpp"

namespace gbsim {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Low-level file helpers.

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Atomic-enough write: stream to <path>.tmp in the same directory, then
/// rename over the target.
inline void write_text_file(const std::string& path, const std::string& body) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write file: " + tmp);
    out << body;
    out.flush();
    if (!out) throw ComputationError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ComputationError("rename failed: " + path + ": " + ec.message());
}

inline Json parse_json_file(const std::string& path) {
  const std::string body = read_text_file(path);
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded())
    throw ValidationError("invalid JSON in " + path);
  return j;
}

namespace detail {

inline const Json& field(const Json& j, const std::string& key,
                         const std::string& context) {
  if (!j.contains(key))
    throw ValidationError(context + ": missing field \"" + key + "\"");
  return j.at(key);
}

inline std::vector<double> double_list(const Json& j, const std::string& key,
                                       const std::string& context) {
  const Json& v = field(j, key, context);
  if (!v.is_array())
    throw ValidationError(context + ": \"" + key + "\" must be an array");
  std::vector<double> out;
  for (const Json& e : v) {
    if (!e.is_number())
      throw ValidationError(context + ": \"" + key + "\" must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Complex matrices: nested arrays of [re, im] pairs.

inline Json complex_matrix_to_json(const CMat& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j)
      row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMat complex_matrix_from_json(const Json& j, const std::string& context) {
  if (!j.is_array() || j.empty())
    throw ValidationError(context + ": matrix must be a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j.at(0).is_array() ? j.at(0).size() : 0;
  if (cols == 0)
    throw ValidationError(context + ": matrix rows must be non-empty arrays");
  CMat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const Json& row = j.at(i);
    if (!row.is_array() || row.size() != cols)
      throw ValidationError(context + ": ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) {
      const Json& cell = row.at(c);
      if (!cell.is_array() || cell.size() != 2 || !cell.at(0).is_number() ||
          !cell.at(1).is_number())
        throw ValidationError(context +
                              ": matrix entries must be [re, im] pairs");
      m(i, c) = Complex(cell.at(0).get<double>(), cell.at(1).get<double>());
    }
  }
  return m;
}

inline RMat real_matrix_from_json(const Json& j, const std::string& context) {
  if (!j.is_array() || j.empty())
    throw ValidationError(context + ": matrix must be a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j.at(0).is_array() ? j.at(0).size() : 0;
  if (cols == 0)
    throw ValidationError(context + ": matrix rows must be non-empty arrays");
  RMat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const Json& row = j.at(i);
    if (!row.is_array() || row.size() != cols)
      throw ValidationError(context + ": ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row.at(c).is_number())
        throw ValidationError(context + ": matrix entries must be numbers");
      m(i, c) = row.at(c).get<double>();
    }
  }
  return m;
}

inline Json real_matrix_to_json(const RMat& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Chip and job specs.

inline ChipSpec chip_from_json(const Json& j) {
  ChipSpec chip;
  chip.eta = detail::double_list(j, "eta", "chip");
  chip.nbar = detail::double_list(j, "nbar", "chip");
  chip.r1 = detail::double_list(j, "r1", "chip");
  chip.r2 = detail::double_list(j, "r2", "chip");
  chip.validate();
  return chip;
}

inline ChipSpec load_chip(const std::string& path) {
  return chip_from_json(parse_json_file(path));
}

inline Json chip_to_json(const ChipSpec& chip) {
  Json j;
  j["eta"] = chip.eta;
  j["nbar"] = chip.nbar;
  j["r1"] = chip.r1;
  j["r2"] = chip.r2;
  return j;
}

inline JobSpec job_from_json(const Json& j) {
  JobSpec job;
  job.unitary = complex_matrix_from_json(detail::field(j, "unitary", "job"), "job");
  const Json& on = detail::field(j, "squeezers_on", "job");
  if (!on.is_array() || on.size() != kDevicePairs)
    throw ValidationError("job: squeezers_on must list 4 booleans");
  for (int i = 0; i < kDevicePairs; ++i) {
    if (!on.at(i).is_boolean())
      throw ValidationError("job: squeezers_on must list 4 booleans");
    job.squeezers_on[i] = on.at(i).get<bool>();
  }
  const Json& shots = detail::field(j, "shots", "job");
  if (!shots.is_number_unsigned())
    throw ValidationError("job: shots must be a non-negative integer");
  job.shots = shots.get<std::uint64_t>();
  const Json& cutoff = detail::field(j, "total_cutoff", "job");
  if (!cutoff.is_number_integer())
    throw ValidationError("job: total_cutoff must be an integer");
  job.total_cutoff = cutoff.get<int>();
  const Json& seed = detail::field(j, "seed", "job");
  if (!seed.is_number_unsigned())
    throw ValidationError("job: seed must be a non-negative integer");
  job.seed = seed.get<std::uint64_t>();
  if (j.contains("squeezing_override"))
    job.squeezing_override = detail::double_list(j, "squeezing_override", "job");
  return validated_job(job);
}

inline JobSpec load_job(const std::string& path) {
  return job_from_json(parse_json_file(path));
}

inline Json job_to_json(const JobSpec& job) {
  Json j;
  j["unitary"] = complex_matrix_to_json(job.unitary);
  j["squeezers_on"] = job.squeezers_on;
  j["shots"] = job.shots;
  j["total_cutoff"] = job.total_cutoff;
  j["seed"] = job.seed;
  if (job.squeezing_override) j["squeezing_override"] = *job.squeezing_override;
  return j;
}

// ---------------------------------------------------------------------------
// Applications input files.

inline VibronicInput vibronic_from_json(const Json& j) {
  VibronicInput in;
  const std::vector<double> omega = detail::double_list(j, "omega", "molecule");
  const std::vector<double> omega_prime =
      detail::double_list(j, "omega_prime", "molecule");
  in.omega = Eigen::Map<const RVec>(omega.data(), omega.size());
  in.omega_prime = Eigen::Map<const RVec>(omega_prime.data(), omega_prime.size());
  in.duschinsky =
      real_matrix_from_json(detail::field(j, "duschinsky", "molecule"), "molecule");
  const Json& r = detail::field(j, "r", "molecule");
  if (!r.is_number())
    throw ValidationError("molecule: r must be a number");
  in.squeezing = r.get<double>();
  return validated_vibronic(in);
}

inline VibronicInput load_vibronic(const std::string& path) {
  return vibronic_from_json(parse_json_file(path));
}

inline GraphInput graph_from_json(const Json& j) {
  GraphInput in;
  in.adjacency =
      real_matrix_from_json(detail::field(j, "adjacency", "graph"), "graph");
  graph_c_block(in);  // validation only
  return in;
}

inline GraphInput load_graph(const std::string& path) {
  return graph_from_json(parse_json_file(path));
}

/// Vertex permutation file: one-based one-line notation over the 4 pair
/// indices, e.g. {"permutation": [3, 1, 2, 4]}.
inline std::vector<int> permutation_from_json(const Json& j) {
  const Json& p = detail::field(j, "permutation", "permutation");
  if (!p.is_array() || p.size() != kDevicePairs)
    throw ValidationError("permutation: must list 4 vertices");
  std::vector<int> perm;
  std::vector<bool> seen(kDevicePairs, false);
  for (const Json& e : p) {
    if (!e.is_number_integer())
      throw ValidationError("permutation: entries must be integers");
    const int v = e.get<int>();
    require(v >= 1 && v <= kDevicePairs,
            "permutation: entries must lie in 1..4");
    require(!seen[v - 1], "permutation: entries must be distinct");
    seen[v - 1] = true;
    perm.push_back(v - 1);
  }
  return perm;
}

inline std::vector<int> load_permutation(const std::string& path) {
  return permutation_from_json(parse_json_file(path));
}

// ---------------------------------------------------------------------------
// Sample batches: one pattern per line, space-separated counts.

inline std::string samples_to_text(const std::vector<Pattern>& samples) {
  std::string out;
  for (const Pattern& s : samples) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ' ';
      out += std::to_string(s[i]);
    }
    out += '\n';
  }
  return out;
}

inline std::vector<Pattern> samples_from_text(const std::string& body) {
  std::vector<Pattern> out;
  std::istringstream lines(body);
  std::string line;
  std::size_t width = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    Pattern s;
    std::istringstream fields(line);
    long long v;
    while (fields >> v) {
      require(v >= 0, "samples: photon counts must be >= 0");
      require(v <= 1000000, "samples: photon count out of range");
      s.push_back(static_cast<int>(v));
    }
    if (!fields.eof())
      throw ValidationError("samples: malformed line \"" + line + "\"");
    if (width == 0) width = s.size();
    require(s.size() == width, "samples: inconsistent pattern width");
    require(!s.empty(), "samples: empty pattern line");
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<Pattern> load_samples(const std::string& path) {
  return samples_from_text(read_text_file(path));
}

// ---------------------------------------------------------------------------
// CSV tables: header row, '.' decimal separator, 12 significant digits.

inline std::string csv_format(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(const std::vector<std::string>& header) {
    append_row(header);
  }

  void append_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) body_ += ',';
      body_ += cells[i];
    }
    body_ += '\n';
  }

  const std::string& str() const { return body_; }

 private:
  std::string body_;
};

// ---------------------------------------------------------------------------
// Run manifests: serialized alongside every output; identical manifests
// reproduce outputs byte-for-byte (wall-clock duration aside).

struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::optional<std::uint64_t> seed;
  std::optional<int> cutoff;
  std::optional<std::uint64_t> shots;
  std::vector<std::string> outputs;
  std::string version = kVersion;
  double duration_seconds = 0.0;
};

inline Json manifest_to_json(const RunManifest& m) {
  Json j;
  j["command"] = m.command;
  j["inputs"] = m.inputs;
  j["seed"] = m.seed ? Json(*m.seed) : Json(nullptr);
  j["cutoff"] = m.cutoff ? Json(*m.cutoff) : Json(nullptr);
  j["shots"] = m.shots ? Json(*m.shots) : Json(nullptr);
  j["outputs"] = m.outputs;
  j["version"] = m.version;
  j["duration_seconds"] = m.duration_seconds;
  return j;
}

inline std::string manifest_path_for(const std::string& output_path) {
  return output_path + ".manifest.json";
}

inline void write_manifest(const RunManifest& m) {
  require(!m.outputs.empty(), "manifest: no outputs recorded");
  write_text_file(manifest_path_for(m.outputs.front()),
                  manifest_to_json(m).dump(2) + "\n");
}

}  // namespace gbsim
