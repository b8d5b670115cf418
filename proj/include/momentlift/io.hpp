#pragma once

#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "momentlift/errors.hpp"
#include "momentlift/geometry.hpp"
#include "momentlift/lifting.hpp"
#include "momentlift/moments.hpp"
#include "momentlift/objects.hpp"

namespace momentlift::io {

using json = nlohmann::json;

/// Shortest decimal form that round-trips; locale independent.
inline std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw Error("failed to format floating-point value");
  return std::string(buf.data(), ptr);
}

// ---------------------------------------------------------------------------
// Parsing helpers

namespace detail {

inline std::string line_context(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing key \"" + key + "\"");
  return j.at(key);
}

inline Vector to_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(where + ": expected a number at index " + std::to_string(i));
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline json from_vector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline json row_major(const Eigen::Ref<const Matrix>& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  }
  return out;
}

inline int positive_int(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 1) throw ParseError(where + ": expected a positive integer");
  return j.get<int>();
}

}  // namespace detail

inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + detail::line_context(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_json_text(text, path);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path + ": cannot open file for writing");
  out << text;
  if (!out) throw Error(path + ": write failed");
}

// ---------------------------------------------------------------------------
// Objects: {"n": int, "components": [{"amplitude", "mean", "sigma"}]}

inline json to_json(const GaussianMixture& obj) {
  json comps = json::array();
  for (std::size_t k = 0; k < obj.size(); ++k) {
    comps.push_back({{"amplitude", obj.amplitude(k)}, {"mean", detail::from_vector(obj.mean(k))}, {"sigma", obj.sigma(k)}});
  }
  return {{"n", obj.dim()}, {"components", comps}};
}

inline GaussianMixture mixture_from_json(const json& j, const std::string& where = "object") {
  const int n = detail::positive_int(detail::require(j, "n", where), where + ".n");
  const auto& comps = detail::require(j, "components", where);
  if (!comps.is_array() || comps.empty()) throw ParseError(where + ".components: expected a non-empty array");
  std::vector<GaussianComponent> parts;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const std::string at = where + ".components[" + std::to_string(k) + "]";
    const auto& c = comps[k];
    const auto& amp = detail::require(c, "amplitude", at);
    const auto& sigma = detail::require(c, "sigma", at);
    if (!amp.is_number() || !sigma.is_number()) throw ParseError(at + ": amplitude and sigma must be numbers");
    parts.push_back({amp.get<double>(), detail::to_vector(detail::require(c, "mean", at), at + ".mean"),
                     sigma.get<double>()});
  }
  try {
    return GaussianMixture(n, parts);
  } catch (const Error& e) {
    throw ParseError(where + ": " + e.what());
  }
}

inline GaussianMixture read_mixture(const std::string& path) { return mixture_from_json(read_json_file(path), path); }

// ---------------------------------------------------------------------------
// Ensembles: {"n": int, "seed": uint64, "rotations": [[row-major n*n floats]]}
// plus an optional "weights" array for importance-weighted ensembles.

inline json to_json(const RotationEnsemble& ens) {
  json rotations = json::array();
  for (std::size_t i = 0; i < ens.size(); ++i) rotations.push_back(detail::row_major(ens.rotation(i)));
  json out = {{"n", ens.dim()}, {"seed", ens.seed()}, {"rotations", rotations}};
  if (ens.has_weights()) out["weights"] = *ens.weights();
  return out;
}

inline RotationEnsemble ensemble_from_json(const json& j, const std::string& where = "ensemble") {
  const int n = detail::positive_int(detail::require(j, "n", where), where + ".n");
  const auto& seed = detail::require(j, "seed", where);
  if (!seed.is_number_unsigned()) throw ParseError(where + ".seed: expected an unsigned integer");
  const auto& rots = detail::require(j, "rotations", where);
  if (!rots.is_array()) throw ParseError(where + ".rotations: expected an array");
  std::vector<double> data;
  const auto block = static_cast<std::size_t>(n * n);
  for (std::size_t i = 0; i < rots.size(); ++i) {
    const Vector flat = detail::to_vector(rots[i], where + ".rotations[" + std::to_string(i) + "]");
    if (static_cast<std::size_t>(flat.size()) != block) {
      throw ParseError(where + ".rotations[" + std::to_string(i) + "]: expected " + std::to_string(block) + " entries");
    }
    // Row-major on disk, column-major in memory.
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r < n; ++r) data.push_back(flat(r * n + c));
    }
  }
  std::optional<std::vector<double>> weights;
  if (j.contains("weights")) {
    const Vector w = detail::to_vector(j.at("weights"), where + ".weights");
    weights = std::vector<double>(w.data(), w.data() + w.size());
  }
  try {
    return RotationEnsemble(n, seed.get<std::uint64_t>(), std::move(data), std::move(weights));
  } catch (const Error& e) {
    throw ParseError(where + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Query files: {"d": int, "dim": int, "tuples": [[[floats]...]...]}

struct QueryFile {
  int d = 0;
  int dim = 0;
  std::vector<MomentQuery> tuples;
};

inline json to_json(const QueryFile& file) {
  json tuples = json::array();
  for (const auto& q : file.tuples) {
    json tuple = json::array();
    for (const auto& f : q.freqs()) tuple.push_back(detail::from_vector(f));
    tuples.push_back(tuple);
  }
  return {{"d", file.d}, {"dim", file.dim}, {"tuples", tuples}};
}

/// Every tuple must hold exactly d vectors of dimension dim.
inline QueryFile queries_from_json(const json& j, const std::string& where = "queries") {
  QueryFile file;
  file.d = detail::positive_int(detail::require(j, "d", where), where + ".d");
  file.dim = detail::positive_int(detail::require(j, "dim", where), where + ".dim");
  const auto& tuples = detail::require(j, "tuples", where);
  if (!tuples.is_array()) throw ParseError(where + ".tuples: expected an array");
  for (std::size_t t = 0; t < tuples.size(); ++t) {
    const std::string at = where + ".tuples[" + std::to_string(t) + "]";
    if (!tuples[t].is_array() || tuples[t].size() != static_cast<std::size_t>(file.d)) {
      throw ParseError(at + ": expected " + std::to_string(file.d) + " frequency vectors");
    }
    std::vector<Vector> freqs;
    for (std::size_t k = 0; k < tuples[t].size(); ++k) {
      Vector v = detail::to_vector(tuples[t][k], at + "[" + std::to_string(k) + "]");
      if (v.size() != file.dim) throw ParseError(at + "[" + std::to_string(k) + "]: expected dimension " + std::to_string(file.dim));
      freqs.push_back(std::move(v));
    }
    try {
      file.tuples.emplace_back(std::move(freqs));
    } catch (const Error& e) {
      throw ParseError(at + ": " + e.what());
    }
  }
  return file;
}

inline QueryFile read_queries(const std::string& path) { return queries_from_json(read_json_file(path), path); }

// ---------------------------------------------------------------------------
// Estimates and lift reports

inline json to_json(const MomentEstimate& est) {
  return {{"value_re", est.value.real()},
          {"value_im", est.value.imag()},
          {"std_error", est.std_error},
          {"n_samples", est.n_samples}};
}

inline MomentEstimate estimate_from_json(const json& j, const std::string& where = "estimate") {
  MomentEstimate est;
  est.value = {detail::require(j, "value_re", where).get<double>(), detail::require(j, "value_im", where).get<double>()};
  est.std_error = detail::require(j, "std_error", where).get<double>();
  est.n_samples = detail::require(j, "n_samples", where).get<std::size_t>();
  return est;
}

inline json to_json(const SliceFrame& frame) {
  json etas = json::array();
  for (const auto& eta : frame.etas) etas.push_back(detail::from_vector(eta));
  return {{"n", frame.n}, {"m", frame.m}, {"q", detail::row_major(frame.q.matrix())}, {"etas", etas}};
}

inline json to_json(const LiftReport& report) {
  json omegas = json::array();
  for (const auto& w : report.query().freqs()) omegas.push_back(detail::from_vector(w));
  json out = {{"query", {{"d", report.query().order()}, {"dim", report.query().dim()}, {"omegas", omegas}}},
              {"frame", to_json(report.frame())},
              {"recovered", to_json(report.recovered())}};
  out["reference"] = report.reference() ? to_json(*report.reference()) : json(nullptr);
  const auto residual = report.residual();
  out["residual"] = residual ? json(*residual) : json(nullptr);
  return out;
}

// ---------------------------------------------------------------------------
// CSV

/// Minimal CSV builder: header is mandatory, fields are joined with ','.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) : columns_(header.size()) { write_row(header); }

  void write_row(const std::vector<std::string>& fields) {
    if (fields.size() != columns_) throw Error("CSV row has " + std::to_string(fields.size()) + " fields, expected " + std::to_string(columns_));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  std::size_t columns_;
  std::ostringstream out_;
};

}  // namespace momentlift::io
