#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "momentlift/momentlift.hpp"

namespace momentlift::cli {

namespace {

using io::format_double;
using io::json;

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const ThresholdError& e) {
    err << "threshold violation: " << e.what() << '\n';
    return kExitModel;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << '\n';
    return kExitModel;
  } catch (const UnsupportedGroupError& e) {
    err << "unsupported: " << e.what() << '\n';
    return kExitModel;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    io::write_text_file(path, text);
  }
}

int resolve_m(int requested, int n) { return requested == 0 ? n - 1 : requested; }

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

json optional_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

// |a - b| / sqrt(se_a^2 + se_b^2), 0 for identical values and +inf when the
// values differ but both errors vanish.
double standardized(Complex a, double se_a, Complex b, double se_b) {
  const double diff = std::abs(a - b);
  if (diff == 0.0) return 0.0;
  const double se = std::hypot(se_a, se_b);
  return se > 0.0 ? diff / se : HUGE_VAL;
}

std::string format_z(double z) { return std::isinf(z) ? std::string("inf") : format_double(z); }

std::vector<std::string> frequency_columns(const std::string& prefix, int d, int dim) {
  std::vector<std::string> cols;
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < dim; ++k) cols.push_back(prefix + std::to_string(j + 1) + "_" + std::to_string(k + 1));
  }
  return cols;
}

void append_frequencies(std::vector<std::string>& row, const MomentQuery& q) {
  for (const auto& f : q.freqs()) {
    for (Eigen::Index k = 0; k < f.size(); ++k) row.push_back(format_double(f(k)));
  }
}

constexpr const char* kKamPlotScript = R"PY(#!/usr/bin/env python3
"""Residual plots for a second-moment recovery run (long-format CSV input)."""
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main(path, out):
    rows = list(csv.DictReader(open(path, newline="")))
    res = [r for r in rows if r["metric"] == "residual"]
    zs = [r for r in rows if r["metric"] == "z"]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, data, label in ((axes[0], res, "relative residual"), (axes[1], zs, "|z|")):
        x = [float(r["norm_omega1"]) for r in data]
        y = [float(r["norm_omega2"]) for r in data]
        c = [float(r["value"]) if r["value"] != "inf" else float("nan") for r in data]
        sc = ax.scatter(x, y, c=c, cmap="viridis")
        ax.set_xlabel("|omega_1|")
        ax.set_ylabel("|omega_2|")
        ax.set_title(label)
        fig.colorbar(sc, ax=ax)
    fig.tight_layout()
    fig.savefig(out, dpi=150)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2] if len(sys.argv) > 2 else "kam_residuals.png")
)PY";

}  // namespace

std::vector<MomentQuery> random_queries(int d, int dim, int count, double radius, std::uint64_t seed,
                                        std::uint64_t stream_index) {
  if (d < 1 || dim < 1) throw ValidationError("query order and dimension must be positive");
  if (count < 0) throw ValidationError("query count must be non-negative");
  if (!(radius >= 0.0)) throw ValidationError("radius must be non-negative");
  RngStream stream(seed, stream_index);
  std::vector<MomentQuery> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) {
    std::vector<Vector> freqs;
    for (int j = 0; j < d; ++j) {
      Vector dir(dim);
      do {
        for (int k = 0; k < dim; ++k) dir(k) = stream.normal();
      } while (dir.norm() == 0.0);
      dir.normalize();
      // Uniform in the ball: radius scales like U^{1/dim}.
      const double r = radius * std::pow(stream.uniform(), 1.0 / dim);
      freqs.push_back(r * dir);
    }
    out.emplace_back(std::move(freqs));
  }
  return out;
}

int cmd_generate_object(const GenerateObjectOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.n < 1) throw ValidationError("--n must be positive");
    if (!opts.centered && opts.components < 1) throw ValidationError("--components must be positive");
    RngStream stream(opts.seed, 0);
    const GaussianMixture obj = opts.centered ? centered_gaussian(opts.n)
                                              : random_mixture(opts.n, static_cast<std::size_t>(opts.components), stream);
    emit(opts.out, io::to_json(obj).dump(2) + "\n", out);
    return int{kExitOk};
  });
}

int cmd_generate_ensemble(const GenerateEnsembleOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opts.n < 1) throw ValidationError("--n must be positive");
    RngStream stream(opts.seed, 0);
    const RotationEnsemble ens = opts.kappa == 0.0 ? haar_ensemble(opts.n, opts.samples, opts.seed)
                                                   : sample_tilted_ensemble(opts.n, opts.kappa, opts.samples, stream);
    emit(opts.out, io::to_json(ens).dump() + "\n", out);
    return int{kExitOk};
  });
}

int cmd_generate_queries(const GenerateQueriesOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    io::QueryFile file;
    file.d = opts.d;
    file.dim = opts.n;
    file.tuples = random_queries(opts.d, opts.n, opts.pairs, opts.radius, opts.seed, 0);
    emit(opts.out, io::to_json(file).dump(2) + "\n", out);
    return int{kExitOk};
  });
}

int cmd_slice_check(const SliceCheckOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const GaussianMixture obj = io::read_mixture(opts.object);
    const int n = obj.dim();
    const int m = resolve_m(opts.m, n);
    if (m < 1 || m >= n) throw ModelError("slice check needs 1 <= m < n");
    if (opts.trials < 0) throw ValidationError("--trials must be non-negative");

    RngStream rotations(opts.seed, 0);
    RngStream freqs(opts.seed, 1);
    io::CsvWriter csv({"trial", "residual"});
    double worst = 0.0;
    for (int t = 0; t < opts.trials; ++t) {
      const RotationMatrix r = haar_rotation(n, rotations);
      Vector eta(m);
      for (int k = 0; k < m; ++k) eta(k) = freqs.uniform(-3.0, 3.0);
      const Complex lhs = projected_fourier_eval(obj, r, eta);
      const Complex rhs = fourier_eval(obj, r.matrix().transpose() * canonical_embed(eta, n));
      const double residual = relative_residual(lhs, rhs);
      worst = std::max(worst, residual);
      csv.write_row({std::to_string(t), format_double(residual)});
    }
    if (!opts.out.empty()) io::write_text_file(opts.out, csv.str());
    const bool passed = worst <= opts.tolerance;
    json summary = {{"n", n},
                    {"m", m},
                    {"trials", opts.trials},
                    {"seed", opts.seed},
                    {"max_residual", worst},
                    {"tolerance", opts.tolerance},
                    {"passed", passed}};
    if (opts.out.empty()) out << csv.str();
    out << summary.dump() << '\n';
    if (!passed) {
      err << "slice identity residual " << format_double(worst) << " exceeds tolerance " << format_double(opts.tolerance)
          << '\n';
      return int{kExitModel};
    }
    return int{kExitOk};
  });
}

int cmd_recover(const RecoverOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const GaussianMixture obj = io::read_mixture(opts.object);
    const io::QueryFile queries = io::read_queries(opts.queries);
    const int n = obj.dim();
    const int m = resolve_m(opts.m, n);
    if (m < 1 || m >= n) throw ModelError("recovery needs 1 <= m < n (m=" + std::to_string(m) + ", n=" + std::to_string(n) + ")");
    if (queries.dim != n) throw ValidationError("query dimension " + std::to_string(queries.dim) + " does not match object dimension " + std::to_string(n));
    for (std::size_t t = 0; t < queries.tuples.size(); ++t) {
      if (queries.tuples[t].order() > m) {
        throw ThresholdError("tuple " + std::to_string(t) + " has order d=" + std::to_string(queries.tuples[t].order()) +
                             " > m=" + std::to_string(m) + "; recovery requires d <= m");
      }
    }
    const std::string& mode = opts.reference;
    if (mode != "none" && mode != "quadrature" && mode != "montecarlo") {
      throw ValidationError("--reference must be one of none, quadrature, montecarlo");
    }
    if (opts.samples < 1) throw ValidationError("--samples must be positive");
    const int nodes = opts.nodes > 0 ? opts.nodes : (n == 2 ? kDefaultSo2Nodes : kDefaultSo3Nodes);
    if (mode == "quadrature" && n > 3) throw UnsupportedGroupError("quadrature reference needs n <= 3");

    const RotationEnsemble ens = haar_ensemble(n, opts.samples, opts.seed, 0);
    std::optional<RotationEnsemble> reference_ens;
    if (mode == "montecarlo") reference_ens = haar_ensemble(n, opts.samples, opts.seed, 1);

    std::vector<std::string> header{"tuple"};
    for (auto& c : frequency_columns("omega", queries.d, n)) header.push_back(c);
    for (const char* c : {"recovered_re", "recovered_im", "std_error", "n_samples", "reference_re", "reference_im",
                          "reference_std_error", "residual", "within_tolerance"}) {
      header.emplace_back(c);
    }
    io::CsvWriter csv(header);
    double worst = 0.0;
    std::size_t within = 0;
    for (std::size_t t = 0; t < queries.tuples.size(); ++t) {
      const MomentQuery& q = queries.tuples[t];
      LiftReport report = recover_full_moment(obj, q, m, ens);
      if (mode == "quadrature") {
        report.attach_reference({quadrature_full_moment(obj, q, nodes), 0.0,
                                 static_cast<std::size_t>(n == 2 ? nodes : nodes * nodes * nodes)});
      } else if (mode == "montecarlo") {
        report.attach_reference(estimate_full_moment(obj, q, *reference_ens));
      }
      std::vector<std::string> row{std::to_string(t)};
      append_frequencies(row, q);
      const auto& rec = report.recovered();
      row.push_back(format_double(rec.value.real()));
      row.push_back(format_double(rec.value.imag()));
      row.push_back(format_double(rec.std_error));
      row.push_back(std::to_string(rec.n_samples));
      if (const auto& ref = report.reference()) {
        const double residual = *report.residual();
        const double diff = std::abs(rec.value - ref->value);
        const double bound = std::max(5.0 * std::hypot(rec.std_error, ref->std_error),
                                      opts.tolerance * std::max(1.0, std::abs(ref->value)));
        const bool ok = diff <= bound;
        worst = std::max(worst, residual);
        within += ok ? 1 : 0;
        row.push_back(format_double(ref->value.real()));
        row.push_back(format_double(ref->value.imag()));
        row.push_back(format_double(ref->std_error));
        row.push_back(format_double(residual));
        row.push_back(ok ? "1" : "0");
      } else {
        for (int k = 0; k < 5; ++k) row.emplace_back();
      }
      csv.write_row(row);
    }
    emit(opts.out, csv.str(), out);
    if (!opts.out.empty()) {
      json summary = {{"n", n}, {"m", m}, {"d", queries.d}, {"tuples", queries.tuples.size()},
                      {"samples", opts.samples}, {"seed", opts.seed}, {"reference", mode}};
      if (mode != "none" && !queries.tuples.empty()) {
        summary["max_residual"] = worst;
        summary["fraction_within"] = static_cast<double>(within) / static_cast<double>(queries.tuples.size());
      } else {
        summary["max_residual"] = nullptr;
        summary["fraction_within"] = nullptr;
      }
      out << summary.dump() << '\n';
    }
    return int{kExitOk};
  });
}

int cmd_kam_experiment(const KamOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const GaussianMixture obj = io::read_mixture(opts.object);
    if (obj.dim() != 3) throw ModelError("the second-moment experiment needs a 3-D object (n=" + std::to_string(obj.dim()) + ")");
    if (opts.pairs < 0) throw ValidationError("--pairs must be non-negative");
    if (opts.samples < 1) throw ValidationError("--samples must be positive");
    constexpr int n = 3, m = 2, d = 2;

    const auto queries = random_queries(d, n, opts.pairs, 3.0, opts.seed, 2);
    std::optional<RotationEnsemble> ens;
    if (!queries.empty()) ens = haar_ensemble(n, opts.samples, opts.seed, 0);

    std::vector<std::string> header{"pair"};
    for (auto& c : frequency_columns("omega", d, n)) header.push_back(c);
    for (const char* c : {"norm_omega1", "norm_omega2", "recovered_re", "recovered_im", "std_error", "reference_re",
                          "reference_im", "residual", "z", "within_tolerance"}) {
      header.emplace_back(c);
    }
    io::CsvWriter csv(header);
    io::CsvWriter long_csv({"pair", "norm_omega1", "norm_omega2", "metric", "value"});
    std::vector<double> residuals;
    std::size_t within = 0;
    json reports = json::array();
    for (std::size_t t = 0; t < queries.size(); ++t) {
      const MomentQuery& q = queries[t];
      LiftReport report = recover_full_moment(obj, q, m, *ens);
      report.attach_reference({quadrature_full_moment(obj, q, opts.nodes), 0.0,
                               static_cast<std::size_t>(opts.nodes) * opts.nodes * opts.nodes});
      const auto& rec = report.recovered();
      const auto& ref = *report.reference();
      const double residual = *report.residual();
      const double z = standardized(rec.value, rec.std_error, ref.value, 0.0);
      const double diff = std::abs(rec.value - ref.value);
      const bool ok = diff <= std::max(5.0 * rec.std_error, opts.tolerance * std::max(1.0, std::abs(ref.value)));
      residuals.push_back(residual);
      within += ok ? 1 : 0;
      reports.push_back(io::to_json(report));

      const std::string n1 = format_double(q[0].norm());
      const std::string n2 = format_double(q[1].norm());
      std::vector<std::string> row{std::to_string(t)};
      append_frequencies(row, q);
      for (const auto& s : {n1, n2, format_double(rec.value.real()), format_double(rec.value.imag()),
                            format_double(rec.std_error), format_double(ref.value.real()),
                            format_double(ref.value.imag()), format_double(residual), format_z(z)}) {
        row.push_back(s);
      }
      row.emplace_back(ok ? "1" : "0");
      csv.write_row(row);
      long_csv.write_row({std::to_string(t), n1, n2, "residual", format_double(residual)});
      long_csv.write_row({std::to_string(t), n1, n2, "z", format_z(z)});
    }

    const std::optional<double> max_residual =
        residuals.empty() ? std::nullopt : std::optional<double>(*std::max_element(residuals.begin(), residuals.end()));
    json summary = {{"n", n},
                    {"m", m},
                    {"d", d},
                    {"pairs", opts.pairs},
                    {"samples", opts.samples},
                    {"nodes", opts.nodes},
                    {"seed", opts.seed},
                    {"max_residual", optional_number(max_residual)},
                    {"median_residual", optional_number(median(residuals))},
                    {"fraction_within",
                     queries.empty() ? json(nullptr) : json(static_cast<double>(within) / static_cast<double>(queries.size()))}};
    if (!opts.out.empty()) {
      io::write_text_file(opts.out + ".csv", csv.str());
      io::write_text_file(opts.out + "_long.csv", long_csv.str());
      io::write_text_file(opts.out + "_reports.json", reports.dump(2) + "\n");
      io::write_text_file(opts.out + "_summary.json", summary.dump(2) + "\n");
      io::write_text_file(opts.out + "_plot.py", kKamPlotScript);
    } else {
      out << csv.str();
    }
    out << summary.dump() << '\n';
    return int{kExitOk};
  });
}

int cmd_reweight_demo(const ReweightOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!(opts.kappa >= 0.0)) throw ValidationError("--kappa must be >= 0");
    const GaussianMixture obj = io::read_mixture(opts.object);
    const int n = obj.dim();
    const int m = resolve_m(opts.m, n);
    if (m < 1 || m >= n) throw ModelError("projected moments need 1 <= m < n");
    if (opts.samples < 1) throw ValidationError("--samples must be positive");

    std::vector<MomentQuery> queries;
    int d = opts.d;
    if (!opts.queries.empty()) {
      const auto file = io::read_queries(opts.queries);
      if (file.dim != m) throw ValidationError("reweighting queries live in the slice: dim must equal m");
      queries = file.tuples;
      d = file.d;
    } else {
      queries = random_queries(d, m, opts.pairs, 2.0, opts.seed, 3);
    }

    const RotationEnsemble haar = haar_ensemble(n, opts.samples, opts.seed, 0);
    RngStream tilt_stream(opts.seed, 0);
    const RotationEnsemble tilted = sample_tilted_ensemble(n, opts.kappa, opts.samples, tilt_stream);

    std::vector<std::string> header{"query"};
    for (auto& c : frequency_columns("eta", d, m)) header.push_back(c);
    for (const char* c : {"haar_re", "haar_im", "haar_se", "tilted_re", "tilted_im", "tilted_se", "reweighted_re",
                          "reweighted_im", "reweighted_se", "z_tilted", "z_reweighted"}) {
      header.emplace_back(c);
    }
    io::CsvWriter csv(header);
    double max_z_tilted = 0.0;
    double max_z_reweighted = 0.0;
    for (std::size_t t = 0; t < queries.size(); ++t) {
      const MomentQuery& q = queries[t];
      const MomentEstimate a = estimate_proj_moment(obj, q, m, haar);
      const auto tilted_samples = proj_moment_samples(obj, q, m, tilted);
      const MomentEstimate b = summarize_samples(tilted_samples);
      const MomentEstimate c = summarize_samples(tilted_samples, tilted.weights());
      const double zb = standardized(b.value, b.std_error, a.value, a.std_error);
      const double zc = standardized(c.value, c.std_error, a.value, a.std_error);
      max_z_tilted = std::max(max_z_tilted, zb);
      max_z_reweighted = std::max(max_z_reweighted, zc);
      std::vector<std::string> row{std::to_string(t)};
      append_frequencies(row, q);
      for (const auto* e : {&a, &b, &c}) {
        row.push_back(format_double(e->value.real()));
        row.push_back(format_double(e->value.imag()));
        row.push_back(format_double(e->std_error));
      }
      row.push_back(format_z(zb));
      row.push_back(format_z(zc));
      csv.write_row(row);
    }
    emit(opts.out, csv.str(), out);
    auto z_json = [](double z) { return std::isinf(z) ? json("inf") : json(z); };
    json summary = {{"n", n},
                    {"m", m},
                    {"d", d},
                    {"kappa", opts.kappa},
                    {"samples", opts.samples},
                    {"seed", opts.seed},
                    {"queries", queries.size()},
                    {"max_z_tilted", z_json(max_z_tilted)},
                    {"max_z_reweighted", z_json(max_z_reweighted)},
                    {"reweighted_within_5se", max_z_reweighted <= 5.0},
                    {"tilted_bias_detected", max_z_tilted > 5.0}};
    if (!opts.out.empty()) out << summary.dump() << '\n';
    return int{kExitOk};
  });
}

}  // namespace momentlift::cli
