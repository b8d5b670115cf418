#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "momentlift/errors.hpp"
#include "momentlift/geometry.hpp"
#include "momentlift/moments.hpp"
#include "momentlift/objects.hpp"
#include "momentlift/rng.hpp"

namespace momentlift {

/// Result of lifting a full-moment query through a slice frame. The
/// reference, when attached, is an independent direct evaluation used only
/// for validation.
class LiftReport {
 public:
  LiftReport(MomentQuery query, SliceFrame frame, MomentEstimate recovered)
      : query_(std::move(query)), frame_(std::move(frame)), recovered_(recovered) {}

  const MomentQuery& query() const { return query_; }
  const SliceFrame& frame() const { return frame_; }
  const MomentEstimate& recovered() const { return recovered_; }
  const std::optional<MomentEstimate>& reference() const { return reference_; }
  /// |recovered - reference| / max(1, |reference|); present iff a reference is.
  std::optional<double> residual() const {
    if (!reference_) return std::nullopt;
    return relative_residual(recovered_.value, reference_->value);
  }

  void attach_reference(const MomentEstimate& reference) { reference_ = reference; }

 private:
  MomentQuery query_;
  SliceFrame frame_;
  MomentEstimate recovered_;
  std::optional<MomentEstimate> reference_;
};

namespace detail {

inline void check_lift_request(const GaussianMixture& obj, const MomentQuery& query, int m) {
  const int n = obj.dim();
  if (query.dim() != n) throw DimensionError("full-moment query dimension must equal the object dimension");
  if (m < 1 || m >= n) {
    throw ModelError("projection must be strictly dimension-reducing: need 1 <= m < n (m=" + std::to_string(m) +
                     ", n=" + std::to_string(n) + ")");
  }
  if (query.order() > m) {
    throw ThresholdError("moment order d=" + std::to_string(query.order()) + " exceeds slice dimension m=" +
                         std::to_string(m) + "; projected moments determine full moments only when d <= m");
  }
}

}  // namespace detail

/// Full moment at (omega_1..omega_d) from projected data alone: build the
/// slice frame (Q, eta) and evaluate the projected moment at the etas.
inline LiftReport recover_full_moment(const GaussianMixture& obj, const MomentQuery& query, int m,
                                      const RotationEnsemble& ens, unsigned workers = default_workers()) {
  detail::check_lift_request(obj, query, m);
  SliceFrame frame = build_slice_frame(query.freqs(), m);
  const MomentQuery slice_query(frame.etas);
  const MomentEstimate recovered = estimate_proj_moment(obj, slice_query, m, ens, workers);
  return LiftReport(query, std::move(frame), recovered);
}

/// Projected estimate at the etas over {R_i} against the full estimate at the
/// omegas over {Q R_i}: the substitution R -> Q^{-1} R pairs the two sample
/// by sample, so the returned relative difference is rounding error only.
inline double coupled_consistency_check(const GaussianMixture& obj, const MomentQuery& query, int m,
                                        const RotationEnsemble& ens, unsigned workers = default_workers()) {
  detail::check_lift_request(obj, query, m);
  const SliceFrame frame = build_slice_frame(query.freqs(), m);
  const MomentQuery slice_query(frame.etas);
  const auto projected = estimate_proj_moment(obj, slice_query, m, ens, workers);
  const auto coupled = ens.left_multiplied(frame.q.matrix());
  const auto full = estimate_full_moment(obj, query, coupled, workers);
  return relative_residual(projected.value, full.value);
}

struct StabilityOptions {
  /// Randomized frame completions; false uses the deterministic pivot rule.
  bool randomize_frames = true;
  /// Every trial reuses the given ensemble and the same frame stream.
  bool reuse_seeds = false;
  std::uint64_t frame_seed = 0;
};

struct StabilityResult {
  std::vector<MomentEstimate> recoveries;
  double max_deviation = 0.0;
  /// Largest pairwise |a - b| / sqrt(se_a^2 + se_b^2); 0 when every pair is identical.
  double max_standardized_deviation = 0.0;
};

/// Recovers the same query `trials` times through different slice frames,
/// each over its own Haar ensemble of the same size (trial 0 uses `ens`).
inline StabilityResult slice_choice_stability(const GaussianMixture& obj, const MomentQuery& query, int m,
                                              const RotationEnsemble& ens, int trials,
                                              const StabilityOptions& options = {},
                                              unsigned workers = default_workers()) {
  detail::check_lift_request(obj, query, m);
  if (trials < 2) throw ValidationError("slice stability needs at least two trials");

  StabilityResult result;
  for (int t = 0; t < trials; ++t) {
    const auto index = static_cast<std::uint64_t>(options.reuse_seeds ? 0 : t);
    RngStream frame_stream(options.frame_seed, index);
    const SliceFrame frame = options.randomize_frames ? build_random_slice_frame(query.freqs(), m, frame_stream)
                                                      : build_slice_frame(query.freqs(), m);
    const MomentQuery slice_query(frame.etas);
    if (index == 0) {
      result.recoveries.push_back(estimate_proj_moment(obj, slice_query, m, ens, workers));
    } else {
      const auto fresh = haar_ensemble(ens.dim(), ens.size(), ens.seed(), index);
      result.recoveries.push_back(estimate_proj_moment(obj, slice_query, m, fresh, workers));
    }
  }

  for (std::size_t a = 0; a < result.recoveries.size(); ++a) {
    for (std::size_t b = a + 1; b < result.recoveries.size(); ++b) {
      const auto& ra = result.recoveries[a];
      const auto& rb = result.recoveries[b];
      const double dev = std::abs(ra.value - rb.value);
      result.max_deviation = std::max(result.max_deviation, dev);
      const double se = std::hypot(ra.std_error, rb.std_error);
      if (dev > 0.0) {
        result.max_standardized_deviation =
            std::max(result.max_standardized_deviation, se > 0.0 ? dev / se : HUGE_VAL);
      }
    }
  }
  return result;
}

}  // namespace momentlift
