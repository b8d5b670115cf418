// Recovers a few second-order moments of a 3-D Gaussian mixture from its 2-D
// projections and compares them with the SO(3) quadrature oracle.
#include <cstdio>

#include "momentlift/momentlift.hpp"

namespace ml = momentlift;

int main() {
  ml::RngStream object_stream(2024);
  const auto obj = ml::random_mixture(3, 3, object_stream);
  const auto ens = ml::haar_ensemble(3, 200000, 7);

  ml::RngStream query_stream(11);
  std::printf("%-8s %-26s %-26s %-10s\n", "pair", "recovered", "oracle", "std_err");
  for (int t = 0; t < 5; ++t) {
    ml::Vector w1(3), w2(3);
    for (int k = 0; k < 3; ++k) {
      w1(k) = query_stream.uniform(-1.5, 1.5);
      w2(k) = query_stream.uniform(-1.5, 1.5);
    }
    const ml::MomentQuery query({w1, w2});
    const auto report = ml::recover_full_moment(obj, query, 2, ens);
    const auto oracle = ml::quadrature_full_moment(obj, query, ml::kDefaultSo3Nodes);
    const auto& rec = report.recovered();
    std::printf("%-8d %+.5e%+.5ei %+.5e%+.5ei %.3e\n", t, rec.value.real(), rec.value.imag(), oracle.real(),
                oracle.imag(), rec.std_error);
  }
  return 0;
}
