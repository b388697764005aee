#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "abcrf/forest.hpp"

namespace abcrf {

// Per-query normalized weights over training records: the leaf co-membership
// mass of the query, averaged over trees. Entries are stored sparse, indices
// ascending, all weights positive.
struct WeightVector {
  std::vector<std::uint32_t> index;
  std::vector<double> weight;

  double sum() const;
};

// w_t = (1/B) sum_b n_b^(t) 1{record t in L_b(query)} / |L_b(query)|, with
// |L_b| the bootstrap-multiplicity mass of the query's leaf. Accumulation
// order is fixed (per record, trees ascending) so results are reproducible
// to the last bit.
WeightVector weights(const Forest& forest, std::span<const double> query);

// sum_t w_t tau^(t); equals predict_mean up to accumulation order.
double expectation(const WeightVector& w, std::span<const double> responses);

// Right-continuous weighted empirical cdf F(x) = sum_t w_t 1{tau^(t) <= x}.
double cdf(const WeightVector& w, std::span<const double> responses, double at);

// inf{tau^(t) : F(tau^(t)) >= alpha}; always an observed training response.
double quantile(const WeightVector& w, std::span<const double> responses, double alpha);

// Generic weighted quantile over an arbitrary sample, same right-continuous
// inversion; weights need not be normalized.
double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double alpha);

// (response, weight) pairs with positive weight, sorted by response.
std::vector<std::pair<double, double>> weighted_sample(const WeightVector& w,
                                                       std::span<const double> responses);

// CSV export of weighted_sample: header `response,weight`.
void write_weighted_sample_csv(const WeightVector& w, std::span<const double> responses,
                               const std::string& path);

}  // namespace abcrf
