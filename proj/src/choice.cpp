#include "parkdyn/choice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace parkdyn {

std::vector<double> logit_probabilities(std::span<const double> fees,
                                        std::span<const double> attractions, double beta) {
  if (fees.empty()) throw std::invalid_argument("choice set is empty");
  if (fees.size() != attractions.size())
    throw std::invalid_argument("fees and attractions differ in length");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  std::vector<double> u(fees.size());
  for (std::size_t a = 0; a < u.size(); ++a) u[a] = attractions[a] - beta * fees[a];
  const double top = *std::max_element(u.begin(), u.end());
  double sum = 0.0;
  for (double& x : u) sum += (x = std::exp(x - top));
  for (double& x : u) x /= sum;
  return u;
}

std::size_t sample_index(std::span<const double> probabilities, double u) {
  if (probabilities.empty()) throw std::invalid_argument("choice set is empty");
  double acc = 0.0;
  for (std::size_t a = 0; a < probabilities.size(); ++a) {
    acc += probabilities[a];
    if (u < acc) return a;
  }
  // u landed in the rounding slack above the last cumulative sum
  for (std::size_t a = probabilities.size(); a-- > 0;)
    if (probabilities[a] > 0.0) return a;
  return probabilities.size() - 1;
}

ChoiceResult choose_parking_alternative(std::span<const double> fees,
                                        std::span<const double> attractions, double beta,
                                        Rng& rng) {
  ChoiceResult r;
  r.probabilities = logit_probabilities(fees, attractions, beta);
  r.chosen = sample_index(r.probabilities, std::uniform_real_distribution<double>(0.0, 1.0)(rng));
  return r;
}

}  // namespace parkdyn
