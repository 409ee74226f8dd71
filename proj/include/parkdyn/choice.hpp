#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace parkdyn {

using Rng = std::mt19937_64;

struct ChoiceResult {
  std::size_t chosen = 0;
  std::vector<double> probabilities;
};

/// Multinomial logit shares with utilities alpha_a - beta * fee_a.
std::vector<double> logit_probabilities(std::span<const double> fees,
                                        std::span<const double> attractions, double beta);

/// Inverse-CDF draw from `probabilities` with a uniform `u` in [0, 1).
std::size_t sample_index(std::span<const double> probabilities, double u);

ChoiceResult choose_parking_alternative(std::span<const double> fees,
                                        std::span<const double> attractions, double beta,
                                        Rng& rng);

}  // namespace parkdyn
