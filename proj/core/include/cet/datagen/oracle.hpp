#pragma once

#include <cstdint>
#include <vector>

#include "cet/datagen/dataset.hpp"

namespace cet::data {

struct OracleResult {
  double accuracy = 0.0;
  std::size_t n = 0;
};

// Learnability gate: logistic regression from the standardized earnings
// vector to the sign of the planted drift. The sign is a linear function of
// the raw vector, so near-perfect accuracy certifies that the dataset
// carries the signal it claims to.
OracleResult earnings_sign_oracle(const DataSet& ds, int steps = 400,
                                  double lr = 0.05);

// Per offset 1..5: fraction of post-announcement days whose realized
// close-to-close log move agrees with the planted sign. Decays toward 0.5
// as the drift fades under drift_decay < 1.
std::vector<double> day_sign_match(const DataSet& ds);

}  // namespace cet::data
