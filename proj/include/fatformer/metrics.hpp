#pragma once

// Detection metrics over fake-class scores: accuracy with ties broken
// toward "real", and rank-based average precision with stable tie order by
// sample index.

#include <vector>

#include "fatformer/errors.hpp"

namespace ftf {

// Predicts fake iff score > 0.5 (a tie counts as real).
double accuracy(const std::vector<double>& scores, const std::vector<int>& labels);

// Mean over positives, in descending score order, of
// (positives seen so far) / rank. Throws DataError when the split has a
// single class; the message carries the accuracy that is still defined.
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

}  // namespace ftf
