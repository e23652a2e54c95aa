#include "fatformer/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace ftf {

double accuracy(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw ContractError("accuracy: need matching non-empty scores and labels");
    int correct = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        const int pred = scores[i] > 0.5 ? 1 : 0;
        if (pred == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw ContractError("average_precision: need matching non-empty scores and labels");
    int positives = 0;
    for (int y : labels) positives += y;
    if (positives == 0 || positives == static_cast<int>(labels.size())) {
        const double acc = accuracy(scores, labels);
        throw DataError("average precision undefined for single-class split (ACC = " +
                        std::to_string(acc) + ")");
    }

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&scores](size_t a, size_t b) { return scores[a] > scores[b]; });

    double sum = 0;
    int seen_pos = 0;
    for (size_t rank = 0; rank < order.size(); ++rank) {
        if (labels[order[rank]] == 1) {
            ++seen_pos;
            sum += static_cast<double>(seen_pos) / static_cast<double>(rank + 1);
        }
    }
    return sum / positives;
}

}  // namespace ftf
