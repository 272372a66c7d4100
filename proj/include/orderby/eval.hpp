#pragma once

#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "orderby/core.hpp"

namespace orderby {

struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Kendall tau-b between a strict predicted ranking and a truth assignment
// of rank values (smaller = better; ties allowed):
//   (C - D) / sqrt((C + D + T_pred)(C + D + T_truth)).
// `predicted` must cover exactly the ids present in `truth`. Returns NaN
// when every truth rank is tied (the coefficient is undefined there).
double kendall_tau_b(const Ranking& predicted,
                     const std::unordered_map<std::string, double>& truth);

// nDCG@k with exponential gain (2^rel - 1). Relevance is looked up per id;
// ids without a judgment count as 0. The ideal ranking is formed from the
// predicted list's own relevance multiset; an all-zero list scores 0.
double ndcg_at_k(const Ranking& predicted, const std::unordered_map<std::string, int>& relevance,
                 int k);

// Fraction of positions where |a[i] - b[i]| <= tol. Lengths must match.
double agreement_fraction(const std::vector<double>& a, const std::vector<double>& b, double tol);

struct SweepPoint {
    double tokens = 0;   // total prompt + completion tokens
    double quality = 0;  // tau in [-1,1] or nDCG in [0,1]
    std::string label;
};

struct LogLinearFit {
    double intercept = 0;
    double slope = 0;
    double r_squared = 0;
};

// Least-squares fit of quality = intercept + slope * ln(tokens). Throws
// InsufficientData with fewer than two distinct token counts.
LogLinearFit fit_log_linear(const std::vector<SweepPoint>& points);

}  // namespace orderby
