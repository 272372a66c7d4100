#include "orderby/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace orderby {
namespace {

// Strict inversions (a[i] > a[j] for i < j) via merge sort; ties contribute
// nothing. O(n log n), so the pair-enumeration oracle in the tests stays an
// independent route.
std::int64_t count_inversions(std::vector<double>& a, std::vector<double>& scratch,
                              std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t inv = count_inversions(a, scratch, lo, mid) + count_inversions(a, scratch, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (a[j] < a[i]) {
            inv += std::int64_t(mid - i);  // a[i..mid) all exceed a[j]
            scratch[k++] = a[j++];
        } else {
            scratch[k++] = a[i++];
        }
    }
    while (i < mid) scratch[k++] = a[i++];
    while (j < hi) scratch[k++] = a[j++];
    std::copy(scratch.begin() + lo, scratch.begin() + hi, a.begin() + lo);
    return inv;
}

}  // namespace

double kendall_tau_b(const Ranking& predicted,
                     const std::unordered_map<std::string, double>& truth) {
    const auto& ids = predicted.ordered_ids;
    if (ids.size() != truth.size())
        throw std::invalid_argument("kendall_tau_b: predicted and truth cover different keys");

    // Truth ranks in predicted order; the predicted ranking itself is strict,
    // so discordant pairs are exactly the strict inversions of this sequence.
    std::vector<double> y;
    y.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = truth.find(id);
        if (it == truth.end())
            throw std::invalid_argument("kendall_tau_b: id not present in truth: " + id);
        y.push_back(it->second);
    }

    const std::int64_t n = std::int64_t(y.size());
    const std::int64_t n0 = n * (n - 1) / 2;
    if (n0 == 0) return std::numeric_limits<double>::quiet_NaN();

    std::vector<double> sorted(y);
    std::sort(sorted.begin(), sorted.end());
    std::int64_t tied_truth = 0;  // pairs tied in truth
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        std::int64_t t = std::int64_t(j - i);
        tied_truth += t * (t - 1) / 2;
        i = j;
    }
    if (tied_truth == n0) return std::numeric_limits<double>::quiet_NaN();

    std::vector<double> scratch(y.size());
    std::int64_t discordant = count_inversions(y, scratch, 0, y.size());
    std::int64_t concordant = n0 - tied_truth - discordant;

    return double(concordant - discordant) /
           std::sqrt(double(n0 - tied_truth) * double(n0));
}

double ndcg_at_k(const Ranking& predicted, const std::unordered_map<std::string, int>& relevance,
                 int k) {
    if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");

    std::vector<int> rels;
    rels.reserve(predicted.ordered_ids.size());
    for (const auto& id : predicted.ordered_ids) {
        auto it = relevance.find(id);
        rels.push_back(it == relevance.end() ? 0 : it->second);
    }

    const std::size_t cut = std::min<std::size_t>(std::size_t(k), rels.size());
    auto dcg = [cut](const std::vector<int>& r) {
        double sum = 0;
        for (std::size_t i = 0; i < cut; ++i)
            sum += (std::exp2(double(r[i])) - 1.0) / std::log2(double(i) + 2.0);
        return sum;
    };

    double got = dcg(rels);
    std::vector<int> ideal(rels);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double best = dcg(ideal);
    return best == 0.0 ? 0.0 : got / best;
}

double agreement_fraction(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    if (a.size() != b.size())
        throw std::invalid_argument("agreement_fraction: length mismatch");
    if (a.empty()) throw std::invalid_argument("agreement_fraction: empty input");
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - b[i]) <= tol) ++agree;
    }
    return double(agree) / double(a.size());
}

LogLinearFit fit_log_linear(const std::vector<SweepPoint>& points) {
    std::vector<double> xs, ys;
    for (const auto& p : points) {
        if (!(p.tokens > 0))
            throw std::invalid_argument("fit_log_linear: token counts must be positive");
        if (!std::isfinite(p.quality)) continue;  // failed sweep rows carry NaN quality
        xs.push_back(std::log(p.tokens));
        ys.push_back(p.quality);
    }
    std::size_t distinct = 0;
    {
        std::vector<double> sorted(xs);
        std::sort(sorted.begin(), sorted.end());
        distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
    }
    if (distinct < 2)
        throw InsufficientData("fit_log_linear: need at least 2 points with distinct token counts");

    const double n = double(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    LogLinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy == 0) {
        fit.r_squared = 1.0;  // a constant series is fit exactly
    } else {
        double sse = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
            sse += e * e;
        }
        fit.r_squared = 1.0 - sse / syy;
    }
    return fit;
}

}  // namespace orderby
