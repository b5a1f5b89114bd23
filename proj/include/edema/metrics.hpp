#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edema/common.hpp"

namespace edema::metrics {

/// True severity plus a model's 4-way probability vector.
struct ScoredSample {
    std::string image_id;
    Severity true_label = Severity::none;
    std::array<double, 4> scores{};  // entries >= 0, sum within 1e-9 of 1
};

/// A binary severity comparison: disjoint negative and positive grade sets.
struct Comparison {
    std::string name;     // machine name, e.g. "0v123"
    std::string display;  // e.g. "0 vs 1, 2, 3"
    std::set<int> neg;
    std::set<int> pos;
};

/// The standard nine comparisons: six pairwise plus the three dichotomies
/// 0 | 1,2,3   0,1 | 2,3   0,1,2 | 3.
const std::vector<Comparison>& standard_comparisons();

enum class ScalarMode {
    pos_probability_ratio,  // sum(pos scores) / (sum(pos) + sum(neg)); 0/0 -> 0.5
    expected_severity,      // sum_c c * p_c, independent of the comparison
};

struct BinaryScore {
    bool positive = false;
    double score = 0.0;
};

/// Restricts a sample to a comparison. Absent when the true label is in
/// neither grade set.
std::optional<BinaryScore> scalarize(const ScoredSample& sample, const Comparison& cmp,
                                     ScalarMode mode = ScalarMode::pos_probability_ratio);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocResult {
    std::vector<RocPoint> points;  // from (0,0) to (1,1), nondecreasing
    double auc = 0.0;              // rank form: (concordant + 0.5 ties) / (n_pos * n_neg)
    double auc_trapezoid = 0.0;    // cross-check; must agree with auc to 1e-12
};

/// Threshold sweep over all distinct scores with explicit tie handling.
/// Requires at least one positive and one negative sample.
RocResult roc_auc(const std::vector<BinaryScore>& samples);

struct DelongResult {
    double auc_a = 0.0;
    double auc_b = 0.0;
    double var_a = 0.0;
    double var_b = 0.0;
    double cov = 0.0;
    double z = 0.0;
    double p = 1.0;
};

/// Paired comparison of two AUCs over the same samples via structural
/// components (win 1, tie 0.5, loss 0). Needs >= 2 positives and >= 2
/// negatives. A degenerate variance with equal AUCs yields p = 1; with
/// unequal AUCs it is an error.
DelongResult delong_paired_test(const std::vector<bool>& truth,
                                const std::vector<double>& scores_a,
                                const std::vector<double>& scores_b);

struct SignificanceConfig {
    double alpha = 0.05;
    int m = 9;
};

/// alpha / m, unrounded.
double bonferroni_threshold(const SignificanceConfig& cfg);

/// Confusion counts with rows indexed by predicted grade and columns by true
/// grade; each row's fractions are normalized by the row total (the number
/// of images predicted as that grade). Rows never predicted have undefined
/// (NaN) fractions.
struct ConfusionMatrix {
    std::array<std::array<std::size_t, 4>, 4> counts{};  // [predicted][true]
    std::array<std::array<double, 4>, 4> row_fractions{};
    std::size_t total = 0;
};
ConfusionMatrix confusion_matrix(const std::vector<Severity>& truth,
                                 const std::vector<Severity>& predicted);

/// Quadratic-weighted Cohen's kappa over k ordinal levels:
/// w_ij = 1 - (i-j)^2/(k-1)^2. Identical inputs give exactly 1.0.
double cohen_kappa_quadratic(const std::vector<Severity>& a, const std::vector<Severity>& b,
                             int levels = 4);

struct Prf {
    std::optional<double> precision;    // tp / (tp + fp)
    std::optional<double> sensitivity;  // tp / (tp + fn)
    std::optional<double> specificity;  // tn / (tn + fp)
};
/// Ratios with zero denominators are reported absent, not as errors.
Prf prf_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);

struct FoldAggregate {
    double mean = 0.0;
    std::optional<double> stddev;  // sample std (n-1); absent for a single value
};
FoldAggregate aggregate_folds(const std::vector<double>& per_fold_values);

struct TTestResult {
    double t = 0.0;
    double df = 0.0;  // fractional under the Welch variant
    double p = 1.0;
};
/// Pooled-variance two-sided Student's t-test; both lists need >= 2 values
/// and the pooled variance must be positive. welch switches to the
/// Welch-Satterthwaite form (fractional df).
TTestResult two_sample_t_test(const std::vector<double>& a, const std::vector<double>& b,
                              bool welch = false);

struct ChiSquaredResult {
    double chi2 = 0.0;
    int df = 0;
    double p = 1.0;
};
/// Pearson chi-squared test of independence on an r x c count table; all
/// row and column marginals must be positive.
ChiSquaredResult chi_squared_test(const std::vector<std::vector<double>>& table);

// Tail probabilities, evaluated internally by series/continued fractions
// (no statistical tables). Accuracy is pinned by the test fixtures.
double normal_sf(double z);                                   // P(Z > z)
double regularized_incomplete_beta(double a, double b, double x);
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);
double students_t_two_sided_p(double t, double df);
double chi_squared_sf(double x, double df);

/// Score files: CSV `image_id,true_label,p0,p1,p2,p3`.
std::vector<ScoredSample> load_score_csv(const std::filesystem::path& path);
void write_score_csv(const std::filesystem::path& path, const std::vector<ScoredSample>& samples);

inline Severity argmax_label(const std::array<double, 4>& scores) {
    int best = 0;
    for (int c = 1; c < 4; ++c) {
        if (scores[c] > scores[best]) best = c;
    }
    return severity_from_int(best);
}

}  // namespace edema::metrics
