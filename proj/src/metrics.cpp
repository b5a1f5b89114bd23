#include "edema/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "edema/csv.hpp"

namespace edema::metrics {

const std::vector<Comparison>& standard_comparisons() {
    static const std::vector<Comparison> cmps = [] {
        std::vector<Comparison> v;
        for (int lo = 0; lo < 4; ++lo) {
            for (int hi = lo + 1; hi < 4; ++hi) {
                Comparison c;
                c.name = std::to_string(lo) + "v" + std::to_string(hi);
                c.display = std::to_string(lo) + " vs " + std::to_string(hi);
                c.neg = {lo};
                c.pos = {hi};
                v.push_back(std::move(c));
            }
        }
        v.push_back(Comparison{"0v123", "0 vs 1, 2, 3", {0}, {1, 2, 3}});
        v.push_back(Comparison{"01v23", "0, 1 vs 2, 3", {0, 1}, {2, 3}});
        v.push_back(Comparison{"012v3", "0, 1, 2 vs 3", {0, 1, 2}, {3}});
        return v;
    }();
    return cmps;
}

std::optional<BinaryScore> scalarize(const ScoredSample& sample, const Comparison& cmp,
                                     ScalarMode mode) {
    int level = severity_index(sample.true_label);
    bool in_pos = cmp.pos.count(level) > 0;
    bool in_neg = cmp.neg.count(level) > 0;
    if (!in_pos && !in_neg) return std::nullopt;

    double score = 0.0;
    if (mode == ScalarMode::expected_severity) {
        for (int c = 0; c < 4; ++c) score += c * sample.scores[c];
    } else {
        double pos_mass = 0.0, neg_mass = 0.0;
        for (int c : cmp.pos) pos_mass += sample.scores[c];
        for (int c : cmp.neg) neg_mass += sample.scores[c];
        double denom = pos_mass + neg_mass;
        score = denom > 0.0 ? pos_mass / denom : 0.5;
    }
    return BinaryScore{in_pos, score};
}

RocResult roc_auc(const std::vector<BinaryScore>& samples) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& s : samples) (s.positive ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) {
        throw ValidationError("roc_auc: need at least one positive and one negative sample");
    }

    std::vector<const BinaryScore*> sorted;
    sorted.reserve(samples.size());
    for (const auto& s : samples) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](const BinaryScore* a, const BinaryScore* b) {
        return a->score > b->score;
    });

    RocResult result;
    result.points.push_back({0.0, 0.0});

    // Sweep descending thresholds; samples with equal score enter together.
    double concordant = 0.0, ties = 0.0;
    std::size_t cum_tp = 0, cum_fp = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        std::size_t group_pos = 0, group_neg = 0;
        while (j < sorted.size() && sorted[j]->score == sorted[i]->score) {
            (sorted[j]->positive ? group_pos : group_neg) += 1;
            ++j;
        }
        // Positives in this group beat every negative with a lower score and
        // tie with the group's own negatives.
        std::size_t negatives_below = n_neg - cum_fp - group_neg;
        concordant += static_cast<double>(group_pos) * static_cast<double>(negatives_below);
        ties += static_cast<double>(group_pos) * static_cast<double>(group_neg);

        cum_tp += group_pos;
        cum_fp += group_neg;
        result.points.push_back({static_cast<double>(cum_fp) / static_cast<double>(n_neg),
                                 static_cast<double>(cum_tp) / static_cast<double>(n_pos)});
        i = j;
    }

    result.auc = (concordant + 0.5 * ties) /
                 (static_cast<double>(n_pos) * static_cast<double>(n_neg));

    double area = 0.0;
    for (std::size_t k = 1; k < result.points.size(); ++k) {
        const auto& a = result.points[k - 1];
        const auto& b = result.points[k];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    result.auc_trapezoid = area;

    if (std::abs(result.auc - result.auc_trapezoid) > 1e-12) {
        throw NumericError("roc_auc: rank and trapezoid AUC disagree beyond 1e-12");
    }
    return result;
}

namespace {

/// Structural components: for each positive the mean win rate over all
/// negatives, and for each negative the mean loss rate over all positives.
struct StructuralComponents {
    std::vector<double> v10;  // per positive
    std::vector<double> v01;  // per negative
    double auc = 0.0;
};

StructuralComponents structural_components(const std::vector<double>& pos,
                                           const std::vector<double>& neg) {
    StructuralComponents sc;
    sc.v10.assign(pos.size(), 0.0);
    sc.v01.assign(neg.size(), 0.0);
    for (std::size_t i = 0; i < pos.size(); ++i) {
        for (std::size_t j = 0; j < neg.size(); ++j) {
            double psi = pos[i] > neg[j] ? 1.0 : (pos[i] == neg[j] ? 0.5 : 0.0);
            sc.v10[i] += psi;
            sc.v01[j] += psi;
        }
    }
    for (auto& v : sc.v10) v /= static_cast<double>(neg.size());
    for (auto& v : sc.v01) v /= static_cast<double>(pos.size());
    sc.auc = std::accumulate(sc.v10.begin(), sc.v10.end(), 0.0) /
             static_cast<double>(pos.size());
    return sc;
}

double sample_cov(const std::vector<double>& x, double mx, const std::vector<double>& y,
                  double my) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
    return s / static_cast<double>(x.size() - 1);
}

}  // namespace

DelongResult delong_paired_test(const std::vector<bool>& truth,
                                const std::vector<double>& scores_a,
                                const std::vector<double>& scores_b) {
    if (truth.size() != scores_a.size() || truth.size() != scores_b.size()) {
        throw ValidationError("delong_paired_test: input lengths differ");
    }
    std::vector<double> pos_a, neg_a, pos_b, neg_b;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i]) {
            pos_a.push_back(scores_a[i]);
            pos_b.push_back(scores_b[i]);
        } else {
            neg_a.push_back(scores_a[i]);
            neg_b.push_back(scores_b[i]);
        }
    }
    if (pos_a.size() < 2 || neg_a.size() < 2) {
        throw ValidationError("delong_paired_test: need >= 2 positives and >= 2 negatives");
    }

    auto sa = structural_components(pos_a, neg_a);
    auto sb = structural_components(pos_b, neg_b);

    const double npos = static_cast<double>(pos_a.size());
    const double nneg = static_cast<double>(neg_a.size());

    double s10_aa = sample_cov(sa.v10, sa.auc, sa.v10, sa.auc);
    double s10_bb = sample_cov(sb.v10, sb.auc, sb.v10, sb.auc);
    double s10_ab = sample_cov(sa.v10, sa.auc, sb.v10, sb.auc);
    double s01_aa = sample_cov(sa.v01, sa.auc, sa.v01, sa.auc);
    double s01_bb = sample_cov(sb.v01, sb.auc, sb.v01, sb.auc);
    double s01_ab = sample_cov(sa.v01, sa.auc, sb.v01, sb.auc);

    DelongResult result;
    result.auc_a = sa.auc;
    result.auc_b = sb.auc;
    result.var_a = s10_aa / npos + s01_aa / nneg;
    result.var_b = s10_bb / npos + s01_bb / nneg;
    result.cov = s10_ab / npos + s01_ab / nneg;

    double var_diff = result.var_a + result.var_b - 2.0 * result.cov;
    if (var_diff <= 0.0) {
        if (result.auc_a == result.auc_b) {
            result.z = 0.0;
            result.p = 1.0;
            return result;
        }
        throw NumericError("delong_paired_test: degenerate variance with unequal AUCs");
    }
    result.z = (result.auc_a - result.auc_b) / std::sqrt(var_diff);
    result.p = std::erfc(std::abs(result.z) / std::sqrt(2.0));
    return result;
}

double bonferroni_threshold(const SignificanceConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
        throw ValidationError("bonferroni_threshold: alpha must be in (0,1)");
    }
    if (cfg.m < 1) {
        throw ValidationError("bonferroni_threshold: m must be >= 1");
    }
    return cfg.alpha / static_cast<double>(cfg.m);
}

ConfusionMatrix confusion_matrix(const std::vector<Severity>& truth,
                                 const std::vector<Severity>& predicted) {
    if (truth.size() != predicted.size()) {
        throw ValidationError("confusion_matrix: input lengths differ");
    }
    if (truth.empty()) {
        throw ValidationError("confusion_matrix: empty input");
    }
    ConfusionMatrix cm;
    cm.total = truth.size();
    for (std::size_t i = 0; i < truth.size(); ++i) {
        cm.counts[severity_index(predicted[i])][severity_index(truth[i])] += 1;
    }
    for (int row = 0; row < 4; ++row) {
        std::size_t row_total = 0;
        for (int col = 0; col < 4; ++col) row_total += cm.counts[row][col];
        for (int col = 0; col < 4; ++col) {
            cm.row_fractions[row][col] =
                row_total > 0
                    ? static_cast<double>(cm.counts[row][col]) / static_cast<double>(row_total)
                    : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return cm;
}

double cohen_kappa_quadratic(const std::vector<Severity>& a, const std::vector<Severity>& b,
                             int levels) {
    if (a.size() != b.size()) {
        throw ValidationError("cohen_kappa_quadratic: input lengths differ");
    }
    if (a.empty()) {
        throw ValidationError("cohen_kappa_quadratic: empty input");
    }
    if (levels < 2) {
        throw ValidationError("cohen_kappa_quadratic: levels must be >= 2");
    }
    const std::size_t k = static_cast<std::size_t>(levels);
    const double denom = static_cast<double>((levels - 1) * (levels - 1));
    auto weight = [&](std::size_t i, std::size_t j) {
        double d = static_cast<double>(i) - static_cast<double>(j);
        return 1.0 - d * d / denom;
    };

    std::vector<std::vector<std::size_t>> counts(k, std::vector<std::size_t>(k, 0));
    std::vector<std::size_t> row(k, 0), col(k, 0);
    for (std::size_t idx = 0; idx < a.size(); ++idx) {
        auto i = static_cast<std::size_t>(severity_index(a[idx]));
        auto j = static_cast<std::size_t>(severity_index(b[idx]));
        counts[i][j] += 1;
        row[i] += 1;
        col[j] += 1;
    }
    const double n = static_cast<double>(a.size());
    double observed = 0.0, expected = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            observed += weight(i, j) * static_cast<double>(counts[i][j]) / n;
            expected += weight(i, j) * static_cast<double>(row[i]) *
                        static_cast<double>(col[j]) / (n * n);
        }
    }
    if (1.0 - expected < 1e-12) {
        if (a == b) return 1.0;
        throw NumericError("cohen_kappa_quadratic: degenerate expected agreement");
    }
    return (observed - expected) / (1.0 - expected);
}

Prf prf_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
    Prf out;
    if (tp + fp > 0) out.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) out.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (tn + fp > 0) out.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
    return out;
}

FoldAggregate aggregate_folds(const std::vector<double>& per_fold_values) {
    if (per_fold_values.empty()) {
        throw ValidationError("aggregate_folds: empty list");
    }
    FoldAggregate agg;
    agg.mean = std::accumulate(per_fold_values.begin(), per_fold_values.end(), 0.0) /
               static_cast<double>(per_fold_values.size());
    if (per_fold_values.size() >= 2) {
        double ss = 0.0;
        for (double v : per_fold_values) ss += (v - agg.mean) * (v - agg.mean);
        agg.stddev = std::sqrt(ss / static_cast<double>(per_fold_values.size() - 1));
    }
    return agg;
}

TTestResult two_sample_t_test(const std::vector<double>& a, const std::vector<double>& b,
                              bool welch) {
    if (a.size() < 2 || b.size() < 2) {
        throw ValidationError("two_sample_t_test: each sample needs >= 2 values");
    }
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
    double ssa = 0.0, ssb = 0.0;
    for (double v : a) ssa += (v - ma) * (v - ma);
    for (double v : b) ssb += (v - mb) * (v - mb);

    TTestResult result;
    double df;
    double se;
    if (welch) {
        double va = ssa / (na - 1.0), vb = ssb / (nb - 1.0);
        se = std::sqrt(va / na + vb / nb);
        if (se == 0.0) throw NumericError("two_sample_t_test: zero variance");
        double num = (va / na + vb / nb) * (va / na + vb / nb);
        double den = va * va / (na * na * (na - 1.0)) + vb * vb / (nb * nb * (nb - 1.0));
        df = num / den;
    } else {
        df = na + nb - 2.0;
        double pooled = (ssa + ssb) / df;
        if (pooled <= 0.0) throw NumericError("two_sample_t_test: zero pooled variance");
        se = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
    }
    result.t = (ma - mb) / se;
    result.df = df;
    result.p = students_t_two_sided_p(result.t, df);
    return result;
}

ChiSquaredResult chi_squared_test(const std::vector<std::vector<double>>& table) {
    const std::size_t r = table.size();
    if (r < 2) {
        throw ValidationError("chi_squared_test: need at least 2 rows");
    }
    const std::size_t c = table[0].size();
    if (c < 2) {
        throw ValidationError("chi_squared_test: need at least 2 columns");
    }
    std::vector<double> row_tot(r, 0.0), col_tot(c, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        if (table[i].size() != c) {
            throw ValidationError("chi_squared_test: ragged table");
        }
        for (std::size_t j = 0; j < c; ++j) {
            if (table[i][j] < 0.0) {
                throw ValidationError("chi_squared_test: negative count");
            }
            row_tot[i] += table[i][j];
            col_tot[j] += table[i][j];
            total += table[i][j];
        }
    }
    for (double t : row_tot) {
        if (t <= 0.0) throw ValidationError("chi_squared_test: zero row marginal");
    }
    for (double t : col_tot) {
        if (t <= 0.0) throw ValidationError("chi_squared_test: zero column marginal");
    }

    ChiSquaredResult result;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            double expected = row_tot[i] * col_tot[j] / total;
            double d = table[i][j] - expected;
            result.chi2 += d * d / expected;
        }
    }
    result.df = static_cast<int>((r - 1) * (c - 1));
    result.p = chi_squared_sf(result.chi2, static_cast<double>(result.df));
    return result;
}

// ---------------------------------------------------------------------------
// Tail probabilities
// ---------------------------------------------------------------------------

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

namespace {

constexpr double kEps = 3e-16;
constexpr double kTiny = 1e-300;

/// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw ValidationError("regularized_incomplete_beta: a and b must be positive");
    }
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0)) {
        throw ValidationError("regularized_gamma_p: a must be positive");
    }
    if (x < 0.0) {
        throw ValidationError("regularized_gamma_p: x must be >= 0");
    }
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) {
        // Series representation.
        double ap = a;
        double sum = 1.0 / a;
        double del = sum;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * kEps) {
                return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
            }
        }
        throw NumericError("incomplete gamma series did not converge");
    }
    return 1.0 - regularized_gamma_q(a, x);
}

double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0)) {
        throw ValidationError("regularized_gamma_q: a must be positive");
    }
    if (x < 0.0) {
        throw ValidationError("regularized_gamma_q: x must be >= 0");
    }
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - regularized_gamma_p(a, x);
    // Continued fraction (modified Lentz).
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) {
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw NumericError("incomplete gamma continued fraction did not converge");
}

double students_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) {
        throw ValidationError("students_t_two_sided_p: df must be positive");
    }
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

double chi_squared_sf(double x, double df) {
    if (!(df > 0.0)) {
        throw ValidationError("chi_squared_sf: df must be positive");
    }
    if (x < 0.0) {
        throw ValidationError("chi_squared_sf: x must be >= 0");
    }
    return regularized_gamma_q(df / 2.0, x / 2.0);
}

// ---------------------------------------------------------------------------
// Score file IO
// ---------------------------------------------------------------------------

namespace {
const std::vector<std::string> kScoreHeader = {"image_id", "true_label", "p0", "p1", "p2", "p3"};
}

std::vector<ScoredSample> load_score_csv(const std::filesystem::path& path) {
    auto rows = csv::read_file(path);
    if (rows.empty() || rows[0].fields != kScoreHeader) {
        throw ValidationError("bad score file header (expected " + csv::join_row(kScoreHeader) +
                              "): " + path.string());
    }
    std::vector<ScoredSample> samples;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::string where = "line " + std::to_string(row.line);
        if (row.fields.size() != kScoreHeader.size()) {
            throw ValidationError(where + ": expected 6 fields");
        }
        ScoredSample s;
        s.image_id = row.fields[0];
        try {
            s.true_label = severity_from_int(std::stoi(row.fields[1]));
            for (int c = 0; c < 4; ++c) {
                s.scores[c] = std::stod(row.fields[2 + c]);
            }
        } catch (const std::exception& e) {
            throw ValidationError(where + ": " + e.what());
        }
        double sum = 0.0;
        for (double v : s.scores) {
            if (!std::isfinite(v) || v < 0.0) {
                throw ValidationError(where + ": probabilities must be finite and >= 0");
            }
            sum += v;
        }
        if (!(std::abs(sum - 1.0) <= 1e-9)) {
            throw ValidationError(where + ": probabilities sum to " + csv::format_double(sum) +
                                  ", expected 1 within 1e-9");
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

void write_score_csv(const std::filesystem::path& path,
                     const std::vector<ScoredSample>& samples) {
    csv::Writer w(path);
    w.row(kScoreHeader);
    for (const auto& s : samples) {
        w.row({s.image_id, std::to_string(severity_index(s.true_label)),
               csv::format_double(s.scores[0]), csv::format_double(s.scores[1]),
               csv::format_double(s.scores[2]), csv::format_double(s.scores[3])});
    }
}

}  // namespace edema::metrics
