#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "edema/metrics.hpp"
#include "edema/rng.hpp"

using namespace edema;
using namespace edema::metrics;

namespace {

ScoredSample sample(int true_label, std::array<double, 4> scores) {
    ScoredSample s;
    s.image_id = "x";
    s.true_label = severity_from_int(true_label);
    s.scores = scores;
    return s;
}

std::vector<BinaryScore> binary(const std::vector<double>& neg, const std::vector<double>& pos) {
    std::vector<BinaryScore> out;
    for (double s : neg) out.push_back({false, s});
    for (double s : pos) out.push_back({true, s});
    return out;
}

const Comparison& comparison(const std::string& name) {
    for (const auto& cmp : standard_comparisons()) {
        if (cmp.name == name) return cmp;
    }
    REQUIRE(false);
    return standard_comparisons().front();
}

}  // namespace

TEST_CASE("standard_comparisons: six pairwise plus three dichotomies") {
    const auto& cmps = standard_comparisons();
    REQUIRE(cmps.size() == 9);
    CHECK(cmps[0].name == "0v1");
    CHECK(cmps[5].name == "2v3");
    CHECK(cmps[6].name == "0v123");
    CHECK(cmps[7].name == "01v23");
    CHECK(cmps[8].name == "012v3");
    for (const auto& cmp : cmps) {
        for (int c : cmp.pos) CHECK(cmp.neg.count(c) == 0);
        CHECK(!cmp.neg.empty());
        CHECK(!cmp.pos.empty());
    }
    CHECK(cmps[8].display == "0, 1, 2 vs 3");
}

TEST_CASE("scalarize: probability-ratio fixtures") {
    auto s = sample(0, {0.7, 0.1, 0.1, 0.1});
    auto r = scalarize(s, comparison("0v3"));
    REQUIRE(r.has_value());
    CHECK(!r->positive);
    CHECK(r->score == doctest::Approx(0.125).epsilon(1e-12));

    auto s2 = sample(1, {0.7, 0.1, 0.1, 0.1});
    auto r2 = scalarize(s2, comparison("01v23"));
    REQUIRE(r2.has_value());
    CHECK(!r2->positive);
    CHECK(r2->score == doctest::Approx(0.2).epsilon(1e-12));

    // Restriction: a label outside both grade sets yields nothing.
    CHECK(!scalarize(sample(1, {0.25, 0.25, 0.25, 0.25}), comparison("0v3")).has_value());
}

TEST_CASE("scalarize: zero mass on both sides falls back to 0.5") {
    auto s = sample(0, {0.0, 0.5, 0.5, 0.0});
    auto r = scalarize(s, comparison("0v3"));
    REQUIRE(r.has_value());
    CHECK(r->score == doctest::Approx(0.5));
}

TEST_CASE("scalarize: expected-severity mode ignores the comparison's sets") {
    auto s = sample(0, {0.1, 0.2, 0.3, 0.4});
    auto r = scalarize(s, comparison("0v3"), ScalarMode::expected_severity);
    REQUIRE(r.has_value());
    CHECK(r->score == doctest::Approx(0.2 + 0.6 + 1.2).epsilon(1e-12));
}

TEST_CASE("roc_auc: four-sample fixture has AUC 0.75 through (0.5, 0.5)") {
    auto roc = roc_auc(binary({0.1, 0.4}, {0.35, 0.8}));
    CHECK(roc.auc == doctest::Approx(0.75).epsilon(1e-12));
    bool passes_half = false;
    for (const auto& pt : roc.points) {
        if (pt.fpr == doctest::Approx(0.5) && pt.tpr == doctest::Approx(0.5)) {
            passes_half = true;
        }
    }
    CHECK(passes_half);
    CHECK(roc.points.front().fpr == 0.0);
    CHECK(roc.points.front().tpr == 0.0);
    CHECK(roc.points.back().fpr == 1.0);
    CHECK(roc.points.back().tpr == 1.0);
}

TEST_CASE("roc_auc: perfect separation and all-ties") {
    CHECK(roc_auc(binary({0.1, 0.2}, {0.8, 0.9})).auc == doctest::Approx(1.0));
    CHECK(roc_auc(binary({0.5, 0.5}, {0.5, 0.5})).auc == doctest::Approx(0.5));
}

TEST_CASE("roc_auc: single-class input is an error") {
    CHECK_THROWS_AS(roc_auc(binary({}, {0.3, 0.4})), ValidationError);
    CHECK_THROWS_AS(roc_auc(binary({0.3, 0.4}, {})), ValidationError);
}

TEST_CASE("roc_auc: rank and trapezoid forms agree on random tied data") {
    rng::Rng gen(99);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<BinaryScore> samples;
        auto n = 2 + gen.uniform_below(199);
        bool any_pos = false, any_neg = false;
        for (std::uint64_t i = 0; i < n; ++i) {
            BinaryScore b;
            b.positive = gen.bernoulli(0.4);
            // Quantized scores force ties.
            b.score = static_cast<double>(gen.uniform_below(12)) / 11.0;
            (b.positive ? any_pos : any_neg) = true;
            samples.push_back(b);
        }
        if (!any_pos || !any_neg) continue;
        auto roc = roc_auc(samples);
        CHECK(std::abs(roc.auc - roc.auc_trapezoid) <= 1e-12);
        for (std::size_t i = 1; i < roc.points.size(); ++i) {
            CHECK(roc.points[i].fpr >= roc.points[i - 1].fpr);
            CHECK(roc.points[i].tpr >= roc.points[i - 1].tpr);
        }
    }
}

TEST_CASE("roc_auc: invariant under strictly monotone transforms") {
    rng::Rng gen(5);
    std::vector<BinaryScore> samples;
    for (int i = 0; i < 80; ++i) {
        samples.push_back({gen.bernoulli(0.5), gen.uniform01() * 4.0 - 2.0});
    }
    samples[0].positive = true;
    samples[1].positive = false;
    double base = roc_auc(samples).auc;
    auto transformed = samples;
    for (auto& s : transformed) s.score = std::atan(3.0 * s.score) + 7.0;
    CHECK(roc_auc(transformed).auc == doctest::Approx(base).epsilon(1e-12));
    for (auto& s : transformed) s.score = std::exp(s.score * 0.25);
    CHECK(roc_auc(transformed).auc == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("roc_auc: flipping the labels maps AUC to 1 - AUC") {
    rng::Rng gen(17);
    std::vector<BinaryScore> samples;
    for (int i = 0; i < 60; ++i) {
        samples.push_back({gen.bernoulli(0.5),
                           static_cast<double>(gen.uniform_below(9)) / 8.0});
    }
    samples[0].positive = true;
    samples[1].positive = false;
    double base = roc_auc(samples).auc;
    auto flipped = samples;
    for (auto& s : flipped) s.positive = !s.positive;
    CHECK(roc_auc(flipped).auc == doctest::Approx(1.0 - base).epsilon(1e-12));
}

TEST_CASE("delong: identical score lists give p = 1 exactly") {
    std::vector<bool> truth;
    std::vector<double> scores;
    rng::Rng gen(3);
    for (int i = 0; i < 40; ++i) {
        truth.push_back(gen.bernoulli(0.5));
        scores.push_back(gen.uniform01());
    }
    truth[0] = true;
    truth[1] = true;
    truth[2] = false;
    truth[3] = false;
    auto result = delong_paired_test(truth, scores, scores);
    CHECK(result.p == 1.0);
    CHECK(result.z == 0.0);
    CHECK(result.auc_a == result.auc_b);
}

TEST_CASE("delong: swapping the models negates z and keeps p") {
    rng::Rng gen(13);
    std::vector<bool> truth;
    std::vector<double> a, b;
    for (int i = 0; i < 60; ++i) {
        bool pos = gen.bernoulli(0.5);
        truth.push_back(pos);
        double signal = pos ? 1.0 : 0.0;
        a.push_back(0.8 * signal + gen.normal());
        b.push_back(0.3 * signal + gen.normal());
    }
    truth[0] = truth[1] = true;
    truth[2] = truth[3] = false;
    auto ab = delong_paired_test(truth, a, b);
    auto ba = delong_paired_test(truth, b, a);
    CHECK(ab.z == doctest::Approx(-ba.z).epsilon(1e-12));
    CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-12));
    CHECK(ab.auc_a == ba.auc_b);
    CHECK(ab.var_a == ba.var_b);
    CHECK(ab.cov == doctest::Approx(ba.cov).epsilon(1e-15));
    CHECK(ab.p >= 0.0);
    CHECK(ab.p <= 1.0);
}

TEST_CASE("delong: degenerate variance with unequal AUCs is an error") {
    std::vector<bool> truth = {true, true, false, false};
    std::vector<double> a = {1.0, 1.0, 0.0, 0.0};
    std::vector<double> b = {0.0, 0.0, 1.0, 1.0};
    CHECK_THROWS_AS(delong_paired_test(truth, a, b), NumericError);
}

TEST_CASE("delong: needs two of each class") {
    std::vector<bool> truth = {true, false, false};
    std::vector<double> s = {0.5, 0.2, 0.3};
    CHECK_THROWS_AS(delong_paired_test(truth, s, s), ValidationError);
}

TEST_CASE("bonferroni_threshold: division is exact") {
    CHECK(bonferroni_threshold({0.05, 9}) == 0.05 / 9.0);
    CHECK(bonferroni_threshold({0.05, 1}) == 0.05);
    CHECK(bonferroni_threshold({0.01, 4}) == 0.0025);
    CHECK(bonferroni_threshold({0.05, 9}) == doctest::Approx(0.0055555555556).epsilon(1e-9));
    CHECK_THROWS_AS(bonferroni_threshold({0.0, 9}), ValidationError);
    CHECK_THROWS_AS(bonferroni_threshold({0.05, 0}), ValidationError);
}

TEST_CASE("confusion_matrix: rows are predicted, fractions row-normalized") {
    std::vector<Severity> truth = {severity_from_int(0), severity_from_int(0),
                                   severity_from_int(3)};
    std::vector<Severity> predicted = {severity_from_int(0), severity_from_int(3),
                                       severity_from_int(3)};
    auto cm = confusion_matrix(truth, predicted);
    CHECK(cm.total == 3);
    CHECK(cm.counts[0][0] == 1);
    CHECK(cm.row_fractions[0][0] == doctest::Approx(1.0));
    CHECK(cm.counts[3][0] == 1);
    CHECK(cm.counts[3][3] == 1);
    CHECK(cm.row_fractions[3][0] == doctest::Approx(0.5));
    CHECK(cm.row_fractions[3][3] == doctest::Approx(0.5));
    // Grades never predicted have zero counts and undefined fractions.
    for (int col = 0; col < 4; ++col) {
        CHECK(cm.counts[1][col] == 0);
        CHECK(std::isnan(cm.row_fractions[1][col]));
    }
}

TEST_CASE("confusion_matrix: perfect predictions give a diagonal matrix") {
    std::vector<Severity> labels;
    for (int i = 0; i < 12; ++i) labels.push_back(severity_from_int(i % 4));
    auto cm = confusion_matrix(labels, labels);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            CHECK(cm.counts[r][c] == (r == c ? 3u : 0u));
        }
        CHECK(cm.row_fractions[r][r] == doctest::Approx(1.0));
    }
}

TEST_CASE("confusion_matrix: total equals input length; mismatch errors") {
    std::vector<Severity> a = {severity_from_int(0), severity_from_int(1)};
    std::vector<Severity> b = {severity_from_int(0)};
    CHECK_THROWS_AS(confusion_matrix(a, b), ValidationError);
    CHECK(confusion_matrix(a, a).total == 2);
}

TEST_CASE("cohen_kappa_quadratic: identical sequences give exactly 1.0") {
    std::vector<Severity> a = {severity_from_int(0), severity_from_int(2),
                               severity_from_int(3), severity_from_int(1)};
    CHECK(cohen_kappa_quadratic(a, a) == 1.0);
}

TEST_CASE("cohen_kappa_quadratic: [0,3] vs [0,0] is exactly 0") {
    std::vector<Severity> a = {severity_from_int(0), severity_from_int(3)};
    std::vector<Severity> b = {severity_from_int(0), severity_from_int(0)};
    CHECK(cohen_kappa_quadratic(a, b) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("cohen_kappa_quadratic: symmetric in its arguments") {
    rng::Rng gen(21);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Severity> a, b;
        for (int i = 0; i < 30; ++i) {
            a.push_back(severity_from_int(static_cast<int>(gen.uniform_below(4))));
            b.push_back(severity_from_int(static_cast<int>(gen.uniform_below(4))));
        }
        CHECK(cohen_kappa_quadratic(a, b) ==
              doctest::Approx(cohen_kappa_quadratic(b, a)).epsilon(1e-12));
    }
}

TEST_CASE("prf_counts: fixtures") {
    auto table1 = prf_counts(23, 1, 142, 34);
    REQUIRE(table1.precision.has_value());
    CHECK(*table1.precision == doctest::Approx(0.9583333333).epsilon(1e-9));
    CHECK(*table1.sensitivity == doctest::Approx(23.0 / 57.0).epsilon(1e-12));
    CHECK(*table1.specificity == doctest::Approx(142.0 / 143.0).epsilon(1e-12));

    auto none_fired = prf_counts(0, 0, 10, 5);
    CHECK(!none_fired.precision.has_value());
    CHECK(*none_fired.sensitivity == 0.0);
    CHECK(*none_fired.specificity == 1.0);

    auto third = prf_counts(2, 0, 8, 3);
    CHECK(*third.precision == 1.0);
    CHECK(*third.sensitivity == doctest::Approx(0.4));
    CHECK(*third.specificity == 1.0);
}

TEST_CASE("aggregate_folds: mean and sample standard deviation") {
    auto flat = aggregate_folds({0.8, 0.8, 0.8});
    CHECK(flat.mean == doctest::Approx(0.8));
    REQUIRE(flat.stddev.has_value());
    CHECK(*flat.stddev == doctest::Approx(0.0));

    auto two = aggregate_folds({0.7, 0.9});
    CHECK(two.mean == doctest::Approx(0.8));
    CHECK(*two.stddev == doctest::Approx(0.1414213562373095).epsilon(1e-12));

    auto one = aggregate_folds({0.5});
    CHECK(one.mean == doctest::Approx(0.5));
    CHECK(!one.stddev.has_value());

    CHECK_THROWS_AS(aggregate_folds({}), ValidationError);
}

TEST_CASE("two_sample_t_test: identical samples give t = 0, p = 1") {
    auto result = two_sample_t_test({1, 2, 3}, {1, 2, 3});
    CHECK(result.t == doctest::Approx(0.0));
    CHECK(result.p == doctest::Approx(1.0));
    CHECK(result.df == 4);
}

TEST_CASE("two_sample_t_test: frozen fixture") {
    auto result = two_sample_t_test({1, 2, 3, 4}, {3, 4, 5, 6});
    CHECK(result.t == doctest::Approx(-2.1908902300206643).epsilon(1e-12));
    CHECK(result.df == 6);
    CHECK(result.p == doctest::Approx(0.070987654320987637).epsilon(1e-10));
}

TEST_CASE("two_sample_t_test: zero pooled variance is an error") {
    CHECK_THROWS_AS(two_sample_t_test({2, 2}, {2, 2}), NumericError);
    CHECK_THROWS_AS(two_sample_t_test({1}, {1, 2}), ValidationError);
}

TEST_CASE("two_sample_t_test: Welch variant stays close on equal variances") {
    std::vector<double> a = {1, 2, 3, 4, 5};
    std::vector<double> b = {2, 3, 4, 5, 6};
    auto pooled = two_sample_t_test(a, b, false);
    auto welch = two_sample_t_test(a, b, true);
    CHECK(welch.t == doctest::Approx(pooled.t).epsilon(1e-12));
    CHECK(welch.p == doctest::Approx(pooled.p).epsilon(1e-6));
}

TEST_CASE("chi_squared_test: uniform table gives chi2 = 0, p = 1") {
    auto result = chi_squared_test({{10, 10}, {10, 10}});
    CHECK(result.chi2 == doctest::Approx(0.0));
    CHECK(result.df == 1);
    CHECK(result.p == doctest::Approx(1.0));
}

TEST_CASE("chi_squared_test: frozen fixture") {
    auto result = chi_squared_test({{20, 10}, {10, 20}});
    CHECK(result.chi2 == doctest::Approx(6.666666666666667).epsilon(1e-12));
    CHECK(result.df == 1);
    CHECK(result.p == doctest::Approx(0.0098232745075192349).epsilon(1e-10));
}

TEST_CASE("chi_squared_test: zero marginals are errors") {
    CHECK_THROWS_AS(chi_squared_test({{0, 0}, {1, 2}}), ValidationError);
    CHECK_THROWS_AS(chi_squared_test({{1, 0}, {2, 0}}), ValidationError);
    CHECK_THROWS_AS(chi_squared_test({{1, 2}}), ValidationError);
}

TEST_CASE("tail probabilities match independent references to 1e-12") {
    // Reference values computed with an independent numerical library.
    CHECK(regularized_incomplete_beta(2.5, 1.5, 0.3) ==
          doctest::Approx(0.088943723170665623).epsilon(1e-12));
    CHECK(regularized_gamma_q(0.5, 10.0 / 3.0) ==
          doctest::Approx(0.0098232745075192349).epsilon(1e-12));
    CHECK(regularized_gamma_p(4.2, 2.7) ==
          doctest::Approx(0.24994105108807824).epsilon(1e-12));
    CHECK(normal_sf(2.582) == doctest::Approx(0.00491147924634747).epsilon(1e-12));
    CHECK(students_t_two_sided_p(1.3, 11.0) ==
          doctest::Approx(0.22018126269984198).epsilon(1e-12));
    CHECK(chi_squared_sf(12.34, 5.0) ==
          doctest::Approx(0.030414600646048517).epsilon(1e-12));
}

TEST_CASE("tail probabilities stay in [0,1] over random inputs") {
    rng::Rng gen(8);
    for (int i = 0; i < 500; ++i) {
        double t = gen.normal() * 5.0;
        double df = 1.0 + gen.uniform_below(50);
        double pt = students_t_two_sided_p(t, df);
        CHECK(pt >= 0.0);
        CHECK(pt <= 1.0);
        double x = gen.uniform01() * 40.0;
        double pc = chi_squared_sf(x, 1.0 + gen.uniform_below(12));
        CHECK(pc >= 0.0);
        CHECK(pc <= 1.0);
    }
}

TEST_CASE("score CSV round trip and simplex validation") {
    std::vector<ScoredSample> samples = {sample(0, {0.7, 0.1, 0.1, 0.1}),
                                         sample(3, {0.05, 0.05, 0.2, 0.7})};
    samples[0].image_id = "a";
    samples[1].image_id = "b";
    auto path = std::filesystem::temp_directory_path() / "scores_roundtrip.csv";
    write_score_csv(path, samples);
    auto loaded = load_score_csv(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].image_id == "a");
    CHECK(loaded[0].true_label == Severity::none);
    CHECK(loaded[1].scores[3] == doctest::Approx(0.7).epsilon(1e-15));

    auto bad = std::filesystem::temp_directory_path() / "scores_bad.csv";
    std::ofstream(bad) << "image_id,true_label,p0,p1,p2,p3\nx,0,0.5,0.5,0.5,0.5\n";
    CHECK_THROWS_WITH_AS(load_score_csv(bad), doctest::Contains("sum"), ValidationError);

    auto nan_file = std::filesystem::temp_directory_path() / "scores_nan.csv";
    std::ofstream(nan_file) << "image_id,true_label,p0,p1,p2,p3\nx,0,nan,0.5,0.25,0.25\n";
    CHECK_THROWS_WITH_AS(load_score_csv(nan_file), doctest::Contains("finite"),
                         ValidationError);
}

TEST_CASE("argmax_label picks the first maximum deterministically") {
    CHECK(argmax_label({0.4, 0.4, 0.1, 0.1}) == Severity::none);
    CHECK(argmax_label({0.1, 0.2, 0.3, 0.4}) == Severity::alveolar_edema);
}
