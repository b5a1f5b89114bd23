// Acceptance suite: one line per criterion, nonzero exit if any fails.
//
// Each criterion pins its tolerance in code; the suite uses only fixed seeds
// so a pass is reproducible bit for bit.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "edema/baseline.hpp"
#include "edema/consensus.hpp"
#include "edema/corpus.hpp"
#include "edema/extraction.hpp"
#include "edema/metrics.hpp"
#include "edema/rng.hpp"
#include "edema/synth.hpp"

namespace fs = std::filesystem;
using namespace edema;

namespace {

struct Harness {
    int failures = 0;
    int index = 0;

    void run(const std::string& name, double time_limit_s,
             const std::function<std::string()>& body) {
        index += 1;
        auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            detail = body();
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("exception: ") + e.what();
        }
        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (ok && time_limit_s > 0 && elapsed > time_limit_s) {
            ok = false;
            detail += " [exceeded time limit]";
        }
        std::printf("[%s] %2d. %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", index, name.c_str(),
                    elapsed, detail.empty() ? "" : " — ", detail.c_str());
        std::fflush(stdout);
        if (!ok) failures += 1;
    }
};

struct CheckFail : std::runtime_error {
    explicit CheckFail(const std::string& what) : std::runtime_error(what) {}
};

void require(bool cond, const std::string& what) {
    if (!cond) throw CheckFail(what);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// --------------------------------------------------------------------------
// 1. AUC dual-form equality
// --------------------------------------------------------------------------

std::string auc_dual_form() {
    rng::Rng gen(1001);
    double worst = 0.0;
    int produced = 0;
    while (produced < 1000) {
        std::vector<metrics::BinaryScore> samples;
        const auto n = 2 + gen.uniform_below(199);
        const int grid = static_cast<int>(gen.uniform_below(4));
        bool any_pos = false, any_neg = false;
        for (std::uint64_t i = 0; i < n; ++i) {
            metrics::BinaryScore b;
            b.positive = gen.bernoulli(0.5);
            switch (grid) {
                case 0: b.score = gen.uniform01(); break;                       // continuous
                case 1: b.score = static_cast<double>(gen.uniform_below(5)); break;
                case 2: b.score = static_cast<double>(gen.uniform_below(11)) / 10.0; break;
                default: b.score = std::round(gen.normal() * 4.0) / 4.0; break;
            }
            (b.positive ? any_pos : any_neg) = true;
            samples.push_back(b);
        }
        if (!any_pos || !any_neg) continue;
        produced += 1;
        auto roc = metrics::roc_auc(samples);
        worst = std::max(worst, std::abs(roc.auc - roc.auc_trapezoid));
    }
    require(worst <= 1e-12, "max |trapezoid - rank| = " + fmt(worst));
    return "1000 score sets, max deviation " + fmt(worst);
}

// --------------------------------------------------------------------------
// 2. DeLong vs sign-flip permutation oracle
// --------------------------------------------------------------------------

// Per-sample structural differences, written independently of the library's
// internals. Each positive carries dP_i = V10A_i - V10B_i and each negative
// dN_j = V01A_j - V01B_j; both sides average to the observed AUC difference.
struct StructuralDiffs {
    std::vector<double> dp;      // per positive
    std::vector<double> dn;      // per negative
    double delta_auc = 0.0;
};

StructuralDiffs structural_differences(const std::vector<bool>& truth,
                                       const std::vector<double>& a,
                                       const std::vector<double>& b) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < truth.size(); ++i) (truth[i] ? pos : neg).push_back(i);
    auto psi = [](double p, double n) { return p > n ? 1.0 : (p == n ? 0.5 : 0.0); };

    StructuralDiffs sd;
    for (std::size_t i : pos) {
        double va = 0.0, vb = 0.0;
        for (std::size_t j : neg) {
            va += psi(a[i], a[j]);
            vb += psi(b[i], b[j]);
        }
        sd.dp.push_back((va - vb) / static_cast<double>(neg.size()));
    }
    for (std::size_t j : neg) {
        double va = 0.0, vb = 0.0;
        for (std::size_t i : pos) {
            va += psi(a[i], a[j]);
            vb += psi(b[i], b[j]);
        }
        sd.dn.push_back((va - vb) / static_cast<double>(pos.size()));
    }
    for (double d : sd.dp) sd.delta_auc += d;
    sd.delta_auc /= static_cast<double>(sd.dp.size());
    return sd;
}

// Sign-flip test on the centered structural differences: the flips sample
// the null distribution of the AUC difference (the centered per-sample terms
// are its first-order projection), which the observed difference is compared
// against.
double permutation_p(const StructuralDiffs& sd, rng::Rng& gen, int resamples) {
    std::vector<double> contrib;
    contrib.reserve(sd.dp.size() + sd.dn.size());
    for (double d : sd.dp) {
        contrib.push_back((d - sd.delta_auc) / static_cast<double>(sd.dp.size()));
    }
    for (double d : sd.dn) {
        contrib.push_back((d - sd.delta_auc) / static_cast<double>(sd.dn.size()));
    }
    const double target = std::abs(sd.delta_auc) - 1e-12;
    int hits = 0;
    for (int r = 0; r < resamples; ++r) {
        double t = 0.0;
        for (double c : contrib) t += gen.bernoulli(0.5) ? c : -c;
        if (std::abs(t) >= target) hits += 1;
    }
    return static_cast<double>(hits + 1) / static_cast<double>(resamples + 1);
}

std::string delong_vs_oracle() {
    rng::Rng gen(2002);
    double worst = 0.0;
    for (int dataset = 0; dataset < 50; ++dataset) {
        const double sig_a = 0.4 + gen.uniform01() * 1.2;
        const double sig_b = gen.bernoulli(0.5) ? sig_a : 0.4 + gen.uniform01() * 1.2;
        std::vector<bool> truth;
        std::vector<double> a, b;
        for (int i = 0; i < 60; ++i) {
            bool pos = i % 2 == 0;  // 30 positives, 30 negatives
            truth.push_back(pos);
            double t = pos ? 1.0 : 0.0;
            double shared = gen.normal();
            a.push_back(sig_a * t + 0.7 * shared + 0.7 * gen.normal());
            b.push_back(sig_b * t + 0.7 * shared + 0.7 * gen.normal());
        }
        auto dl = metrics::delong_paired_test(truth, a, b);
        auto sd = structural_differences(truth, a, b);
        double p_perm = permutation_p(sd, gen, 10000);
        worst = std::max(worst, std::abs(dl.p - p_perm));
    }
    require(worst <= 0.05, "max |p_delong - p_perm| = " + fmt(worst));

    // Identical score lists must give exactly p = 1.
    std::vector<bool> truth;
    std::vector<double> s;
    for (int i = 0; i < 60; ++i) {
        truth.push_back(i % 2 == 0);
        s.push_back(gen.uniform01());
    }
    auto dl = metrics::delong_paired_test(truth, s, s);
    require(dl.p == 1.0, "identical scores gave p = " + fmt(dl.p));
    return "50 datasets, max |p - oracle| " + fmt(worst) + "; identical-scores p = 1";
}

// --------------------------------------------------------------------------
// 3. Gradient check
// --------------------------------------------------------------------------

std::string gradient_check() {
    rng::Rng gen(3003);
    double worst = 0.0;
    for (int instance = 0; instance < 100; ++instance) {
        const std::size_t dim = 1 + gen.uniform_below(6);
        baseline::ModelParams params = baseline::ModelParams::zeros(dim);
        for (auto& w : params.w) w = gen.normal();
        for (auto& b : params.b) b = gen.normal();
        baseline::ClassWeights weights;
        for (auto& w : weights.w) w = 0.25 + gen.uniform01() * 3.0;

        std::vector<baseline::FeatureVector> batch;
        std::vector<Severity> labels;
        const std::size_t n = 1 + gen.uniform_below(8);
        for (std::size_t i = 0; i < n; ++i) {
            baseline::FeatureVector fv;
            fv.image_id = "s" + std::to_string(i);
            for (std::size_t d = 0; d < dim; ++d) fv.values.push_back(gen.normal());
            batch.push_back(std::move(fv));
            labels.push_back(severity_from_int(static_cast<int>(gen.uniform_below(4))));
        }

        auto lg = baseline::weighted_ce_loss_and_grad(params, batch, labels, weights);
        const double h = 1e-5;
        auto loss_at = [&](const baseline::ModelParams& p) {
            return baseline::weighted_ce_loss_and_grad(p, batch, labels, weights).loss;
        };
        auto check_coord = [&](double analytic, double fd) {
            double rel = std::abs(analytic - fd) / std::max({std::abs(analytic),
                                                             std::abs(fd), 1e-8});
            worst = std::max(worst, rel);
        };
        for (std::size_t j = 0; j < params.w.size(); ++j) {
            auto up = params, down = params;
            up.w[j] += h;
            down.w[j] -= h;
            check_coord(lg.dw[j], (loss_at(up) - loss_at(down)) / (2 * h));
        }
        for (int c = 0; c < 4; ++c) {
            auto up = params, down = params;
            up.b[c] += h;
            down.b[c] -= h;
            check_coord(lg.db[c], (loss_at(up) - loss_at(down)) / (2 * h));
        }
    }
    require(worst <= 1e-5, "max per-coordinate relative error = " + fmt(worst));
    return "100 instances, max relative error " + fmt(worst);
}

// --------------------------------------------------------------------------
// 4. Fold protocol
// --------------------------------------------------------------------------

std::string fold_protocol() {
    std::vector<corpus::StudyRecord> records;
    for (int p = 0; p < 1266; ++p) {
        for (int e = 0; e < 3; ++e) {
            corpus::StudyRecord r;
            r.patient_id = "p" + std::to_string(p);
            r.study_id = "s" + std::to_string(p * 3 + e);
            r.image_id = "i" + std::to_string(p * 3 + e);
            r.report_id = "r" + r.study_id;
            r.view = corpus::View::frontal;
            records.push_back(std::move(r));
        }
    }
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto fa = corpus::group_kfold(records, 5, seed);
        std::map<std::string, std::set<int>> folds_per_patient;
        for (const auto& r : records) {
            folds_per_patient[r.patient_id].insert(fa.assignment.at(r.image_id));
        }
        for (const auto& [patient, folds] : folds_per_patient) {
            require(folds.size() == 1, "patient " + patient + " split across folds at seed " +
                                           std::to_string(seed));
        }
        std::vector<std::size_t> counts(5, 0);
        for (const auto& [patient, fold] : fa.patient_fold) counts[fold] += 1;
        std::sort(counts.begin(), counts.end(), std::greater<>());
        require(counts == std::vector<std::size_t>{254, 253, 253, 253, 253},
                "fold patient counts off at seed " + std::to_string(seed));
    }
    return "100 seeds, zero overlap, counts {254,253,253,253,253}";
}

// --------------------------------------------------------------------------
// 5. Extraction fidelity
// --------------------------------------------------------------------------

std::string extraction_fidelity() {
    auto rs = extraction::RuleSet::defaults();

    // Default ruleset enumerates exactly the sixteen keywords.
    const std::set<std::string> expected = {
        "no pulmonary edema", "no vascular congestion", "no fluid overload",
        "no acute cardiopulmonary process", "cephalization",
        "mild pulmonary vascular congestion", "mild hilar engorgement",
        "mild vascular plethora", "interstitial opacities", "kerley", "interstitial edema",
        "interstitial thickening", "alveolar infiltrates", "severe pulmonary edema",
        "perihilar infiltrates", "hilar infiltrates"};
    std::set<std::string> actual;
    for (const auto& rule : rs.rules()) {
        std::string lower;
        for (char c : rule.pattern) lower.push_back(static_cast<char>(std::tolower(c)));
        actual.insert(lower);
    }
    require(actual == expected && rs.rules().size() == 16,
            "default ruleset does not enumerate the 16 keywords");

    // Trap-free corpus: overall precision against the oracle is 100%.
    synth::SynthConfig clean;
    clean.seed = 501;
    clean.n_reports = 200;
    clean.keyword_density = 1.0;
    clean.negation_trap_rate = 0.0;
    auto corpus = synth::gen_reports(clean);
    std::map<std::string, extraction::ExtractionResult> results;
    std::map<std::string, Severity> reference;
    for (const auto& doc : corpus.docs) {
        results.emplace(doc.report_id, extraction::extract(doc.text, rs));
        reference.emplace(doc.report_id, corpus.oracle.at(doc.report_id).severity);
    }
    auto validation = extraction::validate_extraction(results, reference, rs);
    require(validation.labeled_reports == 200, "trap-free corpus left reports unlabeled");
    require(validation.overall_precision && *validation.overall_precision == 1.0,
            "overall precision below 100% on the trap-free corpus");

    // Trap corpus: negated keywords never produce a positive label.
    synth::SynthConfig trapped = clean;
    trapped.seed = 502;
    trapped.negation_trap_rate = 1.0;
    auto trap_corpus = synth::gen_reports(trapped);
    std::size_t traps = 0;
    for (const auto& doc : trap_corpus.docs) {
        const auto& oracle = trap_corpus.oracle.at(doc.report_id);
        auto result = extraction::extract(doc.text, rs);
        require(result.label.has_value(), "trap corpus report lost its label");
        require(*result.label == oracle.severity,
                "label shifted by a trap in " + doc.report_id);
        // The resolved label must be reachable from non-negated matches alone.
        std::vector<extraction::Match> effective;
        for (const auto& m : result.matches) {
            if (!m.negated) effective.push_back(m);
        }
        require(extraction::resolve_severity(effective) == result.label,
                "label supported only by negated matches in " + doc.report_id);
        for (const auto& trap_rule : oracle.trap_rule_ids) {
            traps += 1;
            for (const auto& m : result.matches) {
                if (m.rule_id == trap_rule) {
                    require(m.negated, "trap keyword not negated in " + doc.report_id);
                }
            }
        }
    }
    require(traps > 0, "no traps were planted");
    return "200 clean reports at 100% precision; " + std::to_string(traps) +
           " traps all suppressed";
}

// --------------------------------------------------------------------------
// 6. Consensus decision table
// --------------------------------------------------------------------------

consensus::VoteLog build_log(const std::array<int, 3>& initial, std::optional<int> attending,
                             const std::vector<std::array<int, 4>>& rounds) {
    consensus::VoteLog log;
    log.image_id = "img";
    const char* residents[3] = {"res1", "res2", "res3"};
    for (int i = 0; i < 3; ++i) {
        log.initial.push_back({residents[i], severity_from_int(initial[i])});
    }
    if (attending) log.attending = consensus::Vote{"att1", severity_from_int(*attending)};
    const char* panel[4] = {"res1", "res2", "res3", "att1"};
    for (const auto& round : rounds) {
        std::vector<consensus::Vote> votes;
        for (int i = 0; i < 4; ++i) votes.push_back({panel[i], severity_from_int(round[i])});
        log.rounds.push_back(std::move(votes));
    }
    return log;
}

// Hand decision table, written as direct case analysis on vote patterns.
struct TableOutcome {
    std::optional<int> label;
    std::string path;
};

std::optional<int> table_pair(const std::array<int, 3>& t) {
    if (t[0] == t[1]) return t[0];
    if (t[0] == t[2]) return t[0];
    if (t[1] == t[2]) return t[1];
    return std::nullopt;
}

std::optional<int> table_round_winner(const std::array<int, 4>& round) {
    for (int label = 0; label < 4; ++label) {
        int votes = 0;
        for (int v : round) votes += v == label;
        if (votes >= 3) return label;
    }
    return std::nullopt;
}

TableOutcome table_expected(const std::array<int, 3>& initial, int attending,
                            const std::vector<std::array<int, 4>>& rounds) {
    if (initial[0] == initial[1] && initial[1] == initial[2]) {
        return {initial[0], "unanimous3"};
    }
    auto pair = table_pair(initial);
    if (pair && attending == *pair) {
        return {*pair, "majority4"};
    }
    for (std::size_t k = 0; k < rounds.size() && k < 3; ++k) {
        if (auto winner = table_round_winner(rounds[k])) {
            return {*winner, "discussion_round(" + std::to_string(k + 1) + ")"};
        }
    }
    return {std::nullopt, "no_consensus"};
}

void check_against_table(const std::array<int, 3>& initial, int attending,
                         const std::vector<std::array<int, 4>>& rounds) {
    auto expected = table_expected(initial, attending, rounds);
    auto outcome = consensus::reduce_consensus(build_log(initial, attending, rounds));
    require(consensus::path_to_string(outcome) == expected.path,
            "path mismatch: got " + consensus::path_to_string(outcome) + ", table says " +
                expected.path);
    std::optional<int> got =
        outcome.label ? std::optional<int>(severity_index(*outcome.label)) : std::nullopt;
    require(got == expected.label, "label mismatch against the decision table");
}

std::string consensus_decision_table() {
    const std::array<int, 4> non_deciding = {0, 1, 2, 3};
    std::size_t checked = 0;

    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            for (int c = 0; c < 4; ++c) {
                std::array<int, 3> initial = {a, b, c};
                if (a == b && b == c) {
                    // Unanimous: decidable without the attending present.
                    auto outcome = consensus::reduce_consensus(build_log(initial, {}, {}));
                    require(outcome.path == consensus::ConsensusPath::unanimous3 &&
                                outcome.label == severity_from_int(a),
                            "unanimous triple mishandled");
                    checked += 1;
                    continue;
                }
                for (int attending = 0; attending < 4; ++attending) {
                    auto pair = table_pair(initial);
                    if (pair && attending == *pair) {
                        check_against_table(initial, attending, {});
                        checked += 1;
                        continue;
                    }
                    // Stage 3 reached. Logs are completed with non-deciding
                    // filler rounds so undecided patterns are still valid
                    // recordings of a full process.
                    for (int pattern = 0; pattern < 256; ++pattern) {
                        std::array<int, 4> round = {pattern & 3, (pattern >> 2) & 3,
                                                    (pattern >> 4) & 3, (pattern >> 6) & 3};
                        check_against_table(initial, attending,
                                            {round, non_deciding, non_deciding});
                        check_against_table(initial, attending,
                                            {non_deciding, round, non_deciding});
                        check_against_table(initial, attending,
                                            {non_deciding, non_deciding, round});
                        checked += 3;
                    }
                }
            }
        }
    }

    // Rater permutations never change the outcome.
    rng::Rng gen(606);
    for (int trial = 0; trial < 500; ++trial) {
        std::array<int, 3> initial{};
        for (auto& v : initial) v = static_cast<int>(gen.uniform_below(4));
        int attending = static_cast<int>(gen.uniform_below(4));
        std::vector<std::array<int, 4>> rounds(3);
        for (auto& round : rounds) {
            for (auto& v : round) v = static_cast<int>(gen.uniform_below(4));
        }
        auto log = build_log(initial, attending, rounds);
        auto base = consensus::reduce_consensus(log);
        auto shuffled = log;
        gen.shuffle(shuffled.initial);
        for (auto& round : shuffled.rounds) gen.shuffle(round);
        auto permuted = consensus::reduce_consensus(shuffled);
        require(base.label == permuted.label &&
                    consensus::path_to_string(base) == consensus::path_to_string(permuted),
                "rater permutation changed an outcome");
    }

    // All-agree logs give Fleiss kappa exactly 1.
    std::vector<std::vector<int>> agree;
    for (int i = 0; i < 141; ++i) agree.push_back(std::vector<int>(3, i % 4));
    require(consensus::fleiss_kappa(agree, 4) == 1.0, "all-agree kappa != 1.0");

    return std::to_string(checked) + " table rows verified";
}

// --------------------------------------------------------------------------
// 7. Difficulty ordering
// --------------------------------------------------------------------------

double auc_on(const baseline::ModelParams& params,
              const std::vector<baseline::FeatureVector>& features,
              const std::vector<Severity>& labels, const metrics::Comparison& cmp) {
    std::vector<metrics::BinaryScore> scores;
    for (std::size_t i = 0; i < features.size(); ++i) {
        metrics::ScoredSample s;
        s.image_id = features[i].image_id;
        s.true_label = labels[i];
        s.scores = baseline::predict_scores(params, features[i]);
        if (auto b = metrics::scalarize(s, cmp)) scores.push_back(*b);
    }
    return metrics::roc_auc(scores).auc;
}

std::string difficulty_ordering() {
    synth::SynthConfig cfg;
    cfg.class_separation = 1.5;
    cfg.class_mix = {0.25, 0.25, 0.25, 0.25};
    const auto& cmps = metrics::standard_comparisons();
    const auto& cmp_0v1 = cmps[0];
    const auto& cmp_0v2 = cmps[1];
    const auto& cmp_0v3 = cmps[2];

    int successes = 0;
    std::string aucs;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto [train_x, train_y] = synth::gen_features(cfg, 2000, seed);
        auto [test_x, test_y] = synth::gen_features(cfg, 2000, seed + 9000);
        baseline::TrainConfig tc;
        tc.learning_rate = 0.3;
        tc.epochs = 150;
        auto model = baseline::train(train_x, train_y, tc);
        double a01 = auc_on(model.params, test_x, test_y, cmp_0v1);
        double a02 = auc_on(model.params, test_x, test_y, cmp_0v2);
        double a03 = auc_on(model.params, test_x, test_y, cmp_0v3);
        if (a03 > a02 && a02 > a01 && a03 >= 0.95) successes += 1;
        if (seed == 1) {
            aucs = "seed1: 0v1=" + fmt(a01) + " 0v2=" + fmt(a02) + " 0v3=" + fmt(a03);
        }
    }
    require(successes >= 9,
            "ordering held in only " + std::to_string(successes) + "/10 seeds");
    return std::to_string(successes) + "/10 seeds ordered (" + aucs + ")";
}

// --------------------------------------------------------------------------
// 8. Kappa fixtures
// --------------------------------------------------------------------------

std::string kappa_fixtures() {
    std::vector<Severity> ident = {severity_from_int(0), severity_from_int(2),
                                   severity_from_int(1), severity_from_int(3),
                                   severity_from_int(2)};
    require(metrics::cohen_kappa_quadratic(ident, ident) == 1.0,
            "identical-input quadratic kappa != 1.0 exactly");

    double fleiss = consensus::fleiss_kappa({{0, 0, 0}, {0, 0, 1}}, 2);
    require(std::abs(fleiss - (-0.2)) <= 1e-12, "Fleiss fixture = " + fmt(fleiss));

    std::vector<Severity> a = {severity_from_int(0), severity_from_int(3)};
    std::vector<Severity> b = {severity_from_int(0), severity_from_int(0)};
    double qw = metrics::cohen_kappa_quadratic(a, b);
    require(std::abs(qw) <= 1e-12, "quadratic kappa fixture = " + fmt(qw));
    return "identical = 1.0 exact; Fleiss -0.2 and qw 0.0 to 1e-12";
}

// --------------------------------------------------------------------------
// 9. Statistical fixtures
// --------------------------------------------------------------------------

std::string statistical_fixtures() {
    auto t = metrics::two_sample_t_test({1, 2, 3, 4}, {3, 4, 5, 6});
    require(std::abs(t.t - (-2.191)) <= 1e-3, "t = " + fmt(t.t));
    require(t.df == 6, "df = " + std::to_string(t.df));
    require(std::abs(t.p - 0.0709) <= 1e-3, "t-test p = " + fmt(t.p));

    auto chi = metrics::chi_squared_test({{20, 10}, {10, 20}});
    require(std::abs(chi.chi2 - 6.667) <= 1e-3, "chi2 = " + fmt(chi.chi2));
    require(chi.df == 1, "chi2 df = " + std::to_string(chi.df));
    require(std::abs(chi.p - 0.0098) <= 1e-3, "chi2 p = " + fmt(chi.p));

    double threshold = metrics::bonferroni_threshold({0.05, 9});
    require(threshold == 0.05 / 9.0, "threshold != 0.05/9 exactly");
    return "t = " + fmt(t.t) + " p = " + fmt(t.p) + "; chi2 = " + fmt(chi.chi2) +
           " p = " + fmt(chi.p) + "; alpha/m exact";
}

// --------------------------------------------------------------------------
// 10. Pipeline determinism
// --------------------------------------------------------------------------

int run_cli(const std::string& args) {
    std::string cmd = std::string(EDEMAKIT_BIN) + " " + args + " > /dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

void run_pipeline(const fs::path& root) {
    fs::remove_all(root);
    fs::create_directories(root);
    std::string s = (root / "s").string();
    require(run_cli("synth --out " + s + " --seed 97 --patients 100 --trap-rate 0.25") == 0,
            "synth failed");
    require(run_cli("extract --reports " + s + "/reports.jsonl --reference " + s +
                    "/report_oracle.csv --out " + (root / "e").string()) == 0,
            "extract failed");
    require(run_cli("cohort --manifest " + s + "/manifest.csv --report-labels " +
                    (root / "e/report_labels.csv").string() + " --out " +
                    (root / "c").string()) == 0,
            "cohort failed");
    require(run_cli("split --manifest " + (root / "c/labeled_manifest.csv").string() +
                    " --k 5 --seed 13 --out " + (root / "f").string()) == 0,
            "split failed");
    require(run_cli("train --features " + s + "/features.csv --labels " +
                    (root / "c/image_labels.csv").string() + " --folds " +
                    (root / "f/folds.csv").string() + " --epochs 50 --seed 7 --out " +
                    (root / "t").string()) == 0,
            "train failed");
    require(run_cli("evaluate --scores-a " + (root / "t/scores_cv.csv").string() +
                    " --folds " + (root / "f/folds.csv").string() + " --out " +
                    (root / "v").string()) == 0,
            "evaluate failed");
    require(run_cli("consensus --votes " + s + "/votes.jsonl --out " +
                    (root / "k").string()) == 0,
            "consensus failed");
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string pipeline_determinism() {
    fs::path a = fs::temp_directory_path() / "edemakit_accept_a";
    fs::path b = fs::temp_directory_path() / "edemakit_accept_b";
    run_pipeline(a);
    run_pipeline(b);

    std::map<std::string, std::string> files_a, files_b;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (entry.is_regular_file()) {
            files_a[fs::relative(entry.path(), a).string()] = read_bytes(entry.path());
        }
    }
    for (const auto& entry : fs::recursive_directory_iterator(b)) {
        if (entry.is_regular_file()) {
            files_b[fs::relative(entry.path(), b).string()] = read_bytes(entry.path());
        }
    }
    require(!files_a.empty(), "pipeline produced no files");
    require(files_a.size() == files_b.size(), "output trees differ in file count");
    for (const auto& [rel, bytes] : files_a) {
        auto it = files_b.find(rel);
        require(it != files_b.end(), "missing file in second run: " + rel);
        require(bytes == it->second, "byte difference in " + rel);
    }
    return std::to_string(files_a.size()) + " files byte-identical across two runs";
}

}  // namespace

int main() {
    Harness harness;
    harness.run("AUC dual-form equality (1000 sets, 1e-12)", 10.0, auc_dual_form);
    harness.run("DeLong vs permutation oracle (50 datasets, 0.05)", 120.0, delong_vs_oracle);
    harness.run("weighted-CE gradient vs central differences (100, 1e-5)", 10.0,
                gradient_check);
    harness.run("patient-grouped folds (100 seeds, 1266-patient deal)", 0.0, fold_protocol);
    harness.run("extraction fidelity (clean 100%, traps suppressed, 16 keywords)", 0.0,
                extraction_fidelity);
    harness.run("consensus decision table (exhaustive stages)", 0.0, consensus_decision_table);
    harness.run("difficulty ordering (delta 1.5, n=2000, 10 seeds)", 120.0,
                difficulty_ordering);
    harness.run("kappa fixtures (exact and 1e-12)", 0.0, kappa_fixtures);
    harness.run("statistical fixtures (t, chi2, Bonferroni)", 0.0, statistical_fixtures);
    harness.run("CLI pipeline determinism (byte-identical trees)", 0.0,
                pipeline_determinism);

    if (harness.failures > 0) {
        std::printf("%d criterion(s) FAILED\n", harness.failures);
        return 1;
    }
    std::printf("all %d criteria passed\n", harness.index);
    return 0;
}
