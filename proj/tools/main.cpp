// edemakit — command line front end for the edema severity grading pipeline.
//
// Subcommands: synth, extract, cohort, split, train, evaluate, consensus.
// Every stochastic step takes an explicit --seed; no wall clock or
// environment entropy is used anywhere, so identical invocations produce
// byte-identical output trees.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "edema/baseline.hpp"
#include "edema/common.hpp"
#include "edema/consensus.hpp"
#include "edema/corpus.hpp"
#include "edema/csv.hpp"
#include "edema/extraction.hpp"
#include "edema/metrics.hpp"
#include "edema/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_out_dir(const std::string& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) {
        throw edema::ValidationError("cannot create output directory '" + out +
                                     "': " + ec.message());
    }
}

json interval_stats_json(const std::optional<edema::corpus::IntervalStats>& iv) {
    if (!iv) return nullptr;
    return json{{"count", iv->count},
                {"mean_days", iv->mean},
                {"median_days", iv->median},
                {"min_days", iv->min},
                {"max_days", iv->max},
                {"frac_within_1_day", iv->frac_within_1_day},
                {"frac_within_30_days", iv->frac_within_30_days}};
}

json cohort_stats_json(const edema::corpus::CohortStats& stats) {
    json hist = json::object();
    for (const auto& [images, patients] : stats.images_per_patient_hist) {
        hist[std::to_string(images)] = patients;
    }
    return json{{"patients", stats.patient_count},
                {"images", stats.image_count},
                {"images_per_patient",
                 {{"histogram", hist},
                  {"mean", stats.mean_images},
                  {"median", stats.median_images},
                  {"min", stats.min_images},
                  {"max", stats.max_images}}},
                {"intervals", interval_stats_json(stats.intervals)}};
}

json confusion_json(const edema::metrics::ConfusionMatrix& cm) {
    json counts = json::array();
    json fractions = json::array();
    for (int row = 0; row < 4; ++row) {
        json crow = json::array(), frow = json::array();
        std::size_t total = 0;
        for (int col = 0; col < 4; ++col) total += cm.counts[row][col];
        for (int col = 0; col < 4; ++col) {
            crow.push_back(cm.counts[row][col]);
            if (total > 0) {
                frow.push_back(cm.row_fractions[row][col]);
            } else {
                frow.push_back(nullptr);
            }
        }
        counts.push_back(crow);
        fractions.push_back(frow);
    }
    return json{{"rows", "predicted"},
                {"columns", "true"},
                {"counts", counts},
                {"row_fractions", fractions},
                {"total", cm.total}};
}

std::set<std::string> parse_code_list(const std::string& codes) {
    std::set<std::string> out;
    std::string cur;
    for (char c : codes) {
        if (c == ',') {
            if (!cur.empty()) out.insert(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.insert(cur);
    return out;
}

/// Reads extract's report_labels.csv; unlabeled reports are skipped.
std::map<std::string, edema::Severity> load_report_labels(const fs::path& path) {
    auto rows = edema::csv::read_file(path);
    if (rows.empty() || rows[0].fields.size() < 2 || rows[0].fields[0] != "report_id" ||
        rows[0].fields[1] != "label") {
        throw edema::ValidationError(
            "bad report label header (expected report_id,label,...): " + path.string());
    }
    std::map<std::string, edema::Severity> labels;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.fields.size() < 2) {
            throw edema::ValidationError("line " + std::to_string(row.line) +
                                         ": expected at least 2 fields");
        }
        if (row.fields[1].empty()) continue;
        if (row.fields[1].size() != 1 || row.fields[1][0] < '0' || row.fields[1][0] > '3') {
            throw edema::ValidationError("line " + std::to_string(row.line) +
                                         ": label must be empty or 0-3");
        }
        labels[row.fields[0]] = edema::severity_from_int(row.fields[1][0] - '0');
    }
    return labels;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw edema::ValidationError("cannot open file for writing: " + path.string());
    }
    out << text;
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
    edema::synth::SynthConfig cfg;
    std::string out;
    std::string class_mix_str;
};

int run_synth(const SynthArgs& args) {
    edema::synth::SynthConfig cfg = args.cfg;
    if (!args.class_mix_str.empty()) {
        std::istringstream in(args.class_mix_str);
        std::string part;
        std::vector<double> mix;
        while (std::getline(in, part, ',')) mix.push_back(std::stod(part));
        if (mix.size() != 4) {
            throw edema::ValidationError("--class-mix needs 4 comma-separated values");
        }
        std::copy(mix.begin(), mix.end(), cfg.class_mix.begin());
    }
    edema::synth::validate_config(cfg);
    ensure_out_dir(args.out);
    const fs::path out(args.out);

    auto bundle = edema::synth::gen_cohort(cfg);
    edema::corpus::write_manifest(out / "manifest.csv", bundle.manifest);
    edema::baseline::write_features_csv(out / "features.csv", bundle.features);

    std::vector<std::pair<std::string, edema::Severity>> image_oracle(
        bundle.image_oracle.begin(), bundle.image_oracle.end());
    edema::synth::write_oracle_csv(out / "image_oracle.csv", image_oracle);
    edema::synth::write_oracle_csv(out / "report_oracle.csv", bundle.report_oracle);

    auto corpus = edema::synth::gen_reports_for(cfg, bundle.report_oracle);
    edema::extraction::write_reports_jsonl(out / "reports.jsonl", corpus.docs);

    // Votes cover a sampled subset of distinct oracle images.
    std::vector<std::pair<std::string, edema::Severity>> vote_images = image_oracle;
    edema::rng::Rng gen(cfg.seed ^ 0x566f7465537562ULL);
    gen.shuffle(vote_images);
    if (vote_images.size() > cfg.n_vote_images) {
        vote_images.resize(cfg.n_vote_images);
    }
    std::sort(vote_images.begin(), vote_images.end());
    auto votes = edema::synth::gen_votes(cfg, vote_images);
    edema::consensus::write_votes_jsonl(out / "votes.jsonl", votes);

    std::cout << "synth: " << bundle.manifest.size() << " manifest rows, "
              << corpus.docs.size() << " reports, " << bundle.features.size()
              << " feature rows, " << votes.size() << " vote logs -> " << args.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

struct ExtractArgs {
    std::string reports;
    std::string ruleset;
    std::string reference;
    std::string out;
};

int run_extract(const ExtractArgs& args) {
    ensure_out_dir(args.out);
    const fs::path out(args.out);
    auto ruleset = args.ruleset.empty()
                       ? edema::extraction::RuleSet::defaults()
                       : edema::extraction::RuleSet::from_json_file(args.ruleset);
    auto docs = edema::extraction::load_reports_jsonl(args.reports);

    std::map<std::string, edema::extraction::ExtractionResult> results;
    for (const auto& doc : docs) {
        results.emplace(doc.report_id, edema::extraction::extract(doc.text, ruleset));
    }

    {
        edema::csv::Writer w(out / "report_labels.csv");
        w.row({"report_id", "label", "negated_only"});
        for (const auto& doc : docs) {
            const auto& r = results.at(doc.report_id);
            bool negated_only = !r.label && !r.matches.empty();
            w.row({doc.report_id,
                   r.label ? std::to_string(edema::severity_index(*r.label)) : "",
                   negated_only ? "1" : "0"});
        }
    }
    {
        // Per-report match audit trail.
        std::ofstream audit(out / "matches.jsonl");
        for (const auto& doc : docs) {
            const auto& r = results.at(doc.report_id);
            json matches = json::array();
            for (const auto& m : r.matches) {
                matches.push_back({{"rule_id", m.rule_id},
                                   {"severity", edema::severity_index(m.severity)},
                                   {"begin", m.begin},
                                   {"end", m.end},
                                   {"negated", m.negated}});
            }
            json line = {{"report_id", doc.report_id},
                         {"label", r.label ? json(edema::severity_index(*r.label)) : json()},
                         {"matches", matches}};
            audit << line.dump() << '\n';
        }
    }

    if (!args.reference.empty()) {
        auto reference = edema::synth::load_oracle_csv(args.reference);
        auto validation = edema::extraction::validate_extraction(results, reference, ruleset);
        edema::csv::Writer w(out / "keyword_validation.csv");
        w.row({"severity", "keyword", "rule_id", "reports", "precision", "sensitivity",
               "specificity"});
        auto cell = [](const std::optional<double>& v) {
            return v ? edema::csv::format_double(*v) : std::string();
        };
        for (const auto& ks : validation.keywords) {
            w.row({std::to_string(edema::severity_index(ks.severity)), ks.pattern, ks.rule_id,
                   std::to_string(ks.reports_fired), cell(ks.precision), cell(ks.sensitivity),
                   cell(ks.specificity)});
        }
        w.row({"overall", "", "", std::to_string(validation.evaluated_reports),
               cell(validation.overall_precision), "", ""});
    }

    std::size_t labeled = 0;
    for (const auto& [id, r] : results) labeled += r.label.has_value();
    std::cout << "extract: " << docs.size() << " reports, " << labeled << " labeled -> "
              << args.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// cohort
// ---------------------------------------------------------------------------

struct CohortArgs {
    std::string manifest;
    std::string chf_codes = "I50.9";
    std::string report_labels;
    std::string out;
};

int run_cohort(const CohortArgs& args) {
    ensure_out_dir(args.out);
    const fs::path out(args.out);
    auto records = edema::corpus::load_manifest(args.manifest);

    auto frontal = edema::corpus::filter_frontal(records);
    auto split = edema::corpus::filter_chf(records, parse_code_list(args.chf_codes));
    auto chf_frontal = edema::corpus::filter_chf(frontal.records, parse_code_list(args.chf_codes));

    json funnel = {
        {"total_images", records.size()},
        {"non_frontal_excluded", frontal.excluded},
        {"frontal_images", frontal.records.size()},
        {"chf_images_all_views", split.chf.size()},
        {"chf_frontal_images", chf_frontal.chf.size()},
        {"chf_patients", edema::corpus::cohort_stats(split.chf).patient_count},
        {"non_chf_patients", edema::corpus::cohort_stats(split.non_chf).patient_count},
    };

    json stats = {
        {"chf", cohort_stats_json(edema::corpus::cohort_stats(split.chf))},
        {"non_chf", cohort_stats_json(edema::corpus::cohort_stats(split.non_chf))},
    };

    auto analysis = chf_frontal.chf;
    std::size_t labeled_images = 0;
    if (!args.report_labels.empty()) {
        auto report_labels = load_report_labels(args.report_labels);
        analysis = edema::corpus::attach_report_labels(analysis, report_labels);
        std::vector<edema::corpus::StudyRecord> labeled;
        edema::csv::Writer w(out / "image_labels.csv");
        w.row({"id", "true_severity"});
        for (const auto& r : analysis) {
            if (r.label) {
                labeled.push_back(r);
                w.row({r.image_id, std::to_string(edema::severity_index(*r.label))});
            }
        }
        labeled_images = labeled.size();
        edema::corpus::write_manifest(out / "labeled_manifest.csv", labeled);
    }
    edema::corpus::write_manifest(out / "chf_frontal_manifest.csv", analysis);
    funnel["labeled_images"] = labeled_images;

    write_json(out / "funnel.json", funnel);
    write_json(out / "cohort_stats.json", stats);

    std::cout << "cohort: " << records.size() << " rows, " << chf_frontal.chf.size()
              << " CHF frontal, " << labeled_images << " labeled -> " << args.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

struct SplitArgs {
    std::string manifest;
    int k = 5;
    std::uint64_t seed = 0;
    std::string out;
};

int run_split(const SplitArgs& args) {
    ensure_out_dir(args.out);
    const fs::path out(args.out);
    auto records = edema::corpus::load_manifest(args.manifest);
    auto assignment = edema::corpus::group_kfold(records, args.k, args.seed);
    edema::corpus::write_fold_csv(out / "folds.csv", assignment, records);

    auto dist = edema::corpus::fold_distribution(assignment, records);
    {
        edema::csv::Writer w(out / "fold_distribution.csv");
        w.row({"fold", "patients", "images", "n0", "n1", "n2", "n3", "unlabeled"});
        for (int f = 0; f < dist.k; ++f) {
            w.row({std::to_string(f), std::to_string(dist.patients[f]),
                   std::to_string(dist.images[f]), std::to_string(dist.label_counts[f][0]),
                   std::to_string(dist.label_counts[f][1]),
                   std::to_string(dist.label_counts[f][2]),
                   std::to_string(dist.label_counts[f][3]),
                   std::to_string(dist.unlabeled[f])});
        }
        std::size_t total_patients = 0;
        for (auto p : dist.patients) total_patients += p;
        w.row({"total", std::to_string(total_patients), std::to_string(dist.total_images),
               std::to_string(dist.total_labels[0]), std::to_string(dist.total_labels[1]),
               std::to_string(dist.total_labels[2]), std::to_string(dist.total_labels[3]),
               std::to_string(dist.total_unlabeled)});
    }
    json jd = {{"k", dist.k},
               {"patients", dist.patients},
               {"images", dist.images},
               {"unlabeled", dist.unlabeled},
               {"total_images", dist.total_images},
               {"total_labels", dist.total_labels},
               {"label_fractions", dist.label_fractions}};
    json per_fold = json::array();
    for (int f = 0; f < dist.k; ++f) per_fold.push_back(dist.label_counts[f]);
    jd["label_counts"] = per_fold;
    write_json(out / "fold_distribution.json", jd);

    std::cout << "split: k=" << args.k << ", " << records.size() << " images -> " << args.out
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string features;
    std::string labels;
    std::string folds;
    std::string out;
    edema::baseline::TrainConfig cfg;
    std::string weight_mode = "inverse_frequency";
    std::string class_weights;  // "w0,w1,w2,w3" for explicit mode
};

int run_train(const TrainArgs& args) {
    ensure_out_dir(args.out);
    const fs::path out(args.out);
    auto features = edema::baseline::load_features_csv(args.features);
    auto labels = edema::synth::load_oracle_csv(args.labels);
    auto folds = edema::corpus::load_fold_csv(args.folds);

    edema::baseline::TrainConfig cfg = args.cfg;
    cfg.weight_mode = edema::baseline::weight_mode_from_string(args.weight_mode);
    if (!args.class_weights.empty()) {
        std::istringstream in(args.class_weights);
        std::string part;
        std::vector<double> w;
        while (std::getline(in, part, ',')) w.push_back(std::stod(part));
        if (w.size() != 4) {
            throw edema::ValidationError("--class-weights needs 4 comma-separated values");
        }
        edema::baseline::ClassWeights cw;
        std::copy(w.begin(), w.end(), cw.w.begin());
        cfg.explicit_weights = cw;
    }
    if (cfg.weight_mode == edema::baseline::WeightMode::explicit_weights &&
        !cfg.explicit_weights) {
        throw edema::ValidationError("--weight-mode explicit requires --class-weights");
    }

    // Training pool: features that carry both a label and a fold.
    struct Row {
        const edema::baseline::FeatureVector* x;
        edema::Severity y;
        int fold;
    };
    std::vector<Row> rows;
    int k = 0;
    for (const auto& fv : features) {
        auto ly = labels.find(fv.image_id);
        auto lf = folds.find(fv.image_id);
        if (ly == labels.end() || lf == folds.end()) continue;
        rows.push_back(Row{&fv, ly->second, lf->second});
        k = std::max(k, lf->second + 1);
    }
    if (rows.empty()) {
        throw edema::ValidationError("train: no sample has both a label and a fold");
    }

    json summary;
    summary["folds"] = json::array();
    std::vector<edema::metrics::ScoredSample> cv_scores;
    for (int fold = 0; fold < k; ++fold) {
        std::vector<edema::baseline::FeatureVector> train_x;
        std::vector<edema::Severity> train_y;
        std::vector<const Row*> held_out;
        for (const auto& row : rows) {
            if (row.fold == fold) {
                held_out.push_back(&row);
            } else {
                train_x.push_back(*row.x);
                train_y.push_back(row.y);
            }
        }
        if (train_x.empty() || held_out.empty()) {
            throw edema::ValidationError("train: fold " + std::to_string(fold) +
                                         " leaves an empty train or evaluation set");
        }
        auto result = edema::baseline::train(train_x, train_y, cfg);
        edema::baseline::write_model_json(out / ("model_fold" + std::to_string(fold) + ".json"),
                                          result.params, cfg, result.weights);

        std::vector<edema::metrics::ScoredSample> fold_scores;
        for (const Row* row : held_out) {
            edema::metrics::ScoredSample s;
            s.image_id = row->x->image_id;
            s.true_label = row->y;
            s.scores = edema::baseline::predict_scores(result.params, *row->x);
            fold_scores.push_back(s);
            cv_scores.push_back(std::move(s));
        }
        edema::metrics::write_score_csv(out / ("scores_fold" + std::to_string(fold) + ".csv"),
                                        fold_scores);
        summary["folds"].push_back({{"fold", fold},
                                    {"train_samples", train_x.size()},
                                    {"eval_samples", held_out.size()},
                                    {"final_loss", result.loss_trace.back()}});
    }
    std::sort(cv_scores.begin(), cv_scores.end(),
              [](const auto& a, const auto& b) { return a.image_id < b.image_id; });
    edema::metrics::write_score_csv(out / "scores_cv.csv", cv_scores);
    summary["k"] = k;
    summary["samples"] = rows.size();
    summary["config"] = {{"learning_rate", cfg.learning_rate},
                         {"epochs", cfg.epochs},
                         {"batch", cfg.batch},
                         {"seed", cfg.seed},
                         {"weight_mode", edema::baseline::weight_mode_name(cfg.weight_mode)},
                         {"l2", cfg.l2}};
    write_json(out / "train_summary.json", summary);

    std::cout << "train: " << rows.size() << " samples over " << k << " folds -> " << args.out
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string scores_a;
    std::string scores_b;
    std::string folds;
    std::string out;
    double alpha = 0.05;
    int m_comparisons = 9;
    std::string scalar_mode = "ratio";
};

int run_evaluate(const EvaluateArgs& args) {
    ensure_out_dir(args.out);
    const fs::path out(args.out);
    auto samples_a = edema::metrics::load_score_csv(args.scores_a);
    std::vector<edema::metrics::ScoredSample> samples_b;
    const bool have_b = !args.scores_b.empty();
    if (have_b) {
        samples_b = edema::metrics::load_score_csv(args.scores_b);
        if (samples_b.size() != samples_a.size()) {
            throw edema::ValidationError("evaluate: score files differ in sample count");
        }
        for (std::size_t i = 0; i < samples_a.size(); ++i) {
            if (samples_a[i].image_id != samples_b[i].image_id ||
                samples_a[i].true_label != samples_b[i].true_label) {
                throw edema::ValidationError(
                    "evaluate: score files disagree on ids or labels at row " +
                    std::to_string(i + 1));
            }
        }
    }
    const auto mode = args.scalar_mode == "expected"
                          ? edema::metrics::ScalarMode::expected_severity
                          : edema::metrics::ScalarMode::pos_probability_ratio;
    if (args.scalar_mode != "ratio" && args.scalar_mode != "expected") {
        throw edema::ValidationError("--scalar-mode must be ratio|expected");
    }

    const double threshold = edema::metrics::bonferroni_threshold(
        edema::metrics::SignificanceConfig{args.alpha, args.m_comparisons});

    std::map<std::string, int> folds;
    if (!args.folds.empty()) folds = edema::corpus::load_fold_csv(args.folds);

    edema::csv::Writer roc_a(out / "roc_a.csv");
    roc_a.row({"comparison", "fpr", "tpr"});
    std::optional<edema::csv::Writer> roc_b;
    if (have_b) {
        roc_b.emplace(out / "roc_b.csv");
        roc_b->row({"comparison", "fpr", "tpr"});
    }

    json comparisons = json::array();
    for (const auto& cmp : edema::metrics::standard_comparisons()) {
        json entry = {{"name", cmp.name}, {"display", cmp.display}};

        std::vector<edema::metrics::BinaryScore> bin_a, bin_b;
        std::vector<bool> truth;
        std::vector<double> sc_a, sc_b;
        for (std::size_t i = 0; i < samples_a.size(); ++i) {
            auto a = edema::metrics::scalarize(samples_a[i], cmp, mode);
            if (!a) continue;
            bin_a.push_back(*a);
            truth.push_back(a->positive);
            sc_a.push_back(a->score);
            if (have_b) {
                auto b = edema::metrics::scalarize(samples_b[i], cmp, mode);
                bin_b.push_back(*b);
                sc_b.push_back(b->score);
            }
        }

        try {
            auto roc = edema::metrics::roc_auc(bin_a);
            entry["auc_a"] = roc.auc;
            for (const auto& pt : roc.points) {
                roc_a.row({cmp.name, edema::csv::format_double(pt.fpr),
                           edema::csv::format_double(pt.tpr)});
            }
        } catch (const edema::ValidationError& e) {
            entry["auc_a"] = nullptr;
            entry["note"] = e.what();
        }
        if (have_b) {
            try {
                auto roc = edema::metrics::roc_auc(bin_b);
                entry["auc_b"] = roc.auc;
                for (const auto& pt : roc.points) {
                    roc_b->row({cmp.name, edema::csv::format_double(pt.fpr),
                                edema::csv::format_double(pt.tpr)});
                }
                auto dl = edema::metrics::delong_paired_test(truth, sc_a, sc_b);
                entry["delong"] = {{"z", dl.z},
                                   {"p", dl.p},
                                   {"var_a", dl.var_a},
                                   {"var_b", dl.var_b},
                                   {"cov", dl.cov}};
                entry["significant"] = dl.p < threshold;
            } catch (const edema::ValidationError& e) {
                entry["auc_b"] = nullptr;
                entry["note"] = e.what();
            }
        } else {
            entry["auc_b"] = nullptr;
        }

        if (!folds.empty()) {
            auto fold_aggregate =
                [&](const std::vector<edema::metrics::ScoredSample>& samples) {
                    std::map<int, std::vector<edema::metrics::BinaryScore>> by_fold;
                    for (const auto& s : samples) {
                        auto bin = edema::metrics::scalarize(s, cmp, mode);
                        if (!bin) continue;
                        auto it = folds.find(s.image_id);
                        if (it == folds.end()) {
                            throw edema::ValidationError("evaluate: image '" + s.image_id +
                                                         "' missing from fold file");
                        }
                        by_fold[it->second].push_back(*bin);
                    }
                    std::vector<double> fold_aucs;
                    json per_fold = json::array();
                    for (const auto& [fold, scores] : by_fold) {
                        try {
                            double auc = edema::metrics::roc_auc(scores).auc;
                            fold_aucs.push_back(auc);
                            per_fold.push_back({{"fold", fold}, {"auc", auc}});
                        } catch (const edema::ValidationError&) {
                            per_fold.push_back({{"fold", fold}, {"auc", nullptr}});
                        }
                    }
                    json cv = {{"per_fold", per_fold}};
                    if (!fold_aucs.empty()) {
                        auto agg = edema::metrics::aggregate_folds(fold_aucs);
                        cv["mean"] = agg.mean;
                        cv["stddev"] = agg.stddev ? json(*agg.stddev) : json();
                    }
                    return cv;
                };
            entry["cv_a"] = fold_aggregate(samples_a);
            if (have_b) entry["cv_b"] = fold_aggregate(samples_b);
        }
        comparisons.push_back(std::move(entry));
    }

    std::vector<edema::Severity> truth_labels, pred_a, pred_b;
    for (const auto& s : samples_a) {
        truth_labels.push_back(s.true_label);
        pred_a.push_back(edema::metrics::argmax_label(s.scores));
    }
    for (const auto& s : samples_b) {
        pred_b.push_back(edema::metrics::argmax_label(s.scores));
    }

    json report;
    report["comparisons"] = comparisons;
    report["bonferroni"] = {{"alpha", args.alpha},
                            {"m", args.m_comparisons},
                            {"threshold", threshold},
                            {"note", "threshold reported unrounded"}};
    report["scalar_mode"] = args.scalar_mode;
    report["confusion_a"] = confusion_json(edema::metrics::confusion_matrix(truth_labels, pred_a));
    report["kappa_a"] = edema::metrics::cohen_kappa_quadratic(truth_labels, pred_a);
    if (have_b) {
        report["confusion_b"] =
            confusion_json(edema::metrics::confusion_matrix(truth_labels, pred_b));
        report["kappa_b"] = edema::metrics::cohen_kappa_quadratic(truth_labels, pred_b);
    } else {
        report["confusion_b"] = nullptr;
        report["kappa_b"] = nullptr;
    }
    write_json(out / "report.json", report);

    std::cout << "evaluate: " << samples_a.size() << " samples, "
              << edema::metrics::standard_comparisons().size() << " comparisons -> " << args.out
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// consensus
// ---------------------------------------------------------------------------

struct ConsensusArgs {
    std::string votes;
    int max_rounds = 3;
    std::string out;
};

int run_consensus(const ConsensusArgs& args) {
    ensure_out_dir(args.out);
    const fs::path out(args.out);
    auto logs = edema::consensus::load_votes_jsonl(args.votes);

    std::map<std::string, std::size_t> path_counts;
    std::array<std::size_t, 4> label_counts{};
    std::size_t no_consensus = 0;
    std::vector<std::vector<int>> initial_votes;

    edema::csv::Writer w(out / "outcomes.csv");
    w.row({"image_id", "label", "path", "rounds_used"});
    for (const auto& log : logs) {
        auto outcome = edema::consensus::reduce_consensus(log, args.max_rounds);
        w.row({log.image_id,
               outcome.label ? std::to_string(edema::severity_index(*outcome.label)) : "",
               edema::consensus::path_to_string(outcome),
               std::to_string(outcome.rounds_used)});
        path_counts[edema::consensus::path_to_string(outcome)] += 1;
        if (outcome.label) {
            label_counts[edema::severity_index(*outcome.label)] += 1;
        } else {
            no_consensus += 1;
        }
        std::vector<int> votes;
        for (const auto& v : log.initial) votes.push_back(edema::severity_index(v.label));
        initial_votes.push_back(std::move(votes));
    }

    json summary;
    summary["images"] = logs.size();
    summary["paths"] = path_counts;
    summary["label_counts"] = label_counts;
    summary["no_consensus"] = no_consensus;
    if (!logs.empty()) {
        summary["fleiss_kappa_initial"] = edema::consensus::fleiss_kappa(initial_votes, 4);
    } else {
        summary["fleiss_kappa_initial"] = nullptr;
    }
    write_json(out / "consensus_summary.json", summary);

    std::cout << "consensus: " << logs.size() << " images, " << no_consensus
              << " without consensus -> " << args.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// --schema
// ---------------------------------------------------------------------------

const char* kSchemaText = R"(edemakit file formats

manifest.csv        patient_id,study_id,image_id,acquisition_time,view,dx_codes,report_id,label
                    acquisition_time: ISO-8601 minutes (YYYY-MM-DDTHH:MM)
                    view: frontal|lateral|other; dx_codes: ';'-separated
                    label: empty or 0-3
reports.jsonl       one JSON object per line: {"report_id": str, "text": str}
ruleset.json        {"rules":[{"rule_id":str,"pattern":str,"severity":0-3},...],
                     "negation":{"cues":[str,...],"window":int}}  (negation optional)
oracle/labels.csv   id,true_severity            severity 0-3
report_labels.csv   report_id,label,negated_only
keyword_validation.csv severity,keyword,rule_id,reports,precision,sensitivity,specificity
folds.csv           image_id,fold               fold in [0,k)
fold_distribution.csv fold,patients,images,n0,n1,n2,n3,unlabeled (+ total row)
features.csv        image_id,f0,...,f{d-1}
model_fold<k>.json  {"dim":d,"W":[[...]x4],"b":[...],"config":{...}}
scores*.csv         image_id,true_label,p0,p1,p2,p3  (probabilities sum to 1)
votes.jsonl         {"image_id":str,"initial":[[rater,label]x3],
                     "attending":[rater,label]?,"rounds":[[[rater,label]x4],...]}
outcomes.csv        image_id,label,path,rounds_used
                    path: unanimous3|majority4|discussion_round(k)|no_consensus
roc_{a,b}.csv       comparison,fpr,tpr
report.json         nine comparisons (auc_a, auc_b, delong{z,p,...}, significant),
                    bonferroni{alpha,m,threshold}, confusion_{a,b}, kappa_{a,b}
)";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"edemakit: pulmonary edema severity grading pipeline"};
    app.require_subcommand(0, 1);
    bool schema = false;
    app.add_flag("--schema", schema, "print all file format specifications and exit");

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset with oracles");
    synth->add_option("--out", synth_args.out, "output directory")->required();
    synth->add_option("--seed", synth_args.cfg.seed, "random seed")->required();
    synth->add_option("--patients", synth_args.cfg.n_patients, "number of patients");
    synth->add_option("--class-mix", synth_args.class_mix_str,
                      "severity mix, 4 comma-separated proportions");
    synth->add_option("--feature-dim", synth_args.cfg.feature_dim, "feature dimension");
    synth->add_option("--separation", synth_args.cfg.class_separation,
                      "distance between adjacent class means");
    synth->add_option("--keyword-density", synth_args.cfg.keyword_density,
                      "expected extra keywords per report");
    synth->add_option("--trap-rate", synth_args.cfg.negation_trap_rate,
                      "probability of a negated higher-grade keyword per report");
    synth->add_option("--rater-agreement", synth_args.cfg.rater_agreement,
                      "probability a rater votes the oracle grade");
    synth->add_option("--vote-images", synth_args.cfg.n_vote_images,
                      "images receiving vote logs");
    synth->add_option("--chf-fraction", synth_args.cfg.chf_fraction, "CHF patient fraction");
    synth->add_option("--lateral-fraction", synth_args.cfg.lateral_fraction,
                      "lateral study fraction");

    ExtractArgs extract_args;
    auto* extract = app.add_subcommand("extract", "label reports with the keyword rules");
    extract->add_option("--reports", extract_args.reports, "reports JSONL")->required();
    extract->add_option("--out", extract_args.out, "output directory")->required();
    extract->add_option("--ruleset", extract_args.ruleset, "ruleset JSON (default built-in)");
    extract->add_option("--reference", extract_args.reference,
                        "reference labels CSV for keyword validation");

    CohortArgs cohort_args;
    auto* cohort = app.add_subcommand("cohort", "apply enrollment filters and compute stats");
    cohort->add_option("--manifest", cohort_args.manifest, "manifest CSV")->required();
    cohort->add_option("--out", cohort_args.out, "output directory")->required();
    cohort->add_option("--chf-codes", cohort_args.chf_codes,
                       "comma-separated CHF diagnosis codes");
    cohort->add_option("--report-labels", cohort_args.report_labels,
                       "report labels CSV to attach to images");

    SplitArgs split_args;
    auto* split = app.add_subcommand("split", "patient-grouped k-fold split");
    split->add_option("--manifest", split_args.manifest, "manifest CSV")->required();
    split->add_option("--out", split_args.out, "output directory")->required();
    split->add_option("--k", split_args.k, "fold count");
    split->add_option("--seed", split_args.seed, "random seed")->required();

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "train the per-fold baseline classifier");
    train->add_option("--features", train_args.features, "features CSV")->required();
    train->add_option("--labels", train_args.labels, "labels CSV (id,true_severity)")
        ->required();
    train->add_option("--folds", train_args.folds, "folds CSV")->required();
    train->add_option("--out", train_args.out, "output directory")->required();
    train->add_option("--lr", train_args.cfg.learning_rate, "learning rate");
    train->add_option("--epochs", train_args.cfg.epochs, "training epochs");
    train->add_option("--batch", train_args.cfg.batch, "mini-batch size (0 = full batch)");
    train->add_option("--seed", train_args.cfg.seed, "random seed")->required();
    train->add_option("--weight-mode", train_args.weight_mode,
                      "uniform|inverse_frequency|explicit");
    train->add_option("--class-weights", train_args.class_weights,
                      "4 comma-separated weights for --weight-mode explicit");
    train->add_option("--l2", train_args.cfg.l2, "L2 penalty on W");

    EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "score files -> metric report");
    evaluate->add_option("--scores-a", eval_args.scores_a, "model A score CSV")->required();
    evaluate->add_option("--scores-b", eval_args.scores_b, "model B score CSV (paired)");
    evaluate->add_option("--folds", eval_args.folds, "fold CSV for per-fold aggregation");
    evaluate->add_option("--out", eval_args.out, "output directory")->required();
    evaluate->add_option("--alpha", eval_args.alpha, "significance level");
    evaluate->add_option("--m-comparisons", eval_args.m_comparisons,
                         "comparison count for the Bonferroni correction");
    evaluate->add_option("--scalar-mode", eval_args.scalar_mode,
                         "per-sample scalar: ratio|expected");

    ConsensusArgs consensus_args;
    auto* consensus = app.add_subcommand("consensus", "reduce vote logs to consensus labels");
    consensus->add_option("--votes", consensus_args.votes, "votes JSONL")->required();
    consensus->add_option("--out", consensus_args.out, "output directory")->required();
    consensus->add_option("--max-rounds", consensus_args.max_rounds,
                          "maximum discussion rounds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help
        }
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    }

    try {
        if (schema) {
            std::cout << kSchemaText;
            return 0;
        }
        if (synth->parsed()) return run_synth(synth_args);
        if (extract->parsed()) return run_extract(extract_args);
        if (cohort->parsed()) return run_cohort(cohort_args);
        if (split->parsed()) return run_split(split_args);
        if (train->parsed()) return run_train(train_args);
        if (evaluate->parsed()) return run_evaluate(eval_args);
        if (consensus->parsed()) return run_consensus(consensus_args);
        std::cerr << "error: usage: a subcommand is required (see --help)\n";
        return 1;
    } catch (const edema::ValidationError& e) {
        std::cerr << "error: validation: " << e.what() << "\n";
        return 1;
    } catch (const edema::NumericError& e) {
        std::cerr << "error: numeric: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 2;
    }
}
