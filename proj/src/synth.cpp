#include "edema/synth.hpp"

#include <algorithm>
#include <cmath>

#include "edema/csv.hpp"
#include "edema/timeutil.hpp"

namespace edema::synth {

namespace {

// Filler prose, free of rule keywords so oracle labels stay exact.
const std::vector<std::string> kFillerSentences = {
    "Cardiomediastinal silhouette is stable.",
    "The heart size is within normal limits.",
    "Sternotomy wires are intact and midline.",
    "Degenerative changes are again seen in the thoracic spine.",
    "The trachea is midline and the carina is sharp.",
    "Surgical clips project over the right upper quadrant.",
    "Osseous structures are unremarkable.",
    "Support lines and tubes are in standard position.",
};

// Templates embedding a positive (grade 1-3) keyword with no cue in front.
const std::vector<std::string> kPositiveTemplates = {
    "Findings consistent with %.",
    "% is present.",
    "There is evidence of %.",
    "Persistent % compared to the prior exam.",
};

// Templates for grade-0 phrases, which carry their own negative wording.
const std::vector<std::string> kNoneTemplates = {
    "%.",
    "% is identified.",
    "% on the current exam.",
};

// Templates placing a negation cue within the lookback window of a keyword.
const std::vector<std::string> kTrapTemplates = {
    "There is no %.",
    "Without %.",
    "Interval resolution of %.",
    "Negative for %.",
};

std::string instantiate(const std::string& tmpl, const std::string& keyword) {
    std::string out;
    for (char c : tmpl) {
        if (c == '%') out += keyword;
        else out.push_back(c);
    }
    return out;
}

Severity sample_severity(rng::Rng& gen, const std::array<double, 4>& mix) {
    double u = gen.uniform01();
    double acc = 0.0;
    for (int c = 0; c < 3; ++c) {
        acc += mix[c];
        if (u < acc) return severity_from_int(c);
    }
    return severity_from_int(3);
}

std::vector<std::vector<const extraction::ExtractionRule*>> rules_by_severity() {
    static const extraction::RuleSet kDefaults = extraction::RuleSet::defaults();
    std::vector<std::vector<const extraction::ExtractionRule*>> by_sev(4);
    for (const auto& rule : kDefaults.rules()) {
        by_sev[severity_index(rule.severity)].push_back(&rule);
    }
    return by_sev;
}

std::string zero_pad(std::size_t v, int width) {
    std::string s = std::to_string(v);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

}  // namespace

void validate_config(const SynthConfig& cfg) {
    double mix_sum = 0.0;
    for (double p : cfg.class_mix) {
        if (p < 0.0) throw ValidationError("class_mix entries must be >= 0");
        mix_sum += p;
    }
    if (std::abs(mix_sum - 1.0) > 1e-9) {
        throw ValidationError("class_mix must sum to 1");
    }
    if (cfg.class_separation < 0.0) {
        throw ValidationError("class_separation must be >= 0");
    }
    for (double p : {cfg.keyword_density, cfg.negation_trap_rate, cfg.rater_agreement,
                     cfg.chf_fraction, cfg.lateral_fraction, cfg.extra_frontal_fraction}) {
        if (p < 0.0) throw ValidationError("probability knobs must be >= 0");
    }
    for (double p : {cfg.negation_trap_rate, cfg.rater_agreement, cfg.chf_fraction,
                     cfg.lateral_fraction, cfg.extra_frontal_fraction}) {
        if (p > 1.0) throw ValidationError("probability knobs must be <= 1");
    }
    if (!(cfg.exams_geometric_p > 0.0 && cfg.exams_geometric_p <= 1.0)) {
        throw ValidationError("exams_geometric_p must be in (0, 1]");
    }
    if (!(cfg.interval_lognormal_sigma >= 0.0)) {
        throw ValidationError("interval_lognormal_sigma must be >= 0");
    }
    if (cfg.feature_dim < 1) {
        throw ValidationError("feature_dim must be >= 1");
    }
}

ReportCorpus gen_reports_for(const SynthConfig& cfg,
                             const std::vector<std::pair<std::string, Severity>>& reports) {
    validate_config(cfg);
    rng::Rng gen(cfg.seed ^ 0x5265706f72747331ULL);  // distinct stream per generator
    const auto by_sev = rules_by_severity();

    ReportCorpus corpus;
    for (const auto& [report_id, severity] : reports) {
        const int sev = severity_index(severity);
        ReportOracle oracle;
        oracle.severity = severity;

        std::vector<std::string> sentences;
        sentences.push_back(
            kFillerSentences[gen.uniform_below(kFillerSentences.size())]);

        // Mandatory keyword of the oracle grade.
        {
            const auto* rule = by_sev[sev][gen.uniform_below(by_sev[sev].size())];
            const auto& tmpls = sev == 0 ? kNoneTemplates : kPositiveTemplates;
            sentences.push_back(instantiate(tmpls[gen.uniform_below(tmpls.size())],
                                            rule->pattern));
            oracle.planted_rule_ids.push_back(rule->rule_id);
        }

        // Extra keywords of the same or a lower positive grade never move the
        // maximum, so the oracle label survives them.
        std::size_t extras = static_cast<std::size_t>(std::floor(cfg.keyword_density));
        double frac = cfg.keyword_density - std::floor(cfg.keyword_density);
        if (frac > 0.0 && gen.bernoulli(frac)) extras += 1;
        for (std::size_t e = 0; e < extras; ++e) {
            int pick_sev = sev == 0 ? 0 : 1 + static_cast<int>(gen.uniform_below(
                                              static_cast<std::uint64_t>(sev)));
            const auto* rule = by_sev[pick_sev][gen.uniform_below(by_sev[pick_sev].size())];
            const auto& tmpls = pick_sev == 0 ? kNoneTemplates : kPositiveTemplates;
            sentences.push_back(instantiate(tmpls[gen.uniform_below(tmpls.size())],
                                            rule->pattern));
            oracle.planted_rule_ids.push_back(rule->rule_id);
        }

        // Negation trap: a strictly higher-grade keyword behind a cue.
        if (sev < 3 && cfg.negation_trap_rate > 0.0 && gen.bernoulli(cfg.negation_trap_rate)) {
            int trap_sev = sev + 1 + static_cast<int>(gen.uniform_below(
                                         static_cast<std::uint64_t>(3 - sev)));
            const auto* rule = by_sev[trap_sev][gen.uniform_below(by_sev[trap_sev].size())];
            sentences.push_back(instantiate(
                kTrapTemplates[gen.uniform_below(kTrapTemplates.size())], rule->pattern));
            oracle.trap_rule_ids.push_back(rule->rule_id);
        }

        sentences.push_back(
            kFillerSentences[gen.uniform_below(kFillerSentences.size())]);

        std::string text;
        for (const auto& s : sentences) {
            if (!text.empty()) text += " ";
            text += s;
        }
        corpus.docs.push_back(extraction::ReportDoc{report_id, text});
        corpus.oracle.emplace(report_id, std::move(oracle));
    }
    return corpus;
}

ReportCorpus gen_reports(const SynthConfig& cfg) {
    validate_config(cfg);
    rng::Rng gen(cfg.seed ^ 0x5265706f72747330ULL);
    std::vector<std::pair<std::string, Severity>> reports;
    reports.reserve(cfg.n_reports);
    for (std::size_t i = 0; i < cfg.n_reports; ++i) {
        reports.emplace_back("r" + zero_pad(i, 6), sample_severity(gen, cfg.class_mix));
    }
    return gen_reports_for(cfg, reports);
}

CohortBundle gen_cohort(const SynthConfig& cfg) {
    validate_config(cfg);
    rng::Rng gen(cfg.seed ^ 0x436f686f72740000ULL);
    CohortBundle bundle;

    const std::int64_t base_minutes = timeutil::parse_iso_minutes("2015-01-01T00:00");
    for (std::size_t p = 0; p < cfg.n_patients; ++p) {
        const std::string patient_id = "p" + zero_pad(p, 5);
        const bool chf = gen.bernoulli(cfg.chf_fraction);
        const std::size_t n_exams = gen.geometric_count(cfg.exams_geometric_p);
        // Patients enter over a ten-year window.
        std::int64_t t = base_minutes +
                         static_cast<std::int64_t>(gen.uniform_below(3650ULL * 1440ULL));
        for (std::size_t e = 0; e < n_exams; ++e) {
            if (e > 0) {
                double gap_days = gen.lognormal(cfg.interval_lognormal_mu,
                                                cfg.interval_lognormal_sigma);
                auto gap_minutes = static_cast<std::int64_t>(std::ceil(gap_days * 1440.0));
                t += std::max<std::int64_t>(1, gap_minutes);
            }
            const std::string suffix = zero_pad(p, 5) + "e" + zero_pad(e, 3);
            corpus::StudyRecord r;
            r.patient_id = patient_id;
            r.study_id = "s" + suffix;
            r.report_id = "r" + suffix;
            r.acquisition_minutes = t;
            r.visit_dx_codes.insert(chf ? "I50.9" : "J18.9");
            if (gen.bernoulli(0.3)) r.visit_dx_codes.insert("R07.9");

            const bool frontal = !gen.bernoulli(cfg.lateral_fraction);
            std::optional<Severity> severity;
            if (chf) severity = sample_severity(gen, cfg.class_mix);

            std::size_t n_images =
                frontal && gen.bernoulli(cfg.extra_frontal_fraction) ? 2 : 1;
            for (std::size_t img = 0; img < n_images; ++img) {
                corpus::StudyRecord rec = r;
                rec.image_id = "i" + suffix + "_" + std::to_string(img);
                // Repeat exposures sit a minute after the first acquisition.
                rec.acquisition_minutes += static_cast<std::int64_t>(img);
                rec.view = frontal ? corpus::View::frontal : corpus::View::lateral;
                if (chf && frontal) {
                    bundle.image_oracle.emplace(rec.image_id, *severity);
                    baseline::FeatureVector fv;
                    fv.image_id = rec.image_id;
                    fv.values.reserve(cfg.feature_dim);
                    for (std::size_t d = 0; d < cfg.feature_dim; ++d) {
                        double mean = d == 0 ? severity_index(*severity) *
                                                   cfg.class_separation
                                             : 0.0;
                        fv.values.push_back(mean + gen.normal());
                    }
                    bundle.features.push_back(std::move(fv));
                }
                bundle.manifest.push_back(std::move(rec));
            }
            if (chf) {
                bundle.report_oracle.emplace_back(r.report_id, *severity);
            }
        }
    }
    corpus::validate_manifest(bundle.manifest);
    return bundle;
}

std::pair<std::vector<baseline::FeatureVector>, std::vector<Severity>> gen_features(
    const SynthConfig& cfg, std::size_t n, std::uint64_t seed) {
    validate_config(cfg);
    rng::Rng gen(seed ^ 0x4665617473000000ULL);
    std::vector<baseline::FeatureVector> features;
    std::vector<Severity> labels;
    features.reserve(n);
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Severity y = sample_severity(gen, cfg.class_mix);
        baseline::FeatureVector fv;
        fv.image_id = "x" + zero_pad(i, 6);
        fv.values.reserve(cfg.feature_dim);
        for (std::size_t d = 0; d < cfg.feature_dim; ++d) {
            double mean = d == 0 ? severity_index(y) * cfg.class_separation : 0.0;
            fv.values.push_back(mean + gen.normal());
        }
        features.push_back(std::move(fv));
        labels.push_back(y);
    }
    return {std::move(features), std::move(labels)};
}

namespace {

Severity noisy_vote(rng::Rng& gen, Severity oracle, double agreement) {
    if (gen.bernoulli(agreement)) return oracle;
    int level = severity_index(oracle);
    if (level == 0) return severity_from_int(1);
    if (level == 3) return severity_from_int(2);
    return severity_from_int(gen.bernoulli(0.5) ? level + 1 : level - 1);
}

std::optional<Severity> quorum(const std::vector<consensus::Vote>& votes, std::size_t need) {
    std::array<std::size_t, 4> counts{};
    for (const auto& v : votes) counts[severity_index(v.label)] += 1;
    for (int c = 0; c < 4; ++c) {
        if (counts[c] >= need) return severity_from_int(c);
    }
    return std::nullopt;
}

}  // namespace

std::vector<consensus::VoteLog> gen_votes(
    const SynthConfig& cfg, const std::vector<std::pair<std::string, Severity>>& images) {
    validate_config(cfg);
    rng::Rng gen(cfg.seed ^ 0x566f746573000000ULL);
    const std::vector<std::string> residents = {"res1", "res2", "res3"};
    const std::vector<std::string> panel = {"res1", "res2", "res3", "att1"};

    std::vector<consensus::VoteLog> logs;
    logs.reserve(images.size());
    for (const auto& [image_id, oracle] : images) {
        consensus::VoteLog log;
        log.image_id = image_id;
        for (const auto& rater : residents) {
            log.initial.push_back(
                consensus::Vote{rater, noisy_vote(gen, oracle, cfg.rater_agreement)});
        }
        if (log.initial[0].label == log.initial[1].label &&
            log.initial[1].label == log.initial[2].label) {
            logs.push_back(std::move(log));
            continue;
        }
        log.attending = consensus::Vote{"att1", noisy_vote(gen, oracle, cfg.rater_agreement)};
        std::vector<consensus::Vote> four = log.initial;
        four.push_back(*log.attending);
        if (quorum(four, 3)) {
            logs.push_back(std::move(log));
            continue;
        }
        for (int round = 0; round < 3; ++round) {
            std::vector<consensus::Vote> votes;
            for (const auto& rater : panel) {
                votes.push_back(
                    consensus::Vote{rater, noisy_vote(gen, oracle, cfg.rater_agreement)});
            }
            bool decided = quorum(votes, 3).has_value();
            log.rounds.push_back(std::move(votes));
            if (decided) break;
        }
        logs.push_back(std::move(log));
    }
    return logs;
}

void write_oracle_csv(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, Severity>>& oracle) {
    csv::Writer w(path);
    w.row({"id", "true_severity"});
    for (const auto& [id, sev] : oracle) {
        w.row({id, std::to_string(severity_index(sev))});
    }
}

std::map<std::string, Severity> load_oracle_csv(const std::filesystem::path& path) {
    auto rows = csv::read_file(path);
    if (rows.empty() || rows[0].fields != std::vector<std::string>{"id", "true_severity"}) {
        throw ValidationError("bad oracle file header (expected id,true_severity): " +
                              path.string());
    }
    std::map<std::string, Severity> oracle;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.fields.size() != 2 || row.fields[1].size() != 1) {
            throw ValidationError("line " + std::to_string(row.line) + ": bad oracle row");
        }
        oracle[row.fields[0]] = severity_from_int(row.fields[1][0] - '0');
    }
    return oracle;
}

}  // namespace edema::synth
