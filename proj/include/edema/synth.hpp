#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "edema/baseline.hpp"
#include "edema/common.hpp"
#include "edema/consensus.hpp"
#include "edema/corpus.hpp"
#include "edema/extraction.hpp"
#include "edema/rng.hpp"

namespace edema::synth {

/// Every generator is a pure function of its config; the same config (seed
/// included) reproduces the same artifacts byte for byte. All randomness
/// comes from edema::rng with the draw order fixed by the implementation.
struct SynthConfig {
    std::uint64_t seed = 1;
    std::size_t n_patients = 200;
    std::array<double, 4> class_mix{0.42, 0.21, 0.32, 0.05};
    double keyword_density = 0.5;     // expected extra keywords per report
    double negation_trap_rate = 0.0;  // chance of a negated higher-grade keyword
    std::size_t feature_dim = 6;
    double class_separation = 1.5;  // gap between adjacent class means
    double exams_geometric_p = 1.0 / 14.0;
    double interval_lognormal_mu = 1.958;     // log-days
    double interval_lognormal_sigma = 2.147;  // log-days
    double rater_agreement = 0.97;

    // plumbing knobs for standalone generators
    std::size_t n_reports = 200;
    std::size_t n_vote_images = 141;
    double chf_fraction = 0.6;
    double lateral_fraction = 0.3;
    double extra_frontal_fraction = 0.1;
};

void validate_config(const SynthConfig& cfg);

struct ReportOracle {
    Severity severity = Severity::none;
    std::vector<std::string> planted_rule_ids;
    std::vector<std::string> trap_rule_ids;  // planted negated, must never label
};

struct ReportCorpus {
    std::vector<extraction::ReportDoc> docs;
    std::map<std::string, ReportOracle> oracle;
};

/// Synthetic report corpus: each report carries >= 1 keyword of its oracle
/// grade in filler prose; with probability negation_trap_rate a strictly
/// higher-grade keyword appears behind a negation cue (grade-3 reports have
/// no higher grade and get no trap).
ReportCorpus gen_reports(const SynthConfig& cfg);

/// Same corpus generator for externally assigned report ids and grades.
ReportCorpus gen_reports_for(const SynthConfig& cfg,
                             const std::vector<std::pair<std::string, Severity>>& reports);

struct CohortBundle {
    std::vector<corpus::StudyRecord> manifest;
    std::vector<baseline::FeatureVector> features;  // CHF frontal images only
    std::map<std::string, Severity> image_oracle;   // CHF frontal images
    std::vector<std::pair<std::string, Severity>> report_oracle;  // CHF reports, in id order
};

/// Synthetic cohort: geometric exam counts per patient, log-normal
/// inter-exam gaps, a CHF-coded subset (dx code I50.9), frontal/lateral
/// view mix, and class-conditional Gaussian features with mean c*delta*e1
/// and unit covariance. Manifest labels are left empty; truth lives in the
/// oracle maps.
CohortBundle gen_cohort(const SynthConfig& cfg);

/// Class-conditional Gaussian feature set with labels drawn from class_mix;
/// the standalone form of the cohort's feature model.
std::pair<std::vector<baseline::FeatureVector>, std::vector<Severity>> gen_features(
    const SynthConfig& cfg, std::size_t n, std::uint64_t seed);

/// Vote logs for the given images: each rater votes the oracle grade with
/// probability rater_agreement, otherwise an adjacent grade. The attending
/// vote and discussion rounds are generated only when the staged consensus
/// flow actually needs them (at most 3 rounds).
std::vector<consensus::VoteLog> gen_votes(
    const SynthConfig& cfg, const std::vector<std::pair<std::string, Severity>>& images);

/// Oracle maps as CSV `id,true_severity`.
void write_oracle_csv(const std::filesystem::path& path,
                      const std::vector<std::pair<std::string, Severity>>& oracle);
std::map<std::string, Severity> load_oracle_csv(const std::filesystem::path& path);

}  // namespace edema::synth
