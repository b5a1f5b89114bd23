#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "edema/common.hpp"

namespace edema::corpus {

enum class View { frontal, lateral, other };

const char* view_name(View v);
View view_from_string(const std::string& s);

/// One radiograph acquisition row from a study manifest.
struct StudyRecord {
    std::string patient_id;
    std::string study_id;
    std::string image_id;
    std::int64_t acquisition_minutes = 0;  // minutes since epoch, minute resolution
    View view = View::other;
    std::set<std::string> visit_dx_codes;
    std::string report_id;
    OptionalSeverity label;
};

/// Pooled summary of consecutive-exam gaps, in fractional days.
struct IntervalStats {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;
    double frac_within_1_day = 0.0;
    double frac_within_30_days = 0.0;
};

struct CohortStats {
    std::size_t patient_count = 0;
    std::size_t image_count = 0;
    std::map<std::size_t, std::size_t> images_per_patient_hist;  // images -> patients
    double mean_images = 0.0;
    double median_images = 0.0;
    std::size_t min_images = 0;
    std::size_t max_images = 0;
    std::optional<IntervalStats> intervals;  // absent when no patient has 2+ exams
};

struct FoldAssignment {
    int k = 0;
    std::map<std::string, int> assignment;    // image_id -> fold
    std::map<std::string, int> patient_fold;  // patient_id -> fold
};

/// Manifest format: CSV with header
/// patient_id,study_id,image_id,acquisition_time,view,dx_codes,report_id,label
/// acquisition_time ISO-8601 (minute resolution), dx_codes ';'-separated,
/// label empty or 0-3. Rejects duplicate image ids, studies spanning two
/// patients or reports, and rows with missing acquisition time; errors name
/// the offending line.
std::vector<StudyRecord> load_manifest(const std::filesystem::path& path);

/// Validates an in-memory manifest against the same rules as load_manifest.
void validate_manifest(const std::vector<StudyRecord>& records);

struct FrontalFilterResult {
    std::vector<StudyRecord> records;  // frontal only, input order preserved
    std::size_t excluded = 0;
};
FrontalFilterResult filter_frontal(const std::vector<StudyRecord>& records);

struct ChfFilterResult {
    std::vector<StudyRecord> chf;
    std::vector<StudyRecord> non_chf;
};
/// Splits records by exact dx-code membership; chf_codes must be non-empty.
ChfFilterResult filter_chf(const std::vector<StudyRecord>& records,
                           const std::set<std::string>& chf_codes);

/// Copies records, setting label on every record whose report_id is mapped.
/// No other field is touched; unmapped records keep their existing label.
std::vector<StudyRecord> attach_report_labels(
    const std::vector<StudyRecord>& records,
    const std::map<std::string, Severity>& report_labels);

/// Per-patient exam counts and consecutive-exam intervals. Exams are ordered
/// by (acquisition time, image_id) within a patient; single-exam patients
/// contribute no intervals.
CohortStats cohort_stats(const std::vector<StudyRecord>& records);

/// Patient-grouped k-fold assignment: distinct patients are sorted, shuffled
/// with the seeded generator, and dealt round-robin, so all of a patient's
/// images share a fold and fold patient counts differ by at most one.
/// Requires k >= 2 and at least k distinct patients.
FoldAssignment group_kfold(const std::vector<StudyRecord>& records, int k, std::uint64_t seed);

struct FoldDistribution {
    int k = 0;
    std::vector<std::size_t> patients;                     // per fold
    std::vector<std::array<std::size_t, 4>> label_counts;  // per fold per severity
    std::vector<std::size_t> unlabeled;                    // per fold
    std::vector<std::size_t> images;                       // per fold
    std::array<std::size_t, 4> total_labels{};
    std::size_t total_unlabeled = 0;
    std::size_t total_images = 0;
    /// Share of each severity among labeled images, in [0,1]; zero when no
    /// record is labeled.
    std::array<double, 4> label_fractions{};
};
FoldDistribution fold_distribution(const FoldAssignment& assignment,
                                   const std::vector<StudyRecord>& records);

void write_manifest(const std::filesystem::path& path, const std::vector<StudyRecord>& records);
void write_fold_csv(const std::filesystem::path& path, const FoldAssignment& assignment,
                    const std::vector<StudyRecord>& records);
std::map<std::string, int> load_fold_csv(const std::filesystem::path& path);

}  // namespace edema::corpus
