#include "edema/corpus.hpp"

#include <algorithm>
#include <array>
#include <unordered_map>
#include <unordered_set>

#include "edema/csv.hpp"
#include "edema/rng.hpp"
#include "edema/timeutil.hpp"

namespace edema::corpus {

const char* view_name(View v) {
    switch (v) {
        case View::frontal: return "frontal";
        case View::lateral: return "lateral";
        case View::other: return "other";
    }
    return "?";
}

View view_from_string(const std::string& s) {
    if (s == "frontal") return View::frontal;
    if (s == "lateral") return View::lateral;
    if (s == "other") return View::other;
    throw ValidationError("unknown view '" + s + "' (expected frontal|lateral|other)");
}

namespace {

const std::vector<std::string> kManifestHeader = {
    "patient_id", "study_id", "image_id", "acquisition_time",
    "view",       "dx_codes", "report_id", "label"};

std::set<std::string> parse_dx_codes(const std::string& field) {
    std::set<std::string> codes;
    std::size_t start = 0;
    while (start <= field.size()) {
        std::size_t sep = field.find(';', start);
        std::string code = field.substr(start, sep == std::string::npos ? sep : sep - start);
        if (!code.empty()) codes.insert(code);
        if (sep == std::string::npos) break;
        start = sep + 1;
    }
    return codes;
}

std::string join_dx_codes(const std::set<std::string>& codes) {
    std::string out;
    for (const auto& c : codes) {
        if (!out.empty()) out.push_back(';');
        out += c;
    }
    return out;
}

struct StudyIdentity {
    std::string patient_id;
    std::string report_id;
};

void check_consistency(const std::vector<StudyRecord>& records,
                       const std::vector<std::size_t>* lines) {
    std::unordered_set<std::string> image_ids;
    std::unordered_map<std::string, StudyIdentity> studies;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        std::string where = lines ? "line " + std::to_string((*lines)[i])
                                  : "record " + std::to_string(i);
        if (!image_ids.insert(r.image_id).second) {
            throw ValidationError(where + ": duplicate image_id '" + r.image_id + "'");
        }
        auto [it, inserted] = studies.emplace(r.study_id,
                                              StudyIdentity{r.patient_id, r.report_id});
        if (!inserted) {
            if (it->second.patient_id != r.patient_id) {
                throw ValidationError(where + ": study_id '" + r.study_id +
                                      "' spans two patient_ids");
            }
            if (it->second.report_id != r.report_id) {
                throw ValidationError(where + ": study_id '" + r.study_id +
                                      "' spans two report_ids");
            }
        }
    }
}

}  // namespace

std::vector<StudyRecord> load_manifest(const std::filesystem::path& path) {
    auto rows = csv::read_file(path);
    if (rows.empty()) {
        throw ValidationError("manifest is empty (missing header): " + path.string());
    }
    if (rows[0].fields != kManifestHeader) {
        throw ValidationError("line 1: bad manifest header (expected " +
                              csv::join_row(kManifestHeader) + ")");
    }
    std::vector<StudyRecord> records;
    std::vector<std::size_t> lines;
    records.reserve(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        std::string where = "line " + std::to_string(row.line);
        if (row.fields.size() != kManifestHeader.size()) {
            throw ValidationError(where + ": expected " +
                                  std::to_string(kManifestHeader.size()) + " fields, got " +
                                  std::to_string(row.fields.size()));
        }
        StudyRecord r;
        r.patient_id = row.fields[0];
        r.study_id = row.fields[1];
        r.image_id = row.fields[2];
        if (r.patient_id.empty() || r.study_id.empty() || r.image_id.empty()) {
            throw ValidationError(where + ": empty identifier field");
        }
        if (row.fields[3].empty()) {
            throw ValidationError(where + ": missing acquisition_time");
        }
        try {
            r.acquisition_minutes = timeutil::parse_iso_minutes(row.fields[3]);
            r.view = view_from_string(row.fields[4]);
        } catch (const ValidationError& e) {
            throw ValidationError(where + ": " + e.what());
        }
        r.visit_dx_codes = parse_dx_codes(row.fields[5]);
        r.report_id = row.fields[6];
        if (!row.fields[7].empty()) {
            if (row.fields[7].size() != 1 || row.fields[7][0] < '0' || row.fields[7][0] > '3') {
                throw ValidationError(where + ": label must be empty or 0-3, got '" +
                                      row.fields[7] + "'");
            }
            r.label = severity_from_int(row.fields[7][0] - '0');
        }
        records.push_back(std::move(r));
        lines.push_back(row.line);
    }
    check_consistency(records, &lines);
    return records;
}

void validate_manifest(const std::vector<StudyRecord>& records) {
    check_consistency(records, nullptr);
}

FrontalFilterResult filter_frontal(const std::vector<StudyRecord>& records) {
    FrontalFilterResult result;
    for (const auto& r : records) {
        if (r.view == View::frontal) {
            result.records.push_back(r);
        } else {
            result.excluded += 1;
        }
    }
    return result;
}

ChfFilterResult filter_chf(const std::vector<StudyRecord>& records,
                           const std::set<std::string>& chf_codes) {
    if (chf_codes.empty()) {
        throw ValidationError("chf_codes must be non-empty");
    }
    ChfFilterResult result;
    for (const auto& r : records) {
        bool hit = std::any_of(r.visit_dx_codes.begin(), r.visit_dx_codes.end(),
                               [&](const std::string& c) { return chf_codes.count(c) > 0; });
        (hit ? result.chf : result.non_chf).push_back(r);
    }
    return result;
}

std::vector<StudyRecord> attach_report_labels(
    const std::vector<StudyRecord>& records,
    const std::map<std::string, Severity>& report_labels) {
    std::vector<StudyRecord> out = records;
    for (auto& r : out) {
        auto it = report_labels.find(r.report_id);
        if (it != report_labels.end()) {
            r.label = it->second;
        }
    }
    return out;
}

CohortStats cohort_stats(const std::vector<StudyRecord>& records) {
    CohortStats stats;
    stats.image_count = records.size();

    std::map<std::string, std::vector<std::pair<std::int64_t, std::string>>> per_patient;
    for (const auto& r : records) {
        per_patient[r.patient_id].emplace_back(r.acquisition_minutes, r.image_id);
    }
    stats.patient_count = per_patient.size();

    std::vector<std::size_t> counts;
    std::vector<double> gaps_days;
    for (auto& [patient, exams] : per_patient) {
        // Ties in acquisition time are broken by image_id so intervals are
        // deterministic.
        std::sort(exams.begin(), exams.end());
        counts.push_back(exams.size());
        stats.images_per_patient_hist[exams.size()] += 1;
        for (std::size_t i = 1; i < exams.size(); ++i) {
            gaps_days.push_back(
                timeutil::minutes_to_days(exams[i].first - exams[i - 1].first));
        }
    }

    auto median_of = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        std::size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };

    if (!counts.empty()) {
        std::vector<double> c(counts.begin(), counts.end());
        double sum = 0;
        for (double x : c) sum += x;
        stats.mean_images = sum / static_cast<double>(c.size());
        stats.median_images = median_of(c);
        stats.min_images = *std::min_element(counts.begin(), counts.end());
        stats.max_images = *std::max_element(counts.begin(), counts.end());
    }

    if (!gaps_days.empty()) {
        IntervalStats iv;
        iv.count = gaps_days.size();
        double sum = 0;
        std::size_t within1 = 0, within30 = 0;
        for (double g : gaps_days) {
            sum += g;
            if (g <= 1.0) within1 += 1;
            if (g <= 30.0) within30 += 1;
        }
        iv.mean = sum / static_cast<double>(gaps_days.size());
        iv.median = median_of(gaps_days);
        iv.min = gaps_days.front();
        iv.max = gaps_days.back();
        iv.frac_within_1_day = static_cast<double>(within1) / static_cast<double>(iv.count);
        iv.frac_within_30_days = static_cast<double>(within30) / static_cast<double>(iv.count);
        stats.intervals = iv;
    }
    return stats;
}

FoldAssignment group_kfold(const std::vector<StudyRecord>& records, int k, std::uint64_t seed) {
    if (k < 2) {
        throw ValidationError("group_kfold requires k >= 2, got " + std::to_string(k));
    }
    std::set<std::string> patient_set;
    for (const auto& r : records) patient_set.insert(r.patient_id);
    if (patient_set.size() < static_cast<std::size_t>(k)) {
        throw ValidationError("group_kfold: fewer patients (" +
                              std::to_string(patient_set.size()) + ") than folds (" +
                              std::to_string(k) + ")");
    }

    std::vector<std::string> patients(patient_set.begin(), patient_set.end());
    rng::Rng gen(seed);
    gen.shuffle(patients);

    FoldAssignment fa;
    fa.k = k;
    for (std::size_t i = 0; i < patients.size(); ++i) {
        fa.patient_fold[patients[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    for (const auto& r : records) {
        fa.assignment[r.image_id] = fa.patient_fold.at(r.patient_id);
    }
    return fa;
}

FoldDistribution fold_distribution(const FoldAssignment& assignment,
                                   const std::vector<StudyRecord>& records) {
    FoldDistribution dist;
    dist.k = assignment.k;
    dist.patients.assign(assignment.k, 0);
    dist.label_counts.assign(assignment.k, {});
    dist.unlabeled.assign(assignment.k, 0);
    dist.images.assign(assignment.k, 0);

    for (const auto& [patient, fold] : assignment.patient_fold) {
        dist.patients[fold] += 1;
    }
    for (const auto& r : records) {
        auto it = assignment.assignment.find(r.image_id);
        if (it == assignment.assignment.end()) {
            throw ValidationError("fold_distribution: image '" + r.image_id +
                                  "' has no fold assignment");
        }
        int fold = it->second;
        dist.images[fold] += 1;
        dist.total_images += 1;
        if (r.label) {
            int c = severity_index(*r.label);
            dist.label_counts[fold][c] += 1;
            dist.total_labels[c] += 1;
        } else {
            dist.unlabeled[fold] += 1;
            dist.total_unlabeled += 1;
        }
    }
    std::size_t labeled = 0;
    for (auto c : dist.total_labels) labeled += c;
    if (labeled > 0) {
        for (int c = 0; c < 4; ++c) {
            dist.label_fractions[c] =
                static_cast<double>(dist.total_labels[c]) / static_cast<double>(labeled);
        }
    }
    return dist;
}

void write_manifest(const std::filesystem::path& path, const std::vector<StudyRecord>& records) {
    csv::Writer w(path);
    w.row(kManifestHeader);
    for (const auto& r : records) {
        w.row({r.patient_id, r.study_id, r.image_id,
               timeutil::format_iso_minutes(r.acquisition_minutes), view_name(r.view),
               join_dx_codes(r.visit_dx_codes), r.report_id,
               r.label ? std::to_string(severity_index(*r.label)) : ""});
    }
}

void write_fold_csv(const std::filesystem::path& path, const FoldAssignment& assignment,
                    const std::vector<StudyRecord>& records) {
    csv::Writer w(path);
    w.row({"image_id", "fold"});
    for (const auto& r : records) {
        w.row({r.image_id, std::to_string(assignment.assignment.at(r.image_id))});
    }
}

std::map<std::string, int> load_fold_csv(const std::filesystem::path& path) {
    auto rows = csv::read_file(path);
    if (rows.empty() || rows[0].fields != std::vector<std::string>{"image_id", "fold"}) {
        throw ValidationError("bad fold file header (expected image_id,fold): " + path.string());
    }
    std::map<std::string, int> folds;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.fields.size() != 2) {
            throw ValidationError("line " + std::to_string(row.line) + ": expected 2 fields");
        }
        int fold;
        try {
            fold = std::stoi(row.fields[1]);
        } catch (const std::exception&) {
            throw ValidationError("line " + std::to_string(row.line) + ": bad fold index '" +
                                  row.fields[1] + "'");
        }
        if (fold < 0) {
            throw ValidationError("line " + std::to_string(row.line) +
                                  ": fold index must be >= 0");
        }
        folds[row.fields[0]] = fold;
    }
    return folds;
}

}  // namespace edema::corpus
