#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edema/common.hpp"

namespace edema::extraction {

/// A severity-tagged keyword phrase. Matching is case-insensitive with
/// flexible whitespace between the phrase's words.
struct ExtractionRule {
    std::string rule_id;
    std::string pattern;
    Severity severity = Severity::none;
};

struct NegationConfig {
    std::vector<std::string> cues = {"no",            "without",      "not",
                                     "free of",       "resolution of", "clearing of",
                                     "negative for"};
    int window = 5;  // tokens looked back, same sentence
};

class RuleSet {
  public:
    static RuleSet compile(const std::vector<ExtractionRule>& rules,
                           const NegationConfig& negation = NegationConfig{});

    /// Built-in default keyword set: four phrases per severity grade.
    static RuleSet defaults();

    /// Parses a JSON rule configuration:
    /// {"rules":[{"rule_id","pattern","severity"},...],
    ///  "negation":{"cues":[...],"window":N}}   (negation optional)
    static RuleSet from_json_file(const std::filesystem::path& path);

    const std::vector<ExtractionRule>& rules() const { return rules_; }
    const NegationConfig& negation() const { return negation_; }

  private:
    RuleSet() = default;
    std::vector<ExtractionRule> rules_;
    NegationConfig negation_;
};

struct Match {
    std::string rule_id;
    Severity severity = Severity::none;
    std::size_t begin = 0;  // character span [begin, end) in the report text
    std::size_t end = 0;
    bool negated = false;
};

struct ExtractionResult {
    std::vector<Match> matches;
    OptionalSeverity label;
};

/// Scans the text for every rule occurrence. A severity-1/2/3 occurrence is
/// marked negated when a negation cue ends within the configured window of
/// tokens before it in the same sentence (sentences end at '.', ';', or
/// newline). Grade-0 phrases are inherently negative findings and are never
/// negation-suppressed. The resolved label comes from resolve_severity over
/// the non-negated matches.
ExtractionResult extract(std::string_view report_text, const RuleSet& ruleset);

/// Conflict rule: no effective match -> absent; only grade-0 matches -> 0;
/// otherwise the maximum severity among non-negated grade-1/2/3 matches.
/// Negated matches in the input are ignored.
OptionalSeverity resolve_severity(const std::vector<Match>& matches);

struct KeywordStats {
    std::string rule_id;
    std::string pattern;
    Severity severity = Severity::none;
    std::size_t reports_fired = 0;
    std::optional<double> precision;    // absent when the keyword never fired
    std::optional<double> sensitivity;  // absent when no reference report has the grade
    std::optional<double> specificity;
};

struct KeywordValidation {
    std::vector<KeywordStats> keywords;
    std::optional<double> overall_precision;  // labeled reports matching the reference
    std::size_t evaluated_reports = 0;
    std::size_t labeled_reports = 0;
};

/// Scores extraction output against reference labels. A keyword counts as
/// fired in a report when it has at least one non-negated occurrence there.
/// Every evaluated report must appear in the reference map.
KeywordValidation validate_extraction(const std::map<std::string, ExtractionResult>& extracted,
                                      const std::map<std::string, Severity>& reference,
                                      const RuleSet& ruleset);

struct ReportDoc {
    std::string report_id;
    std::string text;
};

/// Reports as JSONL, one {"report_id":..., "text":...} object per line.
std::vector<ReportDoc> load_reports_jsonl(const std::filesystem::path& path);
void write_reports_jsonl(const std::filesystem::path& path, const std::vector<ReportDoc>& docs);

}  // namespace edema::extraction
