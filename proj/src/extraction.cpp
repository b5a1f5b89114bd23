#include "edema/extraction.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace edema::extraction {

namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

struct Token {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t sentence = 0;
    std::string text;  // lowercased
};

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t sentence = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (is_word_char(c)) {
            std::size_t begin = i;
            std::string word;
            while (i < text.size() && is_word_char(text[i])) {
                word.push_back(lower(text[i]));
                ++i;
            }
            tokens.push_back(Token{begin, i, sentence, std::move(word)});
        } else {
            if (c == '.' || c == ';' || c == '\n') sentence += 1;
            ++i;
        }
    }
    return tokens;
}

std::vector<std::string> phrase_tokens(const std::string& phrase) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : phrase) {
        if (is_word_char(c)) {
            cur.push_back(lower(c));
        } else if (!cur.empty()) {
            words.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

bool gap_is_whitespace(std::string_view text, std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) {
        if (std::isspace(static_cast<unsigned char>(text[i])) == 0) return false;
    }
    return true;
}

/// True when the phrase occupies tokens [pos, pos+len) of one sentence with
/// nothing but whitespace between consecutive words.
bool phrase_matches_at(std::string_view text, const std::vector<Token>& tokens,
                       const std::vector<std::string>& words, std::size_t pos) {
    if (pos + words.size() > tokens.size()) return false;
    for (std::size_t j = 0; j < words.size(); ++j) {
        const Token& t = tokens[pos + j];
        if (t.text != words[j]) return false;
        if (t.sentence != tokens[pos].sentence) return false;
        if (j > 0 && !gap_is_whitespace(text, tokens[pos + j - 1].end, t.begin)) return false;
    }
    return true;
}

}  // namespace

RuleSet RuleSet::compile(const std::vector<ExtractionRule>& rules,
                         const NegationConfig& negation) {
    if (negation.window < 1) {
        throw ValidationError("negation window must be >= 1, got " +
                              std::to_string(negation.window));
    }
    std::set<std::string> ids;
    for (const auto& rule : rules) {
        if (rule.rule_id.empty()) {
            throw ValidationError("rule with empty rule_id");
        }
        if (!ids.insert(rule.rule_id).second) {
            throw ValidationError("duplicate rule_id '" + rule.rule_id + "'");
        }
        if (phrase_tokens(rule.pattern).empty()) {
            throw ValidationError("rule '" + rule.rule_id + "' has an empty pattern");
        }
        severity_from_int(severity_index(rule.severity));
    }
    for (const auto& cue : negation.cues) {
        if (phrase_tokens(cue).empty()) {
            throw ValidationError("empty negation cue");
        }
    }
    RuleSet rs;
    rs.rules_ = rules;
    rs.negation_ = negation;
    return rs;
}

RuleSet RuleSet::defaults() {
    auto sev = severity_from_int;
    std::vector<ExtractionRule> rules = {
        {"no_pulmonary_edema", "No pulmonary edema", sev(0)},
        {"no_vascular_congestion", "No vascular congestion", sev(0)},
        {"no_fluid_overload", "No fluid overload", sev(0)},
        {"no_acute_cardiopulmonary_process", "No acute cardiopulmonary process", sev(0)},
        {"cephalization", "Cephalization", sev(1)},
        {"mild_pulmonary_vascular_congestion", "Mild pulmonary vascular congestion", sev(1)},
        {"mild_hilar_engorgement", "Mild hilar engorgement", sev(1)},
        {"mild_vascular_plethora", "Mild vascular plethora", sev(1)},
        {"interstitial_opacities", "Interstitial opacities", sev(2)},
        {"kerley", "Kerley", sev(2)},
        {"interstitial_edema", "Interstitial edema", sev(2)},
        {"interstitial_thickening", "Interstitial thickening", sev(2)},
        {"alveolar_infiltrates", "Alveolar infiltrates", sev(3)},
        {"severe_pulmonary_edema", "Severe pulmonary edema", sev(3)},
        {"perihilar_infiltrates", "Perihilar infiltrates", sev(3)},
        {"hilar_infiltrates", "hilar infiltrates", sev(3)},
    };
    return compile(rules);
}

RuleSet RuleSet::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open ruleset file: " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad ruleset JSON in " + path.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("rules") || !doc["rules"].is_array()) {
        throw ValidationError("ruleset JSON must be an object with a 'rules' array");
    }
    std::vector<ExtractionRule> rules;
    for (const auto& item : doc["rules"]) {
        if (!item.is_object() || !item.contains("rule_id") || !item.contains("pattern") ||
            !item.contains("severity")) {
            throw ValidationError("each rule needs rule_id, pattern, severity");
        }
        if (!item["severity"].is_number_integer()) {
            throw ValidationError("rule severity must be an integer 0-3");
        }
        rules.push_back(ExtractionRule{item["rule_id"].get<std::string>(),
                                       item["pattern"].get<std::string>(),
                                       severity_from_int(item["severity"].get<int>())});
    }
    NegationConfig negation;
    if (doc.contains("negation")) {
        const auto& n = doc["negation"];
        if (n.contains("cues")) {
            negation.cues = n["cues"].get<std::vector<std::string>>();
        }
        if (n.contains("window")) {
            negation.window = n["window"].get<int>();
        }
    }
    return compile(rules, negation);
}

ExtractionResult extract(std::string_view report_text, const RuleSet& ruleset) {
    const auto tokens = tokenize(report_text);

    // Cue occurrences, keyed by the index of their last token.
    std::vector<bool> cue_ends_at(tokens.size(), false);
    for (const auto& cue : ruleset.negation().cues) {
        const auto words = phrase_tokens(cue);
        for (std::size_t pos = 0; pos + words.size() <= tokens.size(); ++pos) {
            if (phrase_matches_at(report_text, tokens, words, pos)) {
                cue_ends_at[pos + words.size() - 1] = true;
            }
        }
    }

    ExtractionResult result;
    const int window = ruleset.negation().window;
    for (const auto& rule : ruleset.rules()) {
        const auto words = phrase_tokens(rule.pattern);
        for (std::size_t pos = 0; pos + words.size() <= tokens.size(); ++pos) {
            if (!phrase_matches_at(report_text, tokens, words, pos)) continue;
            Match m;
            m.rule_id = rule.rule_id;
            m.severity = rule.severity;
            m.begin = tokens[pos].begin;
            m.end = tokens[pos + words.size() - 1].end;
            if (rule.severity != Severity::none) {
                for (int back = 1; back <= window && back <= static_cast<int>(pos); ++back) {
                    std::size_t q = pos - static_cast<std::size_t>(back);
                    if (tokens[q].sentence != tokens[pos].sentence) break;
                    if (cue_ends_at[q]) {
                        m.negated = true;
                        break;
                    }
                }
            }
            result.matches.push_back(std::move(m));
        }
    }
    std::sort(result.matches.begin(), result.matches.end(),
              [](const Match& a, const Match& b) {
                  return a.begin != b.begin ? a.begin < b.begin : a.rule_id < b.rule_id;
              });
    result.label = resolve_severity(result.matches);
    return result;
}

OptionalSeverity resolve_severity(const std::vector<Match>& matches) {
    bool any_none_class = false;
    std::optional<int> max_positive;
    for (const auto& m : matches) {
        if (m.negated) continue;
        int level = severity_index(m.severity);
        if (level == 0) {
            any_none_class = true;
        } else if (!max_positive || level > *max_positive) {
            max_positive = level;
        }
    }
    if (max_positive) return severity_from_int(*max_positive);
    if (any_none_class) return Severity::none;
    return std::nullopt;
}

KeywordValidation validate_extraction(const std::map<std::string, ExtractionResult>& extracted,
                                      const std::map<std::string, Severity>& reference,
                                      const RuleSet& ruleset) {
    for (const auto& [report_id, result] : extracted) {
        if (reference.find(report_id) == reference.end()) {
            throw ValidationError("report '" + report_id + "' missing from reference labels");
        }
    }

    // fired[rule_id] = set of report ids with >= 1 effective occurrence
    std::map<std::string, std::set<std::string>> fired;
    for (const auto& [report_id, result] : extracted) {
        for (const auto& m : result.matches) {
            if (!m.negated) fired[m.rule_id].insert(report_id);
        }
    }

    std::array<std::size_t, 4> class_totals{};
    for (const auto& [report_id, result] : extracted) {
        class_totals[severity_index(reference.at(report_id))] += 1;
    }

    KeywordValidation validation;
    validation.evaluated_reports = extracted.size();
    for (const auto& rule : ruleset.rules()) {
        KeywordStats ks;
        ks.rule_id = rule.rule_id;
        ks.pattern = rule.pattern;
        ks.severity = rule.severity;
        const auto& hits = fired[rule.rule_id];
        ks.reports_fired = hits.size();

        std::size_t true_hits = 0;
        for (const auto& report_id : hits) {
            if (reference.at(report_id) == rule.severity) true_hits += 1;
        }
        if (!hits.empty()) {
            ks.precision = static_cast<double>(true_hits) / static_cast<double>(hits.size());
        }
        std::size_t same_class = class_totals[severity_index(rule.severity)];
        std::size_t other_class = extracted.size() - same_class;
        if (same_class > 0) {
            ks.sensitivity = static_cast<double>(true_hits) / static_cast<double>(same_class);
        }
        if (other_class > 0) {
            std::size_t false_hits = hits.size() - true_hits;
            ks.specificity = static_cast<double>(other_class - false_hits) /
                             static_cast<double>(other_class);
        }
        validation.keywords.push_back(std::move(ks));
    }

    std::size_t labeled = 0, correct = 0;
    for (const auto& [report_id, result] : extracted) {
        if (!result.label) continue;
        labeled += 1;
        if (*result.label == reference.at(report_id)) correct += 1;
    }
    validation.labeled_reports = labeled;
    if (labeled > 0) {
        validation.overall_precision =
            static_cast<double>(correct) / static_cast<double>(labeled);
    }
    return validation;
}

std::vector<ReportDoc> load_reports_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open reports file: " + path.string());
    }
    std::vector<ReportDoc> docs;
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        line_no += 1;
        if (line.empty()) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": bad JSON: " + e.what());
        }
        if (!doc.is_object() || !doc.contains("report_id") || !doc.contains("text") ||
            !doc["report_id"].is_string() || !doc["text"].is_string()) {
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": expected {\"report_id\": string, \"text\": string}");
        }
        ReportDoc rd{doc["report_id"].get<std::string>(), doc["text"].get<std::string>()};
        if (!seen.insert(rd.report_id).second) {
            throw ValidationError("line " + std::to_string(line_no) + ": duplicate report_id '" +
                                  rd.report_id + "'");
        }
        docs.push_back(std::move(rd));
    }
    return docs;
}

void write_reports_jsonl(const std::filesystem::path& path,
                         const std::vector<ReportDoc>& docs) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot open file for writing: " + path.string());
    }
    for (const auto& doc : docs) {
        nlohmann::json j;
        j["report_id"] = doc.report_id;
        j["text"] = doc.text;
        out << j.dump() << '\n';
    }
}

}  // namespace edema::extraction
