#include "edema/consensus.hpp"

#include <array>
#include <fstream>
#include <set>

#include <json.hpp>

namespace edema::consensus {

namespace {

void check_distinct_raters(const std::vector<Vote>& votes, const std::string& where) {
    std::set<std::string> ids;
    for (const auto& v : votes) {
        if (!ids.insert(v.rater_id).second) {
            throw ValidationError(where + ": duplicate rater_id '" + v.rater_id + "'");
        }
    }
}

/// Label reaching `quorum` votes, if any.
std::optional<Severity> quorum_label(const std::vector<Vote>& votes, std::size_t quorum) {
    std::array<std::size_t, 4> counts{};
    for (const auto& v : votes) counts[severity_index(v.label)] += 1;
    for (int c = 0; c < 4; ++c) {
        if (counts[c] >= quorum) return severity_from_int(c);
    }
    return std::nullopt;
}

}  // namespace

std::string path_to_string(const ConsensusOutcome& outcome) {
    switch (outcome.path) {
        case ConsensusPath::unanimous3: return "unanimous3";
        case ConsensusPath::majority4: return "majority4";
        case ConsensusPath::discussion_round:
            return "discussion_round(" + std::to_string(outcome.round) + ")";
        case ConsensusPath::no_consensus: return "no_consensus";
    }
    return "?";
}

ConsensusOutcome reduce_consensus(const VoteLog& log, int max_rounds) {
    if (max_rounds < 0) {
        throw ValidationError("max_rounds must be >= 0");
    }
    const std::string id = log.image_id.empty() ? "<image>" : log.image_id;
    if (log.initial.size() != 3) {
        throw ValidationError(id + ": expected exactly 3 initial votes, got " +
                              std::to_string(log.initial.size()));
    }
    check_distinct_raters(log.initial, id + " initial votes");

    // Stage 1: unanimous residents.
    if (log.initial[0].label == log.initial[1].label &&
        log.initial[1].label == log.initial[2].label) {
        return ConsensusOutcome{log.initial[0].label, ConsensusPath::unanimous3, 0, 0};
    }

    // Stage 2: attending joins; 3 of 4 decides.
    if (!log.attending) {
        throw ValidationError(id + ": attending vote required but missing");
    }
    std::vector<Vote> four = log.initial;
    four.push_back(*log.attending);
    check_distinct_raters(four, id + " attending stage");
    if (auto label = quorum_label(four, 3)) {
        return ConsensusOutcome{*label, ConsensusPath::majority4, 0, 0};
    }

    // Stage 3: discussion rounds, validated only as far as they are read.
    for (int k = 1; k <= max_rounds; ++k) {
        if (static_cast<std::size_t>(k) > log.rounds.size()) {
            throw ValidationError(id + ": discussion round " + std::to_string(k) +
                                  " required but missing");
        }
        const auto& round = log.rounds[static_cast<std::size_t>(k) - 1];
        if (round.size() != 4) {
            throw ValidationError(id + ": discussion round " + std::to_string(k) +
                                  " has " + std::to_string(round.size()) + " votes, expected 4");
        }
        check_distinct_raters(round, id + " round " + std::to_string(k));
        if (auto label = quorum_label(round, 3)) {
            return ConsensusOutcome{*label, ConsensusPath::discussion_round, k, k};
        }
    }
    return ConsensusOutcome{std::nullopt, ConsensusPath::no_consensus, 0, max_rounds};
}

double fleiss_kappa(const std::vector<std::vector<int>>& item_votes, int categories) {
    if (item_votes.empty()) {
        throw ValidationError("fleiss_kappa: no items");
    }
    if (categories < 1) {
        throw ValidationError("fleiss_kappa: categories must be >= 1");
    }
    const std::size_t r = item_votes[0].size();
    if (r < 2) {
        throw ValidationError("fleiss_kappa: need at least 2 raters");
    }
    const std::size_t n = item_votes.size();

    std::vector<double> category_totals(static_cast<std::size_t>(categories), 0.0);
    double mean_agreement = 0.0;
    for (const auto& votes : item_votes) {
        if (votes.size() != r) {
            throw ValidationError("fleiss_kappa: ragged vote matrix");
        }
        std::vector<std::size_t> counts(static_cast<std::size_t>(categories), 0);
        for (int v : votes) {
            if (v < 0 || v >= categories) {
                throw ValidationError("fleiss_kappa: vote outside [0, categories)");
            }
            counts[static_cast<std::size_t>(v)] += 1;
        }
        double sum_sq = 0.0;
        for (std::size_t j = 0; j < counts.size(); ++j) {
            sum_sq += static_cast<double>(counts[j]) * static_cast<double>(counts[j]);
            category_totals[j] += static_cast<double>(counts[j]);
        }
        mean_agreement += (sum_sq - static_cast<double>(r)) /
                          (static_cast<double>(r) * static_cast<double>(r - 1));
    }
    mean_agreement /= static_cast<double>(n);

    double chance_agreement = 0.0;
    const double total_votes = static_cast<double>(n) * static_cast<double>(r);
    for (double t : category_totals) {
        double p = t / total_votes;
        chance_agreement += p * p;
    }

    if (1.0 - chance_agreement < 1e-12) {
        if (1.0 - mean_agreement < 1e-12) return 1.0;
        throw NumericError("fleiss_kappa: degenerate chance agreement without perfect agreement");
    }
    return (mean_agreement - chance_agreement) / (1.0 - chance_agreement);
}

namespace {

Vote parse_vote(const nlohmann::json& j, std::size_t line_no) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_string() || !j[1].is_number_integer()) {
        throw ValidationError("line " + std::to_string(line_no) +
                              ": vote must be [rater_id, label]");
    }
    return Vote{j[0].get<std::string>(), severity_from_int(j[1].get<int>())};
}

}  // namespace

std::vector<VoteLog> load_votes_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open votes file: " + path.string());
    }
    std::vector<VoteLog> logs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no += 1;
        if (line.empty()) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("line " + std::to_string(line_no) + ": bad JSON: " + e.what());
        }
        if (!doc.is_object() || !doc.contains("image_id") || !doc.contains("initial") ||
            !doc["image_id"].is_string() || !doc["initial"].is_array()) {
            throw ValidationError("line " + std::to_string(line_no) +
                                  ": expected {image_id, initial, attending?, rounds?}");
        }
        VoteLog log;
        log.image_id = doc["image_id"].get<std::string>();
        for (const auto& v : doc["initial"]) log.initial.push_back(parse_vote(v, line_no));
        if (doc.contains("attending") && !doc["attending"].is_null()) {
            log.attending = parse_vote(doc["attending"], line_no);
        }
        if (doc.contains("rounds")) {
            if (!doc["rounds"].is_array()) {
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": rounds must be an array of vote arrays");
            }
            for (const auto& round : doc["rounds"]) {
                std::vector<Vote> votes;
                for (const auto& v : round) votes.push_back(parse_vote(v, line_no));
                log.rounds.push_back(std::move(votes));
            }
        }
        logs.push_back(std::move(log));
    }
    return logs;
}

void write_votes_jsonl(const std::filesystem::path& path, const std::vector<VoteLog>& logs) {
    std::ofstream out(path);
    if (!out) {
        throw ValidationError("cannot open file for writing: " + path.string());
    }
    auto vote_json = [](const Vote& v) {
        return nlohmann::json::array({v.rater_id, severity_index(v.label)});
    };
    for (const auto& log : logs) {
        nlohmann::json j;
        j["image_id"] = log.image_id;
        auto initial = nlohmann::json::array();
        for (const auto& v : log.initial) initial.push_back(vote_json(v));
        j["initial"] = initial;
        if (log.attending) {
            j["attending"] = vote_json(*log.attending);
        }
        if (!log.rounds.empty()) {
            auto rounds = nlohmann::json::array();
            for (const auto& round : log.rounds) {
                auto rj = nlohmann::json::array();
                for (const auto& v : round) rj.push_back(vote_json(v));
                rounds.push_back(rj);
            }
            j["rounds"] = rounds;
        }
        out << j.dump() << '\n';
    }
}

}  // namespace edema::consensus
