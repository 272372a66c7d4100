#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "orderby/core.hpp"
#include "orderby/eval.hpp"

namespace orderby {

struct QrelEntry {
    std::string query_id;
    std::string key_id;
    int relevance = 0;
};

struct TruthEntry {
    std::string id;
    double rank = 0;  // smaller = better; equal ranks mark ties
};

struct Dataset {
    std::vector<Key> keys;
    std::vector<TruthEntry> truth;  // empty when no ground truth is known
    std::vector<QrelEntry> qrels;   // empty when none
    RankTask task;
};

enum class KeyFileFormat { jsonl, csv };

// JSONL objects {id, text[, latent]} or CSV with header id,text[,latent].
// Duplicate ids, empty ids/texts, and malformed rows are rejected with the
// offending line number.
std::vector<Key> load_keys(const std::string& path, KeyFileFormat format);

void save_keys_jsonl(const std::string& path, const std::vector<Key>& keys);

// Standard 6-column run format: qid _ docid rank score tag. Lists are
// returned per query in first-seen order, each ordered by rank and
// truncated to `depth` entries.
struct TrecRun {
    std::vector<std::pair<std::string, std::vector<std::string>>> queries;
};
TrecRun load_trec_run(const std::string& path, int depth = 100);

// Standard 4-column qrels: qid _ docid grade. Duplicate (qid, docid) pairs
// are rejected; negative grades are clamped to 0 with a warning.
std::vector<QrelEntry> load_qrels(const std::string& path);

enum class SyntheticDistribution { distinct, ties, clustered };

SyntheticDistribution distribution_from_string(const std::string& s);

struct SyntheticSpec {
    std::size_t n = 0;
    SyntheticDistribution distribution = SyntheticDistribution::distinct;
    double tie_rate = 0.0;  // ties distribution: probability an adjacent ranked pair ties
    std::uint64_t seed = 0;
    Direction direction = Direction::ascending;
};

// Seeded stand-in dataset: n keys with hidden latent values, text that does
// not reveal them, and a truth ordering derived from the latents.
Dataset generate_synthetic(const SyntheticSpec& spec);

// Truth entries as a rank lookup for kendall_tau_b.
std::unordered_map<std::string, double> truth_ranks(const Dataset& ds);

// Relevance lookup for one query.
std::unordered_map<std::string, int> qrels_for_query(const std::vector<QrelEntry>& qrels,
                                                     const std::string& query_id);

}  // namespace orderby
