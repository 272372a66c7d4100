#include "orderby/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "orderby/rng.hpp"

namespace orderby {
namespace {

[[noreturn]] void fail_at(const std::string& path, std::size_t line, const std::string& why) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + why);
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

void validate_key(const std::string& path, std::size_t line, const Key& k,
                  std::unordered_set<std::string>& seen) {
    if (k.id.empty()) fail_at(path, line, "key id is empty");
    if (k.text.empty()) fail_at(path, line, "key text is empty");
    if (!seen.insert(k.id).second) fail_at(path, line, "duplicate key id '" + k.id + "'");
}

// RFC-4180-style row reader: quoted fields may contain commas, doubled
// quotes, and newlines. Returns false at end of input.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
    fields.clear();
    int c = in.peek();
    if (c == EOF) return false;
    std::string field;
    bool quoted = false;
    ++line;
    while (true) {
        c = in.get();
        if (c == EOF) {
            fields.push_back(field);
            return true;
        }
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(char(c));
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            fields.push_back(field);
            return true;
        } else {
            field.push_back(char(c));
        }
    }
}

double parse_double(const std::string& path, std::size_t line, const std::string& s) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) fail_at(path, line, "trailing characters in number '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        fail_at(path, line, "not a number: '" + s + "'");
    }
}

int parse_int(const std::string& path, std::size_t line, const std::string& s) {
    try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size()) fail_at(path, line, "trailing characters in integer '" + s + "'");
        return v;
    } catch (const std::logic_error&) {
        fail_at(path, line, "not an integer: '" + s + "'");
    }
}

std::vector<Key> load_keys_jsonl(const std::string& path) {
    auto in = open_or_throw(path);
    std::vector<Key> keys;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) fail_at(path, lineno, "not a JSON object");
        Key k;
        if (!j.contains("id") || !j["id"].is_string()) fail_at(path, lineno, "missing string 'id'");
        if (!j.contains("text") || !j["text"].is_string())
            fail_at(path, lineno, "missing string 'text'");
        k.id = j["id"].get<std::string>();
        k.text = j["text"].get<std::string>();
        if (j.contains("latent")) {
            if (!j["latent"].is_number()) fail_at(path, lineno, "'latent' is not a number");
            k.latent = j["latent"].get<double>();
        }
        validate_key(path, lineno, k, seen);
        keys.push_back(std::move(k));
    }
    return keys;
}

std::vector<Key> load_keys_csv(const std::string& path) {
    auto in = open_or_throw(path);
    std::vector<std::string> fields;
    std::size_t line = 0;
    if (!read_csv_row(in, fields, line)) throw std::runtime_error(path + ": empty file");

    auto col = [&](const std::string& name) {
        auto it = std::find(fields.begin(), fields.end(), name);
        return it == fields.end() ? std::size_t(-1) : std::size_t(it - fields.begin());
    };
    std::size_t id_col = col("id"), text_col = col("text"), latent_col = col("latent");
    if (id_col == std::size_t(-1)) fail_at(path, line, "missing 'id' header column");
    if (text_col == std::size_t(-1)) fail_at(path, line, "missing 'text' header column");
    std::size_t width = fields.size();

    std::vector<Key> keys;
    std::unordered_set<std::string> seen;
    while (read_csv_row(in, fields, line)) {
        if (fields.size() == 1 && fields[0].empty()) continue;  // blank trailing line
        if (fields.size() != width)
            fail_at(path, line, "expected " + std::to_string(width) + " columns, got " +
                                    std::to_string(fields.size()));
        Key k;
        k.id = fields[id_col];
        k.text = fields[text_col];
        if (latent_col != std::size_t(-1) && !fields[latent_col].empty())
            k.latent = parse_double(path, line, fields[latent_col]);
        validate_key(path, line, k, seen);
        keys.push_back(std::move(k));
    }
    return keys;
}

}  // namespace

std::vector<Key> load_keys(const std::string& path, KeyFileFormat format) {
    return format == KeyFileFormat::jsonl ? load_keys_jsonl(path) : load_keys_csv(path);
}

void save_keys_jsonl(const std::string& path, const std::vector<Key>& keys) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const Key& k : keys) {
        nlohmann::json j;
        j["id"] = k.id;
        j["text"] = k.text;
        if (k.latent) j["latent"] = *k.latent;
        out << j.dump() << "\n";
    }
}

TrecRun load_trec_run(const std::string& path, int depth) {
    auto in = open_or_throw(path);
    struct Row {
        int rank;
        std::size_t order;
        std::string docid;
    };
    std::vector<std::string> query_order;
    std::unordered_map<std::string, std::vector<Row>> rows;
    std::unordered_map<std::string, std::unordered_set<std::string>> seen;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream iss(line);
        std::string qid, ignored, docid, rank_s, score_s, tag;
        if (!(iss >> qid >> ignored >> docid >> rank_s >> score_s >> tag))
            fail_at(path, lineno, "expected 6 whitespace-separated columns");
        int rank = parse_int(path, lineno, rank_s);
        parse_double(path, lineno, score_s);  // validated, unused
        if (rows.find(qid) == rows.end()) query_order.push_back(qid);
        if (!seen[qid].insert(docid).second)
            fail_at(path, lineno, "duplicate docid '" + docid + "' for query '" + qid + "'");
        rows[qid].push_back({rank, lineno, docid});
    }

    TrecRun run;
    for (const auto& qid : query_order) {
        auto& rs = rows[qid];
        std::sort(rs.begin(), rs.end(), [](const Row& a, const Row& b) {
            return a.rank != b.rank ? a.rank < b.rank : a.order < b.order;
        });
        std::vector<std::string> ids;
        for (const Row& r : rs) {
            if (int(ids.size()) >= depth) break;
            ids.push_back(r.docid);
        }
        run.queries.emplace_back(qid, std::move(ids));
    }
    return run;
}

std::vector<QrelEntry> load_qrels(const std::string& path) {
    auto in = open_or_throw(path);
    std::vector<QrelEntry> entries;
    std::set<std::pair<std::string, std::string>> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream iss(line);
        std::string qid, ignored, docid, grade_s;
        if (!(iss >> qid >> ignored >> docid >> grade_s))
            fail_at(path, lineno, "expected 4 whitespace-separated columns");
        int grade = parse_int(path, lineno, grade_s);
        if (grade < 0) {
            std::cerr << path << ":" << lineno << ": negative grade clamped to 0\n";
            grade = 0;
        }
        if (!seen.emplace(qid, docid).second)
            fail_at(path, lineno, "duplicate qrel for (" + qid + ", " + docid + ")");
        entries.push_back({qid, docid, grade});
    }
    return entries;
}

SyntheticDistribution distribution_from_string(const std::string& s) {
    if (s == "distinct") return SyntheticDistribution::distinct;
    if (s == "ties") return SyntheticDistribution::ties;
    if (s == "clustered") return SyntheticDistribution::clustered;
    throw std::invalid_argument("unknown distribution: " + s);
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
    SplitMix64 rng(mix64(spec.seed, fnv1a64("synthetic")));

    // Latents in ranked (ascending) order first, then dealt to shuffled
    // positions so input order carries no signal.
    std::vector<double> ranked(spec.n);
    switch (spec.distribution) {
        case SyntheticDistribution::distinct:
            for (std::size_t i = 0; i < spec.n; ++i)
                ranked[i] = double(i) + 0.5 * rng.uniform();
            break;
        case SyntheticDistribution::ties: {
            double level = 0;
            for (std::size_t i = 0; i < spec.n; ++i) {
                if (i > 0 && rng.uniform() >= spec.tie_rate) level += 1.0;
                ranked[i] = level;
            }
            break;
        }
        case SyntheticDistribution::clustered: {
            std::size_t clusters = std::max<std::size_t>(1, spec.n / 16);
            for (std::size_t i = 0; i < spec.n; ++i)
                ranked[i] = 10.0 * double(rng.below(clusters)) + rng.gaussian(0.6);
            std::sort(ranked.begin(), ranked.end());
            break;
        }
    }

    std::vector<std::size_t> position(spec.n);
    std::iota(position.begin(), position.end(), 0);
    for (std::size_t i = spec.n; i > 1; --i)
        std::swap(position[i - 1], position[rng.below(i)]);

    Dataset ds;
    ds.keys.resize(spec.n);
    for (std::size_t r = 0; r < spec.n; ++r) {
        std::size_t at = position[r];
        Key& k = ds.keys[at];
        k.id = "k" + std::to_string(at + 1);
        k.text = "item " + std::to_string(at + 1);
        k.latent = ranked[r];
    }

    // Dense truth ranks per task direction; equal latents share a rank.
    std::vector<std::size_t> order(spec.n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double la = *ds.keys[a].latent, lb = *ds.keys[b].latent;
        return spec.direction == Direction::ascending ? la < lb : la > lb;
    });
    double rank = -1;
    bool have_prev = false;
    double prev_latent = 0;
    for (std::size_t idx : order) {
        double l = *ds.keys[idx].latent;
        if (!have_prev || l != prev_latent) {
            rank += 1;
            prev_latent = l;
            have_prev = true;
        }
        ds.truth.push_back({ds.keys[idx].id, rank});
    }

    ds.task.criterion = "order the items by their hidden numeric value";
    ds.task.direction = spec.direction;
    return ds;
}

std::unordered_map<std::string, double> truth_ranks(const Dataset& ds) {
    std::unordered_map<std::string, double> out;
    out.reserve(ds.truth.size());
    for (const auto& t : ds.truth) out.emplace(t.id, t.rank);
    return out;
}

std::unordered_map<std::string, int> qrels_for_query(const std::vector<QrelEntry>& qrels,
                                                     const std::string& query_id) {
    std::unordered_map<std::string, int> out;
    for (const auto& q : qrels) {
        if (q.query_id == query_id) out.emplace(q.key_id, q.relevance);
    }
    return out;
}

}  // namespace orderby
