#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "semtree/corpus.hpp"
#include "semtree/metrics.hpp"

namespace semtree {

struct QueryRecord {
    std::string query_id;
    std::string text;
};

struct Qrels {
    // query_id -> (doc_id -> gain)
    std::unordered_map<std::string, QueryGains> gains;

    const QueryGains& for_query(const std::string& query_id) const;
};

struct EvalBundle {
    std::vector<QueryRecord> queries;
    Qrels qrels;
    std::unordered_map<std::string, std::set<std::string>> exclusions;

    const std::set<std::string>& exclusions_for(const std::string& query_id) const;
};

// Optional renaming of on-disk field names, by file kind; dataset
// distributions disagree about schemas. Example:
//   {"corpus": {"doc_id": "pid", "content": "text"}}
struct FieldMap {
    std::map<std::string, std::map<std::string, std::string>> sections;

    std::string resolve(const std::string& section, const std::string& canonical) const;

    static FieldMap load(const std::string& path);
};

struct LoadReport {
    std::size_t records = 0;
    std::size_t with_source_metadata = 0;
    std::vector<std::string> warnings;
};

// Line-delimited JSON records: {"doc_id", "content", "source_id"?,
// "source_position"?}. Unknown fields are preserved. Duplicate doc ids and
// malformed lines are errors naming the line.
Corpus load_corpus(const std::string& path, const FieldMap& fields = {},
                   LoadReport* report = nullptr);

void write_corpus(const Corpus& corpus, const std::string& path);

// queries: {"query_id", "text"}; qrels: {"query_id", "doc_id", "gain"};
// exclusions (optional file): {"query_id", "excluded_doc_ids": [...]}.
// Qrels naming an unknown query are an error; unknown documents produce
// warnings and are kept (subsampled corpora legitimately lack them).
EvalBundle load_eval_bundle(const std::string& query_path, const std::string& qrels_path,
                            const std::optional<std::string>& exclusion_path = std::nullopt,
                            const std::optional<std::vector<std::string>>& known_doc_ids =
                                std::nullopt,
                            const FieldMap& fields = {}, LoadReport* report = nullptr);

}  // namespace semtree
