#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace semtree {

struct Document {
    std::string doc_id;
    std::string content;
    std::optional<std::string> source_id;
    std::optional<std::int64_t> source_position;  // only meaningful with source_id
    nlohmann::json extra = nlohmann::json::object();  // unknown fields, kept opaque
};

struct Corpus {
    std::vector<Document> documents;

    std::size_t size() const { return documents.size(); }
    bool has_full_source_metadata() const;
    std::vector<std::string> doc_ids() const;
};

}  // namespace semtree
