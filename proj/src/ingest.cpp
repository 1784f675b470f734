#include "semtree/ingest.hpp"

#include <json.hpp>

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace semtree {

using nlohmann::json;

bool Corpus::has_full_source_metadata() const {
    for (const auto& doc : documents) {
        if (!doc.source_id || !doc.source_position) return false;
    }
    return !documents.empty();
}

std::vector<std::string> Corpus::doc_ids() const {
    std::vector<std::string> ids;
    ids.reserve(documents.size());
    for (const auto& doc : documents) ids.push_back(doc.doc_id);
    return ids;
}

const QueryGains& Qrels::for_query(const std::string& query_id) const {
    static const QueryGains kEmpty;
    auto it = gains.find(query_id);
    return it == gains.end() ? kEmpty : it->second;
}

const std::set<std::string>& EvalBundle::exclusions_for(const std::string& query_id) const {
    static const std::set<std::string> kEmpty;
    auto it = exclusions.find(query_id);
    return it == exclusions.end() ? kEmpty : it->second;
}

std::string FieldMap::resolve(const std::string& section, const std::string& canonical) const {
    auto sec = sections.find(section);
    if (sec == sections.end()) return canonical;
    auto field = sec->second.find(canonical);
    return field == sec->second.end() ? canonical : field->second;
}

FieldMap FieldMap::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open field map: " + path);
    json j;
    in >> j;
    FieldMap map;
    for (const auto& [section, fields] : j.items()) {
        for (const auto& [canonical, actual] : fields.items()) {
            map.sections[section][canonical] = actual.get<std::string>();
        }
    }
    return map;
}

namespace {

[[noreturn]] void line_fail(const std::string& path, std::size_t line_no,
                            const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

// Applies fn to every non-empty line parsed as a JSON object.
void for_each_record(const std::string& path,
                     const std::function<void(std::size_t, json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) line_fail(path, line_no, "malformed JSON record");
        if (!j.is_object()) line_fail(path, line_no, "record is not a JSON object");
        fn(line_no, j);
    }
}

std::string require_string(json& j, const std::string& key, const std::string& path,
                           std::size_t line_no) {
    if (!j.contains(key)) line_fail(path, line_no, "missing field '" + key + "'");
    const auto& v = j.at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    line_fail(path, line_no, "field '" + key + "' must be a string");
}

}  // namespace

Corpus load_corpus(const std::string& path, const FieldMap& fields, LoadReport* report) {
    const std::string f_doc = fields.resolve("corpus", "doc_id");
    const std::string f_content = fields.resolve("corpus", "content");
    const std::string f_source = fields.resolve("corpus", "source_id");
    const std::string f_pos = fields.resolve("corpus", "source_position");

    Corpus corpus;
    std::unordered_set<std::string> seen;
    for_each_record(path, [&](std::size_t line_no, json& j) {
        Document doc;
        doc.doc_id = require_string(j, f_doc, path, line_no);
        if (doc.doc_id.empty()) line_fail(path, line_no, "empty doc_id");
        if (!seen.insert(doc.doc_id).second) {
            line_fail(path, line_no, "duplicate doc_id '" + doc.doc_id + "'");
        }
        doc.content = require_string(j, f_content, path, line_no);
        if (j.contains(f_source) && !j.at(f_source).is_null()) {
            doc.source_id = j.at(f_source).is_string()
                                ? j.at(f_source).get<std::string>()
                                : std::to_string(j.at(f_source).get<std::int64_t>());
        }
        if (j.contains(f_pos) && !j.at(f_pos).is_null()) {
            if (!j.at(f_pos).is_number_integer()) {
                line_fail(path, line_no, "source_position must be an integer");
            }
            doc.source_position = j.at(f_pos).get<std::int64_t>();
        }
        if (doc.source_position && !doc.source_id) {
            line_fail(path, line_no, "source_position present without source_id");
        }
        j.erase(f_doc);
        j.erase(f_content);
        j.erase(f_source);
        j.erase(f_pos);
        doc.extra = std::move(j);
        corpus.documents.push_back(std::move(doc));
    });

    if (report) {
        report->records = corpus.size();
        for (const auto& doc : corpus.documents) {
            if (doc.source_id && doc.source_position) ++report->with_source_metadata;
        }
    }
    return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& doc : corpus.documents) {
        json j = doc.extra.is_object() ? doc.extra : json::object();
        j["doc_id"] = doc.doc_id;
        j["content"] = doc.content;
        if (doc.source_id) j["source_id"] = *doc.source_id;
        if (doc.source_position) j["source_position"] = *doc.source_position;
        out << j.dump() << '\n';
    }
}

EvalBundle load_eval_bundle(const std::string& query_path, const std::string& qrels_path,
                            const std::optional<std::string>& exclusion_path,
                            const std::optional<std::vector<std::string>>& known_doc_ids,
                            const FieldMap& fields, LoadReport* report) {
    EvalBundle bundle;
    std::unordered_set<std::string> query_ids;
    std::unordered_set<std::string> known_docs;
    if (known_doc_ids) known_docs.insert(known_doc_ids->begin(), known_doc_ids->end());
    auto warn = [&](const std::string& message) {
        if (report) report->warnings.push_back(message);
    };

    const std::string f_qid = fields.resolve("queries", "query_id");
    const std::string f_text = fields.resolve("queries", "text");
    for_each_record(query_path, [&](std::size_t line_no, json& j) {
        QueryRecord q;
        q.query_id = require_string(j, f_qid, query_path, line_no);
        q.text = require_string(j, f_text, query_path, line_no);
        if (q.query_id.empty()) line_fail(query_path, line_no, "empty query_id");
        if (!query_ids.insert(q.query_id).second) {
            line_fail(query_path, line_no, "duplicate query_id '" + q.query_id + "'");
        }
        bundle.queries.push_back(std::move(q));
    });

    const std::string r_qid = fields.resolve("qrels", "query_id");
    const std::string r_doc = fields.resolve("qrels", "doc_id");
    const std::string r_gain = fields.resolve("qrels", "gain");
    for_each_record(qrels_path, [&](std::size_t line_no, json& j) {
        const std::string qid = require_string(j, r_qid, qrels_path, line_no);
        const std::string doc = require_string(j, r_doc, qrels_path, line_no);
        if (!query_ids.count(qid)) {
            line_fail(qrels_path, line_no, "qrels reference unknown query_id '" + qid + "'");
        }
        if (!j.contains(r_gain) || !j.at(r_gain).is_number_integer()) {
            line_fail(qrels_path, line_no, "gain must be an integer");
        }
        const int gain = j.at(r_gain).get<int>();
        if (gain < 0) line_fail(qrels_path, line_no, "gain must be >= 0");
        if (known_doc_ids && !known_docs.count(doc)) {
            warn(qrels_path + ":" + std::to_string(line_no) + ": qrels document '" + doc +
                 "' not in the loaded corpus");
        }
        bundle.qrels.gains[qid][doc] = gain;
    });

    if (exclusion_path) {
        const std::string e_qid = fields.resolve("exclusions", "query_id");
        const std::string e_ids = fields.resolve("exclusions", "excluded_doc_ids");
        for_each_record(*exclusion_path, [&](std::size_t line_no, json& j) {
            const std::string qid = require_string(j, e_qid, *exclusion_path, line_no);
            if (!query_ids.count(qid)) {
                line_fail(*exclusion_path, line_no,
                          "exclusions reference unknown query_id '" + qid + "'");
            }
            if (!j.contains(e_ids) || !j.at(e_ids).is_array()) {
                line_fail(*exclusion_path, line_no, "excluded_doc_ids must be an array");
            }
            auto& target = bundle.exclusions[qid];
            for (const auto& d : j.at(e_ids)) {
                const std::string doc =
                    d.is_string() ? d.get<std::string>() : std::to_string(d.get<std::int64_t>());
                // Kept even when unknown: the doc may live outside a subsample.
                if (known_doc_ids && !known_docs.count(doc)) {
                    warn(*exclusion_path + ":" + std::to_string(line_no) + ": excluded document '" +
                         doc + "' not in the loaded corpus (entry kept)");
                }
                target.insert(doc);
            }
        });
    }

    if (report) report->records = bundle.queries.size();
    return bundle;
}

}  // namespace semtree
