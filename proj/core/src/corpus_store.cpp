// Copyright 2026 The annotkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "annotkit/corpus_store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>

#include "annotkit/errors.hpp"
#include "annotkit/text_util.hpp"

namespace annotkit {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "matrix files are little-endian; add byte swapping for this target");

void LabelSchema::validate() const {
    require(classes.size() >= 2, "label schema needs at least two classes");
    std::set<std::string> seen;
    for (const auto& c : classes) {
        std::string norm = normalize_label(c);
        require(!norm.empty(), "empty class name in schema");
        require(seen.insert(norm).second, "duplicate class name in schema: " + c);
        require(c.find(open_delimiter) == std::string::npos &&
                    c.find(close_delimiter) == std::string::npos,
                "class name contains an output delimiter: " + c);
    }
    require(!open_delimiter.empty() && !close_delimiter.empty(), "delimiters must be non-empty");
    require(open_delimiter != close_delimiter, "open and close delimiters must differ");
}

std::optional<std::string> LabelSchema::match(std::string_view label) const {
    std::string norm = normalize_label(label);
    for (const auto& c : classes) {
        if (normalize_label(c) == norm) {
            return c;
        }
    }
    return std::nullopt;
}

std::string LabelSchema::canonical(std::string_view label) const {
    auto m = match(label);
    if (!m) {
        fail(ErrorCode::UnknownLabel, "label '" + std::string(label) + "' is not a class of task '" +
                                          task_name + "'");
    }
    return *m;
}

std::optional<std::size_t> EmbeddingMatrix::row_of(std::string_view record_id) const {
    for (std::size_t i = 0; i < record_ids.size(); ++i) {
        if (record_ids[i] == record_id) {
            return i;
        }
    }
    return std::nullopt;
}

void EmbeddingMatrix::validate() const {
    if (static_cast<std::size_t>(vectors.rows()) != record_ids.size()) {
        fail(ErrorCode::DimensionMismatch,
             "matrix has " + std::to_string(vectors.rows()) + " rows for " +
                 std::to_string(record_ids.size()) + " record ids");
    }
    if (!vectors.allFinite()) {
        fail(ErrorCode::NonFinite, "embedding matrix contains non-finite entries");
    }
}

Corpus::Corpus(LabelSchema schema) : schema_(std::move(schema)) {
    schema_.validate();
}

void Corpus::add(TextRecord record) {
    require(!record.record_id.empty(), "record id must be non-empty");
    require(!trim(record.text).empty(), "record '" + record.record_id + "' has empty text");
    if (index_.contains(record.record_id)) {
        fail(ErrorCode::DuplicateId, "duplicate record id '" + record.record_id + "'");
    }
    if (record.gold_label) {
        record.gold_label = schema_.canonical(*record.gold_label);
    }
    if (record.human_label) {
        record.human_label = schema_.canonical(*record.human_label);
    }
    index_.emplace(record.record_id, records_.size());
    records_.push_back(std::move(record));
}

bool Corpus::contains(std::string_view record_id) const {
    return index_.contains(std::string(record_id));
}

std::optional<std::size_t> Corpus::index_of(std::string_view record_id) const {
    auto it = index_.find(std::string(record_id));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const TextRecord& Corpus::record(std::string_view record_id) const {
    auto idx = index_of(record_id);
    if (!idx) {
        fail(ErrorCode::UnknownRecord, "no record '" + std::string(record_id) + "'");
    }
    return records_[*idx];
}

void Corpus::attach_embeddings(EmbeddingMatrix matrix) {
    matrix.validate();
    require(!matrix.model_name.empty(), "embedding matrix needs a model name");
    for (const auto& id : matrix.record_ids) {
        if (!contains(id)) {
            fail(ErrorCode::UnknownRecord, "embedding references unknown record '" + id + "'");
        }
    }
    matrix.vectors = matrix.vectors.cast<float>().cast<double>();
    auto& versions = embeddings_[{matrix.model_name, matrix.reduced}];
    if (!versions.empty() && versions.back().dimension() != matrix.dimension()) {
        fail(ErrorCode::DimensionMismatch,
             "model '" + matrix.model_name + "' already stored with dimension " +
                 std::to_string(versions.back().dimension()) + ", got " +
                 std::to_string(matrix.dimension()));
    }
    versions.push_back(std::move(matrix));
}

bool Corpus::has_embeddings(std::string_view model_name, bool reduced) const {
    return embeddings_.contains({std::string(model_name), reduced});
}

const EmbeddingMatrix& Corpus::embeddings(std::string_view model_name, bool reduced) const {
    auto it = embeddings_.find({std::string(model_name), reduced});
    if (it == embeddings_.end()) {
        fail(ErrorCode::PreconditionViolation,
             std::string("no ") + (reduced ? "reduced" : "raw") + " embeddings for model '" +
                 std::string(model_name) + "'");
    }
    return it->second.back();
}

const EmbeddingMatrix& Corpus::embeddings(std::string_view model_name, bool reduced,
                                          int version) const {
    auto it = embeddings_.find({std::string(model_name), reduced});
    require(it != embeddings_.end() && version >= 1 &&
                static_cast<std::size_t>(version) <= it->second.size(),
            "no embedding version " + std::to_string(version) + " for '" +
                std::string(model_name) + "'");
    return it->second[static_cast<std::size_t>(version - 1)];
}

std::vector<EmbeddingVersion> Corpus::embedding_versions() const {
    std::vector<EmbeddingVersion> out;
    for (const auto& [key, versions] : embeddings_) {
        for (std::size_t v = 0; v < versions.size(); ++v) {
            out.push_back({key.first, key.second, static_cast<int>(v + 1),
                           versions[v].dimension()});
        }
    }
    return out;
}

Eigen::RowVectorXd Corpus::fetch(std::string_view record_id, std::string_view model_name,
                                 bool reduced) const {
    const auto& m = embeddings(model_name, reduced);
    auto row = m.row_of(record_id);
    if (!row) {
        fail(ErrorCode::UnknownRecord,
             "record '" + std::string(record_id) + "' has no embedding in '" +
                 std::string(model_name) + "'");
    }
    return m.vectors.row(static_cast<Eigen::Index>(*row));
}

std::string Corpus::content_hash() const {
    std::string canonical;
    for (const auto& r : records_) {
        canonical += record_to_json_line(r);
    }
    return sha256_hex(canonical);
}

std::string record_to_json_line(const TextRecord& record) {
    ordered_json j;
    j["id"] = record.record_id;
    j["text"] = record.text;
    if (record.gold_label) {
        j["gold_label"] = *record.gold_label;
    }
    if (record.human_label) {
        j["human_label"] = *record.human_label;
    }
    if (record.source) {
        j["source"] = *record.source;
    }
    return j.dump() + "\n";
}

namespace {

std::optional<std::string> optional_field(const json& j, const char* key, std::size_t line) {
    if (!j.contains(key) || j[key].is_null()) {
        return std::nullopt;
    }
    if (!j[key].is_string()) {
        fail(ErrorCode::ParseError,
             "line " + std::to_string(line) + ": field '" + key + "' must be a string");
    }
    std::string value = j[key].get<std::string>();
    if (trim(value).empty()) {
        return std::nullopt;
    }
    return value;
}

std::string default_id(const std::string& text) {
    return "h" + sha256_hex(text).substr(0, 16);
}

void add_with_line(Corpus& corpus, TextRecord record, std::size_t line) {
    try {
        corpus.add(std::move(record));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::PreconditionViolation) {
            fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + e.what());
        }
        throw;
    }
}

void ingest_jsonl(Corpus& corpus, const std::string& content) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= content.size()) {
        std::size_t nl = content.find('\n', start);
        std::string line = content.substr(start, nl == std::string::npos ? std::string::npos
                                                                         : nl - start);
        ++line_no;
        start = nl == std::string::npos ? content.size() + 1 : nl + 1;
        if (trim(line).empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
            fail(ErrorCode::ParseError,
                 "line " + std::to_string(line_no) + ": expected an object with a string 'text'");
        }
        TextRecord r;
        r.text = j["text"].get<std::string>();
        auto id = optional_field(j, "id", line_no);
        r.record_id = id ? *id : default_id(r.text);
        r.gold_label = optional_field(j, "gold_label", line_no);
        r.human_label = optional_field(j, "human_label", line_no);
        r.source = optional_field(j, "source", line_no);
        add_with_line(corpus, std::move(r), line_no);
    }
}

void ingest_csv(Corpus& corpus, const std::string& content) {
    auto rows = parse_csv(content);
    if (rows.empty()) {
        return;
    }
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < rows[0].size(); ++i) {
        column[casefold(trim(rows[0][i]))] = i;
    }
    if (!column.contains("text")) {
        fail(ErrorCode::ParseError, "line 1: CSV header lacks a 'text' column");
    }
    auto cell = [&](const std::vector<std::string>& row, const char* name,
                    std::size_t line) -> std::optional<std::string> {
        auto it = column.find(name);
        if (it == column.end()) {
            return std::nullopt;
        }
        if (it->second >= row.size()) {
            fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": missing column '" +
                                            name + "'");
        }
        std::string v = row[it->second];
        if (trim(v).empty()) {
            return std::nullopt;
        }
        return v;
    };
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::size_t line = i + 1;
        TextRecord r;
        auto text = cell(rows[i], "text", line);
        r.text = text.value_or("");
        auto id = cell(rows[i], "id", line);
        r.record_id = id ? *id : default_id(r.text);
        r.gold_label = cell(rows[i], "gold_label", line);
        r.human_label = cell(rows[i], "human_label", line);
        r.source = cell(rows[i], "source", line);
        add_with_line(corpus, std::move(r), line);
    }
}

}  // namespace

Corpus ingest(const fs::path& path, const LabelSchema& schema) {
    if (!fs::exists(path)) {
        fail(ErrorCode::IoError, "corpus file not found: " + path.string());
    }
    Corpus corpus(schema);
    std::string content = read_file(path);
    if (casefold(path.extension().string()) == ".csv") {
        ingest_csv(corpus, content);
    } else {
        ingest_jsonl(corpus, content);
    }
    return corpus;
}

void write_matrix_file(const fs::path& path, const EmbeddingMatrix& matrix, int version) {
    matrix.validate();
    ordered_json header;
    header["format"] = "annotkit-matrix";
    header["dtype"] = "float32";
    header["model_name"] = matrix.model_name;
    header["reduced"] = matrix.reduced;
    header["version"] = version;
    header["rows"] = matrix.rows();
    header["dimension"] = matrix.dimension();
    header["record_ids"] = matrix.record_ids;
    std::string header_text = header.dump();

    std::string bytes(kMatrixMagic);
    std::uint64_t header_len = header_text.size();
    bytes.append(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    bytes += header_text;
    std::vector<float> row(matrix.dimension());
    for (Eigen::Index r = 0; r < matrix.vectors.rows(); ++r) {
        for (Eigen::Index c = 0; c < matrix.vectors.cols(); ++c) {
            row[static_cast<std::size_t>(c)] = static_cast<float>(matrix.vectors(r, c));
        }
        bytes.append(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
    }
    write_file_atomic(path, bytes);
}

EmbeddingMatrix read_matrix_file(const fs::path& path, int* version) {
    std::string bytes = read_file(path);
    const std::size_t prefix = kMatrixMagic.size() + sizeof(std::uint64_t);
    if (bytes.size() < prefix || std::string_view(bytes).substr(0, kMatrixMagic.size()) != kMatrixMagic) {
        fail(ErrorCode::ParseError, path.string() + ": not an annotkit matrix file");
    }
    std::uint64_t header_len = 0;
    std::memcpy(&header_len, bytes.data() + kMatrixMagic.size(), sizeof(header_len));
    if (bytes.size() < prefix + header_len) {
        fail(ErrorCode::ParseError, path.string() + ": truncated header");
    }
    json header;
    try {
        header = json::parse(bytes.substr(prefix, header_len));
    } catch (const json::parse_error& e) {
        fail(ErrorCode::ParseError, path.string() + ": bad header: " + e.what());
    }
    EmbeddingMatrix m;
    m.model_name = header.at("model_name").get<std::string>();
    m.reduced = header.at("reduced").get<bool>();
    m.record_ids = header.at("record_ids").get<std::vector<std::string>>();
    auto rows = header.at("rows").get<std::size_t>();
    auto dim = header.at("dimension").get<std::size_t>();
    if (version) {
        *version = header.value("version", 1);
    }
    std::size_t payload = rows * dim * sizeof(float);
    if (m.record_ids.size() != rows || bytes.size() != prefix + header_len + payload) {
        fail(ErrorCode::DimensionMismatch, path.string() + ": payload does not match header");
    }
    std::vector<float> data(rows * dim);
    std::memcpy(data.data(), bytes.data() + prefix + header_len, payload);
    m.vectors.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows * dim; ++i) {
        m.vectors.data()[i] = data[i];
    }
    m.validate();
    return m;
}

std::string matrix_file_name(const EmbeddingVersion& v) {
    std::string safe;
    for (char c : v.model_name) {
        safe.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_');
    }
    return safe + (v.reduced ? ".reduced" : ".raw") + ".v" + std::to_string(v.version) + ".mat";
}

void save_corpus(const Corpus& corpus, const fs::path& dir) {
    std::string records;
    for (const auto& r : corpus.records()) {
        records += record_to_json_line(r);
    }
    write_file_atomic(dir / "records.jsonl", records);
    ordered_json index = ordered_json::array();
    for (const auto& v : corpus.embedding_versions()) {
        auto file = dir / "embeddings" / matrix_file_name(v);
        if (!fs::exists(file)) {
            write_matrix_file(file, corpus.embeddings(v.model_name, v.reduced, v.version), v.version);
        }
        index.push_back({{"model_name", v.model_name},
                         {"reduced", v.reduced},
                         {"version", v.version},
                         {"dimension", v.dimension},
                         {"file", "embeddings/" + matrix_file_name(v)}});
    }
    write_file_atomic(dir / "embeddings.json", index.dump(2) + "\n");
}

Corpus load_corpus(const fs::path& dir, const LabelSchema& schema) {
    Corpus corpus = ingest(dir / "records.jsonl", schema);
    auto index_path = dir / "embeddings.json";
    if (fs::exists(index_path)) {
        json index = json::parse(read_file(index_path));
        for (const auto& entry : index) {
            corpus.attach_embeddings(read_matrix_file(dir / entry.at("file").get<std::string>()));
        }
    }
    return corpus;
}

std::string manifest_bytes(const Corpus& corpus, const SnapshotExtras& extras) {
    // Only content-derived fields: two snapshots of one state are byte-equal.
    ordered_json m;
    m["format"] = "annotkit-manifest";
    m["corpus_hash"] = corpus.content_hash();
    m["record_count"] = corpus.size();
    m["task"] = corpus.schema().task_name;
    m["stage"] = extras.stage;
    m["config_hash"] = extras.config_hash;
    ordered_json emb = ordered_json::array();
    for (const auto& v : corpus.embedding_versions()) {
        const auto& mat = corpus.embeddings(v.model_name, v.reduced, v.version);
        std::string raw(reinterpret_cast<const char*>(mat.vectors.data()),
                        static_cast<std::size_t>(mat.vectors.size()) * sizeof(double));
        emb.push_back({{"model_name", v.model_name},
                       {"reduced", v.reduced},
                       {"version", v.version},
                       {"dimension", v.dimension},
                       {"file", "embeddings/" + matrix_file_name(v)},
                       {"content_sha256", sha256_hex(raw)}});
    }
    m["embeddings"] = emb;
    m["pool_ids"] = extras.pool_ids;
    ordered_json artifacts = ordered_json::object();
    for (const auto& [name, digest] : extras.artifacts) {
        artifacts[name] = digest;
    }
    m["artifacts"] = artifacts;
    return m.dump(2) + "\n";
}

fs::path snapshot(const Corpus& corpus, const fs::path& dir, const SnapshotExtras& extras) {
    save_corpus(corpus, dir);
    std::string bytes = manifest_bytes(corpus, extras);
    auto path = dir / "manifests" / (sha256_hex(bytes) + ".json");
    if (!fs::exists(path)) {
        write_file_atomic(path, bytes);
    }
    write_file_atomic(dir / "manifest.json", bytes);
    return path;
}

Corpus load_snapshot(const fs::path& manifest_path, const LabelSchema& schema) {
    json m = json::parse(read_file(manifest_path));
    fs::path dir = manifest_path.parent_path();
    if (dir.filename() == "manifests") {
        dir = dir.parent_path();
    }
    Corpus corpus = ingest(dir / "records.jsonl", schema);
    if (corpus.content_hash() != m.at("corpus_hash").get<std::string>()) {
        fail(ErrorCode::IoError, "records.jsonl does not match manifest corpus hash");
    }
    for (const auto& e : m.at("embeddings")) {
        corpus.attach_embeddings(read_matrix_file(dir / e.at("file").get<std::string>()));
    }
    return corpus;
}

RunLock::RunLock(const fs::path& dir) {
    fs::create_directories(dir);
    auto path = dir / "lock";
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0) {
        fail(ErrorCode::IoError, "cannot open lock file " + path.string());
    }
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd_);
        fd_ = -1;
        fail(ErrorCode::LockHeld, "run directory " + dir.string() + " is locked by another writer");
    }
}

RunLock::~RunLock() {
    if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
}

}  // namespace annotkit
