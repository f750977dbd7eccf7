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

#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace annotkit {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TextRecord {
    std::string record_id;
    std::string text;
    std::optional<std::string> gold_label;
    std::optional<std::string> human_label;
    std::optional<std::string> source;

    bool operator==(const TextRecord&) const = default;
};

struct LabelSchema {
    std::string task_name;
    std::vector<std::string> classes;
    std::string open_delimiter = "<";
    std::string close_delimiter = ">";

    /// Throws PreconditionViolation when the schema is unusable.
    void validate() const;

    /// Canonical class name for a label after trim + case fold, if any.
    std::optional<std::string> match(std::string_view label) const;

    /// Like match() but throws UnknownLabel.
    std::string canonical(std::string_view label) const;
};

/// Row-per-record dense vectors plus where they came from.
struct EmbeddingMatrix {
    std::vector<std::string> record_ids;
    RowMatrix vectors;
    std::string model_name;
    bool reduced = false;

    std::size_t rows() const { return static_cast<std::size_t>(vectors.rows()); }
    std::size_t dimension() const { return static_cast<std::size_t>(vectors.cols()); }

    /// Row index for an id; linear scan, fine for per-call lookups on pools.
    std::optional<std::size_t> row_of(std::string_view record_id) const;

    /// Throws DimensionMismatch / NonFinite on broken invariants.
    void validate() const;
};

struct EmbeddingVersion {
    std::string model_name;
    bool reduced = false;
    int version = 1;
    std::size_t dimension = 0;
};

/// In-memory corpus: records in ingest order plus versioned embeddings.
class Corpus {
public:
    explicit Corpus(LabelSchema schema);

    const LabelSchema& schema() const { return schema_; }
    const std::vector<TextRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

    /// Rejects duplicate ids and labels outside the schema. Labels are stored
    /// in their canonical class spelling.
    void add(TextRecord record);

    bool contains(std::string_view record_id) const;
    std::optional<std::size_t> index_of(std::string_view record_id) const;
    const TextRecord& record(std::string_view record_id) const;

    /// Stored vectors are rounded to float32, the on-disk precision, so a
    /// fetch returns exactly what a reload would.
    void attach_embeddings(EmbeddingMatrix matrix);

    bool has_embeddings(std::string_view model_name, bool reduced) const;
    /// Latest version for (model_name, reduced).
    const EmbeddingMatrix& embeddings(std::string_view model_name, bool reduced) const;
    const EmbeddingMatrix& embeddings(std::string_view model_name, bool reduced, int version) const;
    std::vector<EmbeddingVersion> embedding_versions() const;
    Eigen::RowVectorXd fetch(std::string_view record_id, std::string_view model_name,
                             bool reduced) const;

    /// sha256 over the canonical record serialization.
    std::string content_hash() const;

private:
    using Key = std::pair<std::string, bool>;

    LabelSchema schema_;
    std::vector<TextRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
    std::map<Key, std::vector<EmbeddingMatrix>> embeddings_;
};

/// Loads JSONL ({"id","text","gold_label"?,"human_label"?,"source"?}) or CSV
/// with a header row. Format is chosen by extension (.csv vs anything else).
Corpus ingest(const std::filesystem::path& path, const LabelSchema& schema);

/// One JSONL line, newline included.
std::string record_to_json_line(const TextRecord& record);

// Matrix file: 16-byte magic, u64 LE header length, JSON header, f32 LE rows.
inline constexpr std::string_view kMatrixMagic = "ANNOTKIT-MATRIX1";

void write_matrix_file(const std::filesystem::path& path, const EmbeddingMatrix& matrix,
                       int version = 1);
EmbeddingMatrix read_matrix_file(const std::filesystem::path& path, int* version = nullptr);
std::string matrix_file_name(const EmbeddingVersion& version);

/// Writes records.jsonl and embeddings/ under `dir`.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir, const LabelSchema& schema);

struct SnapshotExtras {
    std::vector<std::string> pool_ids;
    std::string config_hash;
    /// Artifact name → sha256 of its bytes.
    std::map<std::string, std::string> artifacts;
    std::string stage;
};

/// Saves the corpus and writes a content-addressed manifest under
/// `dir/manifests/<sha256>.json` (also copied to `dir/manifest.json`).
/// Returns the content-addressed path.
std::filesystem::path snapshot(const Corpus& corpus, const std::filesystem::path& dir,
                               const SnapshotExtras& extras = {});
std::string manifest_bytes(const Corpus& corpus, const SnapshotExtras& extras);

/// Reloads the corpus referenced by a manifest and verifies its hash.
Corpus load_snapshot(const std::filesystem::path& manifest_path, const LabelSchema& schema);

/// Advisory exclusive lock on `dir/lock` (flock). Throws LockHeld.
class RunLock {
public:
    explicit RunLock(const std::filesystem::path& dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    int fd_ = -1;
};

}  // namespace annotkit
