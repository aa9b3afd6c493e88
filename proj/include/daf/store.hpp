#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>
#include <zlib.h>

#include "daf/binio.hpp"
#include "daf/cascade.hpp"
#include "daf/data.hpp"
#include "daf/error.hpp"
#include "daf/matrix.hpp"

namespace daf {

// ---------------------------------------------------------------------------
// Model files ("DAF1")
//
//   "DAF1" | u32 version | u64 payload_len | payload | u32 crc32(payload)
//
//   payload:
//     u32 json_len | config snapshot JSON
//     u64 base_dim
//     cascade shape: i32 n_layers | i32 n_random | i32 n_completely_random
//                    i32 cv_folds | u8 cross_fit
//     forest params: i32 n_trees | i32 max_depth | i32 min_samples_split
//                    i32 candidate_features | u8 bootstrap
//     u32 n_layers
//     per layer:  u32 n_forests
//     per forest: u8 kind | u8 has_val_acc | f64 val_accuracy
//                 u64 feature_dim | u32 n_trees
//     per tree:   u32 n_nodes
//     per node:   i32 feature | f64 threshold | i32 left | i32 right
//                 u64 count_real | u64 count_fake
//
// All integers little-endian. Serialization is canonical: saving a freshly
// loaded model reproduces the file byte for byte.
// ---------------------------------------------------------------------------

inline constexpr char kModelMagic[4] = {'D', 'A', 'F', '1'};
inline constexpr std::uint32_t kModelVersion = 1;

/// A trained model plus the configuration snapshot it was built under.
/// The snapshot is opaque JSON at this layer; the config module owns its
/// schema.
struct ModelBundle {
  DeepForestModel model;
  nlohmann::ordered_json config_snapshot;
};

namespace detail {

inline void write_forest(ByteWriter& w, const Forest& forest) {
  w.u8(static_cast<std::uint8_t>(forest.kind));
  w.u8(forest.has_val_accuracy() ? 1 : 0);
  w.f64(forest.has_val_accuracy() ? forest.val_accuracy : 0.0);
  w.u64(forest.feature_dim);
  w.u32(static_cast<std::uint32_t>(forest.trees.size()));
  for (const Tree& tree : forest.trees) {
    w.u32(static_cast<std::uint32_t>(tree.size()));
    for (const TreeNode& node : tree) {
      w.i32(node.feature);
      w.f64(node.threshold);
      w.i32(node.left);
      w.i32(node.right);
      w.u64(node.counts[0]);
      w.u64(node.counts[1]);
    }
  }
}

inline Forest read_forest(ByteReader& r) {
  Forest forest;
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FormatError("unknown forest kind");
  forest.kind = static_cast<ForestKind>(kind);
  const bool has_acc = r.u8() != 0;
  const double acc = r.f64();
  forest.val_accuracy = has_acc ? acc : -1.0;
  forest.feature_dim = r.u64();
  const std::uint32_t n_trees = r.u32();
  forest.trees.resize(n_trees);
  for (Tree& tree : forest.trees) {
    const std::uint32_t n_nodes = r.u32();
    tree.resize(n_nodes);
    for (TreeNode& node : tree) {
      node.feature = r.i32();
      node.threshold = r.f64();
      node.left = r.i32();
      node.right = r.i32();
      node.counts[0] = r.u64();
      node.counts[1] = r.u64();
    }
  }
  return forest;
}

inline std::uint32_t payload_crc(const std::vector<std::uint8_t>& payload) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, payload.data(), static_cast<uInt>(payload.size())));
}

inline void write_cascade_config(ByteWriter& w, const CascadeConfig& cfg) {
  w.i32(cfg.n_layers);
  w.i32(cfg.n_random);
  w.i32(cfg.n_completely_random);
  w.i32(cfg.cv_folds);
  w.u8(cfg.cross_fit ? 1 : 0);
  w.i32(cfg.forest.n_trees);
  w.i32(cfg.forest.max_depth);
  w.i32(cfg.forest.min_samples_split);
  w.i32(cfg.forest.candidate_features);
  w.u8(cfg.forest.bootstrap ? 1 : 0);
}

inline CascadeConfig read_cascade_config(ByteReader& r) {
  CascadeConfig cfg;
  cfg.n_layers = r.i32();
  cfg.n_random = r.i32();
  cfg.n_completely_random = r.i32();
  cfg.cv_folds = r.i32();
  cfg.cross_fit = r.u8() != 0;
  cfg.forest.n_trees = r.i32();
  cfg.forest.max_depth = r.i32();
  cfg.forest.min_samples_split = r.i32();
  cfg.forest.candidate_features = r.i32();
  cfg.forest.bootstrap = r.u8() != 0;
  return cfg;
}

}  // namespace detail

inline void save_model(const ModelBundle& bundle, const std::string& path) {
  ByteWriter payload;
  const std::string config_text = bundle.config_snapshot.dump();
  payload.u32(static_cast<std::uint32_t>(config_text.size()));
  payload.raw(config_text.data(), config_text.size());
  payload.u64(bundle.model.base_dim);
  detail::write_cascade_config(payload, bundle.model.config);
  payload.u32(static_cast<std::uint32_t>(bundle.model.layers.size()));
  for (const CascadeLayer& layer : bundle.model.layers) {
    payload.u32(static_cast<std::uint32_t>(layer.forests.size()));
    for (const Forest& forest : layer.forests) {
      detail::write_forest(payload, forest);
    }
  }

  ByteWriter file;
  file.raw(kModelMagic, 4);
  file.u32(kModelVersion);
  file.u64(payload.bytes().size());
  file.raw(payload.bytes().data(), payload.bytes().size());
  file.u32(detail::payload_crc(payload.bytes()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(file.bytes().data()),
            static_cast<std::streamsize>(file.bytes().size()));
  if (!out) throw IoError("write failed: " + path);
}

inline ModelBundle load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

  ByteReader header(bytes.data(), bytes.size());
  if (header.str(4) != std::string(kModelMagic, 4)) {
    throw FormatError("not a model file (bad magic): " + path);
  }
  const std::uint32_t version = header.u32();
  if (version != kModelVersion) {
    throw VersionError("unsupported model version " + std::to_string(version) +
                       " (supported: " + std::to_string(kModelVersion) + ")");
  }
  const std::uint64_t payload_len = header.u64();
  if (header.remaining() != payload_len + 4) {
    throw FormatError("model file size mismatch: " + path);
  }
  const std::uint8_t* payload = bytes.data() + 16;
  const std::uint32_t stored_crc =
      ByteReader(payload + payload_len, 4).u32();
  const std::uint32_t computed_crc = static_cast<std::uint32_t>(
      ::crc32(0L, payload, static_cast<uInt>(payload_len)));
  if (stored_crc != computed_crc) {
    throw FormatError("model checksum mismatch: " + path);
  }

  ByteReader r(payload, payload_len);
  ModelBundle bundle;
  const std::uint32_t json_len = r.u32();
  const std::string config_text = r.str(json_len);
  try {
    bundle.config_snapshot = nlohmann::ordered_json::parse(config_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad config snapshot: ") + e.what());
  }
  bundle.model.base_dim = r.u64();
  bundle.model.config = detail::read_cascade_config(r);
  const std::uint32_t n_layers = r.u32();
  bundle.model.layers.resize(n_layers);
  for (CascadeLayer& layer : bundle.model.layers) {
    const std::uint32_t n_forests = r.u32();
    layer.forests.reserve(n_forests);
    for (std::uint32_t f = 0; f < n_forests; ++f) {
      layer.forests.push_back(detail::read_forest(r));
    }
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes in model payload");
  return bundle;
}

/// Human-readable description of a stored model.
inline nlohmann::ordered_json model_summary(const ModelBundle& bundle) {
  nlohmann::ordered_json j;
  j["base_dim"] = bundle.model.base_dim;
  j["layers"] = bundle.model.layers.size();
  nlohmann::ordered_json layer_list = nlohmann::ordered_json::array();
  for (const CascadeLayer& layer : bundle.model.layers) {
    nlohmann::ordered_json forests = nlohmann::ordered_json::array();
    for (const Forest& forest : layer.forests) {
      nlohmann::ordered_json fj;
      fj["kind"] = forest.kind == ForestKind::random ? "random" : "completely_random";
      fj["trees"] = forest.trees.size();
      if (forest.has_val_accuracy()) {
        fj["val_accuracy"] = forest.val_accuracy;
      } else {
        fj["val_accuracy"] = nullptr;
      }
      forests.push_back(fj);
    }
    layer_list.push_back(forests);
  }
  j["forests"] = layer_list;
  j["config"] = bundle.config_snapshot;
  return j;
}

// ---------------------------------------------------------------------------
// Feature caches ("DAFC")
//
//   "DAFC" | u32 version | u64 n | u64 d
//   u8 labels[n]
//   f32 values[n * d]   (row-major, little-endian)
//   u64 source manifest digest (FNV-1a of the manifest bytes)
//
// Rows are fixed-size records, so subset reads seek straight to the
// requested rows and never map the whole file.
// ---------------------------------------------------------------------------

inline constexpr char kCacheMagic[4] = {'D', 'A', 'F', 'C'};
inline constexpr std::uint32_t kCacheVersion = 1;

namespace detail {

inline constexpr std::size_t kCacheHeaderSize = 4 + 4 + 8 + 8;

inline std::uint64_t cache_file_size(std::uint64_t n, std::uint64_t d) {
  return kCacheHeaderSize + n + 4 * n * d + 8;
}

}  // namespace detail

/// Streaming writer: rows are appended as they are extracted; the header
/// and label column are patched on close, so the row count only has to be
/// known by then.
class CacheWriter {
 public:
  CacheWriter(const std::string& path, std::size_t dim, std::uint64_t manifest_digest)
      : path_(path), dim_(dim), digest_(manifest_digest), expected_rows_(0) {}

  /// expected_rows reserves label space up front; fewer appended rows are
  /// fine (the file is compacted on close), more are not.
  void open(std::size_t expected_rows) {
    expected_rows_ = expected_rows;
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot open cache for writing: " + path_);
    // Placeholder header + label column; rewritten on close.
    ByteWriter header;
    header.raw(kCacheMagic, 4);
    header.u32(kCacheVersion);
    header.u64(0);
    header.u64(dim_);
    out_.write(reinterpret_cast<const char*>(header.bytes().data()),
               static_cast<std::streamsize>(header.bytes().size()));
    const std::vector<char> zeros(expected_rows_, 0);
    out_.write(zeros.data(), static_cast<std::streamsize>(zeros.size()));
  }

  void append_row(int label, std::span<const double> row) {
    if (row.size() != dim_) throw DimensionMismatch("cache row dim mismatch");
    if (label != 0 && label != 1) throw InvalidSpec("labels must be 0 or 1");
    if (labels_.size() >= expected_rows_) {
      throw InvalidCount("more rows appended than reserved");
    }
    labels_.push_back(static_cast<std::uint8_t>(label));
    ByteWriter w;
    for (double v : row) w.f32(static_cast<float>(v));
    out_.write(reinterpret_cast<const char*>(w.bytes().data()),
               static_cast<std::streamsize>(w.bytes().size()));
    if (!out_) throw IoError("cache write failed: " + path_);
  }

  std::size_t rows_written() const { return labels_.size(); }

  void close() {
    const std::uint64_t n = labels_.size();
    ByteWriter tail;
    tail.u64(digest_);
    out_.write(reinterpret_cast<const char*>(tail.bytes().data()), 8);

    ByteWriter header;
    header.raw(kCacheMagic, 4);
    header.u32(kCacheVersion);
    header.u64(n);
    header.u64(dim_);
    out_.seekp(0);
    out_.write(reinterpret_cast<const char*>(header.bytes().data()),
               static_cast<std::streamsize>(header.bytes().size()));
    out_.write(reinterpret_cast<const char*>(labels_.data()),
               static_cast<std::streamsize>(labels_.size()));
    out_.close();
    if (n < expected_rows_) {
      // Fewer rows than reserved: drop the slack between the label column
      // and the first row by rewriting once.
      compact(n);
    }
  }

 private:
  void compact(std::uint64_t n) {
    std::ifstream in(path_, std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    in.close();
    const std::size_t gap = expected_rows_ - static_cast<std::size_t>(n);
    const std::size_t keep = detail::kCacheHeaderSize + static_cast<std::size_t>(n);
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(keep));
    out.write(reinterpret_cast<const char*>(bytes.data() + keep + gap),
              static_cast<std::streamsize>(bytes.size() - keep - gap));
  }

  std::string path_;
  std::size_t dim_;
  std::uint64_t digest_;
  std::size_t expected_rows_;
  std::vector<std::uint8_t> labels_;
  std::ofstream out_;
};

/// One-shot cache write of an in-memory matrix.
inline void write_cache(const Matrix& rows, const std::vector<int>& labels,
                        const std::string& path, std::uint64_t manifest_digest = 0) {
  if (rows.rows() != labels.size()) throw LengthMismatch("write_cache: |X| != |y|");
  CacheWriter writer(path, rows.cols(), manifest_digest);
  writer.open(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    writer.append_row(labels[r], std::span<const double>(rows.row(r), rows.cols()));
  }
  writer.close();
}

/// Random-access cache reader. Subset loads seek to the requested rows;
/// memory use is proportional to the subset.
class CacheReader {
 public:
  explicit CacheReader(const std::string& path) : path_(path) {
    in_.open(path, std::ios::binary);
    if (!in_) throw IoError("cannot open cache file: " + path);
    in_.seekg(0, std::ios::end);
    const std::uint64_t file_size = static_cast<std::uint64_t>(in_.tellg());
    in_.seekg(0);

    std::uint8_t header_bytes[detail::kCacheHeaderSize];
    if (file_size < detail::kCacheHeaderSize) {
      throw FormatError("cache file too small: " + path);
    }
    in_.read(reinterpret_cast<char*>(header_bytes), detail::kCacheHeaderSize);
    ByteReader header(header_bytes, detail::kCacheHeaderSize);
    if (header.str(4) != std::string(kCacheMagic, 4)) {
      throw FormatError("not a feature cache (bad magic): " + path);
    }
    const std::uint32_t version = header.u32();
    if (version != kCacheVersion) {
      throw VersionError("unsupported cache version " + std::to_string(version) +
                         " (supported: " + std::to_string(kCacheVersion) + ")");
    }
    n_ = header.u64();
    dim_ = header.u64();
    if (detail::cache_file_size(n_, dim_) != file_size) {
      throw FormatError("cache size does not match header arithmetic: " + path);
    }

    labels_.resize(n_);
    std::vector<std::uint8_t> raw(n_);
    in_.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n_));
    for (std::size_t i = 0; i < n_; ++i) {
      if (raw[i] > 1) throw FormatError("cache label outside {0,1}: " + path);
      labels_[i] = raw[i];
    }

    in_.seekg(-8, std::ios::end);
    std::uint8_t digest_bytes[8];
    in_.read(reinterpret_cast<char*>(digest_bytes), 8);
    digest_ = ByteReader(digest_bytes, 8).u64();
  }

  std::size_t rows() const { return n_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t manifest_digest() const { return digest_; }
  const std::vector<int>& labels() const { return labels_; }

  Matrix read_rows(std::span<const std::size_t> indices, ResidencyAccounting* acct = nullptr) {
    Matrix out(indices.size(), dim_, acct);
    std::vector<std::uint8_t> row_bytes(4 * dim_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const std::size_t row = indices[i];
      if (row >= n_) throw IndexOutOfRange("cache row index out of range");
      const std::uint64_t offset = detail::kCacheHeaderSize + n_ +
                                   4ull * static_cast<std::uint64_t>(row) * dim_;
      in_.seekg(static_cast<std::streamoff>(offset));
      in_.read(reinterpret_cast<char*>(row_bytes.data()),
               static_cast<std::streamsize>(row_bytes.size()));
      if (!in_) throw IoError("cache read failed: " + path_);
      ByteReader r(row_bytes.data(), row_bytes.size());
      double* dst = out.row(i);
      for (std::size_t c = 0; c < dim_; ++c) dst[c] = static_cast<double>(r.f32());
    }
    return out;
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::uint64_t n_ = 0;
  std::uint64_t dim_ = 0;
  std::uint64_t digest_ = 0;
  std::vector<int> labels_;
};

/// Spec-shaped convenience: read a subset (or everything) of a cache.
inline Matrix read_cache(const std::string& path, std::span<const std::size_t> indices,
                         ResidencyAccounting* acct = nullptr) {
  CacheReader reader(path);
  return reader.read_rows(indices, acct);
}

/// Training data source backed by a cache file on disk.
class CacheFileSource : public DataSource {
 public:
  explicit CacheFileSource(const std::string& path) : reader_(path) {}

  std::size_t size() const override { return reader_.rows(); }
  std::size_t dim() const override { return reader_.dim(); }
  const std::vector<int>& labels() const override { return reader_.labels(); }

  Matrix load_rows(std::span<const std::size_t> indices, ResidencyAccounting* acct,
                   bool /*for_training*/) override {
    return reader_.read_rows(indices, acct);
  }

 private:
  CacheReader reader_;
};

}  // namespace daf
