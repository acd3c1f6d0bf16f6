#pragma once

// Persisted dataset formats: line-delimited JSON run records, the binary
// embedding dump, and the dataset manifest.
//
// Embedding dump layout (all integers unsigned little-endian, no padding):
//
//   "ERUQ" | version:u32
//   per block:
//     id_len:u32 | id bytes (UTF-8) | m1:u32 | m2:u32 | n:u32 | strategy:u8 |
//     m1*m2*n binary32 LE values, row-major, one row per embedding vector
//
// Rows are ordered response-major then layer: (r0,l0), (r0,l1), ..., (r1,l0)...

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eruq/error.hpp"

namespace eruq::data {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

inline constexpr std::array<char, 4> kEmbeddingMagic = {'E', 'R', 'U', 'Q'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class LayerStrategy : std::uint8_t { M1 = 0, M5 = 1, L1 = 2, L5 = 3, Custom = 4 };

inline std::string_view to_string(LayerStrategy s) {
  switch (s) {
    case LayerStrategy::M1: return "M1";
    case LayerStrategy::M5: return "M5";
    case LayerStrategy::L1: return "L1";
    case LayerStrategy::L5: return "L5";
    case LayerStrategy::Custom: return "CUSTOM";
  }
  return "?";
}

inline std::optional<LayerStrategy> strategy_from_code(std::uint8_t code) {
  if (code > static_cast<std::uint8_t>(LayerStrategy::Custom)) return std::nullopt;
  return static_cast<LayerStrategy>(code);
}

inline std::optional<LayerStrategy> parse_strategy(std::string_view name) {
  for (auto s : {LayerStrategy::M1, LayerStrategy::M5, LayerStrategy::L1, LayerStrategy::L5,
                 LayerStrategy::Custom}) {
    if (to_string(s) == name) return s;
  }
  if (name == "custom") return LayerStrategy::Custom;
  return std::nullopt;
}

// Layers per response implied by a strategy tag; nullopt for CUSTOM.
inline std::optional<std::uint32_t> layers_per_response(LayerStrategy s) {
  switch (s) {
    case LayerStrategy::M1:
    case LayerStrategy::L1: return 1;
    case LayerStrategy::M5:
    case LayerStrategy::L5: return 5;
    case LayerStrategy::Custom: return std::nullopt;
  }
  return std::nullopt;
}

struct GenerationSample {
  std::string text;
  std::vector<double> token_logprobs;  // natural log, each <= 0; may be empty
  std::optional<std::uint32_t> cluster_id;
  std::map<std::string, double> external_scores;

  bool operator==(const GenerationSample&) const = default;
};

// m1 responses x m2 layers, each a length-n binary32 vector.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;

  EmbeddingSet(std::uint32_t m1, std::uint32_t m2, std::uint32_t n, LayerStrategy strategy,
               std::vector<float> values)
      : m1_(m1), m2_(m2), n_(n), strategy_(strategy), values_(std::move(values)) {
    if (m1_ == 0 || m2_ == 0 || n_ == 0) {
      throw ValidationError("embedding set dimensions must be positive");
    }
    if (values_.size() != std::size_t{m1_} * m2_ * n_) {
      throw ValidationError("embedding set holds " + std::to_string(values_.size()) +
                            " values, expected m1*m2*n = " +
                            std::to_string(std::size_t{m1_} * m2_ * n_));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i])) {
        throw ValidationError("non-finite embedding component at row " +
                              std::to_string(i / n_) + ", column " + std::to_string(i % n_));
      }
    }
  }

  // Rows in response-major, layer-minor order. All rows must share one length.
  static EmbeddingSet from_rows(std::uint32_t m1, std::uint32_t m2, LayerStrategy strategy,
                                const std::vector<std::vector<float>>& rows) {
    if (rows.size() != std::size_t{m1} * m2) {
      throw ValidationError("vector count " + std::to_string(rows.size()) +
                            " does not equal m1*m2 = " + std::to_string(std::size_t{m1} * m2));
    }
    if (rows.empty()) throw ValidationError("embedding set is empty");
    const auto n = rows.front().size();
    std::vector<float> flat;
    flat.reserve(rows.size() * n);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != n) {
        throw ValidationError("dimension mismatch: row " + std::to_string(r) + " has " +
                              std::to_string(rows[r].size()) + " components, expected " +
                              std::to_string(n));
      }
      flat.insert(flat.end(), rows[r].begin(), rows[r].end());
    }
    return EmbeddingSet(m1, m2, static_cast<std::uint32_t>(n), strategy, std::move(flat));
  }

  std::uint32_t m1() const noexcept { return m1_; }
  std::uint32_t m2() const noexcept { return m2_; }
  std::uint32_t n() const noexcept { return n_; }
  LayerStrategy strategy() const noexcept { return strategy_; }
  std::size_t rows() const noexcept { return std::size_t{m1_} * m2_; }

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values_).subspan(i * n_, n_);
  }
  std::span<const float> row(std::size_t response, std::size_t layer) const {
    return row(response * m2_ + layer);
  }
  std::span<const float> values() const noexcept { return values_; }

  bool operator==(const EmbeddingSet&) const = default;

 private:
  std::uint32_t m1_ = 0, m2_ = 0, n_ = 0;
  LayerStrategy strategy_ = LayerStrategy::Custom;
  std::vector<float> values_;
};

struct RunRecord {
  std::string record_id;
  std::string question;
  std::vector<std::string> references;
  std::string primary_answer;
  std::vector<GenerationSample> samples;
  std::string embedding_ref;  // record_id of the block in the embedding dump
  double temperature = 1.0;
  std::string model_tag;

  bool operator==(const RunRecord&) const = default;
};

struct DatasetManifest {
  std::string dataset_name;
  std::uint64_t record_count = 0;
  std::string embedding_file;  // relative to the manifest's directory
  std::string records_file;
  std::uint32_t format_version = kFormatVersion;

  bool operator==(const DatasetManifest&) const = default;
};

// Throws ValidationError naming the record when an invariant fails.
inline void validate_record(const RunRecord& r) {
  const auto where = [&](const std::string& msg) {
    return ValidationError("record '" + r.record_id + "': " + msg);
  };
  if (r.record_id.empty()) throw ValidationError("record with empty record_id");
  if (r.references.empty()) throw where("empty references");
  if (r.samples.empty()) throw where("no samples");
  if (!(r.temperature > 0.0) || !std::isfinite(r.temperature)) {
    throw where("temperature must be a positive finite number");
  }
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    const auto& s = r.samples[i];
    for (double lp : s.token_logprobs) {
      if (!(lp <= 0.0) || !std::isfinite(lp)) {
        throw where("sample " + std::to_string(i) + " has a token log-probability that is not a finite value <= 0");
      }
    }
    if (s.cluster_id && *s.cluster_id >= r.samples.size()) {
      throw where("sample " + std::to_string(i) + " cluster_id " + std::to_string(*s.cluster_id) +
                  " is not below the sample count");
    }
    for (const auto& [name, v] : s.external_scores) {
      if (!std::isfinite(v)) throw where("external score '" + name + "' is not finite");
    }
  }
}

// ---------------------------------------------------------------------------
// Records (JSON lines)

namespace detail {

inline nlohmann::json sample_to_json(const GenerationSample& s) {
  nlohmann::json j;
  j["text"] = s.text;
  j["token_logprobs"] = s.token_logprobs;
  if (s.cluster_id) j["cluster_id"] = *s.cluster_id;
  j["external_scores"] = nlohmann::json::object();
  for (const auto& [k, v] : s.external_scores) j["external_scores"][k] = v;
  return j;
}

inline nlohmann::json record_to_json(const RunRecord& r) {
  nlohmann::json j;
  j["record_id"] = r.record_id;
  j["question"] = r.question;
  j["references"] = r.references;
  j["primary_answer"] = r.primary_answer;
  j["samples"] = nlohmann::json::array();
  for (const auto& s : r.samples) j["samples"].push_back(sample_to_json(s));
  j["embedding_ref"] = r.embedding_ref;
  j["temperature"] = r.temperature;
  j["model_tag"] = r.model_tag;
  return j;
}

inline void note_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known,
                         const std::string& where, std::vector<std::string>* warnings) {
  if (!warnings) return;
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      warnings->push_back(where + ": unknown field '" + key + "' ignored");
    }
  }
}

inline GenerationSample sample_from_json(const nlohmann::json& j, const std::string& where,
                                         std::vector<std::string>* warnings) {
  if (!j.is_object()) throw FormatError("sample is not an object");
  note_unknown(j, {"text", "token_logprobs", "cluster_id", "external_scores"}, where, warnings);
  GenerationSample s;
  s.text = j.at("text").get<std::string>();
  if (j.contains("token_logprobs")) s.token_logprobs = j.at("token_logprobs").get<std::vector<double>>();
  if (j.contains("cluster_id") && !j.at("cluster_id").is_null()) {
    const auto& c = j.at("cluster_id");
    if (!c.is_number_integer() || c.get<std::int64_t>() < 0 ||
        c.get<std::int64_t>() > std::numeric_limits<std::uint32_t>::max()) {
      throw FormatError("cluster_id must be a non-negative integer");
    }
    s.cluster_id = c.get<std::uint32_t>();
  }
  if (j.contains("external_scores")) {
    for (const auto& [k, v] : j.at("external_scores").items()) s.external_scores[k] = v.get<double>();
  }
  return s;
}

inline RunRecord record_from_json(const nlohmann::json& j, const std::string& where,
                                  std::vector<std::string>* warnings) {
  if (!j.is_object()) throw FormatError("record is not an object");
  note_unknown(j,
               {"record_id", "question", "references", "primary_answer", "samples", "embedding_ref",
                "temperature", "model_tag"},
               where, warnings);
  RunRecord r;
  r.record_id = j.at("record_id").get<std::string>();
  r.question = j.value("question", std::string{});
  r.references = j.at("references").get<std::vector<std::string>>();
  r.primary_answer = j.at("primary_answer").get<std::string>();
  const auto& samples = j.at("samples");
  if (!samples.is_array()) throw FormatError("samples is not an array");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    r.samples.push_back(
        sample_from_json(samples[i], where + " sample " + std::to_string(i), warnings));
  }
  r.embedding_ref = j.value("embedding_ref", r.record_id);
  r.temperature = j.value("temperature", 1.0);
  r.model_tag = j.value("model_tag", std::string{});
  return r;
}

}  // namespace detail

// Parses one JSON line without checking invariants. Throws FormatError.
inline RunRecord parse_record_line(std::string_view line, std::size_t line_no,
                                   std::vector<std::string>* warnings = nullptr) {
  try {
    auto j = nlohmann::json::parse(line);
    return detail::record_from_json(j, "line " + std::to_string(line_no), warnings);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, e.what());
  } catch (const FormatError& e) {
    throw ParseError(line_no, e.what());
  }
}

inline std::size_t write_records(std::span<const RunRecord> records, std::ostream& out) {
  std::set<std::string> seen;
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const auto& r : records) {
    if (!seen.insert(r.record_id).second) {
      throw ValidationError("duplicate record_id '" + r.record_id + "'");
    }
    validate_record(r);
    try {
      lines.push_back(detail::record_to_json(r).dump());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("record '" + r.record_id + "' cannot be encoded: " + e.what());
    }
  }
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw IoError("failed writing records");
  return lines.size();
}

// Blank lines are skipped. Unknown fields are reported through `warnings`.
inline std::vector<RunRecord> read_records(std::istream& in,
                                           std::vector<std::string>* warnings = nullptr) {
  std::vector<RunRecord> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto r = parse_record_line(line, line_no, warnings);
    validate_record(r);
    if (!seen.insert(r.record_id).second) {
      throw ValidationError("duplicate record_id '" + r.record_id + "'");
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Embedding dump

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

// Reads exactly `n` bytes or throws CorruptionError at the current offset.
class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  std::uint64_t offset() const noexcept { return offset_; }

  bool at_end() {
    return in_.peek() == std::char_traits<char>::eof();
  }

  void read(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != n) {
      throw CorruptionError(offset_ + got, std::string("truncated block while reading ") + what);
    }
    offset_ += n;
  }

  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    read(b, 4, what);
    return get_u32(b);
  }

  std::uint8_t u8(const char* what) {
    unsigned char b;
    read(&b, 1, what);
    return b;
  }

  void skip(std::uint64_t n, const char* what) {
    // Read in chunks so truncation is detected without relying on seek semantics.
    char buf[1 << 14];
    while (n > 0) {
      const auto chunk = static_cast<std::size_t>(std::min<std::uint64_t>(n, sizeof buf));
      read(buf, chunk, what);
      n -= chunk;
    }
  }

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

}  // namespace detail

struct EmbeddingBlock {
  std::string record_id;
  EmbeddingSet set;
};

// Location and shape of one block inside a dump.
struct BlockInfo {
  std::string record_id;
  std::uint64_t offset = 0;       // start of the block (id_len field)
  std::uint64_t data_offset = 0;  // start of the float payload
  std::uint32_t m1 = 0, m2 = 0, n = 0;
  std::uint8_t strategy_code = 0;
};

inline constexpr std::uint64_t kHeaderBytes = 8;

inline std::uint64_t block_size_bytes(std::size_t id_bytes, std::uint64_t m1, std::uint64_t m2,
                                      std::uint64_t n) {
  return 4 + id_bytes + 12 + 1 + 4 * m1 * m2 * n;
}

inline std::size_t write_embeddings(std::span<const EmbeddingBlock> blocks, std::ostream& out) {
  std::set<std::string> seen;
  for (const auto& b : blocks) {
    if (!seen.insert(b.record_id).second) {
      throw ValidationError("duplicate embedding block id '" + b.record_id + "'");
    }
    // Sets built through the constructor are already finite; re-check in case
    // a default-constructed (empty) set slipped in.
    if (b.set.rows() == 0) throw ValidationError("empty embedding set for '" + b.record_id + "'");
  }
  std::string header(kEmbeddingMagic.begin(), kEmbeddingMagic.end());
  detail::put_u32(header, kFormatVersion);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  std::string buf;
  for (const auto& b : blocks) {
    const auto& s = b.set;
    buf.clear();
    buf.reserve(block_size_bytes(b.record_id.size(), s.m1(), s.m2(), s.n()));
    detail::put_u32(buf, static_cast<std::uint32_t>(b.record_id.size()));
    buf.append(b.record_id);
    detail::put_u32(buf, s.m1());
    detail::put_u32(buf, s.m2());
    detail::put_u32(buf, s.n());
    buf.push_back(static_cast<char>(s.strategy()));
    for (float v : s.values()) detail::put_u32(buf, std::bit_cast<std::uint32_t>(v));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw IoError("failed writing embeddings");
  return blocks.size();
}

namespace detail {

inline std::uint32_t read_header(ByteReader& rd) {
  std::array<char, 4> magic{};
  try {
    rd.read(magic.data(), 4, "magic");
  } catch (const CorruptionError&) {
    throw FormatError("not an embedding dump: file shorter than the magic bytes");
  }
  if (magic != kEmbeddingMagic) throw FormatError("not an embedding dump: bad magic bytes");
  std::uint32_t version = 0;
  try {
    version = rd.u32("version");
  } catch (const CorruptionError&) {
    throw FormatError("not an embedding dump: missing version");
  }
  if (version != kFormatVersion) {
    throw FormatError("unsupported embedding dump version " + std::to_string(version));
  }
  return version;
}

inline BlockInfo read_block_header(ByteReader& rd) {
  BlockInfo info;
  info.offset = rd.offset();
  const auto id_len = rd.u32("record_id length");
  if (id_len > (1u << 20)) throw CorruptionError(info.offset, "implausible record_id length");
  info.record_id.resize(id_len);
  rd.read(info.record_id.data(), id_len, "record_id");
  info.m1 = rd.u32("m1");
  info.m2 = rd.u32("m2");
  info.n = rd.u32("n");
  info.strategy_code = rd.u8("strategy");
  info.data_offset = rd.offset();
  if (!strategy_from_code(info.strategy_code)) {
    throw CorruptionError(info.data_offset - 1, "unknown strategy code " +
                                                    std::to_string(info.strategy_code));
  }
  return info;
}

inline EmbeddingSet read_payload(ByteReader& rd, const BlockInfo& info) {
  const std::size_t count = std::size_t{info.m1} * info.m2 * info.n;
  std::vector<unsigned char> raw(count * 4);
  rd.read(raw.data(), raw.size(), "embedding values");
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = std::bit_cast<float>(get_u32(&raw[4 * i]));
  try {
    return EmbeddingSet(info.m1, info.m2, info.n, *strategy_from_code(info.strategy_code),
                        std::move(values));
  } catch (const ValidationError& e) {
    throw ValidationError("block '" + info.record_id + "': " + e.what());
  }
}

}  // namespace detail

// Full structural scan. Detects bad magic, truncation anywhere, and duplicate ids.
inline std::vector<BlockInfo> scan_embeddings(std::istream& in) {
  detail::ByteReader rd(in);
  detail::read_header(rd);
  std::vector<BlockInfo> blocks;
  std::set<std::string> seen;
  while (!rd.at_end()) {
    auto info = detail::read_block_header(rd);
    rd.skip(4ull * info.m1 * info.m2 * info.n, "embedding values");
    if (!seen.insert(info.record_id).second) {
      throw CorruptionError(info.offset, "duplicate block id '" + info.record_id + "'");
    }
    blocks.push_back(std::move(info));
  }
  return blocks;
}

// Reads the block at a position found by scan_embeddings. `in` must be seekable.
inline EmbeddingSet read_block(std::istream& in, const BlockInfo& info) {
  in.clear();
  in.seekg(static_cast<std::streamoff>(info.offset));
  if (!in) throw IoError("cannot seek to block '" + info.record_id + "'");
  detail::ByteReader rd(in);
  auto again = detail::read_block_header(rd);
  if (again.record_id != info.record_id) {
    throw CorruptionError(info.offset, "block id changed since the index was built");
  }
  return detail::read_payload(rd, again);
}

// Sequential scan for one record id.
inline EmbeddingSet read_embeddings(std::istream& in, std::string_view record_id) {
  detail::ByteReader rd(in);
  detail::read_header(rd);
  while (!rd.at_end()) {
    auto info = detail::read_block_header(rd);
    if (info.record_id == record_id) return detail::read_payload(rd, info);
    rd.skip(4ull * info.m1 * info.m2 * info.n, "embedding values");
  }
  throw NotFoundError("no embedding block for record '" + std::string(record_id) + "'");
}

// Index-assisted random access over an embedding dump on disk. Not
// thread-safe; open one reader per thread.
class EmbeddingFile {
 public:
  explicit EmbeddingFile(const std::filesystem::path& path)
      : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open embedding file " + path.string());
    blocks_ = scan_embeddings(in_);
    for (std::size_t i = 0; i < blocks_.size(); ++i) by_id_.emplace(blocks_[i].record_id, i);
  }

  const std::vector<BlockInfo>& blocks() const noexcept { return blocks_; }

  const BlockInfo* find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &blocks_[it->second];
  }

  EmbeddingSet read(const std::string& id) {
    const auto* info = find(id);
    if (!info) throw NotFoundError("no embedding block for record '" + id + "'");
    return read_block(in_, *info);
  }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
  std::vector<BlockInfo> blocks_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// ---------------------------------------------------------------------------
// Manifest

inline nlohmann::json to_json(const DatasetManifest& m) {
  return nlohmann::json{{"dataset_name", m.dataset_name},     {"record_count", m.record_count},
                        {"embedding_file", m.embedding_file}, {"records_file", m.records_file},
                        {"format_version", m.format_version}};
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  try {
    DatasetManifest m;
    m.dataset_name = j.at("dataset_name").get<std::string>();
    m.record_count = j.at("record_count").get<std::uint64_t>();
    m.embedding_file = j.at("embedding_file").get<std::string>();
    m.records_file = j.at("records_file").get<std::string>();
    m.format_version = j.value("format_version", kFormatVersion);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  try {
    return manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << to_json(m).dump(2) << '\n';
  if (!out) throw IoError("failed writing manifest " + path.string());
}

// A manifest together with the directory its relative paths resolve against.
struct Dataset {
  DatasetManifest manifest;
  std::filesystem::path root;

  static Dataset open(const std::filesystem::path& manifest_path) {
    return {load_manifest(manifest_path), manifest_path.parent_path()};
  }
  std::filesystem::path records_path() const { return root / manifest.records_file; }
  std::filesystem::path embedding_path() const { return root / manifest.embedding_file; }
};

// ---------------------------------------------------------------------------
// Validation

struct RecordStatus {
  std::string record_id;  // "line N" when the id could not be parsed
  std::vector<std::string> failures;
  bool ok() const noexcept { return failures.empty(); }
};

struct ValidationReport {
  std::vector<std::string> dataset_failures;
  std::vector<RecordStatus> records;

  std::size_t failure_count() const {
    std::size_t n = dataset_failures.size();
    for (const auto& r : records) n += r.failures.size();
    return n;
  }
  bool valid() const { return failure_count() == 0; }
};

inline ValidationReport validate_dataset(const Dataset& ds) {
  ValidationReport report;
  const auto& m = ds.manifest;
  if (m.format_version != kFormatVersion) {
    report.dataset_failures.push_back("unsupported format_version " +
                                      std::to_string(m.format_version));
  }

  std::vector<std::pair<std::size_t, RunRecord>> records;  // (status index, record)
  std::size_t record_lines = 0;
  {
    std::ifstream in(ds.records_path());
    if (!in) {
      report.dataset_failures.push_back("cannot open records file " + ds.records_path().string());
    } else {
      std::set<std::string> seen;
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++record_lines;
        RecordStatus status;
        try {
          auto r = parse_record_line(line, line_no);
          status.record_id = r.record_id;
          try {
            validate_record(r);
          } catch (const ValidationError& e) {
            status.failures.push_back(e.what());
          }
          if (!seen.insert(r.record_id).second) {
            status.failures.push_back("duplicate record_id '" + r.record_id + "'");
          }
          records.emplace_back(report.records.size(), std::move(r));
        } catch (const FormatError& e) {
          status.record_id = "line " + std::to_string(line_no);
          status.failures.push_back(e.what());
        }
        report.records.push_back(std::move(status));
      }
    }
  }
  if (record_lines != m.record_count) {
    report.dataset_failures.push_back("count mismatch: manifest declares " +
                                      std::to_string(m.record_count) + " records, records file has " +
                                      std::to_string(record_lines));
  }

  std::optional<EmbeddingFile> emb;
  try {
    emb.emplace(ds.embedding_path());
  } catch (const Error& e) {
    report.dataset_failures.push_back(std::string("embedding file: ") + e.what());
  }
  if (!emb) return report;
  if (emb->blocks().size() != m.record_count) {
    report.dataset_failures.push_back("count mismatch: manifest declares " +
                                      std::to_string(m.record_count) + " records, embedding file has " +
                                      std::to_string(emb->blocks().size()) + " blocks");
  }

  for (auto& [idx, r] : records) {
    auto& status = report.records[idx];
    const auto* info = emb->find(r.embedding_ref);
    if (!info) {
      status.failures.push_back("embedding_ref '" + r.embedding_ref + "' not found");
      continue;
    }
    try {
      auto set = emb->read(r.embedding_ref);
      if (auto layers = layers_per_response(set.strategy())) {
        if (set.m1() != r.samples.size()) {
          status.failures.push_back("sample/embedding count mismatch: " +
                                    std::to_string(r.samples.size()) + " samples, block m1=" +
                                    std::to_string(set.m1()));
        }
        if (set.m2() != *layers) {
          status.failures.push_back("layer count mismatch: strategy " +
                                    std::string(to_string(set.strategy())) + " implies m2=" +
                                    std::to_string(*layers) + ", block m2=" + std::to_string(set.m2()));
        }
      }
    } catch (const Error& e) {
      status.failures.push_back(e.what());
    }
  }
  return report;
}

}  // namespace eruq::data
