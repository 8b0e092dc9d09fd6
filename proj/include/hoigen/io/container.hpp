#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hoigen/core/math.hpp"

namespace hoigen::io {

/// Container file layout version. Readers reject any other value.
inline constexpr std::int64_t kContainerVersion = 1;

using Token = std::variant<std::int64_t, double, std::string>;

/// A tagged, self-describing list of typed values. Each module owns the schema of its chunk tags.
struct Chunk {
  std::string tag;
  std::vector<Token> tokens;
  std::vector<std::size_t> line_breaks;  ///< token counts after which the text form starts a new line
};

class ChunkWriter {
 public:
  explicit ChunkWriter(std::string tag) { chunk_.tag = std::move(tag); }

  ChunkWriter& i64(std::int64_t v) { chunk_.tokens.emplace_back(v); return *this; }
  ChunkWriter& f64(double v) { chunk_.tokens.emplace_back(v); return *this; }
  ChunkWriter& str(std::string v) { chunk_.tokens.emplace_back(std::move(v)); return *this; }
  ChunkWriter& vec3(const Vec3& v) { return f64(v.x()).f64(v.y()).f64(v.z()); }
  /// Row-major.
  ChunkWriter& mat3(const Mat3& m);
  ChunkWriter& newline() { chunk_.line_breaks.push_back(chunk_.tokens.size()); return *this; }

  Chunk finish() && { return std::move(chunk_); }

 private:
  Chunk chunk_;
};

/// Sequential typed reader; any type or length mismatch throws FormatError naming the chunk.
class ChunkReader {
 public:
  explicit ChunkReader(const Chunk& chunk) : chunk_(chunk) {}

  std::int64_t i64();
  double f64();
  std::string str();
  Vec3 vec3();
  Mat3 mat3();
  /// Reads a count and checks it lies in [0, max].
  std::size_t count(std::size_t max);
  bool done() const { return pos_ == chunk_.tokens.size(); }
  void expect_done() const;

 private:
  const Token& next();
  const Chunk& chunk_;
  std::size_t pos_ = 0;
};

struct Container {
  std::vector<Chunk> chunks;

  void add(Chunk c) { chunks.push_back(std::move(c)); }
  const Chunk* find(std::string_view tag) const;
  const Chunk& require(std::string_view tag) const;
  std::vector<const Chunk*> find_all(std::string_view tag) const;
};

enum class Encoding { binary, text };

/// Binary form: "HOIC", u32 version, u32 chunk count, then per chunk a length-prefixed tag,
/// u64 token count and typed tokens (u8 type + little-endian payload).
/// Text form: "HOIC-TEXT <version>" followed by `chunk "<tag>" <count> ... end` blocks.
std::string encode(const Container& c, Encoding encoding);
Container decode(std::string_view bytes);

void write_file(const std::filesystem::path& path, const Container& c, Encoding encoding);
void write_bytes(const std::filesystem::path& path, std::string_view bytes);
std::string read_bytes(const std::filesystem::path& path);
Container read_file(const std::filesystem::path& path);

/// Encoding chosen from the file extension: ".txt" and ".hoit" select text, everything else binary.
Encoding encoding_for(const std::filesystem::path& path);

}  // namespace hoigen::io
