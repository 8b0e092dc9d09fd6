#include "hoigen/io/container.hpp"

#include <bit>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hoigen/core/error.hpp"

namespace hoigen::io {
namespace {

constexpr char kMagic[4] = {'H', 'O', 'I', 'C'};
constexpr std::string_view kTextMagic = "HOIC-TEXT";
enum : std::uint8_t { kInt = 0, kFloat = 1, kString = 2 };

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class ByteCursor {
 public:
  explicit ByteCursor(std::string_view b) : bytes_(b) {}
  std::uint64_t get(int n) {
    if (pos_ + static_cast<std::size_t>(n) > bytes_.size()) throw FormatError("container: truncated binary data");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += n;
    return v;
  }
  std::string get_bytes(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw FormatError("container: truncated binary data");
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s.find_first_of(".eEnNiI") == std::string::npos) s += ".0";
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case ' ': out += "\\s"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  out += '"';
  return out;
}

std::string unquote(std::string_view tok) {
  if (tok.size() < 2 || tok.front() != '"' || tok.back() != '"') throw FormatError("container: malformed string token");
  std::string out;
  for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
    char c = tok[i];
    if (c != '\\') {
      out.push_back(c);
      continue;
    }
    if (++i + 1 > tok.size() - 1) throw FormatError("container: dangling escape in string token");
    switch (tok[i]) {
      case '"': out.push_back('"'); break;
      case '\\': out.push_back('\\'); break;
      case 's': out.push_back(' '); break;
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      default: throw FormatError("container: unknown escape in string token");
    }
  }
  return out;
}

Token parse_text_token(const std::string& tok) {
  if (!tok.empty() && tok.front() == '"') return unquote(tok);
  if (tok.find_first_of(".eEnNiI") != std::string::npos) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) throw FormatError("container: bad float token '" + tok + "'");
    return v;
  }
  std::int64_t v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw FormatError("container: bad integer token '" + tok + "'");
  return v;
}

std::string encode_binary(const Container& c) {
  std::string out(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(kContainerVersion));
  put_u32(out, static_cast<std::uint32_t>(c.chunks.size()));
  for (const auto& ch : c.chunks) {
    put_u32(out, static_cast<std::uint32_t>(ch.tag.size()));
    out += ch.tag;
    put_u64(out, ch.tokens.size());
    for (const auto& t : ch.tokens) {
      if (const auto* i = std::get_if<std::int64_t>(&t)) {
        out.push_back(static_cast<char>(kInt));
        put_u64(out, static_cast<std::uint64_t>(*i));
      } else if (const auto* d = std::get_if<double>(&t)) {
        out.push_back(static_cast<char>(kFloat));
        put_u64(out, std::bit_cast<std::uint64_t>(*d));
      } else {
        const auto& s = std::get<std::string>(t);
        out.push_back(static_cast<char>(kString));
        put_u32(out, static_cast<std::uint32_t>(s.size()));
        out += s;
      }
    }
  }
  return out;
}

Container decode_binary(std::string_view bytes) {
  ByteCursor cur(bytes);
  cur.get_bytes(4);
  const auto version = static_cast<std::int64_t>(cur.get(4));
  if (version != kContainerVersion)
    throw FormatError("container: unsupported binary version " + std::to_string(version));
  const auto n_chunks = cur.get(4);
  Container c;
  for (std::uint64_t k = 0; k < n_chunks; ++k) {
    Chunk ch;
    ch.tag = cur.get_bytes(cur.get(4));
    const auto n_tokens = cur.get(8);
    // Every token occupies at least 5 bytes.
    if (n_tokens > cur.remaining() / 5 + 1) throw FormatError("container: token count exceeds file size");
    ch.tokens.reserve(n_tokens);
    for (std::uint64_t i = 0; i < n_tokens; ++i) {
      switch (cur.get(1)) {
        case kInt: ch.tokens.emplace_back(static_cast<std::int64_t>(cur.get(8))); break;
        case kFloat: ch.tokens.emplace_back(std::bit_cast<double>(cur.get(8))); break;
        case kString: ch.tokens.emplace_back(cur.get_bytes(cur.get(4))); break;
        default: throw FormatError("container: unknown token type in chunk '" + ch.tag + "'");
      }
    }
    c.chunks.push_back(std::move(ch));
  }
  if (!cur.at_end()) throw FormatError("container: trailing bytes after last chunk");
  return c;
}

std::string encode_text(const Container& c) {
  std::string out = std::string(kTextMagic) + " " + std::to_string(kContainerVersion) + "\n";
  for (const auto& ch : c.chunks) {
    out += "chunk " + quote(ch.tag) + " " + std::to_string(ch.tokens.size()) + "\n";
    std::size_t brk = 0;
    bool line_start = true;
    for (std::size_t i = 0; i < ch.tokens.size(); ++i) {
      if (!line_start) out.push_back(' ');
      const auto& t = ch.tokens[i];
      if (const auto* iv = std::get_if<std::int64_t>(&t))
        out += std::to_string(*iv);
      else if (const auto* d = std::get_if<double>(&t))
        out += format_double(*d);
      else
        out += quote(std::get<std::string>(t));
      line_start = false;
      while (brk < ch.line_breaks.size() && ch.line_breaks[brk] <= i + 1) {
        if (ch.line_breaks[brk] == i + 1 && !line_start) {
          out.push_back('\n');
          line_start = true;
        }
        ++brk;
      }
    }
    if (!line_start) out.push_back('\n');
    out += "end\n";
  }
  return out;
}

Container decode_text(std::string_view bytes) {
  std::istringstream in{std::string(bytes)};
  std::string tok;
  in >> tok;
  std::int64_t version = -1;
  std::string vtok;
  in >> vtok;
  try {
    version = std::stoll(vtok);
  } catch (...) {
    throw FormatError("container: malformed text header");
  }
  if (version != kContainerVersion) throw FormatError("container: unsupported text version " + vtok);
  Container c;
  while (in >> tok) {
    if (tok != "chunk") throw FormatError("container: expected 'chunk', found '" + tok + "'");
    Chunk ch;
    std::string tag_tok, count_tok;
    if (!(in >> tag_tok >> count_tok)) throw FormatError("container: truncated chunk header");
    ch.tag = unquote(tag_tok);
    const Token count = parse_text_token(count_tok);
    if (!std::holds_alternative<std::int64_t>(count) || std::get<std::int64_t>(count) < 0)
      throw FormatError("container: bad token count for chunk '" + ch.tag + "'");
    const auto n = std::get<std::int64_t>(count);
    for (std::int64_t i = 0; i < n; ++i) {
      if (!(in >> tok)) throw FormatError("container: truncated chunk '" + ch.tag + "'");
      ch.tokens.push_back(parse_text_token(tok));
    }
    if (!(in >> tok) || tok != "end") throw FormatError("container: missing 'end' for chunk '" + ch.tag + "'");
    c.chunks.push_back(std::move(ch));
  }
  return c;
}

}  // namespace

ChunkWriter& ChunkWriter::mat3(const Mat3& m) {
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) f64(m(r, k));
  return *this;
}

const Token& ChunkReader::next() {
  if (pos_ >= chunk_.tokens.size()) throw FormatError("chunk '" + chunk_.tag + "': unexpected end of data");
  return chunk_.tokens[pos_++];
}

std::int64_t ChunkReader::i64() {
  const auto& t = next();
  if (const auto* v = std::get_if<std::int64_t>(&t)) return *v;
  throw FormatError("chunk '" + chunk_.tag + "': expected integer at token " + std::to_string(pos_ - 1));
}

double ChunkReader::f64() {
  const auto& t = next();
  if (const auto* v = std::get_if<double>(&t)) return *v;
  throw FormatError("chunk '" + chunk_.tag + "': expected float at token " + std::to_string(pos_ - 1));
}

std::string ChunkReader::str() {
  const auto& t = next();
  if (const auto* v = std::get_if<std::string>(&t)) return *v;
  throw FormatError("chunk '" + chunk_.tag + "': expected string at token " + std::to_string(pos_ - 1));
}

Vec3 ChunkReader::vec3() {
  Vec3 v;
  v.x() = f64();
  v.y() = f64();
  v.z() = f64();
  return v;
}

Mat3 ChunkReader::mat3() {
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) m(r, k) = f64();
  return m;
}

std::size_t ChunkReader::count(std::size_t max) {
  const auto v = i64();
  if (v < 0 || static_cast<std::uint64_t>(v) > max)
    throw FormatError("chunk '" + chunk_.tag + "': count " + std::to_string(v) + " out of range");
  return static_cast<std::size_t>(v);
}

void ChunkReader::expect_done() const {
  if (!done()) throw FormatError("chunk '" + chunk_.tag + "': unexpected trailing data");
}

const Chunk* Container::find(std::string_view tag) const {
  for (const auto& c : chunks)
    if (c.tag == tag) return &c;
  return nullptr;
}

const Chunk& Container::require(std::string_view tag) const {
  if (const auto* c = find(tag)) return *c;
  throw FormatError("container: missing required chunk '" + std::string(tag) + "'");
}

std::vector<const Chunk*> Container::find_all(std::string_view tag) const {
  std::vector<const Chunk*> out;
  for (const auto& c : chunks)
    if (c.tag == tag) out.push_back(&c);
  return out;
}

std::string encode(const Container& c, Encoding encoding) {
  return encoding == Encoding::binary ? encode_binary(c) : encode_text(c);
}

Container decode(std::string_view bytes) {
  // The text magic extends the binary one, so it is tested first.
  if (bytes.substr(0, kTextMagic.size()) == kTextMagic) return decode_text(bytes);
  if (bytes.size() >= 4 && bytes.substr(0, 4) == std::string_view(kMagic, 4)) return decode_binary(bytes);
  throw FormatError("container: unrecognized header");
}

void write_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const Container& c, Encoding encoding) {
  write_bytes(path, encode(c, encoding));
}

Container read_file(const std::filesystem::path& path) {
  const std::string bytes = read_bytes(path);
  try {
    return decode(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Encoding encoding_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".txt" || ext == ".hoit") ? Encoding::text : Encoding::binary;
}

}  // namespace hoigen::io
