#include "tcprobe/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>

#include "tcprobe/errors.hpp"

namespace tcprobe {

// ---------------------------------------------------------------------------
// DependencyGraph
// ---------------------------------------------------------------------------

EdgeSet DependencyGraph::transitive_only() const {
  EdgeSet out;
  std::set_difference(closure.begin(), closure.end(), direct.begin(), direct.end(),
                      std::inserter(out, out.end()));
  return out;
}

int DependencyGraph::hop_distance(int i, int j) const {
  if (i == j || !reaches(i, j)) return 0;
  std::vector<int> dist(static_cast<std::size_t>(n), -1);
  std::deque<int> queue{i};
  dist[static_cast<std::size_t>(i)] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (auto it = direct.lower_bound({u, 0}); it != direct.end() && it->from == u; ++it) {
      auto& d = dist[static_cast<std::size_t>(it->to)];
      if (d >= 0) continue;
      d = dist[static_cast<std::size_t>(u)] + 1;
      if (it->to == j) return d;
      queue.push_back(it->to);
    }
  }
  return 0;
}

DependencyGraph DependencyGraph::from_direct(int n, EdgeSet direct) {
  DependencyGraph g;
  g.n = n;
  g.closure = transitive_closure(direct, n);
  g.direct = std::move(direct);
  return g;
}

// ---------------------------------------------------------------------------
// UTF-8 and whitespace
// ---------------------------------------------------------------------------

std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      cp = b0 & 0x1F;
      extra = 1;
    } else if ((b0 & 0xF0) == 0xE0) {
      cp = b0 & 0x0F;
      extra = 2;
    } else if ((b0 & 0xF8) == 0xF0) {
      cp = b0 & 0x07;
      extra = 3;
    } else {
      out.push_back(U'\uFFFD');
      ++i;
      continue;
    }
    if (i + static_cast<std::size_t>(extra) >= s.size()) {
      out.push_back(U'\uFFFD');
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(U'\uFFFD');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

std::string utf8_encode(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

bool is_unicode_space(char32_t c) {
  switch (c) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x1C: case 0x1D: case 0x1E: case 0x1F: case 0x20:
    case 0x85: case 0xA0: case 0x1680:
    case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

std::string normalize_text(std::string_view s) {
  const std::u32string cps = utf8_decode(s);
  std::u32string out;
  out.reserve(cps.size());
  bool pending_space = false;
  for (char32_t c : cps) {
    if (is_unicode_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return utf8_encode(out);
}

// ---------------------------------------------------------------------------
// Python-compatible JSON serialisation
// ---------------------------------------------------------------------------

namespace {

void append_u_escape(std::string& out, unsigned v) {
  static constexpr char kHex[] = "0123456789abcdef";
  out += "\\u";
  out.push_back(kHex[(v >> 12) & 0xF]);
  out.push_back(kHex[(v >> 8) & 0xF]);
  out.push_back(kHex[(v >> 4) & 0xF]);
  out.push_back(kHex[v & 0xF]);
}

void append_string(std::string& out, std::string_view s) {
  out.push_back('"');
  for (char32_t c : utf8_decode(s)) {
    switch (c) {
      case U'"': out += "\\\""; break;
      case U'\\': out += "\\\\"; break;
      case U'\n': out += "\\n"; break;
      case U'\r': out += "\\r"; break;
      case U'\t': out += "\\t"; break;
      case U'\b': out += "\\b"; break;
      case U'\f': out += "\\f"; break;
      default:
        if (c < 0x20 || (c > 0x7E && c != 0x7F)) {
          if (c >= 0x10000) {
            const char32_t v = c - 0x10000;
            append_u_escape(out, 0xD800 + static_cast<unsigned>(v >> 10));
            append_u_escape(out, 0xDC00 + static_cast<unsigned>(v & 0x3FF));
          } else {
            append_u_escape(out, static_cast<unsigned>(c));
          }
        } else {
          out.push_back(static_cast<char>(c));
        }
    }
  }
  out.push_back('"');
}

// Python float repr: shortest round-trip digits, exponent form when the
// decimal point position is <= -4 or > 16.
void append_float(std::string& out, double v) {
  if (!std::isfinite(v)) throw ValidationError("cannot serialise non-finite number in arguments");
  if (v == 0.0) {
    out += std::signbit(v) ? "-0.0" : "0.0";
    return;
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
  std::string sci(buf, res.ptr);
  std::string sign;
  if (sci[0] == '-') {
    sign = "-";
    sci.erase(0, 1);
  }
  const auto epos = sci.find('e');
  std::string digits = sci.substr(0, epos);
  digits.erase(std::remove(digits.begin(), digits.end(), '.'), digits.end());
  const int exponent = std::stoi(sci.substr(epos + 1));
  const int decpt = exponent + 1;
  const int nd = static_cast<int>(digits.size());
  out += sign;
  if (decpt <= -4 || decpt > 16) {
    out.push_back(digits[0]);
    if (nd > 1) {
      out.push_back('.');
      out.append(digits, 1);
    }
    out.push_back('e');
    out.push_back(exponent < 0 ? '-' : '+');
    const int ae = std::abs(exponent);
    if (ae < 10) out.push_back('0');
    out += std::to_string(ae);
  } else if (decpt <= 0) {
    out += "0.";
    out.append(static_cast<std::size_t>(-decpt), '0');
    out += digits;
  } else if (decpt >= nd) {
    out += digits;
    out.append(static_cast<std::size_t>(decpt - nd), '0');
    out += ".0";
  } else {
    out.append(digits, 0, static_cast<std::size_t>(decpt));
    out.push_back('.');
    out.append(digits, static_cast<std::size_t>(decpt));
  }
}

void append_json(std::string& out, const Json& j) {
  switch (j.type()) {
    case Json::value_t::object: {
      out.push_back('{');
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ", ";
        first = false;
        append_string(out, it.key());
        out += ": ";
        append_json(out, it.value());
      }
      out.push_back('}');
      break;
    }
    case Json::value_t::array: {
      out.push_back('[');
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ", ";
        first = false;
        append_json(out, v);
      }
      out.push_back(']');
      break;
    }
    case Json::value_t::string: append_string(out, j.get_ref<const std::string&>()); break;
    case Json::value_t::boolean: out += j.get<bool>() ? "true" : "false"; break;
    case Json::value_t::null: out += "null"; break;
    case Json::value_t::number_integer: out += std::to_string(j.get<std::int64_t>()); break;
    case Json::value_t::number_unsigned: out += std::to_string(j.get<std::uint64_t>()); break;
    case Json::value_t::number_float: append_float(out, j.get<double>()); break;
    default: throw ValidationError("cannot serialise JSON value of this type in arguments");
  }
}

}  // namespace

std::string serialize_args(const Json& arguments) {
  std::string out;
  append_json(out, arguments);
  return out;
}

// ---------------------------------------------------------------------------
// Maximal common substrings via a suffix automaton of the arguments
// ---------------------------------------------------------------------------

namespace {

class SuffixAutomaton {
 public:
  explicit SuffixAutomaton(std::u32string_view s) {
    states_.reserve(2 * s.size() + 1);
    states_.push_back({});
    for (char32_t c : s) extend(c);
  }

  /// For each position p of `text`, the length of the longest substring of
  /// `text` ending at p that occurs in the automaton's string.
  std::vector<std::size_t> matching_statistics(std::u32string_view text) const {
    std::vector<std::size_t> out(text.size());
    int v = 0;
    std::size_t len = 0;
    for (std::size_t p = 0; p < text.size(); ++p) {
      const char32_t c = text[p];
      while (v != 0 && !states_[static_cast<std::size_t>(v)].next.contains(c)) {
        v = states_[static_cast<std::size_t>(v)].link;
        len = states_[static_cast<std::size_t>(v)].len;
      }
      const auto& next = states_[static_cast<std::size_t>(v)].next;
      if (auto it = next.find(c); it != next.end()) {
        v = it->second;
        ++len;
      } else {
        v = 0;
        len = 0;
      }
      out[p] = len;
    }
    return out;
  }

 private:
  struct State {
    std::size_t len = 0;
    int link = -1;
    std::map<char32_t, int> next;
  };

  void extend(char32_t c) {
    const int cur = static_cast<int>(states_.size());
    states_.push_back({states_[static_cast<std::size_t>(last_)].len + 1, -1, {}});
    int p = last_;
    while (p != -1 && !states_[static_cast<std::size_t>(p)].next.contains(c)) {
      states_[static_cast<std::size_t>(p)].next[c] = cur;
      p = states_[static_cast<std::size_t>(p)].link;
    }
    if (p == -1) {
      states_[static_cast<std::size_t>(cur)].link = 0;
    } else {
      const int q = states_[static_cast<std::size_t>(p)].next[c];
      if (states_[static_cast<std::size_t>(p)].len + 1 == states_[static_cast<std::size_t>(q)].len) {
        states_[static_cast<std::size_t>(cur)].link = q;
      } else {
        const int clone = static_cast<int>(states_.size());
        State copy = states_[static_cast<std::size_t>(q)];
        copy.len = states_[static_cast<std::size_t>(p)].len + 1;
        states_.push_back(std::move(copy));
        while (p != -1 && states_[static_cast<std::size_t>(p)].next[c] == q) {
          states_[static_cast<std::size_t>(p)].next[c] = clone;
          p = states_[static_cast<std::size_t>(p)].link;
        }
        states_[static_cast<std::size_t>(q)].link = clone;
        states_[static_cast<std::size_t>(cur)].link = clone;
      }
    }
    last_ = cur;
  }

  std::vector<State> states_;
  int last_ = 0;
};

}  // namespace

std::vector<SubstringHit> maximal_hits(std::u32string_view output, std::u32string_view arguments,
                                       std::size_t min_length) {
  if (output.empty() || arguments.empty()) return {};
  const SuffixAutomaton sam(arguments);
  const auto ms = sam.matching_statistics(output);

  // Interval [p - ms[p] + 1, p] is left-maximal; it is right-maximal when the
  // match does not continue at p + 1.
  std::vector<SubstringHit> candidates;
  for (std::size_t p = 0; p < output.size(); ++p) {
    if (ms[p] < min_length) continue;
    const bool right_maximal = p + 1 == output.size() || ms[p + 1] != ms[p] + 1;
    if (right_maximal) candidates.push_back({p + 1 - ms[p], ms[p]});
  }
  // Drop hits whose text is contained in a longer retained hit.
  std::vector<SubstringHit> out;
  for (const auto& h : candidates) {
    const auto text = output.substr(h.out_pos, h.length);
    bool contained = false;
    for (const auto& other : candidates) {
      if (other.length <= h.length) continue;
      if (output.substr(other.out_pos, other.length).find(text) != std::u32string_view::npos) {
        contained = true;
        break;
      }
    }
    if (!contained) out.push_back(h);
  }
  return out;
}

std::size_t longest_common_substring(std::u32string_view a, std::u32string_view b) {
  if (a.empty() || b.empty()) return 0;
  const SuffixAutomaton sam(b);
  const auto ms = sam.matching_statistics(a);
  return *std::max_element(ms.begin(), ms.end());
}

DependencyGraph substring_edges(const Trajectory& traj) {
  const int n = static_cast<int>(traj.n_agent());
  std::vector<std::u32string> outputs;
  std::vector<std::u32string> args;
  outputs.reserve(traj.calls.size());
  args.reserve(traj.calls.size());
  for (const auto& c : traj.calls) {
    outputs.push_back(utf8_decode(normalize_text(c.output_text)));
    args.push_back(utf8_decode(normalize_text(serialize_args(c.arguments))));
  }
  EdgeSet direct;
  for (int j = 1; j < n; ++j) {
    if (args[static_cast<std::size_t>(j)].size() < kMinHitLength) continue;
    const SuffixAutomaton sam(args[static_cast<std::size_t>(j)]);
    for (int i = 0; i < j; ++i) {
      const auto& out = outputs[static_cast<std::size_t>(i)];
      if (out.size() < kMinHitLength) continue;
      const auto ms = sam.matching_statistics(out);
      if (std::any_of(ms.begin(), ms.end(), [](std::size_t v) { return v >= kMinHitLength; })) {
        direct.insert({i, j});
      }
    }
  }
  return DependencyGraph::from_direct(n, std::move(direct));
}

// ---------------------------------------------------------------------------
// Typed oracle
// ---------------------------------------------------------------------------

bool TypedSchema::is_typed_key(std::string_view key) const {
  return std::any_of(typed_key_suffixes.begin(), typed_key_suffixes.end(), [&](const std::string& suffix) {
    return !suffix.empty() && key.size() >= suffix.size() && key.ends_with(suffix);
  });
}

bool TypedSchema::is_bare_entity(std::string_view tool) const {
  return std::find(bare_entity_tools.begin(), bare_entity_tools.end(), tool) != bare_entity_tools.end();
}

TypedSchema TypedSchema::from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("typed schema: expected a JSON object");
  TypedSchema s;
  if (auto it = j.find("typed_key_suffixes"); it != j.end()) {
    if (!it->is_array()) throw ValidationError("typed schema: typed_key_suffixes must be an array");
    s.typed_key_suffixes.clear();
    for (const auto& v : *it) {
      if (!v.is_string()) throw ValidationError("typed schema: suffixes must be strings");
      s.typed_key_suffixes.push_back(v.get<std::string>());
    }
  }
  if (auto it = j.find("bare_entity_tools"); it != j.end()) {
    if (!it->is_array()) throw ValidationError("typed schema: bare_entity_tools must be an array");
    for (const auto& v : *it) {
      if (!v.is_string()) throw ValidationError("typed schema: tool names must be strings");
      s.bare_entity_tools.push_back(v.get<std::string>());
    }
  }
  return s;
}

Json TypedSchema::to_json() const {
  Json j = Json::object();
  j["typed_key_suffixes"] = typed_key_suffixes;
  j["bare_entity_tools"] = bare_entity_tools;
  return j;
}

TypedSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open typed schema " + path.string());
  try {
    return TypedSchema::from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw ValidationError("typed schema " + path.string() + ": " + e.what());
  }
}

namespace {

void add_scalar(std::set<std::string>& out, const Json& v) {
  if (v.is_string()) {
    out.insert(v.get<std::string>());
  } else if (v.is_number_integer() || v.is_number_unsigned()) {
    out.insert(v.dump());
  }
}

void collect_typed(const Json& j, const TypedSchema& schema, std::set<std::string>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (schema.is_typed_key(it.key())) {
        if (it.value().is_array()) {
          for (const auto& v : it.value()) add_scalar(out, v);
        } else {
          add_scalar(out, it.value());
        }
      }
      collect_typed(it.value(), schema, out);
    }
  } else if (j.is_array()) {
    for (const auto& v : j) collect_typed(v, schema, out);
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::set<std::string> produced_typed_values(const ToolCall& call, const TypedSchema& schema) {
  std::set<std::string> out;
  Json parsed;
  bool is_json = false;
  try {
    parsed = Json::parse(call.output_text);
    is_json = true;
  } catch (const Json::parse_error&) {
  }
  if (is_json) collect_typed(parsed, schema, out);
  if (schema.is_bare_entity(call.tool_name)) {
    if (is_json && parsed.is_string()) {
      out.insert(parsed.get<std::string>());
    } else if (is_json && (parsed.is_number_integer() || parsed.is_number_unsigned())) {
      out.insert(parsed.dump());
    } else if (!is_json) {
      if (auto value = trim(call.output_text); !value.empty()) out.insert(std::move(value));
    }
  }
  return out;
}

std::set<std::string> consumed_typed_values(const ToolCall& call, const TypedSchema& schema) {
  std::set<std::string> out;
  collect_typed(call.arguments, schema, out);
  return out;
}

DependencyGraph typed_edges(const Trajectory& traj, const TypedSchema& schema) {
  const int n = static_cast<int>(traj.n_agent());
  std::vector<std::set<std::string>> produced;
  std::vector<std::set<std::string>> consumed;
  for (const auto& c : traj.calls) {
    produced.push_back(produced_typed_values(c, schema));
    consumed.push_back(consumed_typed_values(c, schema));
  }
  EdgeSet direct;
  for (int i = 0; i < n; ++i) {
    const auto& made = produced[static_cast<std::size_t>(i)];
    if (made.empty()) continue;
    for (int j = i + 1; j < n; ++j) {
      const auto& used = consumed[static_cast<std::size_t>(j)];
      const bool shared = std::any_of(used.begin(), used.end(), [&](const std::string& v) { return made.contains(v); });
      if (shared) direct.insert({i, j});
    }
  }
  return DependencyGraph::from_direct(n, std::move(direct));
}

// ---------------------------------------------------------------------------
// Closure and agreement
// ---------------------------------------------------------------------------

EdgeSet transitive_closure(const EdgeSet& direct, int n) {
  std::vector<std::vector<int>> children(static_cast<std::size_t>(std::max(n, 0)));
  for (const auto& e : direct) {
    if (e.from < 0 || e.to >= n || e.from >= e.to) {
      throw ValidationError("edge (" + std::to_string(e.from) + ", " + std::to_string(e.to) +
                            ") violates 0 <= i < j < n with n = " + std::to_string(n));
    }
    children[static_cast<std::size_t>(e.from)].push_back(e.to);
  }
  // Process sources from last to first; every child's reach set is final.
  std::vector<std::vector<bool>> reach(static_cast<std::size_t>(std::max(n, 0)),
                                       std::vector<bool>(static_cast<std::size_t>(std::max(n, 0)), false));
  for (int u = n - 1; u >= 0; --u) {
    auto& ru = reach[static_cast<std::size_t>(u)];
    for (int c : children[static_cast<std::size_t>(u)]) {
      ru[static_cast<std::size_t>(c)] = true;
      const auto& rc = reach[static_cast<std::size_t>(c)];
      for (int k = c + 1; k < n; ++k) {
        if (rc[static_cast<std::size_t>(k)]) ru[static_cast<std::size_t>(k)] = true;
      }
    }
  }
  EdgeSet out;
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (reach[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)]) out.insert({u, v});
    }
  }
  return out;
}

AgreementStats AgreementStats::from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  AgreementStats s;
  s.true_positive = tp;
  s.false_positive = fp;
  s.false_negative = fn;
  s.true_negative = tn;
  if (tp + fp == 0) {
    s.precision = 1.0;
    s.precision_vacuous = true;
  } else {
    s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  if (tp + fn == 0) {
    s.recall = 1.0;
    s.recall_vacuous = true;
  } else {
    s.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  s.f1 = (s.precision + s.recall) > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  const std::size_t total = tp + fp + fn + tn;
  s.agreement = total == 0 ? 1.0 : static_cast<double>(tp + tn) / static_cast<double>(total);
  return s;
}

namespace {

void accumulate(const DependencyGraph& a, const DependencyGraph& b, std::size_t& tp, std::size_t& fp,
                std::size_t& fn, std::size_t& tn) {
  if (a.n != b.n) {
    throw ValidationError("oracle_agreement: node counts differ (" + std::to_string(a.n) + " vs " +
                          std::to_string(b.n) + ")");
  }
  for (int i = 0; i < a.n; ++i) {
    for (int j = i + 1; j < a.n; ++j) {
      const bool in_a = a.has_direct(i, j);
      const bool in_b = b.has_direct(i, j);
      if (in_a && in_b) ++tp;
      else if (in_b) ++fp;
      else if (in_a) ++fn;
      else ++tn;
    }
  }
}

}  // namespace

AgreementStats oracle_agreement(const DependencyGraph& a, const DependencyGraph& b) {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  accumulate(a, b, tp, fp, fn, tn);
  return AgreementStats::from_counts(tp, fp, fn, tn);
}

AgreementStats oracle_agreement(std::span<const DependencyGraph> a, std::span<const DependencyGraph> b) {
  if (a.size() != b.size()) throw ValidationError("oracle_agreement: corpus sizes differ");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t k = 0; k < a.size(); ++k) accumulate(a[k], b[k], tp, fp, fn, tn);
  return AgreementStats::from_counts(tp, fp, fn, tn);
}

// ---------------------------------------------------------------------------
// Minimal pairs
// ---------------------------------------------------------------------------

std::vector<MinimalPair> select_minimal_pairs(std::span<const GraphedTrajectory> corpus) {
  std::vector<MinimalPair> out;
  for (std::size_t a = 0; a < corpus.size(); ++a) {
    const Trajectory& ta = *corpus[a].trajectory;
    const DependencyGraph& ga = *corpus[a].graph;
    for (std::size_t b = a + 1; b < corpus.size(); ++b) {
      const Trajectory& tb = *corpus[b].trajectory;
      const DependencyGraph& gb = *corpus[b].graph;
      std::size_t prefix = 0;
      const std::size_t limit = std::min(ta.calls.size(), tb.calls.size());
      while (prefix < limit && ta.calls[prefix].tool_name == tb.calls[prefix].tool_name) ++prefix;
      if (prefix < kMinSharedPrefix) continue;

      const int p = static_cast<int>(prefix);
      int differences = 0;
      Edge differing{};
      bool donor_has = false;
      for (int i = 0; i < p && differences <= 1; ++i) {
        for (int j = i + 1; j < p; ++j) {
          const bool in_a = ga.has_direct(i, j);
          if (in_a != gb.has_direct(i, j)) {
            if (++differences > 1) break;
            differing = {i, j};
            donor_has = in_a;
          }
        }
      }
      if (differences == 1) {
        out.push_back({ta.trajectory_id, tb.trajectory_id, a, b, prefix, differing, donor_has});
      }
    }
  }
  return out;
}

Json graph_to_json(const std::string& trajectory_id, const DependencyGraph& g) {
  Json j = Json::object();
  j["trajectory_id"] = trajectory_id;
  j["n"] = g.n;
  Json direct = Json::array();
  for (const auto& e : g.direct) direct.push_back(Json::array({e.from, e.to}));
  Json closure = Json::array();
  for (const auto& e : g.closure) closure.push_back(Json::array({e.from, e.to}));
  Json trans = Json::array();
  for (const auto& e : g.transitive_only()) trans.push_back(Json::array({e.from, e.to}));
  j["direct_edges"] = std::move(direct);
  j["closure_edges"] = std::move(closure);
  j["transitive_only_edges"] = std::move(trans);
  return j;
}

}  // namespace tcprobe
