#pragma once

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "scif/edit.hpp"

// Line grammar, one op per line, whitespace-separated key=value pairs:
//
//   translate ids=3,7 dx=4 dy=-2
//   scale box=10,10,80,80 cx=45 cy=45 sx=1.2 sy=1.2 [gscale=1]
//   erase ids=5
//   paste src=<file> ids=1,2 dx=30 dy=0
//
// Blank lines and lines starting with '#' are skipped. The JSON form is an
// array of objects with the same keys plus "op", lists as JSON arrays.

namespace scif {

/// Maps a paste `src` reference to a representation (a file path on the
/// command line, a session id in the service).
using SourceResolver = std::function<std::shared_ptr<const SparseRepresentation>(const std::string&)>;

namespace detail {

inline EditError script_error(std::size_t op, const std::string& msg) {
  return EditError(EditError::Code::kBadOp, op, msg);
}

inline double parse_real(const std::string& s, std::size_t op, const std::string& key) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw script_error(op, "bad number for " + key + ": '" + s + "'");
  return v;
}

inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  return parts;
}

inline std::vector<std::uint32_t> parse_ids(const std::string& s, std::size_t op) {
  std::vector<std::uint32_t> ids;
  for (const auto& part : split_commas(s)) {
    std::uint32_t v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size() || part.empty())
      throw script_error(op, "bad contour id '" + part + "'");
    ids.push_back(v);
  }
  return ids;
}

inline Box parse_box(const std::vector<double>& v, std::size_t op) {
  if (v.size() != 4) throw script_error(op, "box needs 4 values");
  for (double c : v)
    if (c != std::floor(c) || std::abs(c) > 1e9) throw script_error(op, "box corners must be integers");
  Box b{std::int32_t(v[0]), std::int32_t(v[1]), std::int32_t(v[2]), std::int32_t(v[3])};
  if (b.x0 > b.x1 || b.y0 > b.y1) throw script_error(op, "box corners out of order");
  return b;
}

// Key/value view shared by the text and JSON front ends.
struct OpFields {
  std::size_t index = 0;
  std::string name;
  std::map<std::string, std::string> scalars;
  std::vector<std::uint32_t> ids;
  std::vector<double> box;
  bool has_ids = false, has_box = false;

  double real(const std::string& key) const {
    auto it = scalars.find(key);
    if (it == scalars.end()) throw script_error(index, name + " requires " + key);
    return parse_real(it->second, index, key);
  }
  double real_or(const std::string& key, double fallback) const { return scalars.count(key) ? real(key) : fallback; }

  Selection selection() const {
    if (has_ids == has_box) throw script_error(index, name + " needs exactly one of ids= or box=");
    return has_ids ? Selection::of_ids(ids) : Selection::of_box(parse_box(box, index));
  }
};

inline EditOp build_op(const OpFields& f, const SourceResolver& resolve) {
  static const std::map<std::string, std::vector<std::string>> kAllowed = {
      {"translate", {"dx", "dy"}},
      {"scale", {"cx", "cy", "sx", "sy", "gscale"}},
      {"erase", {}},
      {"paste", {"src", "dx", "dy"}}};
  auto allowed = kAllowed.find(f.name);
  if (allowed == kAllowed.end()) throw script_error(f.index, "unknown op '" + f.name + "'");
  for (const auto& [key, _] : f.scalars)
    if (std::find(allowed->second.begin(), allowed->second.end(), key) == allowed->second.end())
      throw script_error(f.index, "unexpected key '" + key + "' for " + f.name);

  if (f.name == "translate") return Translate{f.selection(), f.real("dx"), f.real("dy")};
  if (f.name == "scale") {
    Scale s{f.selection(), f.real("cx"), f.real("cy"), f.real("sx"), f.real("sy"), f.real_or("gscale", 1.0)};
    if (!(s.sx > 0.0 && s.sy > 0.0)) throw script_error(f.index, "scale factors must be positive");
    return s;
  }
  if (f.name == "erase") return Erase{f.selection()};
  auto src = f.scalars.find("src");
  if (src == f.scalars.end() || src->second.empty()) throw script_error(f.index, "paste requires src");
  if (!resolve) throw script_error(f.index, "paste sources are not available here");
  std::shared_ptr<const SparseRepresentation> source;
  try {
    source = resolve(src->second);
  } catch (const Error& e) {
    throw script_error(f.index, "cannot load paste source '" + src->second + "': " + e.what());
  }
  if (!source) throw script_error(f.index, "unknown paste source '" + src->second + "'");
  return Paste{std::move(source), src->second, f.selection(), f.real("dx"), f.real("dy")};
}

inline std::string fmt_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string join_ids(const std::vector<std::uint32_t>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? "," : "") + std::to_string(ids[i]);
  return s;
}

}  // namespace detail

inline EditScript parse_edit_script(const std::string& text, const SourceResolver& resolve = {}) {
  EditScript script;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::istringstream words(line);
    std::string word;
    if (!(words >> word) || word[0] == '#') continue;
    detail::OpFields f;
    f.index = script.size();
    f.name = word;
    while (words >> word) {
      const auto eq = word.find('=');
      if (eq == std::string::npos || eq == 0) throw detail::script_error(f.index, "expected key=value, got '" + word + "'");
      const std::string key = word.substr(0, eq), value = word.substr(eq + 1);
      if (key == "ids") {
        f.ids = detail::parse_ids(value, f.index);
        f.has_ids = true;
      } else if (key == "box") {
        for (const auto& part : detail::split_commas(value)) f.box.push_back(detail::parse_real(part, f.index, "box"));
        f.has_box = true;
      } else if (!f.scalars.emplace(key, value).second) {
        throw detail::script_error(f.index, "duplicate key '" + key + "'");
      }
    }
    script.push_back(detail::build_op(f, resolve));
  }
  return script;
}

inline EditScript parse_edit_script_json(const nlohmann::json& doc, const SourceResolver& resolve = {}) {
  if (!doc.is_array()) throw detail::script_error(0, "edit script must be a JSON array");
  EditScript script;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    detail::OpFields f;
    f.index = i;
    if (!item.is_object() || !item.contains("op") || !item["op"].is_string())
      throw detail::script_error(i, "each op must be an object with a string \"op\"");
    f.name = item["op"].get<std::string>();
    for (const auto& [key, value] : item.items()) {
      if (key == "op") continue;
      if (key == "ids") {
        if (!value.is_array()) throw detail::script_error(i, "ids must be an array");
        for (const auto& v : value) {
          if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
            throw detail::script_error(i, "ids must be non-negative integers");
          f.ids.push_back(v.get<std::uint32_t>());
        }
        f.has_ids = true;
      } else if (key == "box") {
        if (!value.is_array()) throw detail::script_error(i, "box must be an array");
        for (const auto& v : value) {
          if (!v.is_number()) throw detail::script_error(i, "box values must be numbers");
          f.box.push_back(v.get<double>());
        }
        f.has_box = true;
      } else if (value.is_number()) {
        f.scalars[key] = detail::fmt_real(value.get<double>());
      } else if (value.is_string()) {
        f.scalars[key] = value.get<std::string>();
      } else {
        throw detail::script_error(i, "unsupported value for key '" + key + "'");
      }
    }
    script.push_back(detail::build_op(f, resolve));
  }
  return script;
}

namespace detail {

inline void selection_to_json(const Selection& s, nlohmann::json& j) {
  if (const auto* ids = std::get_if<std::vector<std::uint32_t>>(&s.target)) {
    j["ids"] = *ids;
  } else {
    const auto& b = std::get<Box>(s.target);
    j["box"] = {b.x0, b.y0, b.x1, b.y1};
  }
}

inline std::string selection_to_text(const Selection& s) {
  if (const auto* ids = std::get_if<std::vector<std::uint32_t>>(&s.target)) return "ids=" + join_ids(*ids);
  const auto& b = std::get<Box>(s.target);
  return "box=" + std::to_string(b.x0) + "," + std::to_string(b.y0) + "," + std::to_string(b.x1) + "," +
         std::to_string(b.y1);
}

}  // namespace detail

/// Canonical JSON form; keys sort alphabetically under nlohmann's default map.
inline nlohmann::json edit_script_to_json(const EditScript& script) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& op : script) {
    nlohmann::json j;
    j["op"] = detail::describe(op);
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          detail::selection_to_json(o.selection, j);
          if constexpr (std::is_same_v<T, Translate>) {
            j["dx"] = o.dx;
            j["dy"] = o.dy;
          } else if constexpr (std::is_same_v<T, Scale>) {
            j["cx"] = o.cx;
            j["cy"] = o.cy;
            j["sx"] = o.sx;
            j["sy"] = o.sy;
            if (o.gscale != 1.0) j["gscale"] = o.gscale;
          } else if constexpr (std::is_same_v<T, Paste>) {
            j["src"] = o.source_name;
            j["dx"] = o.dx;
            j["dy"] = o.dy;
          }
        },
        op);
    doc.push_back(std::move(j));
  }
  return doc;
}

inline std::string edit_script_to_text(const EditScript& script) {
  std::string out;
  for (const auto& op : script) {
    out += detail::describe(op);
    std::visit(
        [&](const auto& o) {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, Paste>) out += " src=" + o.source_name;
          out += " " + detail::selection_to_text(o.selection);
          if constexpr (std::is_same_v<T, Translate> || std::is_same_v<T, Paste>)
            out += " dx=" + detail::fmt_real(o.dx) + " dy=" + detail::fmt_real(o.dy);
          if constexpr (std::is_same_v<T, Scale>) {
            out += " cx=" + detail::fmt_real(o.cx) + " cy=" + detail::fmt_real(o.cy) + " sx=" + detail::fmt_real(o.sx) +
                   " sy=" + detail::fmt_real(o.sy);
            if (o.gscale != 1.0) out += " gscale=" + detail::fmt_real(o.gscale);
          }
        },
        op);
    out += '\n';
  }
  return out;
}

}  // namespace scif
