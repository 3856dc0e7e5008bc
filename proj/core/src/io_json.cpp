#include "krein/io_json.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "krein/catalog.hpp"

namespace krein {

namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument("string spec: " + what);
}

void check_keys(const ordered_json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) fail("unknown key '" + item.key() + "' in " + where);
  }
}

double get_number(const ordered_json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) fail(std::string("missing '") + key + "' in " + where);
  const ordered_json& v = obj.at(key);
  if (!v.is_number()) fail(std::string("'") + key + "' in " + where + " must be a number");
  return v.get<double>();
}

// A number, or the string "inf".
double get_extended(const ordered_json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) fail(std::string("missing '") + key + "' in " + where);
  const ordered_json& v = obj.at(key);
  if (v.is_string() && v.get<std::string>() == "inf")
    return std::numeric_limits<double>::infinity();
  if (!v.is_number())
    fail(std::string("'") + key + "' in " + where + " must be a number or \"inf\"");
  return v.get<double>();
}

std::vector<double> get_array(const ordered_json& obj, const char* key,
                              const std::string& where) {
  if (!obj.contains(key)) fail(std::string("missing '") + key + "' in " + where);
  const ordered_json& v = obj.at(key);
  if (!v.is_array()) fail(std::string("'") + key + "' in " + where + " must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(std::string("'") + key + "' in " + where + " must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Family family_from(const std::string& name, const std::string& where) {
  if (name == "constant") return Family::constant;
  if (name == "power") return Family::power;
  if (name == "rational_power") return Family::rational_power;
  if (name == "exponential") return Family::exponential;
  if (name == "tabulated") return Family::tabulated;
  fail("unknown family '" + name + "' in " + where);
}

const char* family_name(Family f) {
  switch (f) {
    case Family::constant: return "constant";
    case Family::power: return "power";
    case Family::rational_power: return "rational_power";
    case Family::exponential: return "exponential";
    case Family::tabulated: return "tabulated";
  }
  fail("corrupt family enum");
}

DensitySegment parse_segment(const ordered_json& obj, std::size_t index) {
  std::ostringstream ctx;
  ctx << "segments[" << index << "]";
  const std::string where = ctx.str();
  if (!obj.is_object()) fail(where + " must be an object");
  if (!obj.contains("family") || !obj.at("family").is_string())
    fail(where + " needs a 'family' string");

  DensitySegment seg;
  seg.family = family_from(obj.at("family").get<std::string>(), where);
  switch (seg.family) {
    case Family::constant:
      check_keys(obj, where, {"family", "lo", "hi", "c"});
      seg.c = get_number(obj, "c", where);
      break;
    case Family::power:
      check_keys(obj, where, {"family", "lo", "hi", "c", "p"});
      seg.c = get_number(obj, "c", where);
      seg.p = get_number(obj, "p", where);
      break;
    case Family::rational_power:
      check_keys(obj, where, {"family", "lo", "hi", "c", "q", "r"});
      seg.c = get_number(obj, "c", where);
      seg.q = get_number(obj, "q", where);
      seg.r = get_number(obj, "r", where);
      break;
    case Family::exponential:
      check_keys(obj, where, {"family", "lo", "hi", "c", "q"});
      seg.c = get_number(obj, "c", where);
      seg.q = get_number(obj, "q", where);
      break;
    case Family::tabulated:
      check_keys(obj, where, {"family", "lo", "hi", "knots", "values"});
      seg.knots = get_array(obj, "knots", where);
      seg.values = get_array(obj, "values", where);
      break;
  }
  seg.lo = get_number(obj, "lo", where);
  seg.hi = get_extended(obj, "hi", where);
  return seg;
}

}  // namespace

KreinString parse_string_spec(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("top level must be an object");

  if (doc.contains("catalog")) {
    check_keys(doc, "top level", {"catalog", "params"});
    if (!doc.at("catalog").is_string()) fail("'catalog' must be a string");
    std::vector<double> params;
    if (doc.contains("params")) params = get_array(doc, "params", "top level");
    return lookup(doc.at("catalog").get<std::string>(), params).string;
  }

  check_keys(doc, "top level", {"R", "end", "segments", "atoms"});
  KreinString str;
  if (doc.contains("R")) str.R = get_extended(doc, "R", "top level");
  if (doc.contains("end")) {
    if (!doc.at("end").is_string()) fail("'end' must be a string");
    std::string end = doc.at("end").get<std::string>();
    if (end == "natural")
      str.end = EndCondition::natural;
    else if (end == "dirichlet")
      str.end = EndCondition::dirichlet_at_R;
    else if (end == "neumann")
      str.end = EndCondition::neumann_at_R;
    else
      fail("unknown end condition '" + end + "'");
  }
  if (!doc.contains("segments") || !doc.at("segments").is_array())
    fail("'segments' array required");
  std::size_t i = 0;
  for (const auto& sobj : doc.at("segments")) str.segments.push_back(parse_segment(sobj, i++));
  if (doc.contains("atoms")) {
    if (!doc.at("atoms").is_array()) fail("'atoms' must be an array");
    std::size_t k = 0;
    for (const auto& aobj : doc.at("atoms")) {
      std::ostringstream ctx;
      ctx << "atoms[" << k++ << "]";
      if (!aobj.is_object()) fail(ctx.str() + " must be an object");
      check_keys(aobj, ctx.str(), {"s", "mass"});
      Atom at;
      at.s = get_number(aobj, "s", ctx.str());
      at.mass = get_number(aobj, "mass", ctx.str());
      str.atoms.push_back(at);
    }
  }
  str.validate();
  return str;
}

KreinString load_string_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("string spec: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string_spec(buf.str());
}

std::string string_spec_to_json(const KreinString& str) {
  ordered_json doc;
  if (std::isfinite(str.R)) doc["R"] = str.R;
  switch (str.end) {
    case EndCondition::natural: break;  // default, omitted
    case EndCondition::dirichlet_at_R: doc["end"] = "dirichlet"; break;
    case EndCondition::neumann_at_R: doc["end"] = "neumann"; break;
  }
  doc["segments"] = ordered_json::array();
  for (const DensitySegment& seg : str.segments) {
    ordered_json s;
    s["family"] = family_name(seg.family);
    s["lo"] = seg.lo;
    if (std::isfinite(seg.hi))
      s["hi"] = seg.hi;
    else
      s["hi"] = "inf";
    switch (seg.family) {
      case Family::constant: s["c"] = seg.c; break;
      case Family::power:
        s["c"] = seg.c;
        s["p"] = seg.p;
        break;
      case Family::rational_power:
        s["c"] = seg.c;
        s["q"] = seg.q;
        s["r"] = seg.r;
        break;
      case Family::exponential:
        s["c"] = seg.c;
        s["q"] = seg.q;
        break;
      case Family::tabulated:
        s["knots"] = seg.knots;
        s["values"] = seg.values;
        break;
    }
    doc["segments"].push_back(std::move(s));
  }
  if (!str.atoms.empty()) {
    doc["atoms"] = ordered_json::array();
    for (const Atom& at : str.atoms) doc["atoms"].push_back({{"s", at.s}, {"mass", at.mass}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace krein
