#include "fms/system_io.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fms {

namespace {

std::string strip(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw Error(ErrorCode::kParse, "line " + std::to_string(line) + ": " + msg);
}

bool parse_flag(const std::string& s, int line) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  fail(line, "ownership flag must be 0/1 or true/false, got '" + s + "'");
}

Rational parse_value(const std::string& s, int line) {
  try {
    return parse_rational(s);
  } catch (const Error& e) {
    fail(line, e.what());
  }
}

std::vector<Piece> parse_pieces(const std::string& text, int line) {
  std::vector<Piece> pieces;
  std::stringstream ss(text);
  std::string chunk;
  while (std::getline(ss, chunk, ';')) {
    std::string c = strip(chunk);
    if (c.empty()) continue;
    if (c.front() != '(' || c.back() != ')') fail(line, "piece must be parenthesized: " + c);
    std::vector<std::string> fields;
    std::stringstream fs(c.substr(1, c.size() - 2));
    std::string f;
    while (std::getline(fs, f, ',')) fields.push_back(strip(f));
    if (fields.size() != 5) fail(line, "piece needs 5 fields (lo,hi,own_lo,own_hi,value): " + c);
    Piece p;
    p.interval.lo = parse_value(fields[0], line);
    p.interval.hi = parse_value(fields[1], line);
    p.interval.lo_closed = parse_flag(fields[2], line);
    p.interval.hi_closed = parse_flag(fields[3], line);
    p.value = parse_value(fields[4], line);
    pieces.push_back(std::move(p));
  }
  if (pieces.empty()) fail(line, "piecewise probability without pieces");
  return pieces;
}

struct Section {
  std::string name;  // "domain" or "edge"
  std::string edge_id;
  int line = 0;
  std::map<std::string, std::pair<std::string, int>> values;
};

const std::pair<std::string, int>& require(const Section& s, const std::string& key) {
  auto it = s.values.find(key);
  if (it == s.values.end()) fail(s.line, "section [" + s.name + "] lacks key '" + key + "'");
  return it->second;
}

}  // namespace

SystemSpec parse_system(std::string_view text) {
  std::vector<Section> sections;
  std::stringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::string line = strip(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      std::string header = strip(std::string_view(line).substr(1, line.size() - 2));
      Section s;
      s.line = line_no;
      if (header == "domain") {
        s.name = "domain";
      } else if (header.rfind("edge", 0) == 0 && header.size() > 4 &&
                 std::isspace(static_cast<unsigned char>(header[4]))) {
        s.name = "edge";
        s.edge_id = strip(std::string_view(header).substr(4));
        if (s.edge_id.empty()) fail(line_no, "edge section without id");
      } else {
        fail(line_no, "unknown section [" + header + "]");
      }
      sections.push_back(std::move(s));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    if (sections.empty()) fail(line_no, "key outside of any section");
    std::string key = strip(std::string_view(line).substr(0, eq));
    std::string value = strip(std::string_view(line).substr(eq + 1));
    Section& cur = sections.back();
    static const std::set<std::string> kDomainKeys = {"lo", "hi"};
    static const std::set<std::string> kEdgeKeys = {"slope", "intercept", "prob", "q_value",
                                                    "irr_value"};
    const auto& allowed = cur.name == "domain" ? kDomainKeys : kEdgeKeys;
    if (!allowed.count(key)) fail(line_no, "unknown key '" + key + "' in [" + cur.name + "]");
    if (!cur.values.emplace(key, std::make_pair(value, line_no)).second) {
      fail(line_no, "duplicate key '" + key + "'");
    }
  }

  SystemSpec spec;
  bool have_domain = false;
  std::set<std::string> ids;
  for (const Section& s : sections) {
    if (s.name == "domain") {
      if (have_domain) fail(s.line, "duplicate [domain] section");
      have_domain = true;
      const auto& [lo, lo_line] = require(s, "lo");
      const auto& [hi, hi_line] = require(s, "hi");
      spec.domain = Interval::closed(parse_value(lo, lo_line), parse_value(hi, hi_line));
      if (spec.domain.lo > spec.domain.hi) fail(s.line, "domain has lo > hi");
      continue;
    }
    if (!ids.insert(s.edge_id).second) fail(s.line, "duplicate edge id '" + s.edge_id + "'");
    Edge edge;
    edge.id = s.edge_id;
    const auto& [slope, slope_line] = require(s, "slope");
    const auto& [icpt, icpt_line] = require(s, "intercept");
    edge.map = {parse_value(slope, slope_line), parse_value(icpt, icpt_line)};
    const auto& [prob_text, prob_line] = require(s, "prob");
    if (prob_text == "rationality") {
      const auto& [q, q_line] = require(s, "q_value");
      const auto& [irr, irr_line] = require(s, "irr_value");
      edge.prob = RationalityPredicate{parse_value(q, q_line), parse_value(irr, irr_line)};
    } else if (prob_text.rfind("piecewise", 0) == 0) {
      for (const char* k : {"q_value", "irr_value"}) {
        if (s.values.count(k)) {
          fail(s.values.at(k).second, std::string("key '") + k + "' needs prob = rationality");
        }
      }
      edge.prob = PiecewiseConstant{parse_pieces(prob_text.substr(9), prob_line)};
    } else {
      fail(prob_line, "prob must be 'piecewise ...' or 'rationality'");
    }
    spec.edges.push_back(std::move(edge));
  }
  if (!have_domain) throw Error(ErrorCode::kParse, "missing [domain] section");
  if (spec.edges.empty()) throw Error(ErrorCode::kParse, "system has no edges");
  return spec;
}

SystemSpec load_system(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, "cannot open system file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_system(buf.str());
}

std::string format_system(const SystemSpec& spec) {
  std::ostringstream out;
  out << "[domain]\nlo = " << to_string(spec.domain.lo) << "\nhi = " << to_string(spec.domain.hi)
      << "\n";
  for (const Edge& e : spec.edges) {
    out << "\n[edge " << e.id << "]\nslope = " << to_string(e.map.slope)
        << "\nintercept = " << to_string(e.map.intercept) << "\n";
    if (const auto* pw = std::get_if<PiecewiseConstant>(&e.prob)) {
      out << "prob = piecewise ";
      for (std::size_t i = 0; i < pw->pieces.size(); ++i) {
        const Piece& p = pw->pieces[i];
        out << (i ? ";" : "") << "(" << to_string(p.interval.lo) << ","
            << to_string(p.interval.hi) << "," << (p.interval.lo_closed ? 1 : 0) << ","
            << (p.interval.hi_closed ? 1 : 0) << "," << to_string(p.value) << ")";
      }
      out << "\n";
    } else {
      const auto& rp = std::get<RationalityPredicate>(e.prob);
      out << "prob = rationality\nq_value = " << to_string(rp.value_on_rationals)
          << "\nirr_value = " << to_string(rp.value_on_irrationals) << "\n";
    }
  }
  return out.str();
}

}  // namespace fms
