#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <regex>
#include <sstream>

#include "obsvlab/model.hpp"

namespace obsvlab {

SystemFileError::SystemFileError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_real(const std::string& text, int line) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) throw SystemFileError(line, "bad number '" + text + "'");
  return v;
}

struct Entry {
  std::string text;
  int line;
};

}  // namespace

CascadeSystem parse_system_file(std::string_view text) {
  static const std::regex indexed(R"(^(gamma|F)\[([0-9]+)\]$)");
  std::optional<int> n;
  int n_line = 0;
  std::map<int, Entry> gamma;
  std::map<int, Entry> drift;
  std::optional<Entry> b_entry;

  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw SystemFileError(line_no, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (value.empty()) throw SystemFileError(line_no, "empty value for '" + key + "'");

    std::smatch m;
    if (key == "n") {
      if (n) throw SystemFileError(line_no, "duplicate key 'n'");
      int parsed = 0;
      auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
      if (ec != std::errc() || ptr != value.data() + value.size() || parsed <= 0)
        throw SystemFileError(line_no, "n must be a positive integer");
      n = parsed;
      n_line = line_no;
    } else if (key == "b") {
      if (b_entry) throw SystemFileError(line_no, "duplicate key 'b'");
      b_entry = Entry{value, line_no};
    } else if (std::regex_match(key, m, indexed)) {
      auto& table = m[1] == "gamma" ? gamma : drift;
      const int idx = std::stoi(m[2]);
      if (!table.emplace(idx, Entry{value, line_no}).second)
        throw SystemFileError(line_no, "duplicate key '" + key + "'");
    } else {
      throw SystemFileError(line_no, "unknown key '" + key + "'");
    }
  }

  if (!n) throw SystemFileError(0, "missing 'n'");
  CascadeSystem sys;
  sys.n = *n;
  const auto zs = z_names(sys.n);
  const std::set<std::string> zset(zs.begin(), zs.end());

  auto parse_entry = [&](const Entry& e, const std::set<std::string>& vars,
                         const std::string& what) {
    try {
      return parse(e.text, vars);
    } catch (const ParseError& err) {
      throw SystemFileError(e.line, what + ": " + err.what());
    }
  };

  for (int i = 1; i <= sys.n; ++i) {
    const std::string gi = "gamma[" + std::to_string(i) + "]";
    const std::string fi = "F[" + std::to_string(i) + "]";
    auto g = gamma.find(i);
    if (g == gamma.end()) throw SystemFileError(0, "missing '" + gi + "'");
    auto f = drift.find(i);
    if (f == drift.end()) throw SystemFileError(0, "missing '" + fi + "'");
    sys.gamma.push_back(parse_entry(g->second, {"x"}, gi));
    sys.drift.push_back(parse_entry(f->second, zset, fi));
  }
  for (const auto* table : {&gamma, &drift})
    for (const auto& [idx, e] : *table)
      if (idx < 1 || idx > sys.n)
        throw SystemFileError(e.line, "index " + std::to_string(idx) + " outside 1.." +
                                          std::to_string(sys.n) + " (n on line " +
                                          std::to_string(n_line) + ")");

  if (!b_entry) throw SystemFileError(0, "missing 'b'");
  std::string list = b_entry->text;
  if (list.size() < 2 || list.front() != '[' || list.back() != ']')
    throw SystemFileError(b_entry->line, "b must be a bracketed list [v1, ..., vn]");
  list = list.substr(1, list.size() - 2);
  std::stringstream items(list);
  std::string item;
  while (std::getline(items, item, ',')) sys.b.push_back(parse_real(trim(item), b_entry->line));
  if (static_cast<int>(sys.b.size()) != sys.n)
    throw SystemFileError(b_entry->line, "b has " + std::to_string(sys.b.size()) +
                                             " entries, expected " + std::to_string(sys.n));
  return sys;
}

CascadeSystem load_system_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw SystemFileError(0, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_system_file(ss.str());
}

std::string format_system_file(const CascadeSystem& sys) {
  std::ostringstream out;
  if (!sys.description.empty()) out << "# " << sys.description << "\n";
  out << "n = " << sys.n << "\n";
  for (int i = 0; i < sys.n; ++i) out << "gamma[" << i + 1 << "] = " << to_string(sys.gamma[i]) << "\n";
  for (int i = 0; i < sys.n; ++i) out << "F[" << i + 1 << "] = " << to_string(sys.drift[i]) << "\n";
  out << "b = [";
  for (int i = 0; i < sys.n; ++i) {
    if (i) out << ", ";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, sys.b[i]);
    out << std::string(buf, ptr);
  }
  out << "]\n";
  return out.str();
}

}  // namespace obsvlab
