#include "avdoa/kv_file.hpp"

#include <fstream>
#include <sstream>

#include "avdoa/error.hpp"

namespace avdoa {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::FormatError, "key '" + key + "': not a number: '" + text + "'");
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text) {
  KeyValueFile out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::FormatError, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::FormatError, "line " + std::to_string(line_no) + ": empty key");
    out.entries_[key] = trim(line.substr(eq + 1));
  }
  return out;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const std::string& KeyValueFile::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorCode::FormatError, "missing key '" + key + "'");
  return it->second;
}

double KeyValueFile::get_double(const std::string& key) const { return parse_double(key, get(key)); }

double KeyValueFile::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long KeyValueFile::get_int(const std::string& key) const {
  const double v = get_double(key);
  const auto i = static_cast<long long>(v);
  if (static_cast<double>(i) != v) throw Error(ErrorCode::FormatError, "key '" + key + "': not an integer");
  return i;
}

long long KeyValueFile::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

std::vector<double> KeyValueFile::get_doubles(const std::string& key) const {
  std::string text = get(key);
  for (char& c : text) {
    if (c == ',' || c == ';') c = ' ';
  }
  std::istringstream in(text);
  std::vector<double> out;
  std::string token;
  while (in >> token) out.push_back(parse_double(key, token));
  return out;
}

std::string KeyValueFile::to_string() const {
  std::ostringstream out;
  for (const auto& [k, v] : entries_) out << k << " = " << v << "\n";
  return out.str();
}

}  // namespace avdoa
