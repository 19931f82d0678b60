#include "paneliv/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace paneliv::config {

ConfigError::ConfigError(std::string_view source, std::size_t line, std::string_view message)
    : SpecError(fmt::format("{}:{}: {}", source, line, message)), line_(line) {}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

const Entry* Section::find(std::string_view key) const {
  for (const auto& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

std::optional<std::string> Section::get(std::string_view key) const {
  if (const auto* e = find(key)) return e->value;
  return std::nullopt;
}

const Section* Document::find(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::filesystem::path Document::resolve(std::string_view path) const {
  std::filesystem::path p{std::string(path)};
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

void Document::fail(std::size_t line, std::string_view message) const {
  throw ConfigError(source, line, message);
}

Document parse(std::istream& in, std::string_view source, std::filesystem::path base_dir) {
  Document doc;
  doc.source = std::string(source);
  doc.base_dir = std::move(base_dir);
  doc.sections.push_back({"", 0, {}});
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') doc.fail(line_no, "section header is missing ']'");
      auto name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) doc.fail(line_no, "empty section name");
      if (doc.find(name)) doc.fail(line_no, fmt::format("duplicate section [{}]", name));
      doc.sections.push_back({std::string(name), line_no, {}});
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) doc.fail(line_no, "expected 'key = value'");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty()) doc.fail(line_no, "empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    auto& section = doc.sections.back();
    if (section.find(key)) {
      doc.fail(line_no, fmt::format("duplicate key '{}' in section [{}]", key, section.name));
    }
    section.entries.push_back({std::string(key), std::string(value), line_no});
  }
  return doc;
}

Document parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError(fmt::format("cannot open config '{}'", path.string()));
  return parse(in, path.string(), path.parent_path());
}

Document parse_string(std::string_view text, std::string_view source,
                      std::filesystem::path base_dir) {
  std::istringstream in{std::string(text)};
  return parse(in, source, std::move(base_dir));
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= value.size(); ++i) {
    if (i < value.size() && value[i] == '(') ++depth;
    if (i < value.size() && value[i] == ')') --depth;
    if (i == value.size() || (value[i] == ',' && depth == 0)) {
      auto item = trim(value.substr(start, i - start));
      if (!item.empty()) out.emplace_back(item);
      start = i + 1;
    }
  }
  return out;
}

}  // namespace paneliv::config
