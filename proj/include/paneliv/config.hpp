#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "paneliv/error.hpp"

namespace paneliv::config {

// Line-oriented format:
//
//   # comment
//   seed = 7              (entries before any header belong to section "")
//   [section]
//   key = value
//   list = a, b, c
class ConfigError : public SpecError {
 public:
  ConfigError(std::string_view source, std::size_t line, std::string_view message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct Entry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct Section {
  std::string name;
  std::size_t line = 0;
  std::vector<Entry> entries;

  const Entry* find(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;
};

struct Document {
  std::string source;
  // Relative paths in the document resolve against this directory.
  std::filesystem::path base_dir;
  std::vector<Section> sections;

  const Section* find(std::string_view name) const;
  std::filesystem::path resolve(std::string_view path) const;
  [[noreturn]] void fail(std::size_t line, std::string_view message) const;
};

Document parse(std::istream& in, std::string_view source = "<config>",
               std::filesystem::path base_dir = {});
Document parse_file(const std::filesystem::path& path);
Document parse_string(std::string_view text, std::string_view source = "<config>",
                      std::filesystem::path base_dir = {});

// Comma-separated items; commas inside parentheses do not split.
std::vector<std::string> split_list(std::string_view value);
std::string_view trim(std::string_view s);

}  // namespace paneliv::config
