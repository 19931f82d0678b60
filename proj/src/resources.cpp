#include "paneliv/resources.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include <fmt/format.h>

#include "paneliv/error.hpp"

namespace paneliv::resources {
namespace {

constexpr std::pair<std::string_view, std::string_view> kResources[] = {
#include "resources_data.inc"
};

}  // namespace

std::string_view get(std::string_view name) {
  for (const auto& [n, content] : kResources) {
    if (n == name) return content;
  }
  throw Error(fmt::format("no bundled resource named '{}'", name));
}

bool contains(std::string_view name) {
  return std::any_of(std::begin(kResources), std::end(kResources),
                     [&](const auto& r) { return r.first == name; });
}

std::vector<std::string_view> names() {
  std::vector<std::string_view> out;
  for (const auto& r : kResources) out.push_back(r.first);
  return out;
}

}  // namespace paneliv::resources
