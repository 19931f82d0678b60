#pragma once

#include <string_view>
#include <vector>

namespace paneliv::resources {

// Files compiled into the library: data/*.csv tables and presets/*.cfg.
// Throws Error for an unknown name.
std::string_view get(std::string_view name);
bool contains(std::string_view name);
std::vector<std::string_view> names();

}  // namespace paneliv::resources
