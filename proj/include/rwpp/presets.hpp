#pragma once

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rwpp/models.hpp"

namespace rwpp {

/// Named city profile: lognormal length law plus velocity mixture.
struct CityPreset {
  std::string name;
  LengthModel length;
  VelocityMixture velocity;
};

namespace detail {

inline VelocityMixture mixture_from(const std::vector<double>& means, const std::vector<double>& weights,
                                    double stddev = 0.25) {
  std::vector<VelocityComponent> comps;
  comps.reserve(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) comps.push_back({weights.at(i), means[i], stddev});
  return VelocityMixture(std::move(comps));
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

} // namespace detail

/// Built-in city profiles. Velocity components share sigma_d = 0.25 m/s.
inline const std::vector<CityPreset>& city_presets() {
  static const std::vector<CityPreset> presets = {
      {"manhattan", LengthModel(5.98, 1.01),
       detail::mixture_from({4.5, 7, 8.9, 11.8, 12.5, 14.5, 15.5, 16.5, 18, 20, 25},
                            {6.5, 8.5, 2.5, 5, 4, 6, 10, 6, 10, 1, 7})},
      {"toronto", LengthModel(6.13, 1.13),
       detail::mixture_from({4.2, 7, 9, 11.2, 12.5, 13.4, 15.3, 15.6, 17.8, 20, 23},
                            {4, 7, 4, 10, 4, 9, 3, 3, 2, 1.5, 9})},
      {"shanghai", LengthModel(7.11, 1.0),
       detail::mixture_from({4, 6.5, 8.5, 11, 12.5, 15, 17.8, 23.5, 25}, {1, 5, 0.5, 5, 4, 6, 10, 7, 7})},
      {"rome", LengthModel(5.78, 1.06),
       detail::mixture_from({3, 4.2, 7, 9, 12, 16, 20, 29}, {0.5, 0.5, 1, 1, 10, 1, 0.5, 2})},
  };
  return presets;
}

inline std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& p : city_presets()) names.push_back(p.name);
  return names;
}

/// Case-insensitive lookup. Unknown names throw, listing what exists.
inline const CityPreset& find_preset(std::string_view name) {
  const std::string key = detail::lower(name);
  for (const auto& p : city_presets())
    if (p.name == key) return p;
  std::string msg = "unknown preset '" + std::string(name) + "'; available:";
  for (const auto& p : city_presets()) msg += " " + p.name;
  throw std::invalid_argument(msg);
}

} // namespace rwpp
