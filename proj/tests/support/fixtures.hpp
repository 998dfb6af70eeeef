#pragma once

#include <string>

#include "staging/site_io.hpp"

namespace staging::testing {

inline std::string data_path(const std::string& rel) { return std::string(STAGING_DATA_DIR) + "/" + rel; }

inline std::string read_data(const std::string& rel) {
  std::ifstream in(data_path(rel), std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline SiteTree mini_congress() { return load_site_file(data_path("sites/mini_congress.xml")); }
inline SiteTree votesmart_mini() { return load_site_file(data_path("sites/votesmart_mini.json")); }
inline SiteTree uniform_540() { return load_site_file(data_path("sites/uniform_540.json")); }

inline constexpr const char* kBreakfast = "PE[C[e1 e2] C[c1 c2] C[b1 b2]]";

// Leftmost term of the mini-congress staging trace, link text on the right.
inline constexpr const char* kMiniCongressDialog =
    "A[PE[A[PE[A[r d] s] PE[A[r d] h]] ga] "
    "PE[A[PE[A[r] s] PE[A[r] h]] ak] "
    "PE[A[PE[A[r] s] PE[A[r d] h]] al]]";

}  // namespace staging::testing
