#pragma once

#include <string_view>

namespace sde::detail {

// Contents of data/stopwords.txt and data/templates.json, compiled in.
std::string_view embedded_stopwords();
std::string_view embedded_templates();

}  // namespace sde::detail
