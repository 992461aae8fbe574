#pragma once

#include <string_view>

namespace korra {

/// Author-declared tone of a user response.
enum class Polarity { positive, negative };

constexpr std::string_view to_string(Polarity p) { return p == Polarity::positive ? "positive" : "negative"; }

}  // namespace korra
