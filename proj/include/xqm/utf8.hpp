#pragma once

#include <string>
#include <string_view>

namespace xqm::utf8 {

// Offsets throughout the library are Unicode code-point indices. Text is
// carried as UTF-8 std::string and widened to UTF-32 where offsets matter.

/// Decodes UTF-8 into code points. Throws FormatError on invalid sequences.
std::u32string decode(std::string_view text);

std::string encode(std::u32string_view text);

/// Number of code points in a UTF-8 string.
std::size_t length(std::string_view text);

}  // namespace xqm::utf8
