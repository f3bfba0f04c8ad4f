#ifndef CANSEG_UNICODE_H_
#define CANSEG_UNICODE_H_

#include <string>
#include <string_view>

namespace canseg {

// Decodes UTF-8 into Unicode scalar values. Throws InvalidArgument on
// malformed input (overlong forms, surrogates, truncated sequences).
std::u32string utf8_to_u32(std::string_view text);

// Encodes scalar values as UTF-8. Values outside the Unicode range (the
// vocabulary's reserved symbols) are rendered as U+FFFD.
std::string u32_to_utf8(std::u32string_view text);
std::string u32_to_utf8(char32_t c);

}  // namespace canseg

#endif  // CANSEG_UNICODE_H_
