// Copyright 2026 The simdistill Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// UTF-8 helpers. All lengths in this project are counted in Unicode scalar
// values; ill-formed byte sequences decode to U+FFFD, one per maximal
// ill-formed subsequence.

#ifndef SIMDISTILL_UNICODE_H_
#define SIMDISTILL_UNICODE_H_

#include <cstddef>
#include <string>
#include <string_view>

namespace simdistill::unicode {

std::u32string Decode(std::string_view utf8);
std::string Encode(std::u32string_view scalars);

size_t ScalarLength(std::string_view utf8);

// General category L* (Lu, Ll, Lt, Lm, Lo).
bool IsLetter(char32_t c);
// General category P*.
bool IsPunctuation(char32_t c);
// General category S*.
bool IsSymbol(char32_t c);
// Decimal digit (Nd).
bool IsDigit(char32_t c);
// White_Space property, which includes the line separators.
bool IsWhitespace(char32_t c);

// Strips leading and trailing White_Space scalars.
std::string Trim(std::string_view utf8);

// English display name of a language code ("es" -> "Spanish"); unknown
// codes come back unchanged.
std::string LanguageName(const std::string& code);

}  // namespace simdistill::unicode

#endif  // SIMDISTILL_UNICODE_H_
