// Copyright 2026 The speechlm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPEECHLM_TEXTNORM_HPP_
#define SPEECHLM_TEXTNORM_HPP_

#include <string>
#include <vector>

#include "speechlm/common.hpp"

namespace speechlm {

// Closed number-word table, 0 through 99.  "21" -> "twenty one".
std::string number_to_words(int n);

bool is_punct_char(char c);  // neither alphanumeric nor whitespace

// Lowercases and drops punctuation, keeping letters and digits.  May return
// an empty string (pure-punctuation tokens).
std::string strip_punct(const std::string& token);
std::string casefold(const std::string& token);
std::string casefold_strip(const std::string& token);

// Spoken-form words of one written token: casefold, expand digit runs with
// the number table, "%" -> "percent", drop other punctuation.
// Digit runs outside 0..99 are kept verbatim when `strict` is false and
// raise an error when it is true.
std::vector<std::string> verbalize_token(const std::string& token, bool strict = false);

// Written sentence -> spoken form: lowercase, punctuation stripped, numerals
// expanded.  Errors on numerals outside the closed 0-99 table.
std::string spoken_form(const std::string& written);

std::vector<std::string> split_whitespace(const std::string& text);

}  // namespace speechlm

#endif  // SPEECHLM_TEXTNORM_HPP_
