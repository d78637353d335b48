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

#include "speechlm/textnorm.hpp"

#include <cctype>
#include <sstream>

namespace speechlm {

namespace {

const char* const kOnes[20] = {"zero",    "one",     "two",       "three",
                               "four",    "five",    "six",       "seven",
                               "eight",   "nine",    "ten",       "eleven",
                               "twelve",  "thirteen", "fourteen", "fifteen",
                               "sixteen", "seventeen", "eighteen", "nineteen"};
const char* const kTens[10] = {"",      "",      "twenty", "thirty", "forty",
                               "fifty", "sixty", "seventy", "eighty", "ninety"};

}  // namespace

std::string number_to_words(int n) {
  check(n >= 0 && n <= 99, "number_to_words: " + std::to_string(n) +
                               " outside the supported range 0-99");
  if (n < 20) return kOnes[n];
  std::string out = kTens[n / 10];
  if (n % 10) {
    out += ' ';
    out += kOnes[n % 10];
  }
  return out;
}

bool is_punct_char(char c) {
  const unsigned char u = static_cast<unsigned char>(c);
  return !std::isalnum(u) && !std::isspace(u);
}

std::string strip_punct(const std::string& token) {
  std::string out;
  for (char c : token)
    if (!is_punct_char(c)) out += c;
  return out;
}

std::string casefold(const std::string& token) {
  std::string out;
  out.reserve(token.size());
  for (char c : token)
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string casefold_strip(const std::string& token) {
  return strip_punct(casefold(token));
}

std::vector<std::string> verbalize_token(const std::string& token, bool strict) {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&]() {
    if (!current.empty()) {
      words.push_back(current);
      current.clear();
    }
  };
  const std::string lowered = casefold(token);
  size_t i = 0;
  while (i < lowered.size()) {
    const char c = lowered[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      flush();
      size_t j = i;
      while (j < lowered.size() && std::isdigit(static_cast<unsigned char>(lowered[j])))
        ++j;
      const std::string digits = lowered.substr(i, j - i);
      if (digits.size() <= 2) {
        std::istringstream ss(number_to_words(std::stoi(digits)));
        std::string w;
        while (ss >> w) words.push_back(w);
      } else {
        check(!strict, "spoken_form: numeral " + digits +
                           " outside the supported range 0-99");
        words.push_back(digits);
      }
      i = j;
    } else if (c == '%') {
      flush();
      words.push_back("percent");
      ++i;
    } else if (is_punct_char(c) || std::isspace(static_cast<unsigned char>(c))) {
      flush();
      ++i;
    } else {
      current += c;
      ++i;
    }
  }
  flush();
  return words;
}

std::string spoken_form(const std::string& written) {
  std::string out;
  for (const std::string& token : split_whitespace(written)) {
    for (const std::string& word : verbalize_token(token, /*strict=*/true)) {
      if (!out.empty()) out += ' ';
      out += word;
    }
  }
  return out;
}

std::vector<std::string> split_whitespace(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

}  // namespace speechlm
