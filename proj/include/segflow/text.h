#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace segflow {

// Lenient UTF-8 decoding; malformed bytes become U+FFFD.
std::u32string DecodeUtf8(std::string_view s);
std::string EncodeUtf8(std::u32string_view s);

// CJK ideographs, kana and hangul syllables.
bool IsCjk(char32_t c);

// Lyric tokens: each CJK character is a token; runs of other
// non-whitespace characters form whitespace-delimited words.
std::vector<std::string> TokenizeLyric(std::string_view line);

// Syllable estimate for the duration heuristic. CJK characters count one
// each. A Latin word counts its maximal vowel groups (a, e, i, o, u, y),
// with a floor of one for any word that contains a letter or digit.
std::size_t CountSyllables(std::string_view line);

// Lowercase (ASCII), drop punctuation, collapse whitespace, trim.
std::u32string NormalizeLyricText(std::string_view text);

std::size_t Levenshtein(std::u32string_view a, std::u32string_view b);

std::string ToLowerAscii(std::string_view s);

}  // namespace segflow
