#pragma once

#include <string_view>

namespace siftom::detail {

extern const std::string_view kLexiconTsv;
extern const std::string_view kHomophonesTsv;
extern const std::string_view kAccentGermanTsv;
extern const std::string_view kAccentRussianTsv;
extern const std::string_view kAccentIrishTsv;
extern const std::string_view kAccentIndonesianTsv;

}  // namespace siftom::detail
