#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "stockmem/domain.hpp"

namespace stockmem {

/// One NewsDoc JSON object per line; blank lines are skipped.
std::vector<NewsDoc> load_news(const std::filesystem::path& path);
void write_news(std::ostream& out, std::span<const NewsDoc> docs);

/// Daily return table. Either a CSV file with header "company,date,return",
/// or a directory of "<TICKER>.csv" files with header "date,return".
/// Returns are decimal fractions (0.012 = +1.2%).
std::vector<PriceBar> load_prices(const std::filesystem::path& path);
void write_prices(std::ostream& out, std::span<const PriceBar> bars);

}  // namespace stockmem
