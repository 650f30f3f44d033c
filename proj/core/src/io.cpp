#include "stockmem/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stockmem/errors.hpp"

namespace stockmem {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  return cells;
}

double parse_return(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ParseError(where + ": \"" + text + "\" is not a number");
  }
  if (used != text.size() || !std::isfinite(value)) throw ParseError(where + ": bad return \"" + text + "\"");
  return value;
}

void read_table(const fs::path& path, std::optional<std::string> company, std::vector<PriceBar>& out) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_csv(line);
    const std::size_t expected = company ? 2 : 3;
    const std::string where = path.filename().string() + ":" + std::to_string(lineno);
    if (header) {
      header = false;
      if (!cells.empty() && (cells[0] == "company" || cells[0] == "date")) continue;
    }
    if (cells.size() != expected) {
      throw ParseError(where + ": expected " + std::to_string(expected) + " columns");
    }
    PriceBar bar;
    std::size_t c = 0;
    bar.company = company ? *company : cells[c++];
    bar.date = Date::parse(cells[c++]);
    bar.daily_return = parse_return(cells[c], where);
    out.push_back(std::move(bar));
  }
}

}  // namespace

std::vector<NewsDoc> load_news(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<NewsDoc> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      docs.push_back(nlohmann::json::parse(line).get<NewsDoc>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.filename().string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

void write_news(std::ostream& out, std::span<const NewsDoc> docs) {
  for (const auto& d : docs) out << nlohmann::json(d).dump() << '\n';
}

std::vector<PriceBar> load_prices(const fs::path& path) {
  std::vector<PriceBar> bars;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) read_table(f, f.stem().string(), bars);
  } else {
    read_table(path, std::nullopt, bars);
  }
  std::sort(bars.begin(), bars.end(), [](const PriceBar& a, const PriceBar& b) {
    return a.company != b.company ? a.company < b.company : a.date < b.date;
  });
  return bars;
}

void write_prices(std::ostream& out, std::span<const PriceBar> bars) {
  out << "company,date,return\n";
  char buf[64];
  for (const auto& b : bars) {
    std::snprintf(buf, sizeof buf, "%.9g", b.daily_return);
    out << b.company << ',' << b.date.str() << ',' << buf << '\n';
  }
}

}  // namespace stockmem
