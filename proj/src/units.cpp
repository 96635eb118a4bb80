#include "difflight/units.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <string>
#include <utility>

#include "difflight/error.hpp"

namespace difflight::units {

namespace {

struct UnitEntry {
  std::string_view suffix;
  double scale;
  Dimension dimension;
};

// Longest suffixes first so "ms" wins over "s" and "dBm" over "dB".
constexpr std::array<UnitEntry, 23> kUnits{{
    {"dBm", 1.0, Dimension::DecibelMilliwatt},
    {"dB", 1.0, Dimension::Decibel},
    {"ps", 1e-12, Dimension::Time},
    {"ns", 1e-9, Dimension::Time},
    {"us", 1e-6, Dimension::Time},
    {"\xC2\xB5s", 1e-6, Dimension::Time},
    {"ms", 1e-3, Dimension::Time},
    {"nW", 1e-9, Dimension::Power},
    {"uW", 1e-6, Dimension::Power},
    {"\xC2\xB5W", 1e-6, Dimension::Power},
    {"mW", 1e-3, Dimension::Power},
    {"fJ", 1e-15, Dimension::Energy},
    {"pJ", 1e-12, Dimension::Energy},
    {"nJ", 1e-9, Dimension::Energy},
    {"nm", 1e-9, Dimension::Length},
    {"um", 1e-6, Dimension::Length},
    {"\xC2\xB5m", 1e-6, Dimension::Length},
    {"mm", 1e-3, Dimension::Length},
    {"cm", 1e-2, Dimension::Length},
    {"s", 1.0, Dimension::Time},
    {"W", 1.0, Dimension::Power},
    {"J", 1.0, Dimension::Energy},
    {"m", 1.0, Dimension::Length},
}};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

Quantity parse(std::string_view text) {
  std::string_view s = trim(text);
  if (s.empty()) throw SchemaError("empty quantity");

  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{}) throw SchemaError("cannot parse quantity '" + std::string(s) + "'");
  if (!std::isfinite(value)) throw SchemaError("non-finite quantity '" + std::string(s) + "'");

  std::string_view suffix = trim(std::string_view(ptr, static_cast<std::size_t>(last - ptr)));
  if (suffix.empty()) return {value, Dimension::Dimensionless};
  for (const auto& u : kUnits) {
    if (suffix == u.suffix) return {value * u.scale, u.dimension};
  }
  throw SchemaError("unknown unit '" + std::string(suffix) + "' in '" + std::string(s) + "'");
}

double parse_as(std::string_view text, Dimension expected, std::string_view key) {
  Quantity q = parse(text);
  if (q.dimension != expected) {
    throw SchemaError(std::string(key) + ": expected " + dimension_name(expected) + ", got " +
                      dimension_name(q.dimension) + " ('" + std::string(trim(text)) + "')");
  }
  return q.value;
}

const char* dimension_name(Dimension d) {
  switch (d) {
    case Dimension::Dimensionless: return "a plain number";
    case Dimension::Time: return "a time";
    case Dimension::Power: return "a power";
    case Dimension::Energy: return "an energy";
    case Dimension::Length: return "a length";
    case Dimension::Decibel: return "dB";
    case Dimension::DecibelMilliwatt: return "dBm";
  }
  return "?";
}

double milliwatt_to_dbm(double mw) { return 10.0 * std::log10(mw); }
double dbm_to_milliwatt(double dbm) { return std::pow(10.0, dbm / 10.0); }

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), ptr);
}

}  // namespace difflight::units
