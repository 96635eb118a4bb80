#pragma once

#include <string>
#include <string_view>

namespace difflight::units {

enum class Dimension { Dimensionless, Time, Power, Energy, Length, Decibel, DecibelMilliwatt };

struct Quantity {
  double value = 0.0;  // SI base unit (s, W, J, m), or dB / dBm
  Dimension dimension = Dimension::Dimensionless;
};

// Parses "20ns", "4 uW", "27.5mW", "-20dBm", "0.13dB", "1cm", "2.4".
// Accepts both "u" and the micro sign for micro. Throws SchemaError.
Quantity parse(std::string_view text);

// parse() plus a dimension check; the error names `key`.
double parse_as(std::string_view text, Dimension expected, std::string_view key);

const char* dimension_name(Dimension d);

double milliwatt_to_dbm(double mw);
double dbm_to_milliwatt(double dbm);

// Shortest round-trip decimal form, locale independent.
std::string format_double(double v);

}  // namespace difflight::units
