#include "fef/canonical_json.hpp"

#include <cmath>
#include <cstdio>

#include "fef/error.hpp"

using nlohmann::json;

namespace fef {

namespace {

void format_real(double v, std::string& out) {
  if (!std::isfinite(v)) throw Error(ErrorKind::SerializationError, "non-finite value in evidence");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", kCanonicalDecimals, v);
  std::string text(buf);
  if (text.find_first_not_of("-0.") == std::string::npos && text.front() == '-') text.erase(0, 1);
  out += text;
}

void emit(const json& v, std::string& out) {
  switch (v.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, child] : v.items()) {
        if (!first) out += ',';
        first = false;
        out += json(key).dump();
        out += ':';
        emit(child, out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        emit(v[i], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float:
      format_real(v.get<double>(), out);
      break;
    default:
      out += v.dump();
  }
}

}  // namespace

std::string canonical_dump(const json& value) {
  std::string out;
  emit(value, out);
  return out;
}

double quantize(double value) {
  if (!std::isfinite(value)) throw Error(ErrorKind::SerializationError, "non-finite value in evidence");
  const double q = std::round(value * 1e6) / 1e6;
  return q == 0.0 ? 0.0 : q;
}

}  // namespace fef
