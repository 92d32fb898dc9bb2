#include "metricq/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "metricq/error.hpp"

namespace metricq {

namespace {

constexpr const char* kMagic = "# metricq-dataset 1";

std::string trim_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

struct Field {
  std::string text;
  std::size_t column;  // 1-based
};

std::vector<Field> split_csv(const std::string& line) {
  std::vector<Field> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    const std::size_t end = comma == std::string::npos ? line.size() : comma;
    out.push_back({line.substr(start, end - start), start + 1});
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_decimal(const std::string& s, double& v) {
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v, std::chars_format::general);
  return ec == std::errc() && p == e && b != e;
}

bool parse_hex(const std::string& s, double& v) {
  std::size_t i = 0;
  bool neg = false;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) neg = s[i++] == '-';
  if (s.compare(i, 2, "0x") != 0 && s.compare(i, 2, "0X") != 0) return false;
  i += 2;
  const char* b = s.data() + i;
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, v, std::chars_format::hex);
  if (ec != std::errc() || p != e || b == e) return false;
  if (neg) v = -v;
  return true;
}

nlohmann::json parse_json_comment(const std::string& line, const std::string& prefix,
                                  std::size_t line_no) {
  if (line.rfind(prefix, 0) != 0) throw ParseError(line_no, 1, "expected '" + prefix + "'");
  try {
    return nlohmann::json::parse(line.substr(prefix.size()));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_no, prefix.size() + (e.byte > 0 ? e.byte : 1),
                     std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

std::string hex_double(double x) {
  if (!std::isfinite(x)) throw DomainError("cannot encode a non-finite value");
  char buf[64];
  const bool neg = std::signbit(x);
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, neg ? -x : x, std::chars_format::hex);
  (void)ec;
  return std::string(neg ? "-0x" : "0x") + std::string(buf, p);
}

std::string decimal_double(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  (void)ec;
  return {buf, p};
}

nlohmann::json descriptor_to_json(const SpaceDescriptor& space) {
  nlohmann::json j;
  j["kind"] = to_string(space.kind);
  switch (space.kind) {
    case SpaceKind::kEuclidean:
      j["dimension"] = space.dimension;
      if (std::isinf(space.exponent))
        j["exponent"] = "inf";
      else
        j["exponent"] = space.exponent;
      break;
    case SpaceKind::kSphere:
    case SpaceKind::kSpd: j["dimension"] = space.dimension; break;
    case SpaceKind::kGaussian1d:
    case SpaceKind::kBhvT3: break;
    case SpaceKind::kProduct: {
      j["exponent"] = space.exponent;
      auto comps = nlohmann::json::array();
      for (const auto& c : space.components) comps.push_back(descriptor_to_json(c));
      j["components"] = comps;
      break;
    }
  }
  return j;
}

SpaceDescriptor descriptor_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("kind")) throw ConfigError("space descriptor needs a 'kind'");
    SpaceDescriptor s;
    try {
      s.kind = space_kind_from_string(j.at("kind").get<std::string>());
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    auto exponent = [&](double fallback) {
      if (!j.contains("exponent")) return fallback;
      const auto& e = j.at("exponent");
      if (e.is_string()) {
        if (e.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw ConfigError("exponent must be a number or \"inf\"");
      }
      return e.get<double>();
    };
    switch (s.kind) {
      case SpaceKind::kEuclidean:
        s = SpaceDescriptor::euclidean(j.at("dimension").get<std::size_t>(), exponent(2.0));
        break;
      case SpaceKind::kSphere: s = SpaceDescriptor::sphere(j.at("dimension").get<std::size_t>()); break;
      case SpaceKind::kSpd: s = SpaceDescriptor::spd(j.at("dimension").get<std::size_t>()); break;
      case SpaceKind::kGaussian1d: s = SpaceDescriptor::gaussian1d(); break;
      case SpaceKind::kBhvT3: s = SpaceDescriptor::bhv_t3(); break;
      case SpaceKind::kProduct: {
        std::vector<SpaceDescriptor> comps;
        for (const auto& c : j.at("components")) comps.push_back(descriptor_from_json(c));
        s = SpaceDescriptor::product(std::move(comps), exponent(2.0));
        break;
      }
    }
    s.validate();
    return s;
  } catch (const DomainError& e) {
    throw ConfigError(std::string("space descriptor: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("space descriptor: ") + e.what());
  }
}

nlohmann::json point_to_json(const SpaceDescriptor& space, const Point& u) {
  return {{"kind", to_string(space.kind)}, {"data", flatten(space, u)}};
}

Point point_from_json(const SpaceDescriptor& space, const nlohmann::json& j) {
  try {
    if (j.contains("kind") && j.at("kind").get<std::string>() != to_string(space.kind))
      throw DomainError("point of kind '" + j.at("kind").get<std::string>() +
                        "' given for a space of kind '" + to_string(space.kind) + "'");
    const auto flat = j.at("data").get<std::vector<double>>();
    Point p = unflatten(space, flat);
    validate_point(space, p);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("point: ") + e.what());
  }
}

void write_dataset(std::ostream& out, const Dataset& data) {
  const std::size_t k = data.space.flat_size();
  out << kMagic << '\n';
  out << "# space: " << descriptor_to_json(data.space).dump() << '\n';
  out << "# meta: " << data.metadata.dump() << '\n';
  for (std::size_t c = 0; c < k; ++c) out << (c ? "," : "") << 'c' << c;
  for (std::size_t c = 0; c < k; ++c) out << ",c" << c << "_hex";
  out << '\n';
  for (const auto& p : data.points) {
    const auto flat = flatten(data.space, p);
    for (std::size_t c = 0; c < k; ++c) out << (c ? "," : "") << decimal_double(flat[c]);
    for (std::size_t c = 0; c < k; ++c) out << ',' << hex_double(flat[c]);
    out << '\n';
  }
}

void write_dataset(const std::string& path, const Dataset& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  write_dataset(f, data);
  if (!f) throw ConfigError("write to '" + path + "' failed");
}

Dataset read_dataset(std::istream& in) {
  Dataset d;
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    line = trim_cr(line);
    return true;
  };
  if (!next() || line != kMagic) throw ParseError(1, 1, std::string("expected '") + kMagic + "'");
  if (!next()) throw ParseError(line_no + 1, 1, "missing space line");
  try {
    d.space = descriptor_from_json(parse_json_comment(line, "# space: ", line_no));
  } catch (const ConfigError& e) {
    throw ParseError(line_no, 10, e.what());
  }
  if (!next()) throw ParseError(line_no + 1, 1, "missing meta line");
  d.metadata = parse_json_comment(line, "# meta: ", line_no);
  if (!next()) throw ParseError(line_no + 1, 1, "missing column header");
  const std::size_t k = d.space.flat_size();
  const auto header = split_csv(line);
  const bool with_hex = header.size() == 2 * k;
  if (header.size() != k && !with_hex)
    throw ParseError(line_no, 1,
                     "expected " + std::to_string(k) + " or " + std::to_string(2 * k) +
                         " columns, found " + std::to_string(header.size()));
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string want = "c" + std::to_string(c % k) + (c >= k ? "_hex" : "");
    if (header[c].text != want)
      throw ParseError(line_no, header[c].column, "expected column name '" + want + "'");
  }
  while (next()) {
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw ParseError(line_no, 1,
                       "expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()));
    std::vector<double> flat(k);
    for (std::size_t c = 0; c < k; ++c) {
      double dec = 0.0;
      if (!parse_decimal(fields[c].text, dec))
        throw ParseError(line_no, fields[c].column, "not a number: '" + fields[c].text + "'");
      flat[c] = dec;
      if (with_hex) {
        const Field& h = fields[k + c];
        double hex = 0.0;
        if (!parse_hex(h.text, hex))
          throw ParseError(line_no, h.column, "not a hex float: '" + h.text + "'");
        flat[c] = hex;
      }
    }
    Point p = unflatten(d.space, flat);
    try {
      validate_point(d.space, p);
    } catch (const DomainError& e) {
      throw ParseError(line_no, 1, e.what());
    }
    d.points.push_back(std::move(p));
  }
  return d;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open dataset '" + path + "'");
  return read_dataset(f);
}

nlohmann::json dataset_to_json(const Dataset& data) {
  auto pts = nlohmann::json::array();
  for (const auto& p : data.points) pts.push_back(point_to_json(data.space, p));
  return {{"space", descriptor_to_json(data.space)}, {"metadata", data.metadata}, {"points", pts}};
}

Dataset dataset_from_json(const nlohmann::json& j) {
  try {
    Dataset d;
    d.space = descriptor_from_json(j.at("space"));
    if (j.contains("metadata")) d.metadata = j.at("metadata");
    for (const auto& p : j.at("points")) d.points.push_back(point_from_json(d.space, p));
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("dataset JSON: ") + e.what());
  }
}

void require_space(const Dataset& data, const SpaceDescriptor& expected) {
  if (data.space != expected)
    throw DomainError("dataset lives in space " + descriptor_to_json(data.space).dump() +
                      " but the analysis expects " + descriptor_to_json(expected).dump());
}

Dataset read_dataset(const std::string& path, const SpaceDescriptor& expected) {
  Dataset d = read_dataset(path);
  require_space(d, expected);
  return d;
}

}  // namespace metricq
