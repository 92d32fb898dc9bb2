#ifndef METRICQ_DATASET_IO_HPP
#define METRICQ_DATASET_IO_HPP

// Datasets on disk. CSV layout:
//
//   # metricq-dataset 1
//   # space: {"kind":"spd","dimension":3,...}
//   # meta: {...free-form JSON, e.g. family, params, seed...}
//   c0,c1,...,c0_hex,c1_hex,...
//   <decimal values>,<hexadecimal float values>
//
// Each row holds one point's flat coordinates twice: as shortest-round-trip
// decimals for humans and as C99 hex-float literals, which the reader
// prefers, so write-then-read is bit-exact.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "metricq/metric_space.hpp"

namespace metricq {

struct Dataset {
  SpaceDescriptor space;
  std::vector<Point> points;
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json descriptor_to_json(const SpaceDescriptor& space);
/// Throws ConfigError for unknown kinds or malformed fields.
SpaceDescriptor descriptor_from_json(const nlohmann::json& j);

/// {"kind": ..., "data": [flat coordinates]}
nlohmann::json point_to_json(const SpaceDescriptor& space, const Point& u);
Point point_from_json(const SpaceDescriptor& space, const nlohmann::json& j);

/// Exact hexadecimal float literal (printf %a).
std::string hex_double(double x);
/// Shortest decimal that reads back to the same double.
std::string decimal_double(double x);

void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset(const std::string& path, const Dataset& data);

/// Throws ParseError (with line and column) for malformed text and
/// DomainError for points violating the space's invariants.
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::string& path);

/// Reads and refuses (DomainError naming both kinds) when the stored space
/// differs from `expected`.
Dataset read_dataset(const std::string& path, const SpaceDescriptor& expected);

/// {"space": ..., "metadata": ..., "points": [point JSON, ...]}
nlohmann::json dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const nlohmann::json& j);

void require_space(const Dataset& data, const SpaceDescriptor& expected);

}  // namespace metricq

#endif  // METRICQ_DATASET_IO_HPP
