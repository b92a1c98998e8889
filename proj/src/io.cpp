#include "arraynormal/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <json.hpp>

namespace arraynormal {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  if (result.ec != std::errc())
    throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, result.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto result = std::from_chars(s.data(), s.data() + s.size(), v);
  if (result.ec != std::errc() || result.ptr != s.data() + s.size())
    throw std::invalid_argument("parse_double: not a valid number: '" + s + "'");
  return v;
}

std::string format_dims(const std::vector<std::int64_t>& dims) {
  std::ostringstream out;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i > 0) out << 'x';
    out << dims[i];
  }
  return out.str();
}

std::vector<std::int64_t> parse_dims(const std::string& s) {
  std::vector<std::int64_t> dims;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t next = s.find('x', pos);
    const std::string token = s.substr(pos, next == std::string::npos ? next : next - pos);
    std::int64_t v = 0;
    const auto result = std::from_chars(token.data(), token.data() + token.size(), v);
    if (result.ec != std::errc() || result.ptr != token.data() + token.size() || v < 1)
      throw std::invalid_argument("parse_dims: bad dimension list '" + s + "'");
    dims.push_back(v);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  if (dims.empty()) throw std::invalid_argument("parse_dims: empty dimension list");
  return dims;
}

std::string tensor_to_json(const Tensor& x) {
  json j;
  j["dims"] = x.shape().dims();
  j["order"] = "col-major";
  json data = json::array();
  for (std::int64_t i = 0; i < x.size(); ++i) data.push_back(x[i]);
  j["data"] = std::move(data);
  return j.dump();
}

Tensor tensor_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (!j.contains("dims") || !j.contains("order") || !j.contains("data"))
    throw std::invalid_argument("tensor: missing dims/order/data");
  if (j.at("order").get<std::string>() != "col-major")
    throw std::invalid_argument("tensor: unsupported entry order (expected \"col-major\")");
  const std::vector<std::int64_t> dims = j.at("dims").get<std::vector<std::int64_t>>();
  const Shape shape(dims);
  const auto& data = j.at("data");
  if (!data.is_array() || static_cast<std::int64_t>(data.size()) != shape.num_elements())
    throw std::invalid_argument("tensor: data length does not match dims");
  Vector v(shape.num_elements());
  for (std::int64_t i = 0; i < shape.num_elements(); ++i) {
    const auto& entry = data[static_cast<std::size_t>(i)];
    if (!entry.is_number()) throw std::invalid_argument("tensor: non-numeric entry");
    v[i] = entry.get<double>();
    if (!std::isfinite(v[i])) throw std::invalid_argument("tensor: non-finite entry");
  }
  return Tensor(shape, std::move(v));
}

namespace {

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (std::int64_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::int64_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_rows(const json& rows) {
  if (!rows.is_array() || rows.empty())
    throw std::invalid_argument("covariance: factor must be a nonempty array of rows");
  const std::int64_t r = static_cast<std::int64_t>(rows.size());
  const std::int64_t c = static_cast<std::int64_t>(rows[0].size());
  Matrix m(r, c);
  for (std::int64_t i = 0; i < r; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<std::int64_t>(row.size()) != c)
      throw std::invalid_argument("covariance: ragged factor rows");
    for (std::int64_t j = 0; j < c; ++j) {
      m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
      if (!std::isfinite(m(i, j))) throw std::invalid_argument("covariance: non-finite entry");
    }
  }
  return m;
}

json covariance_json(const SeparableCovariance& cov) {
  json j;
  j["sigma2"] = cov.sigma2();
  json factors = json::array();
  for (const Spd& f : cov.factors()) factors.push_back(matrix_rows(f.matrix()));
  j["factors"] = std::move(factors);
  return j;
}

}  // namespace

std::string covariance_to_json(const SeparableCovariance& cov) {
  return covariance_json(cov).dump();
}

SeparableCovariance covariance_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (!j.contains("sigma2") || !j.contains("factors"))
    throw std::invalid_argument("covariance: missing sigma2/factors");
  const double sigma2 = j.at("sigma2").get<double>();
  std::vector<Spd> factors;
  for (const auto& rows : j.at("factors")) factors.emplace_back(matrix_from_rows(rows));
  return SeparableCovariance(sigma2, std::move(factors));
}

std::string estimate_to_json(const EstimatorOutput& out, std::uint64_t seed) {
  json j = covariance_json(out.estimate);
  json diag;
  diag["method"] = out.method;
  diag["iterations"] = out.iterations;
  diag["kept_draws"] = out.kept_draws;
  if (out.final_objective)
    diag["final_objective"] = *out.final_objective;
  else
    diag["final_objective"] = nullptr;
  diag["seed"] = seed;
  j["diagnostics"] = std::move(diag);
  return j.dump();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("failed to write file: " + path);
}

void write_tensor_file(const std::string& path, const Tensor& x) {
  write_text_file(path, tensor_to_json(x) + "\n");
}

Tensor read_tensor_file(const std::string& path) { return tensor_from_json(read_text_file(path)); }

void write_covariance_file(const std::string& path, const SeparableCovariance& cov) {
  write_text_file(path, covariance_to_json(cov) + "\n");
}

SeparableCovariance read_covariance_file(const std::string& path) {
  return covariance_from_json(read_text_file(path));
}

void write_estimate_file(const std::string& path, const EstimatorOutput& out,
                         std::uint64_t seed) {
  write_text_file(path, estimate_to_json(out, seed) + "\n");
}

}  // namespace arraynormal
