#pragma once

// JSON checkpoints for surrogates and RFC-4180 CSV helpers.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "lsvgd/error.hpp"
#include "lsvgd/mlp.hpp"

namespace lsvgd {

using json = nlohmann::json;

inline json to_json_array(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

/// Row-major flattening.
inline json to_json_array(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  }
  return a;
}

inline Eigen::VectorXd vector_from_json(const json& a) {
  detail::require(a.is_array(), "expected a JSON array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

inline Eigen::MatrixXd matrix_from_json(const json& a, Eigen::Index rows, Eigen::Index cols) {
  detail::require(a.is_array() && static_cast<Eigen::Index>(a.size()) == rows * cols,
                  "matrix array has the wrong number of entries");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = a[k++].get<double>();
  }
  return m;
}

inline json surrogate_to_json(const SurrogateParams& p) {
  p.validate();
  json j;
  j["format"] = "lsvgd-surrogate";
  j["version"] = 1;
  j["architecture"] = {{"input_dim", p.arch.input_dim},
                       {"output_dim", p.arch.output_dim},
                       {"hidden", p.arch.hidden},
                       {"activation", p.arch.activation == Activation::swish ? "swish" : "identity"}};
  j["standardization"] = {{"input_shift", to_json_array(p.in_shift)},
                          {"input_scale", to_json_array(p.in_scale)},
                          {"output_shift", to_json_array(p.out_shift)},
                          {"output_scale", to_json_array(p.out_scale)}};
  json layers = json::array();
  for (std::size_t k = 0; k < p.weights.size(); ++k) {
    layers.push_back({{"rows", p.weights[k].rows()},
                      {"cols", p.weights[k].cols()},
                      {"weights", to_json_array(p.weights[k])},
                      {"biases", to_json_array(p.biases[k])}});
  }
  j["layers"] = std::move(layers);
  return j;
}

inline SurrogateParams surrogate_from_json(const json& j) {
  detail::require(j.value("format", "") == "lsvgd-surrogate", "not a surrogate checkpoint");
  SurrogateParams p;
  const json& a = j.at("architecture");
  p.arch.input_dim = a.at("input_dim").get<int>();
  p.arch.output_dim = a.at("output_dim").get<int>();
  p.arch.hidden = a.at("hidden").get<std::vector<int>>();
  const std::string act = a.at("activation").get<std::string>();
  detail::require(act == "swish" || act == "identity", "unknown activation '" + act + "'");
  p.arch.activation = act == "swish" ? Activation::swish : Activation::identity;
  const json& s = j.at("standardization");
  p.in_shift = vector_from_json(s.at("input_shift"));
  p.in_scale = vector_from_json(s.at("input_scale"));
  p.out_shift = vector_from_json(s.at("output_shift"));
  p.out_scale = vector_from_json(s.at("output_scale"));
  for (const json& layer : j.at("layers")) {
    const auto rows = layer.at("rows").get<Eigen::Index>();
    const auto cols = layer.at("cols").get<Eigen::Index>();
    p.weights.push_back(matrix_from_json(layer.at("weights"), rows, cols));
    p.biases.push_back(vector_from_json(layer.at("biases")));
  }
  p.validate();
  return p;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

inline void save_surrogate(const std::string& path, const SurrogateParams& p) {
  write_json_file(path, surrogate_to_json(p));
}

inline SurrogateParams load_surrogate(const std::string& path) { return surrogate_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------
// CSV

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// Quotes a field when it contains a comma, quote, or line break.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) { row(header); }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_field(fields[i]);
    }
    out_ << "\r\n";
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

/// Minimal RFC-4180 reader (quoted fields, CRLF or LF line ends).
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lsvgd
