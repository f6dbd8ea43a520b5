#pragma once

// Datum file grammar (line oriented, '#' starts a comment line):
//
//   ambient <d>
//   projection <rows>
//   <row 1: d entries>
//   ...
//   projection <rows>
//   ...
//   weights <c_1> ... <c_m>        (optional, at most once)
//
// Entries and weights are `p`, `p/q`, or exact decimals; the writer always
// emits `p/q`, so write(parse(write(x))) == write(x).

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bllab/bldatum.hpp"
#include "bllab/error.hpp"
#include "bllab/exactla.hpp"

namespace bllab {

struct DatumFile {
  std::size_t ambient_dim = 0;
  std::vector<LinearSurjection> projections;
  std::optional<std::vector<Rational>> weights;

  BLDatum datum() const {
    require(weights.has_value(), "datum file has no weights line");
    BLDatum d{projections, *weights};
    d.validate();
    return d;
  }
};

inline DatumFile parse_datum(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  DatumFile out;
  auto err = [&](const std::string& msg) -> void {
    fail_input("datum line " + std::to_string(lineno) + ": " + msg);
  };
  auto next_line = [&](std::string& l) {
    while (std::getline(in, l)) {
      ++lineno;
      auto first = l.find_first_not_of(" \t\r");
      if (first == std::string::npos || l[first] == '#') continue;
      return true;
    }
    return false;
  };

  while (next_line(line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "ambient") {
      if (out.ambient_dim != 0) err("duplicate 'ambient'");
      long d = 0;
      if (!(ls >> d) || d < 1) err("'ambient' needs a positive integer");
      out.ambient_dim = static_cast<std::size_t>(d);
    } else if (key == "projection") {
      if (out.ambient_dim == 0) err("'projection' before 'ambient'");
      if (out.weights) err("'projection' after 'weights'");
      long rows = 0;
      if (!(ls >> rows) || rows < 1) err("'projection' needs a positive row count");
      std::vector<std::vector<Rational>> entries;
      for (long r = 0; r < rows; ++r) {
        if (!next_line(line)) err("unexpected end of file inside projection block");
        std::vector<Rational> row;
        try {
          row = parse_rational_row(line);
        } catch (const Error& e) {
          err(e.what());
        }
        if (row.size() != out.ambient_dim)
          err("projection row has " + std::to_string(row.size()) + " entries, expected " +
              std::to_string(out.ambient_dim));
        entries.push_back(std::move(row));
      }
      try {
        out.projections.emplace_back(QMatrix::from_rows(entries, out.ambient_dim));
      } catch (const Error& e) {
        err(e.what());
      }
    } else if (key == "weights") {
      if (out.weights) err("duplicate 'weights'");
      std::vector<Rational> w;
      std::string tok;
      try {
        while (ls >> tok) w.push_back(parse_rational(tok));
      } catch (const Error& e) {
        err(e.what());
      }
      if (w.size() != out.projections.size())
        err("expected " + std::to_string(out.projections.size()) + " weights, got " + std::to_string(w.size()));
      out.weights = std::move(w);
    } else {
      err("unknown key '" + key + "'");
    }
  }
  if (out.ambient_dim == 0) fail_input("datum file has no 'ambient' line");
  if (out.projections.empty()) fail_input("datum file has no projections");
  return out;
}

inline std::string format_datum(const DatumFile& f) {
  std::string out = "ambient " + std::to_string(f.ambient_dim) + "\n";
  for (const auto& p : f.projections) {
    out += "projection " + std::to_string(p.target_dim()) + "\n";
    out += format_matrix(p.matrix());
  }
  if (f.weights) {
    out += "weights";
    for (const auto& w : *f.weights) out += " " + to_string(w);
    out += "\n";
  }
  return out;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_input("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline DatumFile load_datum(const std::string& path) { return parse_datum(read_text_file(path)); }

}  // namespace bllab
