#pragma once
// CSV and echo-file emission with a provenance-free comment header.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "config.hpp"
#include "field.hpp"

namespace cmhd::cli {

using Cell = std::variant<double, long long, std::string>;

inline std::string format_cell(const Cell& c) {
  if (std::holds_alternative<double>(c)) return format_number(std::get<double>(c));
  if (std::holds_alternative<long long>(c)) return std::to_string(std::get<long long>(c));
  return std::get<std::string>(c);
}

//! In-memory table written atomically once complete.
class CsvTable {
 public:
  CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw std::logic_error("CSV row width does not match its header");
    rows_.push_back(std::move(row));
  }
  std::size_t size() const { return rows_.size(); }

  std::string render(const std::string& command, const std::string& config_hash, const std::string& grid) const {
    std::ostringstream o;
    o << "# command: " << command << "\n# config_hash: " << config_hash << "\n# grid: " << grid << "\n";
    for (std::size_t k = 0; k < columns_.size(); ++k) o << (k ? "," : "") << columns_[k];
    o << "\n";
    for (const auto& r : rows_) {
      for (std::size_t k = 0; k < r.size(); ++k) o << (k ? "," : "") << format_cell(r[k]);
      o << "\n";
    }
    return o.str();
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + p.string());
}

//! Output sink for one command invocation.
class ReportSink {
 public:
  ReportSink(const RunConfig& cfg, std::string grid)
      : dir_(cfg.str("run.out")), command_(cfg.command), hash_(hex64(fnv1a(cfg.echo(true)))), grid_(std::move(grid)) {}

  const std::string& config_hash() const { return hash_; }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  void write(const std::string& name, const CsvTable& t) const { write_text(path(name), t.render(command_, hash_, grid_)); }
  void write_echo(const RunConfig& cfg) const {
    write_text(path("run.echo.cfg"), "# command: " + command_ + "\n# config_hash: " + hash_ + "\n# grid: " + grid_ + "\n" + cfg.echo());
  }
  //! Column text dump of a field, one row per cell: x1 x2 value (square) or r theta value (sector).
  void write_field(const std::string& name, const ScalarField& f, std::optional<double> t = std::nullopt) const {
    const Grid& g = f.grid();
    std::ostringstream o;
    o << "# command: " << command_ << "\n# config_hash: " << hash_ << "\n";
    o << "# grid " << g.n1() << " " << g.n2() << " domain=" << to_string(g.domain().kind) << "\n";
    if (t) o << "# t=" << format_number(*t) << "\n";
    o << (g.is_square() ? "# x1 x2 value\n" : "# r theta value\n");
    for (int i = 0; i < g.n1(); ++i)
      for (int j = 0; j < g.n2(); ++j) o << format_number(g.c1(i)) << " " << format_number(g.c2(j)) << " " << format_number(f(i, j)) << "\n";
    write_text(path(name), o.str());
  }

 private:
  std::filesystem::path dir_;
  std::string command_, hash_, grid_;
};

}  // namespace cmhd::cli
